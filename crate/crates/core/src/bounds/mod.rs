//! Upper bounds on `E‖T‖_{ℓp-inj}` from a variance profile, and the moment
//! bounds for Gaussian chaoses.

mod donsker;
mod moments;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use donsker::{donsker_varadhan_check, DvReport, DEFAULT_PROBES};
pub use moments::{latala_moment_bound, partition_moment_bound, second_moment_rhs, MomentBound, MomentTerm};

use crate::ball::NormOrder;
use crate::error::{Error, Result};
use crate::estimate::{Estimator, Provenance};
use crate::variance::{binomial, compute_profile, variance_entry, ProfileKind, RandomTensorModel, VarianceProfile};

/// Bracket of `β`, as `[LOG_BETA_MIN, LOG_BETA_MAX]` in natural log.
pub const LOG_BETA_MIN: f64 = -20.723_265_836_946_41; // ln 1e-9
pub const LOG_BETA_MAX: f64 = 20.723_265_836_946_41;
pub const GOLDEN_ITERATIONS: usize = 200;
/// Relative slack of the sandwich verdict.
pub const SANDWICH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub profile: VarianceProfile,
    pub dims: Vec<usize>,
    pub beta: Option<f64>,
}

impl BoundQuery {
    pub fn new(profile: VarianceProfile, dims: Vec<usize>) -> Result<Self> {
        if dims.len() != profile.order() {
            return Err(Error::Dimension(format!(
                "{} dimensions for a profile of order {}",
                dims.len(),
                profile.order()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Dimension("dimensions must be positive".into()));
        }
        Ok(Self {
            profile,
            dims,
            beta: None,
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        self.beta = Some(beta);
        Ok(self)
    }

    pub fn p(&self) -> NormOrder {
        self.profile.p
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    fn coefficients(&self) -> Vec<f64> {
        self.profile.values()
    }

    fn require_def11(&self) -> Result<()> {
        if self.profile.kind != ProfileKind::Def11 {
            return Err(Error::InvalidArgument(
                "this bound needs a def11 profile; convert bandeira profiles first".into(),
            ));
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be positive and finite, got {beta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Theorem1,
    OptimizedBeta,
    Corollary2,
    Symmetric,
}

/// Both sides of `2(r−1)^{(1−r)/r}·M ≤ inf_β Σ_{ℓ≠1} β^{1−ℓ}a_ℓ ≤ r·M`,
/// `M = max_{2≤ℓ≤r} a_ℓ^{1/ℓ} a_0^{(ℓ−1)/ℓ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub infimum: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub bound: f64,
    pub beta: Option<f64>,
    pub terms: BTreeMap<usize, f64>,
    pub dimension_factor: f64,
    pub provenance: Provenance,
    pub constants: BTreeMap<String, f64>,
    pub infimum_attained: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<Sandwich>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundReport {
    fn new(kind: BoundKind, terms: BTreeMap<usize, f64>, dimension_factor: f64, provenance: Provenance) -> Self {
        let total: f64 = terms.values().sum();
        Self {
            kind,
            bound: (total * dimension_factor).max(0.0).sqrt(),
            beta: None,
            terms,
            dimension_factor,
            provenance,
            constants: BTreeMap::new(),
            infimum_attained: true,
            sandwich: None,
            note: None,
        }
    }
}

/// `Σ_t d_t^{1−2/p}`.
pub fn dimension_factor(dims: &[usize], p: NormOrder) -> f64 {
    dims.iter().map(|&d| p.dimension_power(d)).sum()
}

/// `g(β) = Σ_ℓ β^{1−ℓ} a_ℓ`.
pub fn beta_objective(a: &[f64], beta: f64) -> f64 {
    a.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(ell, &v)| v * beta.powf(1.0 - ell as f64))
        .sum()
}

/// `g(e^t)`.
fn beta_objective_log(a: &[f64], t: f64) -> f64 {
    a.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(ell, &v)| v * ((1.0 - ell as f64) * t).exp())
        .sum()
}

/// The β-parameterized bound at the query's `β`.
pub fn theorem1_bound(q: &BoundQuery) -> Result<BoundReport> {
    q.require_def11()?;
    let beta = q
        .beta
        .ok_or_else(|| Error::InvalidArgument("theorem1_bound needs beta".into()))?;
    check_beta(beta)?;
    Ok(theorem1_at(q, beta))
}

fn theorem1_at(q: &BoundQuery, beta: f64) -> BoundReport {
    let terms = q
        .coefficients()
        .iter()
        .enumerate()
        .map(|(ell, &v)| (ell, if v == 0.0 { 0.0 } else { v * beta.powf(1.0 - ell as f64) }))
        .collect();
    let mut report = BoundReport::new(
        BoundKind::Theorem1,
        terms,
        dimension_factor(&q.dims, q.p()),
        q.profile.provenance(),
    );
    report.beta = Some(beta);
    report
}

/// Minimizer of `g` over `log β ∈ [lo, hi]` by golden-section search.
pub fn golden_section_log_beta(a: &[f64], lo: f64, hi: f64, iterations: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |t: f64| beta_objective_log(a, t);
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iterations {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    ((lo + hi) / 2.0).exp()
}

/// Minimum of `g` over `points` log-spaced values of `β` in `[lo, hi]`,
/// followed by a second scan of `points` values across the cells around
/// the best point.
pub fn dense_scan_infimum(a: &[f64], lo: f64, hi: f64, points: usize) -> f64 {
    let scan = |llo: f64, lhi: f64| {
        (0..points)
            .map(|i| {
                let t = llo + (lhi - llo) * i as f64 / (points - 1).max(1) as f64;
                (t, beta_objective_log(a, t))
            })
            .fold((llo, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    };
    let (llo, lhi) = (lo.ln(), hi.ln());
    let (t, coarse) = scan(llo, lhi);
    let step = (lhi - llo) / (points - 1).max(1) as f64;
    let (_, fine) = scan((t - step).max(llo), (t + step).min(lhi));
    coarse.min(fine)
}

/// `max_{2≤ℓ≤r} a_ℓ^{1/ℓ} a_0^{(ℓ−1)/ℓ}` with its maximizing `ℓ`.
pub fn sandwich_max(a: &[f64]) -> Option<(usize, f64)> {
    (2..a.len())
        .map(|ell| {
            let l = ell as f64;
            (ell, a[ell].powf(1.0 / l) * a[0].powf((l - 1.0) / l))
        })
        .fold(None, |best: Option<(usize, f64)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
}

/// Lower and upper ends of the sandwich for order `r` and maximum `m`.
pub fn sandwich_limits(r: usize, m: f64) -> (f64, f64) {
    let rf = r as f64;
    (2.0 * (rf - 1.0).powf((1.0 - rf) / rf) * m, rf * m)
}

/// Checks `infimum` (of the `ℓ ≠ 1` terms) against the sandwich limits.
pub fn sandwich_check(a: &[f64], infimum: f64) -> Option<Sandwich> {
    let (_, m) = sandwich_max(a)?;
    let (lower, upper) = sandwich_limits(a.len() - 1, m);
    let tol = SANDWICH_SLACK * upper.abs().max(1e-300);
    Some(Sandwich {
        lower,
        infimum,
        upper,
        holds: infimum >= lower - tol && infimum <= upper + tol,
    })
}

/// The β-parameterized bound with `β` minimizing `Σ_ℓ β^{1−ℓ}σ̂_ℓ²`.
///
/// When `σ̂_0² = 0` while some `σ̂_ℓ²`, `ℓ ≥ 2`, is positive (or the other
/// way round), the infimum `σ̂_1²` is approached only as `β → ∞` (or
/// `β → 0`); the report then carries no `β` and `infimum_attained = false`.
pub fn optimize_beta(q: &BoundQuery) -> Result<BoundReport> {
    q.require_def11()?;
    let a = q.coefficients();
    let a0 = a[0];
    let higher = a.iter().skip(2).any(|&v| v > 0.0);
    let df = dimension_factor(&q.dims, q.p());
    if (a0 > 0.0) != higher {
        let mut terms = BTreeMap::new();
        terms.insert(1, a[1]);
        let mut report = BoundReport::new(BoundKind::OptimizedBeta, terms, df, q.profile.provenance());
        report.infimum_attained = false;
        report.note = Some(if a0 > 0.0 {
            "infimum not attained: approached as beta -> 0".into()
        } else {
            "infimum not attained: approached as beta -> infinity".into()
        });
        return Ok(report);
    }
    let beta = if a0 > 0.0 {
        golden_section_log_beta(&a, LOG_BETA_MIN, LOG_BETA_MAX, GOLDEN_ITERATIONS)
    } else {
        // only σ̂_1² may be nonzero; g is constant
        1.0
    };
    let mut report = theorem1_at(q, beta);
    report.kind = BoundKind::OptimizedBeta;
    if a0 > 0.0 {
        let g = beta_objective(&a, beta);
        report.sandwich = sandwich_check(&a, g - a[1]);
    }
    Ok(report)
}

/// Two-term bound `√((σ̂_1² + r·max_{2≤ℓ≤r} σ̂_ℓ^{2/ℓ} σ̂_0^{(2ℓ−2)/ℓ}) · Σ_t d_t^{1−2/p})`.
pub fn corollary2_bound(q: &BoundQuery) -> Result<BoundReport> {
    q.require_def11()?;
    let a = q.coefficients();
    let r = q.order();
    let mut terms = BTreeMap::new();
    terms.insert(1, a[1]);
    if let Some((ell, m)) = sandwich_max(&a) {
        terms.insert(ell, r as f64 * m);
    }
    Ok(BoundReport::new(
        BoundKind::Corollary2,
        terms,
        dimension_factor(&q.dims, q.p()),
        q.profile.provenance(),
    ))
}

/// Converts a `β̃` profile to the upper estimate `binom(r, r−ℓ)·β̃_ℓ²` of
/// `σ̂_ℓ²`.
pub fn convert_bandeira_profile(profile: &VarianceProfile) -> VarianceProfile {
    let r = profile.order();
    VarianceProfile {
        p: profile.p,
        kind: ProfileKind::Def11,
        entries: profile
            .entries
            .iter()
            .enumerate()
            .map(|(ell, e)| e.map(|v| binomial(r, r - ell) * v))
            .collect(),
    }
}

/// Explicit bound on `d^{1/p − 1/2}·E‖T‖` for a symmetric model: the `β̃`
/// profile, converted entrywise, fed to [`corollary2_bound`] and rescaled.
pub fn symmetric_corollary_bound(
    model: &RandomTensorModel,
    p: NormOrder,
    estimator: &Estimator,
) -> Result<BoundReport> {
    let beta = compute_profile(model, p, ProfileKind::Bandeira, estimator)?;
    let q = BoundQuery::new(convert_bandeira_profile(&beta), model.shape().to_vec())?;
    let mut report = corollary2_bound(&q)?;
    let d = model.shape()[0] as f64;
    let scale = if p.is_infinite() {
        d.powf(-0.5)
    } else {
        d.powf(1.0 / p.value() - 0.5)
    };
    report.kind = BoundKind::Symmetric;
    report.constants.insert("expectation_bound".into(), report.bound);
    report.constants.insert("scale".into(), scale);
    report.bound *= scale;
    report.note = Some(
        "bound on d^(1/p-1/2) E|T|: constructive composition of the binomial conversion and corollary 2, \
         not an optimal order-dependent constant"
            .into(),
    );
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixCaseReport {
    pub term1: f64,
    pub term2: f64,
    pub constant: f64,
    pub rhs: f64,
    pub provenance: Provenance,
}

pub const DEFAULT_MATRIX_CONSTANT: f64 = 2.0;

/// `C·(term1 + term2)` with `term1² = max(λ_max(Σ T_kᵀT_k), λ_max(Σ T_kT_kᵀ))`
/// and `term2⁴ = sup_{x,y ∈ B_2} Σ_k (xᵀT_k y)² · Σ_k ‖T_k‖_F²`.
pub fn matrix_case_bound(model: &RandomTensorModel, constant: f64, estimator: &Estimator) -> Result<MatrixCaseReport> {
    if model.order() != 2 {
        return Err(Error::Dimension(format!(
            "matrix case needs order 2, got {}",
            model.order()
        )));
    }
    let (rows, cols) = (model.shape()[0], model.shape()[1]);
    let mut left = crate::linalg::SymMatrix::zeros(rows);
    let mut right = crate::linalg::SymMatrix::zeros(cols);
    for t in model.tensors() {
        left.add_gram(t.data(), cols);
        right.add_gram_transposed(t.data(), rows);
    }
    let term1 = left.max_eigenvalue().max(right.max_eigenvalue()).max(0.0).sqrt();
    let sup = variance_entry(model, NormOrder::TWO, 0, estimator)?;
    let term2 = sup.value.max(0.0).powf(0.25) * model.total_frobenius_sq().powf(0.25);
    Ok(MatrixCaseReport {
        term1,
        term2,
        constant,
        rhs: constant * (term1 + term2),
        provenance: sup.provenance,
    })
}
