//! Monte Carlo estimates of `E‖T‖_{ℓp-inj}` and of Gaussian chaos moments,
//! and the comparison against the variance bounds.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::{restart_rng, AscentConfig, NormOrder};
use crate::bounds::{corollary2_bound, optimize_beta, BoundQuery, BoundReport};
use crate::error::{Error, Result};
use crate::estimate::{Estimator, Provenance, Verdict};
use crate::injective::estimate_injective_norm;
use crate::tensor::DenseTensor;
use crate::variance::{compute_profile, CoeffDist, ProfileKind, RandomTensorModel, VarianceProfile};

/// Default number of trials for chaos moment estimates.
pub const DEFAULT_MOMENT_TRIALS: usize = 100_000;
/// Number of standard errors added to the empirical mean before comparing
/// it with a bound.
pub const CONTRACT_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSample {
    pub values: Vec<f64>,
    pub dist: CoeffDist,
    pub seed: u64,
}

/// Per-trial generator: stream `trial` of the ChaCha8 generator keyed by
/// `seed`, so every trial is reproducible on its own.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    restart_rng(seed, trial)
}

pub fn draw(dist: CoeffDist, rng: &mut impl Rng) -> f64 {
    match dist {
        CoeffDist::Gaussian => rng.sample(StandardNormal),
        CoeffDist::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        CoeffDist::Uniform => rng.random_range(-1.0..=1.0),
    }
}

fn draw_vector(dist: CoeffDist, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| draw(dist, rng)).collect()
}

/// `n` independent coefficients, determined by `(dist, n, seed)`.
pub fn sample_coefficients(dist: CoeffDist, n: usize, seed: u64) -> Result<CoefficientSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one coefficient".into()));
    }
    let mut rng = trial_rng(seed, 0);
    Ok(CoefficientSample {
        values: draw_vector(dist, n, &mut rng),
        dist,
        seed,
    })
}

/// `Σ_k ξ_k T_k`.
pub fn assemble_tensor(model: &RandomTensorModel, xi: &[f64]) -> Result<DenseTensor> {
    if xi.len() != model.n() {
        return Err(Error::Dimension(format!(
            "{} coefficients for a model with {} tensors",
            xi.len(),
            model.n()
        )));
    }
    let mut out = DenseTensor::zeros(model.shape().to_vec())?;
    for (t, &c) in model.tensors().iter().zip(xi) {
        if c != 0.0 {
            out.add_scaled(t, c)?;
        }
    }
    Ok(out)
}

/// Sum by recursive halving, which keeps rounding error `O(log n)`.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√trials`.
    pub stderr: f64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl McEstimate {
    pub fn from_values(values: Vec<f64>, keep: bool) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 trials, got {n}")));
        }
        let mean = pairwise_sum(&values) / n as f64;
        let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&squares) / (n - 1) as f64;
        Ok(Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            trials: n,
            values: keep.then_some(values),
        })
    }

    /// `mean + k·stderr`.
    pub fn upper(&self, k: f64) -> f64 {
        self.mean + k * self.stderr
    }
}

/// Runs `f` on every trial with its own generator, in parallel, and returns
/// the values in trial order.
pub fn run_trials<F>(trials: usize, seed: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(&mut trial_rng(seed, t)))
        .collect()
}

/// Mean of the ascent estimate of `‖T‖_{ℓp-inj}` over `trials` draws of `ξ`.
pub fn mc_injective_mean(
    model: &RandomTensorModel,
    p: NormOrder,
    trials: usize,
    cfg: &AscentConfig,
    seed: u64,
) -> Result<McEstimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 trials, got {trials}")));
    }
    let values = run_trials(trials, seed, |rng| {
        let xi = draw_vector(model.coeff_dist(), model.n(), rng);
        let t = assemble_tensor(model, &xi)?;
        Ok(estimate_injective_norm(&t, p, cfg)?.value)
    })?;
    McEstimate::from_values(values, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosMoment {
    /// `(E|X|^p)^{1/p}` with its delta-method standard error.
    pub estimate: McEstimate,
    /// `E|X|^p` itself.
    pub raw: McEstimate,
    pub moment_p: f64,
}

/// `(E|A(g_1, …, g_r)|^p)^{1/p}` for independent standard Gaussian vectors.
pub fn chaos_moment_estimate(a: &DenseTensor, moment_p: f64, trials: usize, seed: u64) -> Result<ChaosMoment> {
    if !(moment_p >= 2.0) || !moment_p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "moment order must be finite and >= 2, got {moment_p}"
        )));
    }
    if a.order() == 0 {
        return Err(Error::InvalidArgument("chaos needs order >= 1".into()));
    }
    let shape = a.shape().to_vec();
    let powers = run_trials(trials, seed, |rng| {
        let gs: Vec<Vec<f64>> = shape
            .iter()
            .map(|&d| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let refs: Vec<&[f64]> = gs.iter().map(Vec::as_slice).collect();
        Ok(a.eval_multilinear(&refs)?.abs().powf(moment_p))
    })?;
    let raw = McEstimate::from_values(powers, false)?;
    let mean = raw.mean.max(0.0).powf(1.0 / moment_p);
    let stderr = if raw.mean > 0.0 {
        raw.stderr * mean / (moment_p * raw.mean)
    } else {
        0.0
    };
    Ok(ChaosMoment {
        estimate: McEstimate {
            mean,
            stderr,
            trials: raw.trials,
            values: None,
        },
        raw,
        moment_p,
    })
}

/// Samples of `A(x_1 + X_1, …, x_r + X_r)²` with `X_t` having independent
/// `N(0, 1/β)` coordinates.
pub fn second_moment_mc(a: &DenseTensor, xs: &[Vec<f64>], beta: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be positive and finite, got {beta}")));
    }
    if xs.len() != a.order() || xs.iter().zip(a.shape()).any(|(x, &d)| x.len() != d) {
        return Err(Error::Dimension("vectors do not match the tensor shape".into()));
    }
    let sd = beta.powf(-0.5);
    let values = run_trials(samples, seed, |rng| {
        let shifted: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| x.iter().map(|&v| v + sd * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let refs: Vec<&[f64]> = shifted.iter().map(Vec::as_slice).collect();
        Ok(a.eval_multilinear(&refs)?.powi(2))
    })?;
    McEstimate::from_values(values, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model_id: String,
    pub p: NormOrder,
    pub empirical: McEstimate,
    pub thm1_opt: BoundReport,
    pub cor2: BoundReport,
    pub ratio_thm1: f64,
    pub ratio_cor2: f64,
    pub provenance: Provenance,
    /// `mean + 3·stderr ≤ optimized bound`, gated on the profile provenance.
    pub contract: Verdict,
}

fn ratio(bound: f64, mean: f64) -> f64 {
    if mean > 0.0 {
        bound / mean
    } else if bound > 0.0 {
        f64::INFINITY
    } else {
        // 0/0: both sides vanish
        1.0
    }
}

/// Empirical mean against the bounds of a given profile.
pub fn compare_with_profile(
    model_id: &str,
    model: &RandomTensorModel,
    profile: VarianceProfile,
    trials: usize,
    cfg: &AscentConfig,
    seed: u64,
) -> Result<Comparison> {
    let p = profile.p;
    let empirical = mc_injective_mean(model, p, trials, cfg, seed)?;
    let provenance = profile.provenance();
    let q = BoundQuery::new(profile, model.shape().to_vec())?;
    let thm1_opt = optimize_beta(&q)?;
    let cor2 = corollary2_bound(&q)?;
    let contract = if provenance.is_certified() {
        if empirical.upper(CONTRACT_SIGMAS) <= thm1_opt.bound * (1.0 + 1e-12) + 1e-12 {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    } else {
        Verdict::Inconclusive
    };
    Ok(Comparison {
        model_id: model_id.to_string(),
        p,
        ratio_thm1: ratio(thm1_opt.bound, empirical.mean),
        ratio_cor2: ratio(cor2.bound, empirical.mean),
        empirical,
        thm1_opt,
        cor2,
        provenance,
        contract,
    })
}

/// Profile by `estimator`, then [`compare_with_profile`].
pub fn compare_bounds_report(
    model_id: &str,
    model: &RandomTensorModel,
    p: NormOrder,
    trials: usize,
    estimator: &Estimator,
    seed: u64,
) -> Result<Comparison> {
    let profile = compute_profile(model, p, ProfileKind::Def11, estimator)?;
    compare_with_profile(model_id, model, profile, trials, estimator.ascent_config(), seed)
}

pub const CSV_HEADER: [&str; 11] = [
    "model_id",
    "p",
    "trials",
    "empirical_mean",
    "stderr",
    "thm1_bound",
    "beta",
    "cor2_bound",
    "ratio_thm1",
    "ratio_cor2",
    "provenance",
];

/// Writes the comparison table, one row per comparison.
pub fn write_comparison_csv<W: Write>(rows: &[Comparison], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output failed: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for c in rows {
        w.write_record([
            c.model_id.clone(),
            c.p.to_string(),
            c.empirical.trials.to_string(),
            c.empirical.mean.to_string(),
            c.empirical.stderr.to_string(),
            c.thm1_opt.bound.to_string(),
            c.thm1_opt.beta.map_or_else(String::new, |b| b.to_string()),
            c.cor2.bound.to_string(),
            c.ratio_thm1.to_string(),
            c.ratio_cor2.to_string(),
            c.provenance.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    IndependentEntry,
    Diagonal,
    GaussianStack,
    SymmetricStack,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent_entry" => Ok(ModelKind::IndependentEntry),
            "diagonal" => Ok(ModelKind::Diagonal),
            "gaussian_stack" => Ok(ModelKind::GaussianStack),
            "symmetric_stack" => Ok(ModelKind::SymmetricStack),
            other => Err(Error::Unknown {
                what: "model kind",
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::IndependentEntry => "independent_entry",
            ModelKind::Diagonal => "diagonal",
            ModelKind::GaussianStack => "gaussian_stack",
            ModelKind::SymmetricStack => "symmetric_stack",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub shape: Vec<usize>,
    /// Number of tensors for the stacked kinds.
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "gaussian")]
    pub coeff_dist: CoeffDist,
}

fn one() -> usize {
    1
}

fn gaussian() -> CoeffDist {
    CoeffDist::Gaussian
}

impl ModelParams {
    pub fn cubic(d: usize, r: usize) -> Self {
        Self {
            shape: vec![d; r],
            n: 1,
            coeff_dist: CoeffDist::Gaussian,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }
}

fn cubic_dim(shape: &[usize], kind: ModelKind) -> Result<usize> {
    match shape.first() {
        Some(&d) if shape.iter().all(|&e| e == d) => Ok(d),
        _ => Err(Error::Dimension(format!(
            "{kind} models need a cubic shape, got {shape:?}"
        ))),
    }
}

pub fn generate_model(kind: ModelKind, params: &ModelParams, seed: u64) -> Result<RandomTensorModel> {
    let shape = params.shape.clone();
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Dimension(format!("invalid model shape {shape:?}")));
    }
    let len: usize = shape.iter().product();
    let gaussian_stack = |n: usize| -> Result<Vec<DenseTensor>> {
        if n == 0 {
            return Err(Error::InvalidArgument("a stack needs n >= 1".into()));
        }
        let mut rng = trial_rng(seed, 0);
        (0..n)
            .map(|_| DenseTensor::new(shape.clone(), (0..len).map(|_| rng.sample(StandardNormal)).collect()))
            .collect()
    };
    let (tensors, symmetric) = match kind {
        ModelKind::IndependentEntry => {
            let tensors = (0..len)
                .map(|flat| {
                    let mut data = vec![0.0; len];
                    data[flat] = 1.0;
                    DenseTensor::new(shape.clone(), data)
                })
                .collect::<Result<Vec<_>>>()?;
            (tensors, false)
        }
        ModelKind::Diagonal => {
            let d = cubic_dim(&shape, kind)?;
            let tensors = (0..d)
                .map(|k| DenseTensor::basis(shape.clone(), &vec![k; shape.len()]))
                .collect::<Result<Vec<_>>>()?;
            (tensors, true)
        }
        ModelKind::GaussianStack => (gaussian_stack(params.n)?, false),
        ModelKind::SymmetricStack => {
            cubic_dim(&shape, kind)?;
            let tensors = gaussian_stack(params.n)?
                .iter()
                .map(DenseTensor::symmetrize)
                .collect::<Result<Vec<_>>>()?;
            (tensors, true)
        }
    };
    RandomTensorModel::new(tensors, params.coeff_dist, symmetric)
}
