//! Variance parameters of a random tensor model `T = Σ_k ξ_k T_k`.
//!
//! `σ̂_ℓ²` is the supremum, over one shared point `(x_1, …, x_r)` of the ball
//! product, of `Σ_{|I| = r−ℓ} Σ_k ‖T_k contracted on I‖_F²`. The symmetric
//! variant `β̃_ℓ²` contracts only the leading `r − ℓ` axes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ball::{
    block_candidate_count, block_candidates, maximize_block_multilinear, search_product,
    AscentConfig, BallSpec, BlockObjective, NormOrder,
};
use crate::error::{Error, Result};
use crate::estimate::{compare_le, Estimate, Estimator, Provenance, Verdict};
use crate::injective::norm_estimate;
use crate::linalg::SymMatrix;
use crate::tensor::{enumerate_partitions, stack_tensors, DenseTensor, IndexSubset, Partition};

/// Tolerance for the symmetric flag of a model.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffDist {
    Gaussian,
    Rademacher,
    Uniform,
}

impl FromStr for CoeffDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(CoeffDist::Gaussian),
            "rademacher" => Ok(CoeffDist::Rademacher),
            "uniform" => Ok(CoeffDist::Uniform),
            other => Err(Error::Unknown {
                what: "coefficient distribution",
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for CoeffDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoeffDist::Gaussian => "gaussian",
            CoeffDist::Rademacher => "rademacher",
            CoeffDist::Uniform => "uniform",
        })
    }
}

/// `n ≥ 1` deterministic tensors of a common shape and a coefficient law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct RandomTensorModel {
    tensors: Vec<DenseTensor>,
    coeff_dist: CoeffDist,
    symmetric: bool,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    tensors: Vec<DenseTensor>,
    coeff_dist: CoeffDist,
    #[serde(default)]
    symmetric: bool,
}

impl TryFrom<ModelRepr> for RandomTensorModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        RandomTensorModel::new(r.tensors, r.coeff_dist, r.symmetric)
    }
}

impl From<RandomTensorModel> for ModelRepr {
    fn from(m: RandomTensorModel) -> Self {
        ModelRepr {
            tensors: m.tensors,
            coeff_dist: m.coeff_dist,
            symmetric: m.symmetric,
        }
    }
}

impl RandomTensorModel {
    pub fn new(tensors: Vec<DenseTensor>, coeff_dist: CoeffDist, symmetric: bool) -> Result<Self> {
        let first = tensors.first().ok_or(Error::Empty("a model needs at least one tensor"))?;
        if first.order() == 0 {
            return Err(Error::InvalidArgument("model tensors need order >= 1".into()));
        }
        if let Some(bad) = tensors.iter().find(|t| t.shape() != first.shape()) {
            return Err(Error::Dimension(format!(
                "model tensor of shape {:?} differs from {:?}",
                bad.shape(),
                first.shape()
            )));
        }
        if symmetric {
            for (k, t) in tensors.iter().enumerate() {
                if !t.is_symmetric(SYMMETRY_TOL) {
                    return Err(Error::NotSymmetric(format!(
                        "tensor {} is not invariant under index permutations",
                        k + 1
                    )));
                }
            }
        }
        Ok(Self {
            tensors,
            coeff_dist,
            symmetric,
        })
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn coeff_dist(&self) -> CoeffDist {
        self.coeff_dist
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn shape(&self) -> &[usize] {
        self.tensors[0].shape()
    }

    pub fn order(&self) -> usize {
        self.shape().len()
    }

    pub fn n(&self) -> usize {
        self.tensors.len()
    }

    /// `Σ_k ‖T_k‖_F²`.
    pub fn total_frobenius_sq(&self) -> f64 {
        self.tensors.iter().map(DenseTensor::frobenius_norm_sq).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            tensors: self.tensors.iter().map(|t| t.scaled(c)).collect(),
            ..self.clone()
        }
    }

    /// Model with the tensors of `other` appended.
    pub fn union(&self, other: &RandomTensorModel) -> Result<Self> {
        let mut tensors = self.tensors.clone();
        tensors.extend(other.tensors.iter().cloned());
        Self::new(tensors, self.coeff_dist, self.symmetric && other.symmetric)
    }

    /// The model `{T_k^P}` re-indexed by a partition of its axes.
    pub fn reshaped(&self, partition: &Partition) -> Result<Self> {
        let tensors = self
            .tensors
            .iter()
            .map(|t| t.reshape_partition(partition))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tensors, self.coeff_dist, false)
    }

    /// Order `r + 1` tensor with `T_k` along the trailing axis.
    pub fn stacked(&self) -> Result<DenseTensor> {
        stack_tensors(&self.tensors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `σ̂_ℓ²`, contractions over every subset of size `r − ℓ`.
    Def11,
    /// `β̃_ℓ²`, contractions over the leading `r − ℓ` axes of a symmetric model.
    Bandeira,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProfile {
    pub p: NormOrder,
    pub kind: ProfileKind,
    /// Entry `ℓ` for `ℓ = 0..=r`.
    pub entries: Vec<Estimate>,
}

impl VarianceProfile {
    pub fn from_values(p: NormOrder, kind: ProfileKind, values: &[f64], provenance: Provenance) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(
                "a profile needs entries for l = 0..=r with r >= 1".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "variance entries must be finite and nonnegative, got {v}"
            )));
        }
        let entries = values
            .iter()
            .map(|&value| Estimate {
                value,
                provenance,
                exact: provenance == Provenance::ClosedForm,
            })
            .collect();
        Ok(Self { p, kind, entries })
    }

    pub fn order(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Weakest provenance over all entries.
    pub fn provenance(&self) -> Provenance {
        self.entries
            .iter()
            .map(|e| e.provenance)
            .max()
            .unwrap_or(Provenance::ClosedForm)
    }
}

/// `Σ_{I ∈ subsets} Σ_k ‖T_k contracted on I‖_F²` as a function of the
/// vectors on `blocks` (each subset must be a subset of `blocks`).
pub struct SquaredContractionObjective<'a> {
    tensors: &'a [DenseTensor],
    blocks: Vec<usize>,
    subsets: Vec<IndexSubset>,
    block_of_axis: Vec<Option<usize>>,
}

impl<'a> SquaredContractionObjective<'a> {
    pub fn new(tensors: &'a [DenseTensor], blocks: Vec<usize>, subsets: Vec<IndexSubset>) -> Result<Self> {
        let order = tensors.first().map_or(0, DenseTensor::order);
        let mut block_of_axis = vec![None; order];
        for (b, &axis) in blocks.iter().enumerate() {
            if axis >= order {
                return Err(Error::IndexOutOfRange { index: axis, order });
            }
            block_of_axis[axis] = Some(b);
        }
        for s in &subsets {
            if s.order() != order || s.members().iter().any(|&a| block_of_axis[a].is_none()) {
                return Err(Error::InvalidSubset(format!(
                    "subset {s} is not covered by the optimization blocks"
                )));
            }
        }
        Ok(Self {
            tensors,
            blocks,
            subsets,
            block_of_axis,
        })
    }

    /// Objective of `σ̂_ℓ²`: all subsets of size `r − ℓ`, every axis a block.
    pub fn def11(tensors: &'a [DenseTensor], ell: usize) -> Result<Self> {
        let r = tensors.first().map_or(0, DenseTensor::order);
        if ell > r {
            return Err(Error::InvalidArgument(format!("l = {ell} exceeds the order {r}")));
        }
        Self::new(tensors, (0..r).collect(), IndexSubset::all_of_size(r, r - ell))
    }

    /// Objective of `β̃_ℓ²`: the leading `r − ℓ` axes only.
    pub fn bandeira(tensors: &'a [DenseTensor], ell: usize) -> Result<Self> {
        let r = tensors.first().map_or(0, DenseTensor::order);
        if ell > r {
            return Err(Error::InvalidArgument(format!("l = {ell} exceeds the order {r}")));
        }
        let lead: Vec<usize> = (0..r - ell).collect();
        Self::new(tensors, lead.clone(), vec![IndexSubset::new(r, lead)?])
    }

    fn vectors_for<'x>(&self, subset: &IndexSubset, xs: &'x [Vec<f64>]) -> Vec<&'x [f64]> {
        subset
            .members()
            .iter()
            .map(|&a| xs[self.block_of_axis[a].expect("validated")].as_slice())
            .collect()
    }

    /// For each subset containing `axis` and each tensor, the contraction
    /// over the subset minus `axis`, together with the position of `axis`
    /// among the residual axes.
    fn partials(&self, xs: &[Vec<f64>], axis: usize) -> Vec<(DenseTensor, usize)> {
        let mut out = Vec::new();
        for subset in self.subsets.iter().filter(|s| s.contains(axis)) {
            let rest = subset.without(axis);
            let vectors = self.vectors_for(&rest, xs);
            let pos = (0..axis).filter(|&a| !rest.contains(a)).count();
            for t in self.tensors {
                out.push((t.contract_subset(&rest, &vectors).expect("validated"), pos));
            }
        }
        out
    }

    /// Contribution of the subsets that do not contain `axis`.
    fn constant_part(&self, xs: &[Vec<f64>], axis: usize) -> f64 {
        self.subsets
            .iter()
            .filter(|s| !s.contains(axis))
            .map(|s| {
                let vectors = self.vectors_for(s, xs);
                self.tensors
                    .iter()
                    .map(|t| t.contract_subset(s, &vectors).expect("validated").frobenius_norm_sq())
                    .sum::<f64>()
            })
            .sum()
    }

    /// The objective restricted to block `block` is `xᵀ M x + c`; returns
    /// `(M, c)`. The entry `xs[block]` is ignored.
    pub fn quadratic_in_block(&self, xs: &[Vec<f64>], block: usize) -> (SymMatrix, f64) {
        let axis = self.blocks[block];
        let d = self.tensors[0].shape()[axis];
        let mut m = SymMatrix::zeros(d);
        for (partial, pos) in self.partials(xs, axis) {
            let shape = partial.shape();
            let outer: usize = shape[..pos].iter().product();
            let inner: usize = shape[pos + 1..].iter().product();
            // rows indexed by the axis, columns by (outer, inner)
            let mut g = vec![0.0; d * outer * inner];
            for o in 0..outer {
                for i in 0..d {
                    for j in 0..inner {
                        g[i * outer * inner + o * inner + j] = partial.data()[(o * d + i) * inner + j];
                    }
                }
            }
            m.add_gram(&g, outer * inner);
        }
        (m, self.constant_part(xs, axis))
    }
}

impl BlockObjective for SquaredContractionObjective<'_> {
    fn dims(&self) -> Vec<usize> {
        let shape = self.tensors[0].shape();
        self.blocks.iter().map(|&a| shape[a]).collect()
    }

    fn value(&self, xs: &[Vec<f64>]) -> f64 {
        self.subsets
            .iter()
            .map(|s| {
                let vectors = self.vectors_for(s, xs);
                self.tensors
                    .iter()
                    .map(|t| t.contract_subset(s, &vectors).expect("validated").frobenius_norm_sq())
                    .sum::<f64>()
            })
            .sum()
    }

    fn block_gradient(&self, xs: &[Vec<f64>], block: usize) -> Vec<f64> {
        let axis = self.blocks[block];
        let x = &xs[block];
        let d = x.len();
        let mut grad = vec![0.0; d];
        for (partial, pos) in self.partials(xs, axis) {
            let full = partial.contract_axis(pos, x).expect("validated");
            let shape = partial.shape();
            let outer: usize = shape[..pos].iter().product();
            let inner: usize = shape[pos + 1..].iter().product();
            for o in 0..outer {
                for (i, g) in grad.iter_mut().enumerate() {
                    let row = &partial.data()[(o * d + i) * inner..(o * d + i + 1) * inner];
                    let c = &full.data()[o * inner..(o + 1) * inner];
                    *g += 2.0 * row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        grad
    }
}

/// Exhaustive supremum of a squared-contraction objective.
///
/// `p = ∞`: vertex enumeration over every block, exact because the objective
/// is convex in each block. `p = 2`: grid over all blocks but the largest,
/// whose quadratic is maximized exactly as `λ_max(M) + c`. Other `p`: grid
/// over every block. Returns `(value, exact)`.
pub fn squared_contraction_oracle(
    objective: &SquaredContractionObjective<'_>,
    p: NormOrder,
    resolution: usize,
    cap: f64,
) -> Result<(f64, bool)> {
    let dims = objective.dims();
    if dims.is_empty() {
        return Ok((objective.value(&[]), true));
    }
    let exact_block = if p == NormOrder::TWO {
        Some((0..dims.len()).max_by_key(|&b| (dims[b], std::cmp::Reverse(b))).unwrap())
    } else {
        None
    };
    let outer: Vec<usize> = (0..dims.len()).filter(|&b| Some(b) != exact_block).collect();
    let estimate: f64 = outer
        .iter()
        .map(|&b| block_candidate_count(dims[b], p, resolution))
        .product();
    if estimate > cap {
        return Err(Error::SearchSpace { estimate, cap });
    }
    let candidates: Vec<_> = outer
        .iter()
        .map(|&b| block_candidates(dims[b], p, resolution))
        .collect();
    let mut xs: Vec<Vec<f64>> = dims.iter().map(|&d| vec![0.0; d]).collect();
    let mut best = f64::NEG_INFINITY;
    search_product(&candidates, cap, |point| {
        for (&b, x) in outer.iter().zip(point) {
            xs[b].clone_from(x);
        }
        let v = match exact_block {
            Some(b) => {
                let (m, c) = objective.quadratic_in_block(&xs, b);
                m.max_eigenvalue().max(0.0) + c
            }
            None => objective.value(&xs),
        };
        best = best.max(v);
    })?;
    let exact = p.is_infinite() || outer.is_empty();
    Ok((best, exact))
}

fn supremum(objective: &SquaredContractionObjective<'_>, p: NormOrder, estimator: &Estimator) -> Result<Estimate> {
    let ascent = |cfg: &AscentConfig| -> Result<Estimate> {
        let spec = BallSpec::new(p, objective.dims())?;
        Ok(Estimate::heuristic(maximize_block_multilinear(objective, &spec, cfg)?.value))
    };
    match estimator {
        Estimator::Ascent(cfg) => ascent(cfg),
        Estimator::Oracle {
            resolution,
            cap,
            fallback,
        } => match squared_contraction_oracle(objective, p, *resolution, *cap) {
            Ok((value, exact)) => Ok(Estimate::oracle(value, exact)),
            Err(Error::SearchSpace { .. }) => ascent(fallback),
            Err(e) => Err(e),
        },
    }
}

fn profile_entry(model: &RandomTensorModel, p: NormOrder, kind: ProfileKind, ell: usize, estimator: &Estimator) -> Result<Estimate> {
    let r = model.order();
    if ell == r {
        return Ok(Estimate::closed_form(model.total_frobenius_sq()));
    }
    let objective = match kind {
        ProfileKind::Def11 => SquaredContractionObjective::def11(model.tensors(), ell)?,
        ProfileKind::Bandeira => SquaredContractionObjective::bandeira(model.tensors(), ell)?,
    };
    supremum(&objective, p, estimator)
}

/// Single entry `σ̂_ℓ²`.
pub fn variance_entry(model: &RandomTensorModel, p: NormOrder, ell: usize, estimator: &Estimator) -> Result<Estimate> {
    profile_entry(model, p, ProfileKind::Def11, ell, estimator)
}

pub fn compute_profile(
    model: &RandomTensorModel,
    p: NormOrder,
    kind: ProfileKind,
    estimator: &Estimator,
) -> Result<VarianceProfile> {
    if kind == ProfileKind::Bandeira {
        check_symmetric(model)?;
    }
    let entries = (0..=model.order())
        .map(|ell| profile_entry(model, p, kind, ell, estimator))
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceProfile { p, kind, entries })
}

/// `σ̂_0², …, σ̂_r²` by block ascent (entry `r` in closed form).
pub fn variance_profile(model: &RandomTensorModel, p: NormOrder, cfg: &AscentConfig) -> Result<VarianceProfile> {
    compute_profile(model, p, ProfileKind::Def11, &Estimator::Ascent(*cfg))
}

/// `β̃_0², …, β̃_r²` by block ascent. Requires a symmetric model.
pub fn bandeira_profile(model: &RandomTensorModel, p: NormOrder, cfg: &AscentConfig) -> Result<VarianceProfile> {
    compute_profile(model, p, ProfileKind::Bandeira, &Estimator::Ascent(*cfg))
}

fn check_symmetric(model: &RandomTensorModel) -> Result<()> {
    if !model.is_symmetric() {
        return Err(Error::NotSymmetric("the symmetric flag is not set".into()));
    }
    let d = model.shape()[0];
    if model.shape().iter().any(|&e| e != d) {
        return Err(Error::NotSymmetric(format!("shape {:?} is not cubic", model.shape())));
    }
    Ok(())
}

/// Closed-form `σ̂_ℓ²` at `p = 2` for the diagonal model `T_k = e_k^{⊗r}`,
/// `k = 1..d`: `binom(r, r−ℓ)` for `ℓ < r` and `d` for `ℓ = r`, all attained
/// at a common basis vector.
pub fn diagonal_model_profile(order: usize, d: usize) -> VarianceProfile {
    let mut values: Vec<f64> = (0..order).map(|ell| binomial(order, order - ell)).collect();
    values.push(d as f64);
    VarianceProfile::from_values(NormOrder::TWO, ProfileKind::Def11, &values, Provenance::ClosedForm)
        .expect("valid closed form")
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub ell: usize,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub verdict: Verdict,
}

/// `σ̂_ℓ² ≤ binom(r, r−ℓ) · β̃_ℓ²` for every `ℓ`.
pub fn symmetric_comparison_check(
    model: &RandomTensorModel,
    p: NormOrder,
    estimator: &Estimator,
) -> Result<Vec<InequalityRow>> {
    let sigma = compute_profile(model, p, ProfileKind::Def11, estimator)?;
    let beta = compute_profile(model, p, ProfileKind::Bandeira, estimator)?;
    let r = model.order();
    Ok((0..=r)
        .map(|ell| {
            let lhs = sigma.entries[ell];
            let rhs = beta.entries[ell].map(|v| binomial(r, r - ell) * v);
            InequalityRow {
                ell,
                lhs,
                rhs,
                verdict: compare_le(&lhs, &rhs),
            }
        })
        .collect())
}

/// One row of the partition comparison: `σ̂_ℓ²(T^P)` at `p = 2` against
/// `Σ_{Q ∈ S(r), |Q| = |P| − ℓ + 1} ‖A^Q‖²` with `A` the stacked model.
pub fn partition_variance_row(
    model: &RandomTensorModel,
    partition: &Partition,
    ell: usize,
    estimator: &Estimator,
) -> Result<InequalityRow> {
    if ell > partition.len() {
        return Err(Error::InvalidArgument(format!(
            "l = {ell} exceeds |P| = {}",
            partition.len()
        )));
    }
    let reshaped = model.reshaped(partition)?;
    let lhs = variance_entry(&reshaped, NormOrder::TWO, ell, estimator)?;
    let stacked = model.stacked()?;
    let target = partition.len() - ell + 1;
    let mut rhs = Estimate::zero_closed_form();
    for q in enumerate_partitions(stacked.order())?.iter().filter(|q| q.len() == target) {
        let norm = norm_estimate(&stacked.reshape_partition(q)?, NormOrder::TWO, estimator)?;
        rhs = rhs.plus(norm.map(|v| v * v));
    }
    Ok(InequalityRow {
        ell,
        lhs,
        rhs,
        verdict: compare_le(&lhs, &rhs),
    })
}

/// All rows `ℓ = 0..=|P|` of [`partition_variance_row`].
pub fn partition_variance_check(
    model: &RandomTensorModel,
    partition: &Partition,
    estimator: &Estimator,
) -> Result<Vec<InequalityRow>> {
    (0..=partition.len())
        .map(|ell| partition_variance_row(model, partition, ell, estimator))
        .collect()
}
