//! ℓp injective norms: `sup A(x_1, …, x_r)` over `x_t ∈ B_p^{d_t}`.

use serde::{Deserialize, Serialize};

use crate::ball::{
    block_candidate_count, block_candidates, maximize_block_multilinear, search_product,
    AscentConfig, BallSpec, BlockObjective, NormOrder,
};
use crate::error::{Error, Result};
use crate::estimate::{Estimate, Estimator};
use crate::linalg::{dual_norm, SymMatrix};
use crate::tensor::{DenseTensor, IndexSubset};

/// Mixed into the seed of the negated-form search so it explores different
/// starting points from the positive one.
const NEGATED_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Ascent,
    MatrixOracle,
    VertexOracle,
    GridOracle,
    ClosedForm,
}

impl NormMethod {
    /// True when the value is the exact supremum (up to rounding) rather
    /// than a lower estimate.
    pub fn is_exact(self) -> bool {
        matches!(
            self,
            NormMethod::MatrixOracle | NormMethod::VertexOracle | NormMethod::ClosedForm
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Vec<Vec<f64>>>,
    pub restarts_used: usize,
}

/// The multilinear form `x ↦ sign · A(x_1, …, x_r)`.
pub struct MultilinearForm<'a> {
    tensor: &'a DenseTensor,
    sign: f64,
}

impl<'a> MultilinearForm<'a> {
    pub fn new(tensor: &'a DenseTensor) -> Self {
        Self { tensor, sign: 1.0 }
    }

    pub fn negated(tensor: &'a DenseTensor) -> Self {
        Self { tensor, sign: -1.0 }
    }
}

fn as_refs(xs: &[Vec<f64>]) -> Vec<&[f64]> {
    xs.iter().map(Vec::as_slice).collect()
}

impl BlockObjective for MultilinearForm<'_> {
    fn dims(&self) -> Vec<usize> {
        self.tensor.shape().to_vec()
    }

    fn value(&self, xs: &[Vec<f64>]) -> f64 {
        self.sign
            * self
                .tensor
                .eval_multilinear(&as_refs(xs))
                .expect("dims checked by the optimizer")
    }

    fn block_gradient(&self, xs: &[Vec<f64>], block: usize) -> Vec<f64> {
        let order = self.tensor.order();
        let others = IndexSubset::full(order).without(block);
        let vectors: Vec<&[f64]> = others.members().iter().map(|&t| xs[t].as_slice()).collect();
        let residual = self
            .tensor
            .contract_subset(&others, &vectors)
            .expect("dims checked by the optimizer");
        residual.into_data().into_iter().map(|v| self.sign * v).collect()
    }
}

/// Lower estimate of `‖A‖_{ℓp-inj}` by block ascent on both `A` and `−A`.
pub fn estimate_injective_norm(
    tensor: &DenseTensor,
    p: NormOrder,
    cfg: &AscentConfig,
) -> Result<NormEstimate> {
    if tensor.order() == 0 {
        return Err(Error::InvalidArgument(
            "injective norm needs a tensor of order >= 1".into(),
        ));
    }
    let spec = BallSpec::new(p, tensor.shape().to_vec())?;
    let plus = maximize_block_multilinear(&MultilinearForm::new(tensor), &spec, cfg)?;
    let minus_cfg = cfg.with_seed(cfg.seed ^ NEGATED_STREAM);
    let minus = maximize_block_multilinear(&MultilinearForm::negated(tensor), &spec, &minus_cfg)?;
    let (value, mut argmax) = if minus.value > plus.value {
        let mut xs = minus.argmax;
        // −A(x_1, …) = A(−x_1, …)
        for v in &mut xs[0] {
            *v = -*v;
        }
        (minus.value, xs)
    } else {
        (plus.value, plus.argmax)
    };
    if value <= 0.0 {
        argmax.iter_mut().for_each(|x| x.iter_mut().for_each(|v| *v = v.abs()));
    }
    Ok(NormEstimate {
        value: value.max(0.0),
        method: NormMethod::Ascent,
        argmax: Some(argmax),
        restarts_used: 2 * cfg.restarts,
    })
}

/// Largest singular value via the Jacobi eigenvalues of `MᵀM`.
pub fn matrix_operator_norm_oracle(m: &DenseTensor) -> Result<f64> {
    if m.order() != 2 {
        return Err(Error::Dimension(format!(
            "operator norm needs a matrix, got order {}",
            m.order()
        )));
    }
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    let mut gram = SymMatrix::zeros(cols);
    gram.add_gram_transposed(m.data(), rows);
    Ok(gram.max_eigenvalue().max(0.0).sqrt())
}

/// Oracle value of `‖A‖_{ℓp-inj}`: exact (matrix eigen, vertex enumeration,
/// dual norm) where possible, otherwise an exhaustive grid over all but the
/// largest blocks with the remaining blocks solved exactly.
///
/// At `p = 2` the two largest blocks are solved as an operator norm; at
/// other finite `p` and at `p = ∞` only the largest block is, via the dual
/// norm of the residual vector.
pub fn injective_norm_oracle(
    tensor: &DenseTensor,
    p: NormOrder,
    resolution: usize,
    cap: f64,
) -> Result<NormEstimate> {
    let order = tensor.order();
    if order == 0 {
        return Err(Error::InvalidArgument(
            "injective norm needs a tensor of order >= 1".into(),
        ));
    }
    let estimate = |value, method| NormEstimate {
        value,
        method,
        argmax: None,
        restarts_used: 0,
    };
    if order == 1 {
        return Ok(estimate(dual_norm(tensor.data(), p), NormMethod::ClosedForm));
    }
    if order == 2 && p == NormOrder::TWO {
        return Ok(estimate(
            matrix_operator_norm_oracle(tensor)?,
            NormMethod::MatrixOracle,
        ));
    }
    let inner_count = if p == NormOrder::TWO { 2 } else { 1 };
    let mut by_size: Vec<usize> = (0..order).collect();
    by_size.sort_by_key(|&t| std::cmp::Reverse(tensor.shape()[t]));
    let mut outer: Vec<usize> = by_size[inner_count..].to_vec();
    outer.sort_unstable();
    let outer = IndexSubset::new(order, outer)?;

    let estimate_points: f64 = outer
        .members()
        .iter()
        .map(|&t| block_candidate_count(tensor.shape()[t], p, resolution))
        .product();
    if estimate_points > cap {
        return Err(Error::SearchSpace {
            estimate: estimate_points,
            cap,
        });
    }
    let candidates: Vec<_> = outer
        .members()
        .iter()
        .map(|&t| block_candidates(tensor.shape()[t], p, resolution))
        .collect();
    let mut best: f64 = 0.0;
    let mut failure = None;
    search_product(&candidates, cap, |xs| {
        let refs = as_refs(xs);
        match tensor.contract_subset(&outer, &refs) {
            Ok(residual) => {
                let v = if residual.order() == 2 {
                    // residual is a matrix only at p = 2
                    matrix_operator_norm_oracle(&residual).unwrap_or(0.0)
                } else {
                    dual_norm(residual.data(), p)
                };
                best = best.max(v);
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let method = if p.is_infinite() {
        NormMethod::VertexOracle
    } else {
        NormMethod::GridOracle
    };
    Ok(estimate(best, method))
}

/// `‖A‖_{ℓp-inj}` tagged with provenance, evaluated per `estimator`. An
/// oracle that would exceed its search cap falls back to ascent.
pub fn norm_estimate(tensor: &DenseTensor, p: NormOrder, estimator: &Estimator) -> Result<Estimate> {
    match estimator {
        Estimator::Ascent(cfg) => Ok(Estimate::heuristic(estimate_injective_norm(tensor, p, cfg)?.value)),
        Estimator::Oracle {
            resolution,
            cap,
            fallback,
        } => match injective_norm_oracle(tensor, p, *resolution, *cap) {
            Ok(est) if est.method == NormMethod::ClosedForm => Ok(Estimate::closed_form(est.value)),
            Ok(est) => Ok(Estimate::oracle(est.value, est.method.is_exact())),
            Err(Error::SearchSpace { .. }) => Ok(Estimate::heuristic(
                estimate_injective_norm(tensor, p, fallback)?.value,
            )),
            Err(e) => Err(e),
        },
    }
}
