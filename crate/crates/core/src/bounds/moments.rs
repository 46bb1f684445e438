use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::NormOrder;
use crate::error::{Error, Result};
use crate::estimate::{Estimate, Estimator, Provenance};
use crate::injective::norm_estimate;
use crate::tensor::{enumerate_partitions, DenseTensor, IndexSubset, Partition};
use crate::variance::RandomTensorModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTerm {
    /// 1-based, e.g. `{{1},{2,3}}`.
    pub partition: String,
    pub weight: f64,
    pub norm: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBound {
    pub value: f64,
    pub constant: f64,
    pub moment_p: f64,
    pub terms: Vec<MomentTerm>,
    pub provenance: Provenance,
}

fn check_moment(moment_p: f64) -> Result<()> {
    if !(moment_p >= 2.0) || !moment_p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "moment order must be finite and >= 2, got {moment_p}"
        )));
    }
    Ok(())
}

/// `constant · Σ_Q weight(|Q|) · ‖A^Q‖_{ℓ2-inj}` over every `Q ∈ S(r)`.
fn partition_sum(
    a: &DenseTensor,
    moment_p: f64,
    constant: f64,
    estimator: &Estimator,
    weight: impl Fn(usize) -> f64 + Sync,
) -> Result<MomentBound> {
    check_moment(moment_p)?;
    let partitions = enumerate_partitions(a.order())?;
    let terms = partitions
        .par_iter()
        .map(|q| {
            let norm = norm_estimate(&a.reshape_partition(q)?, NormOrder::TWO, estimator)?;
            Ok(MomentTerm {
                partition: q.to_string(),
                weight: weight(q.len()),
                norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let value = constant * terms.iter().map(|t| t.weight * t.norm.value).sum::<f64>();
    let provenance = terms
        .iter()
        .map(|t| t.norm.provenance)
        .max()
        .unwrap_or(Provenance::ClosedForm);
    Ok(MomentBound {
        value,
        constant,
        moment_p,
        terms,
        provenance,
    })
}

/// `C_r · Σ_{P ∈ S(r)} p^{|P|/2} ‖A^P‖_{ℓ2-inj}`.
pub fn latala_moment_bound(a: &DenseTensor, moment_p: f64, c_r: f64, estimator: &Estimator) -> Result<MomentBound> {
    partition_sum(a, moment_p, c_r, estimator, |size| moment_p.powf(size as f64 / 2.0))
}

/// `C · Σ_{Q ∈ S(r)} p^{(|Q|−|P|)/2} ‖A^Q‖_{ℓ2-inj}` with `A` the stack of
/// the order `r − 1` model and `P ∈ S(r−1)`.
pub fn partition_moment_bound(
    model: &RandomTensorModel,
    partition: &Partition,
    moment_p: f64,
    constant: f64,
    estimator: &Estimator,
) -> Result<MomentBound> {
    if partition.order() != model.order() {
        return Err(Error::InvalidPartition(format!(
            "partition of order {} for a model of order {}",
            partition.order(),
            model.order()
        )));
    }
    let a = model.stacked()?;
    let m = partition.len() as f64;
    partition_sum(&a, moment_p, constant, estimator, |size| {
        moment_p.powf((size as f64 - m) / 2.0)
    })
}

/// `Σ_{ℓ=0}^r β^{ℓ−r} Σ_{|I|=ℓ} ‖A contracted on I with xs‖_F²`.
pub fn second_moment_rhs(a: &DenseTensor, xs: &[Vec<f64>], beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be positive and finite, got {beta}")));
    }
    let r = a.order();
    if xs.len() != r {
        return Err(Error::Dimension(format!("{} vectors for a tensor of order {r}", xs.len())));
    }
    let mut total = 0.0;
    for ell in 0..=r {
        let weight = beta.powi(ell as i32 - r as i32);
        for subset in IndexSubset::all_of_size(r, ell) {
            let vectors: Vec<&[f64]> = subset.members().iter().map(|&t| xs[t].as_slice()).collect();
            total += weight * a.contract_subset(&subset, &vectors)?.frobenius_norm_sq();
        }
    }
    Ok(total)
}
