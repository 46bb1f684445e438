use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::ball::restart_rng;
use crate::error::{Error, Result};

pub const DEFAULT_PROBES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DvReport {
    /// `log Σ_i π_i e^{g_i}`.
    pub lhs: f64,
    /// `E_ρ g − KL(ρ‖π)` at the Gibbs posterior `ρ_i ∝ π_i e^{g_i}`.
    pub gibbs_value: f64,
    pub gap: f64,
    /// Largest `E_ρ g − KL(ρ‖π)` over the random probe posteriors.
    pub sup_probe: f64,
    /// The same functional at the point mass on `argmax g`.
    pub point_mass_value: f64,
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `E_ρ g − KL(ρ‖π)`, with `0 log 0 = 0`.
pub fn variational_value(rho: &[f64], prior: &[f64], g: &[f64]) -> f64 {
    rho.iter()
        .zip(prior)
        .zip(g)
        .filter(|((r, _), _)| **r > 0.0)
        .map(|((&r, &pi), &gi)| r * (gi - (r.ln() - pi.ln())))
        .sum()
}

fn validate(prior: &[f64], g: &[f64]) -> Result<()> {
    if prior.is_empty() {
        return Err(Error::Probability("empty prior".into()));
    }
    if prior.len() != g.len() {
        return Err(Error::Probability(format!(
            "prior has {} points but g has {}",
            prior.len(),
            g.len()
        )));
    }
    if let Some(bad) = prior.iter().find(|&&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::Probability(format!("prior weight {bad} is not positive")));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Probability(format!("prior sums to {total}")));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Probability("g has non-finite entries".into()));
    }
    Ok(())
}

/// Verifies `log E_π e^g = sup_ρ (E_ρ g − KL(ρ‖π))` on a finite space: the
/// Gibbs posterior attains it and `probes` random posteriors stay below.
pub fn donsker_varadhan_check(prior: &[f64], g: &[f64], probes: usize, seed: u64) -> Result<DvReport> {
    validate(prior, g)?;
    let logits = prior.iter().zip(g).map(|(p, gi)| p.ln() + gi);
    let lhs = log_sum_exp(logits.clone());
    let gibbs: Vec<f64> = logits.map(|l| (l - lhs).exp()).collect();
    let gibbs_value = variational_value(&gibbs, prior, g);

    let mut rng = restart_rng(seed, 0);
    let mut sup_probe = f64::NEG_INFINITY;
    let mut rho = vec![0.0; prior.len()];
    for _ in 0..probes {
        // Dirichlet(α) posteriors; small α makes them nearly sparse
        let alpha: f64 = (rng.random_range(-3.0..1.0f64)).exp();
        let shifted = Gamma::new(alpha + 1.0, 1.0).expect("positive shape");
        // log of a Gamma(α) draw as log Gamma(α+1) + log(U)/α, so tiny weights stay representable
        let logs: Vec<f64> = (0..rho.len())
            .map(|_| {
                let e: f64 = Exp1.sample(&mut rng);
                shifted.sample(&mut rng).ln() - e / alpha
            })
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (r, l) in rho.iter_mut().zip(&logs) {
            *r = (l - top).exp();
        }
        let total: f64 = rho.iter().sum();
        if total > 0.0 {
            rho.iter_mut().for_each(|r| *r /= total);
            sup_probe = sup_probe.max(variational_value(&rho, prior, g));
        }
    }

    let best = (0..g.len()).fold(0, |b, i| if g[i] > g[b] { i } else { b });
    Ok(DvReport {
        lhs,
        gibbs_value,
        gap: lhs - gibbs_value,
        sup_probe,
        point_mass_value: g[best] + prior[best].ln(),
    })
}
