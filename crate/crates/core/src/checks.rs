//! Seeded numerical checks of the comparison inequalities and identities.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::{restart_rng, NormOrder, DEFAULT_SEARCH_CAP};
use crate::bounds::{
    beta_objective, dense_scan_infimum, donsker_varadhan_check, golden_section_log_beta, sandwich_limits,
    sandwich_max, DEFAULT_PROBES, GOLDEN_ITERATIONS, LOG_BETA_MAX, LOG_BETA_MIN, SANDWICH_SLACK,
};
use crate::bounds::second_moment_rhs;
use crate::error::{Error, Result};
use crate::estimate::{Estimator, Provenance, Verdict};
use crate::mc::{generate_model, second_moment_mc, ModelKind, ModelParams};
use crate::tensor::{enumerate_partitions, DenseTensor};
use crate::variance::{partition_variance_row, symmetric_comparison_check};

/// Number of log-spaced points of the dense `β` scan.
pub const DENSE_SCAN_POINTS: usize = 100_000;
pub const DENSE_SCAN_RANGE: (f64, f64) = (1e-6, 1e6);
/// Standard errors allowed between a Monte Carlo mean and its target.
pub const MC_SIGMAS: f64 = 4.0;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "prop21")]
    Prop21,
    #[serde(rename = "prop22")]
    Prop22,
    #[serde(rename = "prop31")]
    Prop31,
    #[serde(rename = "appendixA")]
    AppendixA,
    #[serde(rename = "appendixB")]
    AppendixB,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Prop21, Suite::Prop22, Suite::Prop31, Suite::AppendixA, Suite::AppendixB];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Prop21 => "prop21",
            Suite::Prop22 => "prop22",
            Suite::Prop31 => "prop31",
            Suite::AppendixA => "appendixA",
            Suite::AppendixB => "appendixB",
        }
    }

    /// Instances generated when no sample count is given.
    pub fn default_samples(self) -> usize {
        match self {
            Suite::Prop21 | Suite::Prop22 | Suite::Prop31 => 20,
            Suite::AppendixA => 1000,
            Suite::AppendixB => 400,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                what: "check suite",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub samples: usize,
    pub seed: u64,
    pub resolution: usize,
    pub cap: f64,
    pub mc_samples: usize,
    pub probes: usize,
}

impl SuiteConfig {
    pub fn new(suite: Suite, seed: u64) -> Self {
        Self {
            samples: suite.default_samples(),
            seed,
            resolution: 64,
            cap: DEFAULT_SEARCH_CAP,
            mc_samples: DEFAULT_MC_SAMPLES,
            probes: DEFAULT_PROBES,
        }
    }

    fn estimator(&self) -> Estimator {
        Estimator::Oracle {
            resolution: self.resolution,
            cap: self.cap,
            fallback: crate::ball::AscentConfig::default().with_seed(self.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: Verdict,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub holds: usize,
    pub fails: usize,
    pub inconclusive: usize,
    pub rows: Vec<CheckRow>,
}

impl SuiteReport {
    fn new(suite: Suite, config: SuiteConfig, rows: Vec<CheckRow>) -> Self {
        let count = |v| rows.iter().filter(|r| r.verdict == v).count();
        Self {
            suite,
            config,
            holds: count(Verdict::Holds),
            fails: count(Verdict::Fails),
            inconclusive: count(Verdict::Inconclusive),
            rows,
        }
    }

    pub fn passed(&self) -> bool {
        self.fails == 0
    }
}

pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<SuiteReport> {
    let rows = match suite {
        Suite::Prop21 => prop21(config)?,
        Suite::Prop22 => prop22(config)?,
        Suite::Prop31 => prop31(config)?,
        Suite::AppendixA => appendix_a(config)?,
        Suite::AppendixB => appendix_b(config),
    };
    Ok(SuiteReport::new(suite, *config, rows))
}

fn pick<T: Copy>(rng: &mut impl Rng, options: &[T]) -> T {
    options[rng.random_range(0..options.len())]
}

/// Symmetric comparison on seeded symmetric stacks with `d, r ≤ 3`, each at
/// `p = 2` and `p = ∞`.
fn prop21(config: &SuiteConfig) -> Result<Vec<CheckRow>> {
    let estimator = config.estimator();
    let per_model = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(config.seed, i);
            let (d, r, n) = (pick(&mut rng, &[2, 3]), pick(&mut rng, &[2, 3]), pick(&mut rng, &[1, 2, 3]));
            let model = generate_model(
                ModelKind::SymmetricStack,
                &ModelParams::cubic(d, r).with_n(n),
                rng.random(),
            )?;
            let mut rows = Vec::new();
            for p in [NormOrder::TWO, NormOrder::INFINITY] {
                for row in symmetric_comparison_check(&model, p, &estimator)? {
                    rows.push(CheckRow {
                        case: format!("model {i} d={d} r={r} n={n} p={p} l={}", row.ell),
                        lhs: row.lhs.value,
                        rhs: row.rhs.value,
                        verdict: row.verdict,
                        provenance: row.lhs.provenance.max(row.rhs.provenance),
                        extra: BTreeMap::new(),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_model.into_iter().flatten().collect())
}

/// Partition comparison on seeded Gaussian stacks of order `≤ 3`, `d ≤ 3`,
/// `n ≤ 3`, for every partition and every `ℓ`.
fn prop22(config: &SuiteConfig) -> Result<Vec<CheckRow>> {
    let estimator = config.estimator();
    let per_model = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(config.seed, i);
            let (d, m, n) = (pick(&mut rng, &[2, 3]), pick(&mut rng, &[1, 2, 3]), pick(&mut rng, &[1, 2, 3]));
            let model = generate_model(ModelKind::GaussianStack, &ModelParams::cubic(d, m).with_n(n), rng.random())?;
            let mut rows = Vec::new();
            for partition in enumerate_partitions(m)? {
                for ell in 0..=partition.len() {
                    let row = partition_variance_row(&model, &partition, ell, &estimator)?;
                    rows.push(CheckRow {
                        case: format!("model {i} d={d} r-1={m} n={n} P={partition} l={ell}"),
                        lhs: row.lhs.value,
                        rhs: row.rhs.value,
                        verdict: row.verdict,
                        provenance: row.lhs.provenance.max(row.rhs.provenance),
                        extra: BTreeMap::new(),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_model.into_iter().flatten().collect())
}

/// Second-moment expansion against a Monte Carlo estimate of its left side.
fn prop31(config: &SuiteConfig) -> Result<Vec<CheckRow>> {
    (0..config.samples)
        .map(|i| {
            let mut rng = restart_rng(config.seed, i);
            let r = rng.random_range(1..=3);
            let shape: Vec<usize> = (0..r).map(|_| rng.random_range(1..=3)).collect();
            let len: usize = shape.iter().product();
            let a = DenseTensor::new(shape.clone(), (0..len).map(|_| rng.sample(StandardNormal)).collect())?;
            let xs: Vec<Vec<f64>> = shape
                .iter()
                .map(|&d| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect())
                .collect();
            let beta = rng.random_range(-1.0..1.5f64).exp();
            let rhs = second_moment_rhs(&a, &xs, beta)?;
            let mc = second_moment_mc(&a, &xs, beta, config.mc_samples, rng.random())?;
            let holds = (mc.mean - rhs).abs() <= MC_SIGMAS * mc.stderr;
            let mut extra = BTreeMap::new();
            extra.insert("stderr".into(), mc.stderr);
            extra.insert("beta".into(), beta);
            Ok(CheckRow {
                case: format!("instance {i} shape={shape:?}"),
                lhs: mc.mean,
                rhs,
                verdict: if holds { Verdict::Holds } else { Verdict::Fails },
                provenance: Provenance::Empirical,
                extra,
            })
        })
        .collect()
}

/// Donsker–Varadhan on random finite spaces of size `2..=50`.
fn appendix_a(config: &SuiteConfig) -> Result<Vec<CheckRow>> {
    (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(config.seed, i);
            let size = rng.random_range(2..=50);
            let raw: Vec<f64> = (0..size).map(|_| rng.random_range(-4.0..0.0f64).exp()).collect();
            let total: f64 = raw.iter().sum();
            let prior: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let g: Vec<f64> = (0..size).map(|_| rng.random_range(-10.0..=10.0)).collect();
            let report = donsker_varadhan_check(&prior, &g, config.probes, rng.random())?;
            let holds = report.gap.abs() <= 1e-10 && report.sup_probe <= report.lhs + 1e-10;
            let mut extra = BTreeMap::new();
            extra.insert("gap".into(), report.gap);
            extra.insert("sup_probe".into(), report.sup_probe);
            Ok(CheckRow {
                case: format!("instance {i} size={size}"),
                lhs: report.lhs,
                rhs: report.gibbs_value,
                verdict: if holds { Verdict::Holds } else { Verdict::Fails },
                provenance: Provenance::ClosedForm,
                extra,
            })
        })
        .collect()
}

/// Sandwich for the `ℓ ≠ 1` infimum and golden section against a dense
/// scan, on random positive coefficients with `r` cycling through `2..=5`.
fn appendix_b(config: &SuiteConfig) -> Vec<CheckRow> {
    (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(config.seed, i);
            let r = 2 + i % 4;
            let a: Vec<f64> = (0..=r).map(|_| rng.random_range(-3.0..3.0f64).exp()).collect();
            let mut without_one = a.clone();
            without_one[1] = 0.0;
            let (lo, hi) = DENSE_SCAN_RANGE;
            let scan = dense_scan_infimum(&without_one, lo, hi, DENSE_SCAN_POINTS);
            let (_, m) = sandwich_max(&a).expect("r >= 2");
            let (lower, upper) = sandwich_limits(r, m);
            let slack = SANDWICH_SLACK * upper;
            let in_sandwich = scan >= lower - slack && scan <= upper + slack;

            let beta = golden_section_log_beta(&a, LOG_BETA_MIN, LOG_BETA_MAX, GOLDEN_ITERATIONS);
            let golden = beta_objective(&a, beta);
            let full_scan = dense_scan_infimum(&a, lo, hi, DENSE_SCAN_POINTS);
            let matches = (golden - full_scan).abs() <= 1e-6 * full_scan;

            let mut extra = BTreeMap::new();
            extra.insert("lower".into(), lower);
            extra.insert("upper".into(), upper);
            extra.insert("golden".into(), golden);
            extra.insert("dense_scan".into(), full_scan);
            CheckRow {
                case: format!("instance {i} r={r}"),
                lhs: scan,
                rhs: upper,
                verdict: if in_sandwich && matches {
                    Verdict::Holds
                } else {
                    Verdict::Fails
                },
                provenance: Provenance::ClosedForm,
                extra,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert_eq!("APPENDIXb".parse::<Suite>().unwrap(), Suite::AppendixB);
        assert!("prop99".parse::<Suite>().is_err());
    }

    #[test]
    fn small_suites_pass() {
        let mut cfg = SuiteConfig::new(Suite::AppendixB, 7);
        cfg.samples = 8;
        let b = run_suite(Suite::AppendixB, &cfg).unwrap();
        assert_eq!((b.holds, b.rows.len()), (8, 8));

        cfg.samples = 20;
        cfg.probes = 50;
        assert!(run_suite(Suite::AppendixA, &cfg).unwrap().passed());

        cfg.samples = 2;
        cfg.mc_samples = 20_000;
        assert!(run_suite(Suite::Prop31, &cfg).unwrap().passed());
    }
}
