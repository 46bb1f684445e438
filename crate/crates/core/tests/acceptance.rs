//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand_distr::{Distribution, StandardNormal};

use injbound::ball::{AscentConfig, NormOrder};
use injbound::bounds::latala_moment_bound;
use injbound::checks::{run_suite, Suite, SuiteConfig, SuiteReport};
use injbound::estimate::{Estimator, Provenance, Verdict};
use injbound::injective::{estimate_injective_norm, matrix_operator_norm_oracle};
use injbound::mc::{
    chaos_moment_estimate, compare_bounds_report, compare_with_profile, generate_model, trial_rng,
    write_comparison_csv, ModelKind, ModelParams,
};
use injbound::tensor::{enumerate_partitions, DenseTensor};
use injbound::variance::{compute_profile, CoeffDist, diagonal_model_profile, ProfileKind, RandomTensorModel};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn e<T>(r: injbound::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn gaussian_vec(d: usize, seed: u64, stream: usize) -> Vec<f64> {
    let mut rng = trial_rng(seed, stream);
    (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn matrix_oracle_agreement() -> Outcome {
    let cfg = AscentConfig::default();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let (rows, cols) = (1 + (i % 7) as usize, 1 + ((i / 7) % 7) as usize);
        let model = e(generate_model(ModelKind::GaussianStack, &ModelParams { shape: vec![rows, cols], ..ModelParams::cubic(1, 1) }, 100 + i))?;
        let m = &model.tensors()[0];
        let truth = e(matrix_operator_norm_oracle(m))?;
        let est = e(estimate_injective_norm(m, NormOrder::TWO, &cfg))?.value;
        worst = worst.max(rel_err(est, truth));
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-6, || format!("worst relative error {worst:.3e}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:.2?}"))?;
    Ok(format!("worst rel err {worst:.2e}, {elapsed:.2?}"))
}

fn rank_one_exactness() -> Outcome {
    let cfg = AscentConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let r = 1 + (i % 4) as usize;
        let vectors: Vec<Vec<f64>> = (0..r)
            .map(|t| gaussian_vec(1 + ((i as usize * 5 + t * 3) % 6), 500 + i, t))
            .collect();
        let truth: f64 = vectors.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).product();
        let a = e(DenseTensor::outer(&vectors))?;
        let est = e(estimate_injective_norm(&a, NormOrder::TWO, &cfg))?.value;
        worst = worst.max(rel_err(est, truth));
    }
    ensure(worst <= 1e-8, || format!("worst relative error {worst:.3e}"))?;
    Ok(format!("worst rel err {worst:.2e}"))
}

fn profile_matches(model: &RandomTensorModel, expected: &[f64]) -> Result<(f64, Provenance), String> {
    let est = Estimator::oracle(64);
    let profile = e(compute_profile(model, NormOrder::TWO, ProfileKind::Def11, &est))?;
    let values = profile.values();
    ensure(values.len() == expected.len(), || format!("profile {values:?}"))?;
    let worst = values.iter().zip(expected).map(|(v, x)| rel_err(*v, *x)).fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("profile {values:?}, expected {expected:?}"))?;
    Ok((worst, profile.provenance()))
}

fn variance_closed_forms() -> Outcome {
    let identity = e(RandomTensorModel::new(vec![e(DenseTensor::identity(2))?], CoeffDist::Gaussian, false))?;
    let (mut worst, prov) = profile_matches(&identity, &[1.0, 2.0, 2.0]).map_err(|m| format!("identity: {m}"))?;
    let mut labels = vec![format!("identity {}", prov.label())];
    for d in 2..=6 {
        let model = e(generate_model(ModelKind::Diagonal, &ModelParams::cubic(d, 3), 0))?;
        let (w, prov) = profile_matches(&model, &[1.0, 3.0, 3.0, d as f64]).map_err(|m| format!("d={d}: {m}"))?;
        worst = worst.max(w);
        labels.push(format!("d={d} {}", prov.label()));
    }
    Ok(format!("worst rel err {worst:.2e} ({})", labels.join(", ")))
}

fn suite(s: Suite, samples: usize) -> Result<SuiteReport, String> {
    let mut cfg = SuiteConfig::new(s, 7);
    cfg.samples = samples;
    e(run_suite(s, &cfg))
}

fn oracle_grade_inequalities() -> Outcome {
    let mut parts = Vec::new();
    for s in [Suite::Prop21, Suite::Prop22] {
        let rep = suite(s, 20)?;
        let total = rep.rows.len();
        ensure(rep.fails == 0, || format!("{}: {} violations", s.name(), rep.fails))?;
        ensure(2 * rep.holds >= total, || {
            format!("{}: only {}/{} rows oracle-grade", s.name(), rep.holds, total)
        })?;
        parts.push(format!("{} {}/{} certified", s.name(), rep.holds, total));
    }
    Ok(parts.join(", "))
}

fn diagonal_model_validity() -> Outcome {
    let start = Instant::now();
    let cfg = AscentConfig::default();
    let mut parts = Vec::new();
    for d in [2, 4, 8] {
        let model = e(generate_model(ModelKind::Diagonal, &ModelParams::cubic(d, 3), 0))?;
        let cmp = e(compare_with_profile("diag", &model, diagonal_model_profile(3, d), 500, &cfg, 11))?;
        ensure(cmp.provenance == Provenance::ClosedForm, || "profile not closed form".into())?;
        let upper = cmp.empirical.upper(3.0);
        ensure(cmp.contract == Verdict::Holds, || {
            format!("d={d}: mean+3se {upper:.4} > bound {:.4}", cmp.thm1_opt.bound)
        })?;
        parts.push(format!("d={d} {upper:.3}<={:.3}", cmp.thm1_opt.bound));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:.2?}"))?;
    Ok(format!("{}, {elapsed:.2?}", parts.join(", ")))
}

fn all_hold(s: Suite, samples: usize) -> Outcome {
    let rep = suite(s, samples)?;
    ensure(rep.rows.len() == samples, || format!("{} rows", rep.rows.len()))?;
    ensure(rep.holds == samples, || {
        format!("{} holds, {} fails, {} inconclusive", rep.holds, rep.fails, rep.inconclusive)
    })?;
    Ok(format!("{}/{} hold", rep.holds, samples))
}

fn chaos_moments() -> Outcome {
    let est = Estimator::oracle(64);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for i in 0..10u64 {
        let (rows, cols) = (1 + (i % 4) as usize, 1 + ((i / 2) % 4) as usize);
        let data = gaussian_vec(rows * cols, 900 + i, 0);
        let a = e(DenseTensor::new(vec![rows, cols], data))?;
        for moment_p in [2.0, 4.0, 8.0] {
            let m = e(chaos_moment_estimate(&a, moment_p, 100_000, 40 + i))?;
            let bound = e(latala_moment_bound(&a, moment_p, 3.0, &est))?.value;
            ensure(m.estimate.mean <= bound, || {
                format!("A#{i} p={moment_p}: {} > {bound}", m.estimate.mean)
            })?;
            worst_ratio = worst_ratio.max(m.estimate.mean / bound);
            if moment_p == 2.0 {
                let z = (m.estimate.mean - a.frobenius_norm()).abs() / m.estimate.stderr;
                ensure(z <= 4.0, || format!("A#{i}: second moment off ‖A‖_F by {z:.2} se"))?;
                worst_z = worst_z.max(z);
            }
        }
    }
    Ok(format!("max moment/bound {worst_ratio:.3}, max |z| at p=2 {worst_z:.2}"))
}

fn bell_numbers() -> Outcome {
    for (r, bell) in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52)] {
        let parts = e(enumerate_partitions(r))?;
        ensure(parts.len() == bell, || format!("r={r}: {} partitions", parts.len()))?;
        for p in &parts {
            let blocks = p.blocks();
            let canonical = blocks.iter().all(|b| !b.is_empty() && b.windows(2).all(|w| w[0] < w[1]))
                && blocks.windows(2).all(|w| w[0][0] < w[1][0]);
            let mut cover: Vec<usize> = blocks.concat();
            cover.sort_unstable();
            ensure(canonical && cover == (0..r).collect::<Vec<_>>(), || format!("r={r}: {blocks:?}"))?;
        }
        let mut seen: Vec<_> = parts.iter().map(|p| p.blocks().to_vec()).collect();
        seen.sort();
        seen.dedup();
        ensure(seen.len() == bell, || format!("r={r}: duplicates"))?;
    }
    Ok("1, 2, 5, 15, 52".into())
}

fn comparison_csv() -> Result<Vec<u8>, String> {
    let models = [
        e(generate_model(ModelKind::GaussianStack, &ModelParams::cubic(3, 2).with_n(2), 3))?,
        e(generate_model(ModelKind::SymmetricStack, &ModelParams::cubic(2, 3).with_n(2), 4))?,
    ];
    let est = Estimator::oracle(64);
    let mut rows = Vec::new();
    for (k, m) in models.iter().enumerate() {
        for p in [NormOrder::TWO, NormOrder::INFINITY] {
            rows.push(e(compare_bounds_report(&format!("m{k}"), m, p, 400, &est, 99))?);
        }
    }
    let mut out = Vec::new();
    e(write_comparison_csv(&rows, &mut out))?;
    Ok(out)
}

fn determinism() -> Outcome {
    let mut outputs = Vec::new();
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        outputs.push(pool.install(comparison_csv)?);
    }
    ensure(outputs[0] == outputs[1], || "CSV differs between 1 and 4 threads".into())?;
    Ok(format!("{} identical bytes", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("matrix norm oracle agreement", matrix_oracle_agreement),
        ("rank-one exactness", rank_one_exactness),
        ("variance closed forms", variance_closed_forms),
        ("symmetric and partition variance inequalities", oracle_grade_inequalities),
        ("diagonal model mean below optimized bound", diagonal_model_validity),
        ("second moment identity", || all_hold(Suite::Prop31, 20)),
        ("beta infimum sandwich", || all_hold(Suite::AppendixB, 400)),
        ("Donsker-Varadhan formula", || all_hold(Suite::AppendixA, 1000)),
        ("chaos moments below partition-norm bound", chaos_moments),
        ("partition enumeration", bell_numbers),
        ("thread-count determinism", determinism),
    ];
    // Numeric arguments select a subset of criteria, e.g. `-- 3 7`.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = check();
        let tag = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = outcome.unwrap_or_else(|m| {
            failed += 1;
            m
        });
        println!("[{tag}] {:>2} {name}: {detail} ({:.2?})", i + 1, start.elapsed());
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
