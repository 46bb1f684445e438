//! Maximization over products of ℓp balls.
//!
//! The ascent is a cyclic block conditional-gradient method: each block is
//! replaced by the unit vector that maximizes the linearization of the
//! objective in that block. For objectives that are convex in every block
//! (multilinear forms, sums of squared contractions) a step never lowers the
//! value, and the accepted iterate sequence is nondecreasing by construction.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::lp_norm;

pub const DEFAULT_SEED: u64 = 0x1b5e_ed00;

/// Default cap on the number of points an exhaustive oracle may visit.
pub const DEFAULT_SEARCH_CAP: f64 = 5.0e7;

/// Norm order `p ∈ [2, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormOrder(f64);

impl NormOrder {
    pub const TWO: NormOrder = NormOrder(2.0);
    pub const INFINITY: NormOrder = NormOrder(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 2.0 {
            return Err(Error::NormOrder(p));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> f64 {
        if self.is_infinite() {
            1.0
        } else {
            self.0 / (self.0 - 1.0)
        }
    }

    /// `d^{1 − 2/p}`, which is `d` at `p = ∞`.
    pub fn dimension_power(self, d: usize) -> f64 {
        let d = d as f64;
        if self.is_infinite() {
            d
        } else {
            d.powf(1.0 - 2.0 / self.0)
        }
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Self::INFINITY),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("cannot parse norm order {s:?}")))?;
                Self::new(p)
            }
        }
    }
}

impl Serialize for NormOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        let parsed = match Repr::deserialize(d)? {
            Repr::Num(p) => NormOrder::new(p),
            Repr::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub p: NormOrder,
    pub dims: Vec<usize>,
}

impl BallSpec {
    pub fn new(p: NormOrder, dims: Vec<usize>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Dimension(format!("ball dims {dims:?} contain 0")));
        }
        Ok(Self { p, dims })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 1000,
            rel_tol: 1e-9,
            seed: DEFAULT_SEED,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "restarts and max_iters must be positive".into(),
            ));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_restarts(self, restarts: usize) -> Self {
        Self { restarts, ..self }
    }
}

/// The unit vector maximizing `⟨g, x⟩` over `B_p`.
///
/// Finite `p`: `x_i ∝ sign(g_i)|g_i|^{q−1}`. At `p = ∞`: `x = sign(g)` with
/// zero components mapped to `+1`.
pub fn lp_dual_map(g: &[f64], p: NormOrder) -> Result<Vec<f64>> {
    let scale = g.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::InvalidArgument("non-finite gradient".into()));
    }
    if scale == 0.0 {
        return Err(Error::NoAscentDirection);
    }
    if p.is_infinite() {
        return Ok(g.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect());
    }
    let mut x: Vec<f64> = if p == NormOrder::TWO {
        g.iter().map(|v| v / scale).collect()
    } else {
        let power = p.conjugate() - 1.0;
        g.iter()
            .map(|&v| (v / scale).signum() * (v.abs() / scale).powf(power))
            .collect()
    };
    let norm = lp_norm(&x, p.value());
    for v in &mut x {
        *v /= norm;
    }
    Ok(x)
}

/// An objective over a product of balls that is convex in each block with
/// the other blocks fixed.
pub trait BlockObjective: Sync {
    fn dims(&self) -> Vec<usize>;

    fn value(&self, xs: &[Vec<f64>]) -> f64;

    /// Gradient with respect to block `block` at `xs`.
    fn block_gradient(&self, xs: &[Vec<f64>], block: usize) -> Vec<f64>;
}

/// Result of one ascent run from a fixed initial point.
#[derive(Debug, Clone)]
pub struct AscentRun {
    pub value: f64,
    pub argmax: Vec<Vec<f64>>,
    /// Objective value after every accepted or rejected block step.
    pub history: Vec<f64>,
    pub cycles: usize,
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub value: f64,
    pub argmax: Vec<Vec<f64>>,
    pub restarts_used: usize,
    /// Index of the restart that produced `value`.
    pub best_restart: usize,
}

fn check_dims(objective: &dyn BlockObjective, spec: &BallSpec) -> Result<()> {
    let dims = objective.dims();
    if dims != spec.dims {
        return Err(Error::Dimension(format!(
            "objective blocks {dims:?} do not match ball dims {:?}",
            spec.dims
        )));
    }
    Ok(())
}

/// Runs cyclic dual-map updates from `init` until one full cycle improves
/// the value by less than `rel_tol` (relative), or `max_iters` cycles.
pub fn ascend_from(
    objective: &dyn BlockObjective,
    spec: &BallSpec,
    init: Vec<Vec<f64>>,
    cfg: &AscentConfig,
    restart: usize,
) -> Result<AscentRun> {
    let mut xs = init;
    let mut value = objective.value(&xs);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            value,
            restart,
            iteration: 0,
            block: 0,
        });
    }
    let mut history = vec![value];
    let mut cycles = 0;
    for iteration in 0..cfg.max_iters {
        cycles = iteration + 1;
        let start = value;
        for block in 0..xs.len() {
            let grad = objective.block_gradient(&xs, block);
            let candidate = match lp_dual_map(&grad, spec.p) {
                Ok(x) => x,
                Err(Error::NoAscentDirection) => continue,
                Err(e) => return Err(e),
            };
            let previous = std::mem::replace(&mut xs[block], candidate);
            let next = objective.value(&xs);
            if !next.is_finite() {
                return Err(Error::NonFinite {
                    value: next,
                    restart,
                    iteration,
                    block,
                });
            }
            if next >= value {
                value = next;
            } else {
                // Rounding can make a convex step look like a tiny loss.
                xs[block] = previous;
            }
            history.push(value);
        }
        if value - start <= cfg.rel_tol * value.abs() {
            break;
        }
    }
    Ok(AscentRun {
        value,
        argmax: xs,
        history,
        cycles,
    })
}

/// Point on the unit `p`-sphere with all coordinates equal.
pub fn anchor_point(d: usize, p: NormOrder) -> Vec<f64> {
    let c = if p.is_infinite() {
        1.0
    } else {
        (d as f64).powf(-1.0 / p.value())
    };
    vec![c; d]
}

/// Random point on the unit `p`-sphere from the cone measure: coordinates
/// with density `∝ exp(−|t|^p)` (uniform on `[−1, 1]` at `p = ∞`), then
/// normalized.
pub fn random_sphere_point(d: usize, p: NormOrder, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let x: Vec<f64> = if p.is_infinite() {
            (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()
        } else {
            let gamma = Gamma::new(1.0 / p.value(), 1.0).expect("positive shape");
            (0..d)
                .map(|_| {
                    let magnitude: f64 = gamma.sample(rng);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * magnitude.powf(1.0 / p.value())
                })
                .collect()
        };
        let norm = lp_norm(&x, p.value());
        if norm > 0.0 && norm.is_finite() {
            return x.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Per-restart generator derived from `(seed, restart)`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn initial_point(spec: &BallSpec, seed: u64, restart: usize) -> Vec<Vec<f64>> {
    if restart == 0 {
        return spec.dims.iter().map(|&d| anchor_point(d, spec.p)).collect();
    }
    let mut rng = restart_rng(seed, restart);
    spec.dims
        .iter()
        .map(|&d| random_sphere_point(d, spec.p, &mut rng))
        .collect()
}

/// Best value over `cfg.restarts` ascent runs. The first restart starts at
/// the normalized all-ones point, and the rest at random sphere points. The
/// result is a feasible point, so its value is a lower bound on the supremum.
pub fn maximize_block_multilinear(
    objective: &dyn BlockObjective,
    spec: &BallSpec,
    cfg: &AscentConfig,
) -> Result<Maximum> {
    cfg.validate()?;
    check_dims(objective, spec)?;
    let runs: Vec<Result<AscentRun>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let init = initial_point(spec, cfg.seed, restart);
            ascend_from(objective, spec, init, cfg, restart)
        })
        .collect();
    let mut best: Option<(usize, AscentRun)> = None;
    for (restart, run) in runs.into_iter().enumerate() {
        let run = run?;
        if best.as_ref().is_none_or(|(_, b)| run.value > b.value) {
            best = Some((restart, run));
        }
    }
    let (best_restart, run) = best.expect("at least one restart");
    Ok(Maximum {
        value: run.value,
        argmax: run.argmax,
        restarts_used: cfg.restarts,
        best_restart,
    })
}

/// All `2^d` sign vectors.
pub fn cube_vertices(d: usize) -> Vec<Vec<f64>> {
    (0..1usize << d)
        .map(|mask| {
            (0..d)
                .map(|i| if mask & (1 << i) != 0 { -1.0 } else { 1.0 })
                .collect()
        })
        .collect()
}

/// Number of points of [`sphere_grid`]: faces of the cube `[−1, 1]^d` on a
/// grid with `resolution + 1` levels per coordinate, each point counted once.
pub fn sphere_grid_size(d: usize, resolution: usize) -> f64 {
    let r = resolution as f64;
    (0..d)
        .map(|a| 2.0 * (r - 1.0).powi(a as i32) * (r + 1.0).powi((d - 1 - a) as i32))
        .sum()
}

/// Grid points on the surface of the cube `[−1, 1]^d` (levels
/// `−1 + 2i/resolution`), projected radially onto the unit `p`-sphere. The
/// grid contains the coordinate axes whenever `resolution` is even.
pub fn sphere_grid(d: usize, p: NormOrder, resolution: usize) -> Vec<Vec<f64>> {
    let levels: Vec<f64> = (0..=resolution)
        .map(|i| -1.0 + 2.0 * i as f64 / resolution as f64)
        .collect();
    let mut out = Vec::new();
    for face in 0..d {
        for sign in [1.0, -1.0] {
            // Axes before `face` avoid ±1 so each point lands on one face.
            let extents: Vec<usize> = (0..d)
                .map(|b| match b.cmp(&face) {
                    std::cmp::Ordering::Less => resolution - 1,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Greater => resolution + 1,
                })
                .collect();
            crate::tensor::for_each_index(&extents, |idx, _| {
                let point: Vec<f64> = (0..d)
                    .map(|b| match b.cmp(&face) {
                        std::cmp::Ordering::Less => levels[idx[b] + 1],
                        std::cmp::Ordering::Equal => sign,
                        std::cmp::Ordering::Greater => levels[idx[b]],
                    })
                    .collect();
                let norm = lp_norm(&point, p.value());
                out.push(point.into_iter().map(|v| v / norm).collect());
            });
        }
    }
    out
}

/// Candidate points for one block: cube vertices at `p = ∞`, otherwise the
/// [`sphere_grid`].
pub fn block_candidates(d: usize, p: NormOrder, resolution: usize) -> Vec<Vec<f64>> {
    if p.is_infinite() {
        cube_vertices(d)
    } else {
        sphere_grid(d, p, resolution)
    }
}

pub fn block_candidate_count(d: usize, p: NormOrder, resolution: usize) -> f64 {
    if p.is_infinite() {
        2f64.powi(d as i32)
    } else {
        sphere_grid_size(d, resolution)
    }
}

/// Visits every combination of per-block candidates. `f` receives the
/// current point; the search is refused when it would exceed `cap` points.
pub fn search_product(
    candidates: &[Vec<Vec<f64>>],
    cap: f64,
    mut f: impl FnMut(&[Vec<f64>]),
) -> Result<()> {
    let estimate: f64 = candidates.iter().map(|c| c.len() as f64).product();
    if estimate > cap {
        return Err(Error::SearchSpace { estimate, cap });
    }
    let extents: Vec<usize> = candidates.iter().map(Vec::len).collect();
    if extents.is_empty() {
        f(&[]);
        return Ok(());
    }
    let mut point: Vec<Vec<f64>> = candidates.iter().map(|c| c[0].clone()).collect();
    let mut last = vec![0usize; extents.len()];
    crate::tensor::for_each_index(&extents, |idx, _| {
        for (b, (&i, l)) in idx.iter().zip(last.iter_mut()).enumerate() {
            if i != *l {
                point[b].clone_from(&candidates[b][i]);
                *l = i;
            }
        }
        f(&point);
    });
    Ok(())
}

/// Exhaustive maximum over the candidate grid of every block.
///
/// At `p = ∞` the candidates are the cube vertices, which is exact for any
/// block-convex objective. For finite `p` the value is a lower bound that
/// converges to the supremum as `resolution` grows.
pub fn grid_supremum_oracle(
    objective: &dyn BlockObjective,
    spec: &BallSpec,
    resolution: usize,
    cap: f64,
) -> Result<f64> {
    check_dims(objective, spec)?;
    if !spec.p.is_infinite() && resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be >= 2".into()));
    }
    let estimate: f64 = spec
        .dims
        .iter()
        .map(|&d| block_candidate_count(d, spec.p, resolution))
        .product();
    if estimate > cap {
        return Err(Error::SearchSpace { estimate, cap });
    }
    let candidates: Vec<_> = spec
        .dims
        .iter()
        .map(|&d| block_candidates(d, spec.p, resolution))
        .collect();
    let mut best = f64::NEG_INFINITY;
    search_product(&candidates, cap, |xs| {
        best = best.max(objective.value(xs));
    })?;
    Ok(best)
}
