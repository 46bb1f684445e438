//! Values tagged with how they were obtained.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ball::{AscentConfig, DEFAULT_SEARCH_CAP};

/// Relative slack granted to inequality verdicts that involve a finite-p
/// grid oracle. Both sides of such a check are lower estimates whose error
/// at resolution 64 stays below this level.
pub const GRID_SLACK: f64 = 5e-3;

/// Relative slack for verdicts whose inputs are all exact.
pub const EXACT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Oracle,
    Heuristic,
    Empirical,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Oracle => "oracle",
            Provenance::Heuristic => "heuristic",
            Provenance::Empirical => "empirical",
        }
    }

    /// Human-facing label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed form",
            Provenance::Oracle => "oracle",
            Provenance::Heuristic => "heuristic lower bound",
            Provenance::Empirical => "empirical",
        }
    }

    /// Whether a value with this provenance may back an inequality verdict.
    pub fn is_certified(self) -> bool {
        matches!(self, Provenance::ClosedForm | Provenance::Oracle)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub provenance: Provenance,
    /// True when the value is the exact quantity up to rounding (closed
    /// forms, eigen and vertex oracles), false for lower estimates.
    pub exact: bool,
}

impl Estimate {
    pub fn closed_form(value: f64) -> Self {
        Self {
            value,
            provenance: Provenance::ClosedForm,
            exact: true,
        }
    }

    pub fn oracle(value: f64, exact: bool) -> Self {
        Self {
            value,
            provenance: Provenance::Oracle,
            exact,
        }
    }

    pub fn heuristic(value: f64) -> Self {
        Self {
            value,
            provenance: Provenance::Heuristic,
            exact: false,
        }
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        Self {
            value: f(self.value),
            ..self
        }
    }

    /// Sum with the weaker provenance of the two.
    pub fn plus(self, other: Estimate) -> Self {
        Self {
            value: self.value + other.value,
            provenance: self.provenance.max(other.provenance),
            exact: self.exact && other.exact,
        }
    }

    pub fn zero_closed_form() -> Self {
        Self::closed_form(0.0)
    }
}

/// How suprema are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Block ascent; values are heuristic lower bounds.
    Ascent(AscentConfig),
    /// Exhaustive oracle when the search fits in `cap`, otherwise ascent
    /// with `fallback` (and heuristic provenance).
    Oracle {
        resolution: usize,
        cap: f64,
        fallback: AscentConfig,
    },
}

impl Estimator {
    pub fn oracle(resolution: usize) -> Self {
        Estimator::Oracle {
            resolution,
            cap: DEFAULT_SEARCH_CAP,
            fallback: AscentConfig::default(),
        }
    }

    pub fn ascent_config(&self) -> &AscentConfig {
        match self {
            Estimator::Ascent(cfg) => cfg,
            Estimator::Oracle { fallback, .. } => fallback,
        }
    }
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Ascent(AscentConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Verdict for `lhs ≤ rhs`. Only certified values on both sides yield
/// holds/fails; the slack is [`EXACT_SLACK`] when both are exact and
/// [`GRID_SLACK`] otherwise.
pub fn compare_le(lhs: &Estimate, rhs: &Estimate) -> Verdict {
    if !lhs.provenance.is_certified() || !rhs.provenance.is_certified() {
        return Verdict::Inconclusive;
    }
    let slack = if lhs.exact && rhs.exact {
        EXACT_SLACK
    } else {
        GRID_SLACK
    };
    if lhs.value <= rhs.value * (1.0 + slack) + 1e-12 {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}
