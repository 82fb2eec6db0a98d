//! Non-fatal numerical diagnostics.
//!
//! Truncated-basis operations cannot always tell whether the chosen cutoff is
//! adequate until they run. Instead of failing, they attach a
//! [`NumericalWarning`] to the value they return; callers decide whether to
//! treat warnings as fatal (the CLI does so under `--strict`).

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NumericalWarning {
    /// Probability mass that a truncated construction discarded.
    TruncationTail { context: String, tail_mass: f64, limit: f64 },
    /// An operator parameter is large compared with the basis cutoff.
    OperatorRange { context: String, value: f64, limit: f64 },
    /// A quadrature grid does not cover the classically allowed region.
    GridCoverage { half_width: f64, required: f64 },
    /// Norm lost when a truncated operator was applied to a state.
    Leakage { context: String, lost_norm: f64 },
}

impl fmt::Display for NumericalWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericalWarning::TruncationTail { context, tail_mass, limit } => write!(
                f,
                "{context}: truncated tail mass {tail_mass:.3e} exceeds {limit:.1e}"
            ),
            NumericalWarning::OperatorRange { context, value, limit } => {
                write!(f, "{context}: parameter measure {value:.4} exceeds {limit:.4}")
            }
            NumericalWarning::GridCoverage { half_width, required } => write!(
                f,
                "quadrature grid half-width {half_width:.3} does not cover ±{required:.3}"
            ),
            NumericalWarning::Leakage { context, lost_norm } => {
                write!(f, "{context}: norm leaked out of the truncated space: {lost_norm:.3e}")
            }
        }
    }
}

/// Pushes `w` onto `sink` and logs it at debug level; callers report the
/// warnings of the values they keep.
pub(crate) fn emit(sink: &mut Vec<NumericalWarning>, w: NumericalWarning) {
    log::debug!("{w}");
    if !sink.contains(&w) {
        sink.push(w);
    }
}
