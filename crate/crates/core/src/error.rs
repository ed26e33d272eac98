use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Both Rabi frequencies vanish, so no unique dark state exists.
    #[error("probe and drive Rabi frequencies are both zero")]
    DegenerateFields,

    /// The integrator left the physical state space; the step is too coarse.
    #[error("step too large: state at t = {time} has eigenvalue {min_eigenvalue}")]
    StepTooLarge { time: f64, min_eigenvalue: f64 },

    #[error("no steady state after t = {time} (residual {residual:e})")]
    NoConvergence { time: f64, residual: f64 },

    #[error("position has dimension {got}, profile expects {expected}")]
    DimensionMismatch {
        expected: &'static str,
        got: usize,
    },

    #[error("order {0} is not available in closed form")]
    UnsupportedOrder(usize),

    #[error("series terms grow at m = {m}; expansion parameter too large")]
    SeriesDiverges { m: usize },

    #[error("series spans {periods} periods of the requested harmonic, not an integer count")]
    WindowMismatch { periods: f64 },

    #[error("series has {samples} samples per period, at least {required} needed")]
    Undersampled { samples: f64, required: usize },

    #[error("curve is constant; no feature to measure")]
    DegenerateCurve,

    #[error("no peak or notch at the requested center x = {center}")]
    NoCentralFeature { center: f64 },

    #[error("curve never reaches the half level on the {side} side; widen the range")]
    NoHalfCrossing { side: Side },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

pub(crate) fn require(
    ok: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
