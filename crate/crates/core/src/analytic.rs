//! Closed-form coherent population trapping results.
//!
//! With a standing-wave drive Ω_s sin(kx) and a uniform probe the steady-state
//! population of |2⟩ is 1/(1 + ℛ sin²kx), a Fabry-Perot-like comb whose
//! finesse is the intensity ratio ℛ = Ω_s²/Ω_p².

use num_complex::Complex64 as C64;

use crate::error::{require, Error, Result};
use crate::lindblad::DensityMatrix;

/// Drive-to-probe intensity ratio ℛ = |Ω_s|²/|Ω_p|².
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct IntensityRatio(f64);

impl IntensityRatio {
    pub fn new(value: f64) -> Result<Self> {
        require(
            value.is_finite() && value >= 0.0,
            "intensity ratio",
            value,
            "must be finite and >= 0",
        )?;
        Ok(Self(value))
    }

    /// ℛ for a local field ratio s = Ω_s/Ω_p.
    pub fn from_field_ratio(s: f64) -> Result<Self> {
        Self::new(s * s)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Peak field ratio √ℛ.
    pub fn field_ratio(self) -> f64 {
        self.0.sqrt()
    }
}

/// The trapping state (Ω_p|2⟩ − Ω_s|3⟩)/Ω; it has no |1⟩ component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkState {
    pub c2: C64,
    pub c3: C64,
}

impl DarkState {
    /// Amplitudes on (|1⟩, |2⟩, |3⟩).
    pub fn amplitudes(&self) -> [C64; 3] {
        [C64::from(0.0), self.c2, self.c3]
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::pure(self.amplitudes()).expect("dark state is normalized")
    }
}

pub fn dark_state(omega_p: f64, omega_s: f64) -> Result<DarkState> {
    let omega = omega_p.hypot(omega_s);
    if omega == 0.0 {
        return Err(Error::DegenerateFields);
    }
    require(omega.is_finite(), "rabi frequency", omega, "must be finite")?;
    Ok(DarkState {
        c2: C64::from(omega_p / omega),
        c3: C64::from(-omega_s / omega),
    })
}

/// Dark-state population of |2⟩ for local Rabi frequencies.
pub fn rho22_local(omega_p: f64, omega_s: f64) -> Result<f64> {
    Ok(dark_state(omega_p, omega_s)?.c2.norm_sqr())
}

/// 1/(1 + ℛ sin²kx).
pub fn rho22_unmodulated(ratio: IntensityRatio, kx: f64) -> f64 {
    1.0 / (1.0 + ratio.0 * kx.sin().powi(2))
}

/// Large-ℛ width kΔx = 2/√ℛ of the unmodulated peak.
///
/// The exact half-maximum width is 2·arcsin(1/√ℛ); use the numeric width
/// measurement when the difference matters. Infinite for ℛ = 0.
pub fn fwhm_analytic(ratio: IntensityRatio) -> f64 {
    2.0 / ratio.0.sqrt()
}

/// Two coupled Λ systems: approximately the square of the single-Λ profile.
pub fn rho22_coupled_lambda(ratio: IntensityRatio, kx: f64) -> f64 {
    rho22_unmodulated(ratio, kx).powi(2)
}

/// 2D localization with standing waves along x and y:
/// 1/(1 + ℛx sin²kx + ℛy sin²ky).
pub fn rho33_2d(ratio_x: IntensityRatio, ratio_y: IntensityRatio, kx: f64, ky: f64) -> f64 {
    1.0 / (1.0 + ratio_x.0 * kx.sin().powi(2) + ratio_y.0 * ky.sin().powi(2))
}
