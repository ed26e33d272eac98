//! Spatial beam envelopes and temporal probe modulation.
//!
//! Profiles return Rabi amplitudes in units of γ_p. Positions are raw
//! coordinates; with `k = 1` or `w0 = 1` they are the dimensionless kx or x/w₀.

use crate::error::{require, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Position {
    X(f64),
    XY(f64, f64),
}

impl Position {
    pub fn dim(&self) -> usize {
        match self {
            Position::X(_) => 1,
            Position::XY(..) => 2,
        }
    }

    /// Distance from the beam axis.
    pub fn radius(&self) -> f64 {
        match *self {
            Position::X(x) => x.abs(),
            Position::XY(x, y) => x.hypot(y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldProfile {
    Uniform {
        amplitude: f64,
    },
    /// amplitude·sin(kx + phase); signed, so the field flips across nodes.
    StandingWave {
        amplitude: f64,
        k: f64,
        phase: f64,
    },
    /// amplitude·exp(−r²/2w₀²).
    Gaussian {
        amplitude: f64,
        w0: f64,
    },
    /// LG₀₁ donut: amplitude·(r/w₀)·exp(−r²/2w₀²), zero on axis.
    LgDonut {
        amplitude: f64,
        w0: f64,
    },
    /// Independent fields along x and y whose intensities add.
    Sum2D(Box<FieldProfile>, Box<FieldProfile>),
}

fn check_amplitude(amplitude: f64) -> Result<()> {
    require(
        amplitude.is_finite() && amplitude >= 0.0,
        "amplitude",
        amplitude,
        "must be finite and >= 0",
    )
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    require(v.is_finite() && v > 0.0, name, v, "must be finite and > 0")
}

impl FieldProfile {
    pub fn uniform(amplitude: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        Ok(Self::Uniform { amplitude })
    }

    pub fn standing_wave(amplitude: f64, k: f64, phase: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_positive("k", k)?;
        require(phase.is_finite(), "phase", phase, "must be finite")?;
        Ok(Self::StandingWave { amplitude, k, phase })
    }

    pub fn gaussian(amplitude: f64, w0: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_positive("w0", w0)?;
        Ok(Self::Gaussian { amplitude, w0 })
    }

    pub fn lg_donut(amplitude: f64, w0: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_positive("w0", w0)?;
        Ok(Self::LgDonut { amplitude, w0 })
    }

    pub fn sum_2d(along_x: FieldProfile, along_y: FieldProfile) -> Result<Self> {
        along_x.validate()?;
        along_y.validate()?;
        Ok(Self::Sum2D(Box::new(along_x), Box::new(along_y)))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Uniform { amplitude } => check_amplitude(*amplitude),
            Self::StandingWave { amplitude, k, phase } => {
                Self::standing_wave(*amplitude, *k, *phase).map(drop)
            }
            Self::Gaussian { amplitude, w0 } | Self::LgDonut { amplitude, w0 } => {
                check_amplitude(*amplitude)?;
                check_positive("w0", *w0)
            }
            Self::Sum2D(x, y) => {
                x.validate()?;
                y.validate()
            }
        }
    }

    /// Rabi amplitude at `position`.
    ///
    /// Standing waves take only 1D positions and `Sum2D` only 2D ones; the
    /// radial profiles accept both.
    pub fn evaluate(&self, position: Position) -> Result<f64> {
        match (self, position) {
            (Self::Uniform { amplitude }, _) => Ok(*amplitude),
            (Self::StandingWave { amplitude, k, phase }, Position::X(x)) => {
                Ok(amplitude * (k * x + phase).sin())
            }
            (Self::StandingWave { .. }, p) => Err(Error::DimensionMismatch {
                expected: "1D",
                got: p.dim(),
            }),
            (Self::Gaussian { amplitude, w0 }, p) => {
                let r = p.radius() / w0;
                Ok(amplitude * (-0.5 * r * r).exp())
            }
            (Self::LgDonut { amplitude, w0 }, p) => {
                let r = p.radius() / w0;
                Ok(amplitude * r * (-0.5 * r * r).exp())
            }
            (Self::Sum2D(fx, fy), Position::XY(x, y)) => {
                let ex = fx.evaluate(Position::X(x))?;
                let ey = fy.evaluate(Position::X(y))?;
                Ok(ex.hypot(ey))
            }
            (Self::Sum2D(..), p) => Err(Error::DimensionMismatch {
                expected: "2D",
                got: p.dim(),
            }),
        }
    }
}

/// Local field ratio s = |Ω_s|/|Ω_p| of a drive and probe pair.
pub fn field_ratio(drive: &FieldProfile, probe: &FieldProfile, position: Position) -> Result<f64> {
    let omega_s = drive.evaluate(position)?.abs();
    let omega_p = probe.evaluate(position)?.abs();
    if omega_p == 0.0 {
        return Err(Error::InvalidParameter {
            name: "probe amplitude",
            value: omega_p,
            reason: "field ratio is undefined where the probe vanishes",
        });
    }
    Ok(omega_s / omega_p)
}

/// Temporal modulation of the probe amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulationSpec {
    None,
    /// Ω_p(t) = Ω_p cos νt.
    Full { nu: f64 },
    /// Ω_p(t) = Ω_p (1 + a sin νt), a small.
    Perturbative { a: f64, nu: f64 },
}

/// Largest accepted perturbative depth.
pub const MAX_PERTURBATIVE_DEPTH: f64 = 0.2;
/// Depths above this are accepted but flagged by [`ModulationSpec::is_deep`].
pub const WEAK_PERTURBATIVE_DEPTH: f64 = 0.1;

impl ModulationSpec {
    pub fn full(nu: f64) -> Result<Self> {
        let m = Self::Full { nu };
        m.validate()?;
        Ok(m)
    }

    pub fn perturbative(a: f64, nu: f64) -> Result<Self> {
        let m = Self::Perturbative { a, nu };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::None => Ok(()),
            Self::Full { nu } => check_positive("nu", nu),
            Self::Perturbative { a, nu } => {
                check_positive("nu", nu)?;
                require(
                    a > 0.0 && a <= MAX_PERTURBATIVE_DEPTH,
                    "a",
                    a,
                    "perturbative depth must lie in (0, 0.2]",
                )
            }
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match *self {
            Self::None => None,
            Self::Full { nu } | Self::Perturbative { nu, .. } => Some(nu),
        }
    }

    /// Depth large enough that third-order terms may matter.
    pub fn is_deep(&self) -> bool {
        matches!(*self, Self::Perturbative { a, .. } if a > WEAK_PERTURBATIVE_DEPTH)
    }

    /// Largest value of |Ω_p(t)|/Ω_p over a period.
    pub fn peak_gain(&self) -> f64 {
        match *self {
            Self::None | Self::Full { .. } => 1.0,
            Self::Perturbative { a, .. } => 1.0 + a.abs(),
        }
    }
}

/// Probe Rabi frequency at time t for a base amplitude.
pub fn instantaneous_probe(base: f64, modulation: &ModulationSpec, t: f64) -> f64 {
    match *modulation {
        ModulationSpec::None => base,
        ModulationSpec::Full { nu } => base * (nu * t).cos(),
        ModulationSpec::Perturbative { a, nu } => base * (1.0 + a * (nu * t).sin()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    #[test]
    fn standing_wave_antinode() {
        let sw = FieldProfile::standing_wave(1000f64.sqrt(), 1.0, 0.0).unwrap();
        let v = sw.evaluate(Position::X(FRAC_PI_2)).unwrap();
        assert!((v - 1000f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn donut_has_central_null() {
        let lg = FieldProfile::lg_donut(1.0, 1.0).unwrap();
        assert_eq!(lg.evaluate(Position::X(0.0)).unwrap(), 0.0);
        assert_eq!(lg.evaluate(Position::XY(0.0, 0.0)).unwrap(), 0.0);
        let g = FieldProfile::gaussian(1.0, 1.0).unwrap();
        assert_eq!(g.evaluate(Position::X(0.0)).unwrap(), 1.0);
    }

    #[test]
    fn donut_over_gaussian_is_linear() {
        let ratio: f64 = 1000.0;
        let w0 = 0.8;
        let lg = FieldProfile::lg_donut(ratio.sqrt(), w0).unwrap();
        let g = FieldProfile::gaussian(1.0, w0).unwrap();
        for i in -50..=50 {
            let x = i as f64 * 0.05;
            let s = field_ratio(&lg, &g, Position::X(x)).unwrap();
            let expected = ratio.sqrt() * x.abs() / w0;
            assert!((s - expected).abs() <= 1e-12 * expected.max(1.0), "{x}: {s} vs {expected}");
        }
    }

    #[test]
    fn donut_peak_on_ring() {
        let lg = FieldProfile::lg_donut(2.0, 1.5).unwrap();
        let peak = lg.evaluate(Position::XY(1.5, 0.0)).unwrap();
        assert!((peak - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        for r in [1.4, 1.49, 1.51, 1.6] {
            assert!(lg.evaluate(Position::XY(r, 0.0)).unwrap() < peak);
        }
    }

    #[test]
    fn dimension_checks() {
        let sw = FieldProfile::standing_wave(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            sw.evaluate(Position::XY(0.1, 0.2)),
            Err(Error::DimensionMismatch { got: 2, .. })
        ));
        let sum = FieldProfile::sum_2d(sw.clone(), sw).unwrap();
        assert!(matches!(
            sum.evaluate(Position::X(0.1)),
            Err(Error::DimensionMismatch { got: 1, .. })
        ));
    }

    #[test]
    fn constructor_validation() {
        assert!(FieldProfile::uniform(-1.0).is_err());
        assert!(FieldProfile::standing_wave(1.0, 0.0, 0.0).is_err());
        assert!(FieldProfile::gaussian(1.0, -2.0).is_err());
        assert!(FieldProfile::lg_donut(f64::NAN, 1.0).is_err());
        assert!(ModulationSpec::full(0.0).is_err());
        assert!(ModulationSpec::perturbative(0.3, 1.0).is_err());
        assert!(ModulationSpec::perturbative(0.0, 1.0).is_err());
        assert!(!ModulationSpec::perturbative(0.05, 1.0).unwrap().is_deep());
        assert!(ModulationSpec::perturbative(0.15, 1.0).unwrap().is_deep());
    }

    #[test]
    fn field_ratio_needs_probe() {
        let drive = FieldProfile::uniform(1.0).unwrap();
        let probe = FieldProfile::uniform(0.0).unwrap();
        assert!(field_ratio(&drive, &probe, Position::X(0.0)).is_err());
    }

    #[test]
    fn probe_modulation_examples() {
        let nu = 0.7;
        let t = PI / (2.0 * nu);
        assert!(instantaneous_probe(2.0, &ModulationSpec::full(nu).unwrap(), t).abs() < 1e-15);
        let p = instantaneous_probe(2.0, &ModulationSpec::perturbative(0.1, nu).unwrap(), t);
        assert!((p - 2.2).abs() < 1e-15);
        assert_eq!(instantaneous_probe(2.0, &ModulationSpec::None, 13.0), 2.0);
    }

    #[test]
    fn full_modulation_halves_mean_intensity() {
        let nu = 1.3;
        let m = ModulationSpec::full(nu).unwrap();
        let n = 1000;
        let period = TAU / nu;
        let mean = (0..n)
            .map(|i| instantaneous_probe(3.0, &m, i as f64 * period / n as f64).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 4.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn standing_wave_antiperiodic(kx in -20.0f64..20.0, amp in 0.0f64..50.0) {
            let sw = FieldProfile::standing_wave(amp, 1.0, 0.0).unwrap();
            let v = sw.evaluate(Position::X(kx)).unwrap();
            let shifted = sw.evaluate(Position::X(kx + PI)).unwrap();
            prop_assert!((v + shifted).abs() < 1e-9 * amp.max(1.0));
            let mirrored = sw.evaluate(Position::X(-kx)).unwrap();
            prop_assert!((v + mirrored).abs() < 1e-12 * amp.max(1.0));
        }

        #[test]
        fn donut_is_rotationally_symmetric(r in 0.0f64..4.0, phi in 0.0f64..TAU) {
            let lg = FieldProfile::lg_donut(1.7, 1.2).unwrap();
            let on_axis = lg.evaluate(Position::XY(r, 0.0)).unwrap();
            let rotated = lg.evaluate(Position::XY(r * phi.cos(), r * phi.sin())).unwrap();
            prop_assert!((on_axis - rotated).abs() < 1e-12);
            prop_assert!(on_axis <= 1.7 * (-0.5f64).exp() + 1e-15);
        }

        #[test]
        fn crossed_standing_waves_add_intensity(kx in -5.0f64..5.0, ky in -5.0f64..5.0) {
            let amp = 2000f64.sqrt();
            let sw = FieldProfile::standing_wave(amp, 1.0, 0.0).unwrap();
            let sum = FieldProfile::sum_2d(sw.clone(), sw).unwrap();
            let v = sum.evaluate(Position::XY(kx, ky)).unwrap();
            let expected = amp * amp * (kx.sin().powi(2) + ky.sin().powi(2));
            prop_assert!((v * v - expected).abs() < 1e-9 * expected.max(1.0));
        }
    }
}
