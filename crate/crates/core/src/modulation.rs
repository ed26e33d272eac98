//! Harmonic point spread functions of an amplitude-modulated probe.
//!
//! In the quasi-static regime the atom follows the instantaneous dark state,
//! so with a fully modulated probe Ω_p cos νt the population of |2⟩ is
//!
//! ```text
//! ρ₂₂(t) = cos²νt / (cos²νt + s²),   s = Ω_s/Ω_p (local field ratio)
//! ```
//!
//! which contains only even harmonics: ρ₂₂(t) = f₀ + Σ_{l≥1} f₂ₗ cos(2lνt).
//! Each coefficient, viewed as a function of position through s(x), is a
//! point spread function. The quadrature routine here is the reference
//! source for every coefficient; closed forms and the power series are
//! checked against it.

use std::f64::consts::TAU;

use crate::error::{require, Error, Result};

/// cos²θ/(cos²θ + s²). At the 0/0 point (s = 0, cos θ = 0) returns 1, the
/// limit of the undriven atom sitting in |2⟩.
pub fn rho22_full_modulation(s: f64, theta: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    let denom = c2 + s * s;
    if denom == 0.0 {
        1.0
    } else {
        c2 / denom
    }
}

/// Quasi-static ρ₂₂ for a probe Ω_p(1 + a sin θ): 1/(1 + s²/(1 + a sin θ)²).
pub fn rho22_perturbative(s: f64, a: f64, theta: f64) -> f64 {
    let gain = 1.0 + a * theta.sin();
    gain * gain / (gain * gain + s * s)
}

/// f₀, f₂, f₄ in closed form for harmonic index `l` ∈ {0, 1, 2}.
///
/// With q = √(1+s²) the direct expressions are
/// f₀ = 1 − s/q, f₂ = (2+4s²)s/q − 4s², f₄ = −2s(1+8s²(1+s²))/q + 8s²(1+2s²).
/// Those differences of large numbers lose all precision for s ≳ 10³, so
/// they are evaluated in the equivalent form f₀ = d/q, f₂ = 2(s/q)d²,
/// f₄ = −2(s/q)d⁴ with d = q − s = 1/(q + s). Only |s| matters.
pub fn f_coeff_closed(l: usize, s: f64) -> Result<f64> {
    let s = s.abs();
    let q = (1.0 + s * s).sqrt();
    let d = 1.0 / (q + s);
    let w = s / q;
    match l {
        0 => Ok(d / q),
        1 => Ok(2.0 * w * d * d),
        2 => Ok(-2.0 * w * d.powi(4)),
        _ => Err(Error::UnsupportedOrder(l)),
    }
}

/// Cosine and sine coefficients of a 2π-periodic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub cos: f64,
    pub sin: f64,
}

const MIN_NODES: usize = 2048;
const MAX_NODES: usize = 1 << 24;
const QUADRATURE_TOL: f64 = 1e-15;

/// Projects a 2π-periodic `f` onto cos(hθ) and sin(hθ).
///
/// Uses the periodic trapezoid rule, which converges geometrically for
/// analytic periodic integrands, doubling the node count from at least
/// `min_nodes` until two successive refinements agree to 1e-15. The DC
/// coefficient is the mean; h ≥ 1 uses the factor-2 projection.
pub fn fourier_projection<F: Fn(f64) -> f64>(f: F, harmonic: usize, min_nodes: usize) -> Harmonic {
    let h = harmonic as f64;
    let weight = if harmonic == 0 { 1.0 } else { 2.0 };
    let mut n = min_nodes.max(MIN_NODES).next_power_of_two();
    let step = |n: usize| TAU / n as f64;

    let mut sum_c = 0.0;
    let mut sum_s = 0.0;
    for j in 0..n {
        let theta = j as f64 * step(n);
        let v = f(theta);
        sum_c += v * (h * theta).cos();
        sum_s += v * (h * theta).sin();
    }
    let mut est = Harmonic {
        cos: weight * sum_c / n as f64,
        sin: weight * sum_s / n as f64,
    };
    let mut agreed = 0;
    while n < MAX_NODES {
        // Refine by adding the midpoints.
        let mut add_c = 0.0;
        let mut add_s = 0.0;
        for j in 0..n {
            let theta = (j as f64 + 0.5) * step(n);
            let v = f(theta);
            add_c += v * (h * theta).cos();
            add_s += v * (h * theta).sin();
        }
        sum_c += add_c;
        sum_s += add_s;
        n *= 2;
        let next = Harmonic {
            cos: weight * sum_c / n as f64,
            sin: weight * sum_s / n as f64,
        };
        let change = (next.cos - est.cos).abs().max((next.sin - est.sin).abs());
        est = next;
        if change <= QUADRATURE_TOL {
            agreed += 1;
            if agreed == 2 {
                break;
            }
        } else {
            agreed = 0;
        }
    }
    est
}

/// Reference value of f₂ₗ: the Fourier projection of cos²θ/(cos²θ + s²)
/// onto cos(2lθ), by adaptive periodic quadrature.
pub fn f_coeff_quadrature(l: usize, s: f64) -> f64 {
    let s = s.abs();
    if s == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    // The dip at θ = π/2 has half-width ~asinh(s); resolve it from the start.
    let min_nodes = (64.0 / s.asinh()).min(MAX_NODES as f64) as usize;
    fourier_projection(|th| rho22_full_modulation(s, th), 2 * l, min_nodes).cos
}

/// Which general-order series to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesForm {
    /// Σ_{m≥l} (−1)^{m−1} s^{−2m} C(2m,m) 2^{1−2m} C(2m,m−l), term by term.
    /// The extra C(2m,m) makes it overshoot; kept for comparison.
    CentralBinomial,
    /// The same sum without the C(2m,m) factor, which is what expanding
    /// 1/(1 + s²/cos²θ) in powers of cos²θ/s² actually gives.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    /// Magnitude of the last term added; a convergence indicator.
    pub last_term: f64,
    pub terms: usize,
}

/// Partial sum up to m = `m_max` of the power series for f₂ₗ (l ≥ 1) in
/// 1/s², valid only for s > 1.
pub fn f_coeff_series(l: usize, s: f64, m_max: usize, form: SeriesForm) -> Result<SeriesSum> {
    require(l >= 1, "l", l as f64, "series is defined for l >= 1")?;
    require(s.is_finite() && s > 1.0, "s", s, "series in 1/s^2 needs s > 1")?;
    require(m_max >= l, "m_max", m_max as f64, "must be >= l")?;

    let x = 1.0 / (s * s);
    // C(2l, l)/4^l, accumulated as a product to stay in range.
    let central_over_4l: f64 = (1..=l).map(|j| (2 * j - 1) as f64 / (2 * j) as f64).product();
    let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
    let mut term = sign
        * 2.0
        * x.powi(l as i32)
        * match form {
            SeriesForm::CentralBinomial => central_over_4l,
            SeriesForm::Direct => 0.25f64.powi(l as i32),
        };

    let mut value = term;
    let mut growing = 0;
    let mut terms = 1;
    for m in l..m_max {
        let mf = m as f64;
        let lf = l as f64;
        let pair = (2.0 * mf + 1.0) * (2.0 * mf + 2.0);
        // C(2m+2, m+1−l)/C(2m, m−l)
        let mut ratio = -x * 0.25 * pair / ((mf + 1.0 - lf) * (mf + 1.0 + lf));
        if form == SeriesForm::CentralBinomial {
            // C(2m+2, m+1)/C(2m, m)
            ratio *= pair / ((mf + 1.0) * (mf + 1.0));
        }
        let next = term * ratio;
        if next.abs() > term.abs() {
            growing += 1;
            if growing == 3 {
                return Err(Error::SeriesDiverges { m: m + 1 });
            }
        } else {
            growing = 0;
        }
        term = next;
        value += term;
        terms += 1;
    }
    Ok(SeriesSum {
        value,
        last_term: term.abs(),
        terms,
    })
}

/// Both series side by side with the quadrature value.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesComparison {
    pub quadrature: f64,
    pub binomial: Result<SeriesSum>,
    pub direct: Result<SeriesSum>,
}

impl SeriesComparison {
    pub fn binomial_rel_error(&self) -> Option<f64> {
        self.binomial
            .as_ref()
            .ok()
            .map(|p| ((p.value - self.quadrature) / self.quadrature).abs())
    }

    pub fn direct_rel_error(&self) -> Option<f64> {
        self.direct
            .as_ref()
            .ok()
            .map(|p| ((p.value - self.quadrature) / self.quadrature).abs())
    }
}

pub fn compare_series(l: usize, s: f64, m_max: usize) -> SeriesComparison {
    SeriesComparison {
        quadrature: f_coeff_quadrature(l, s),
        binomial: f_coeff_series(l, s, m_max, SeriesForm::CentralBinomial),
        direct: f_coeff_series(l, s, m_max, SeriesForm::Direct),
    }
}

/// Coefficient of (a sin νt)^order in the quasi-static ρ₂₂ for a probe
/// Ω_p(1 + a sin νt). The second-order value includes its leading minus sign.
pub fn perturbative_coeff(order: usize, s: f64) -> Result<f64> {
    let s2 = s * s;
    let u = 1.0 + s2;
    match order {
        0 => Ok(1.0 / u),
        1 => Ok(2.0 * s2 / (u * u)),
        2 => Ok(-s2 * (3.0 - s2) / (u * u * u)),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// Uniformly sampled signal with absolute sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        require(
            times.len() == values.len(),
            "series length",
            values.len() as f64,
            "times and values differ in length",
        )?;
        require(times.len() >= 2, "series length", times.len() as f64, "needs at least 2 samples")?;
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        require(dt > 0.0, "sample spacing", dt, "times must increase")?;
        for w in times.windows(2) {
            require(
                ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt,
                "sample spacing",
                w[1] - w[0],
                "sampling must be uniform",
            )?;
        }
        Ok(Self { times, values })
    }

    /// Samples `f` at t0 + k·dt for k in 0..n.
    pub fn from_fn<F: Fn(f64) -> f64>(t0: f64, dt: f64, n: usize, f: F) -> Result<Self> {
        let times: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fewest samples per period of the requested harmonic.
pub const MIN_SAMPLES_PER_PERIOD: usize = 64;

/// Lock-in style demodulation: the coefficients of cos(hνt) and sin(hνt),
/// by trapezoidal projection over the whole series.
///
/// The series must cover an integer number of periods of the requested
/// harmonic (of the fundamental for DC) to within 0.1%.
pub fn demodulate_iq(series: &TimeSeries, nu: f64, harmonic: usize) -> Result<Harmonic> {
    require(nu.is_finite() && nu > 0.0, "nu", nu, "must be > 0")?;
    let span = series.span();
    let period = TAU / (nu * harmonic.max(1) as f64);
    let periods = span / period;
    let whole = periods.round();
    if whole < 1.0 || (periods - whole).abs() > 1e-3 * whole {
        return Err(Error::WindowMismatch { periods });
    }
    let per_period = (series.len() - 1) as f64 / periods;
    if per_period < MIN_SAMPLES_PER_PERIOD as f64 - 1e-9 {
        return Err(Error::Undersampled {
            samples: per_period,
            required: MIN_SAMPLES_PER_PERIOD,
        });
    }

    let h = harmonic as f64;
    let n = series.len();
    let (mut sc, mut ss) = (0.0, 0.0);
    for (k, (&t, &v)) in series.times.iter().zip(&series.values).enumerate() {
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let phase = h * nu * t;
        sc += w * v * phase.cos();
        ss += w * v * phase.sin();
    }
    let dt = span / (n - 1) as f64;
    let scale = if harmonic == 0 { 1.0 } else { 2.0 } * dt / span;
    Ok(Harmonic {
        cos: sc * scale,
        sin: ss * scale,
    })
}

/// Coefficient of cos(hνt) in the series; the mean for h = 0.
pub fn demodulate(series: &TimeSeries, nu: f64, harmonic: usize) -> Result<f64> {
    demodulate_iq(series, nu, harmonic).map(|h| h.cos)
}

/// Exact quasi-static harmonics of the perturbatively modulated ρ₂₂, by
/// quadrature.
pub fn perturbative_harmonic(s: f64, a: f64, harmonic: usize) -> Harmonic {
    fourier_projection(|th| rho22_perturbative(s, a, th), harmonic, MIN_NODES)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Closed forms written as differences, in terms of Ω_p/Ω_s = 1/s.
    fn undifferenced_closed(l: usize, s: f64) -> f64 {
        let inv = 1.0 / s;
        let root = (1.0 + inv * inv).sqrt();
        let s2 = s * s;
        match l {
            0 => 1.0 - 1.0 / root,
            1 => (2.0 + 4.0 * s2) / root - 4.0 * s2,
            2 => -2.0 * (1.0 + 8.0 * s2 * (1.0 + s2)) / root + 8.0 * s2 * (1.0 + 2.0 * s2),
            _ => unreachable!(),
        }
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        let (a, b) = (lo.ln(), hi.ln());
        (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
    }

    #[test]
    fn closed_forms_at_unit_ratio() {
        let r2 = 2f64.sqrt();
        assert!((f_coeff_closed(0, 1.0).unwrap() - (1.0 - 1.0 / r2)).abs() < 1e-15);
        assert!((f_coeff_closed(1, 1.0).unwrap() - (6.0 / r2 - 4.0)).abs() < 1e-15);
        assert!((f_coeff_closed(2, 1.0).unwrap() - (24.0 - 34.0 / r2)).abs() < 1e-14);
        assert!((f_coeff_closed(0, 1.0).unwrap() - 0.292_893_2).abs() < 1e-7);
        assert!((f_coeff_closed(1, 1.0).unwrap() - 0.242_640_7).abs() < 1e-7);
        assert!((f_coeff_closed(2, 1.0).unwrap() + 0.041_630_6).abs() < 1e-7);
    }

    #[test]
    fn closed_forms_at_node() {
        assert_eq!(f_coeff_closed(0, 0.0).unwrap(), 1.0);
        assert_eq!(f_coeff_closed(1, 0.0).unwrap(), 0.0);
        assert_eq!(f_coeff_closed(2, 0.0).unwrap(), 0.0);
        assert_eq!(f_coeff_closed(3, 1.0), Err(Error::UnsupportedOrder(3)));
    }

    #[test]
    fn stable_form_matches_undifferenced_form() {
        for s in log_grid(1e-2, 30.0, 40) {
            for l in 0..3 {
                let a = f_coeff_closed(l, s).unwrap();
                let b = undifferenced_closed(l, s);
                assert!((a - b).abs() < 1e-9, "l={l} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for s in log_grid(1e-3, 1e3, 25) {
            for l in 0..3 {
                let q = f_coeff_quadrature(l, s);
                let c = f_coeff_closed(l, s).unwrap();
                assert!((q - c).abs() < 1e-12, "l={l} s={s}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn quadrature_higher_orders() {
        let f6 = f_coeff_quadrature(3, 1.0);
        assert!(f6.abs() < 0.02 && f6 != 0.0, "{f6}");
        let mags: Vec<f64> = (1..8).map(|l| f_coeff_quadrature(l, 1.0).abs()).collect();
        for w in mags.windows(2) {
            assert!(w[1] < w[0]);
        }
        for l in 1..5 {
            assert_eq!(f_coeff_quadrature(l, 0.0), 0.0);
        }
    }

    #[test]
    fn binomial_series_first_term() {
        // m = 1, l = 1: (1/100)·C(2,1)·(2/4)·C(2,0) = 0.01.
        let one = f_coeff_series(1, 10.0, 1, SeriesForm::CentralBinomial).unwrap();
        assert!((one.value - 0.01).abs() < 1e-17);
        assert_eq!(one.terms, 1);
        let direct = f_coeff_series(1, 10.0, 1, SeriesForm::Direct).unwrap();
        assert!((direct.value - 0.005).abs() < 1e-17);
    }

    #[test]
    fn series_against_quadrature() {
        let cmp = compare_series(1, 10.0, 40);
        // The direct series converges to the quadrature value; the binomial
        // one overshoots by roughly a factor of two.
        assert!(cmp.direct_rel_error().unwrap() < 1e-12);
        let binomial = cmp.binomial_rel_error().unwrap();
        assert!(binomial > 0.5, "{binomial}");
        for l in 1..4 {
            let c = f_coeff_series(l, 3.0, 200, SeriesForm::Direct).unwrap();
            assert!((c.value - f_coeff_quadrature(l, 3.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn series_rejects_small_ratio() {
        assert!(f_coeff_series(1, 1.0, 10, SeriesForm::CentralBinomial).is_err());
        assert!(f_coeff_series(1, 0.5, 10, SeriesForm::Direct).is_err());
        assert!(f_coeff_series(0, 5.0, 10, SeriesForm::CentralBinomial).is_err());
        // The binomial terms scale like (4/s²)^m, so 1 < s < 2 diverges.
        assert!(matches!(
            f_coeff_series(1, 1.5, 50, SeriesForm::CentralBinomial),
            Err(Error::SeriesDiverges { .. })
        ));
    }

    #[test]
    fn perturbative_examples() {
        assert!((perturbative_coeff(0, 999f64.sqrt()).unwrap() - 1e-3).abs() < 1e-15);
        assert!((perturbative_coeff(1, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((perturbative_coeff(2, 1.0).unwrap() + 0.25).abs() < 1e-15);
        assert!(perturbative_coeff(2, 3f64.sqrt()).unwrap().abs() < 1e-15);
        assert_eq!(perturbative_coeff(1, 0.0).unwrap(), 0.0);
        assert_eq!(perturbative_coeff(3, 1.0), Err(Error::UnsupportedOrder(3)));
        // Order 1 peaks at s = 1.
        let peak = (1..20000)
            .map(|i| i as f64 * 1e-3)
            .map(|s| perturbative_coeff(1, s).unwrap())
            .fold(0.0, f64::max);
        assert!(peak <= 0.5 && peak > 0.5 - 1e-6);
    }

    #[test]
    fn perturbative_matches_finite_differences() {
        let h = 1e-3;
        for s in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let rho = |a: f64| rho22_perturbative(s, a, std::f64::consts::FRAC_PI_2);
            let d1 = (rho(h) - rho(-h)) / (2.0 * h);
            let d2 = (rho(h) - 2.0 * rho(0.0) + rho(-h)) / (2.0 * h * h);
            assert!((rho(0.0) - perturbative_coeff(0, s).unwrap()).abs() < 1e-15);
            assert!((d1 - perturbative_coeff(1, s).unwrap()).abs() < 1e-5);
            assert!((d2 - perturbative_coeff(2, s).unwrap()).abs() < 1e-5);
        }
    }

    #[test]
    fn full_modulation_values() {
        assert_eq!(rho22_full_modulation(1.0, 0.0), 0.5);
        assert_eq!(rho22_full_modulation(0.0, 0.3), 1.0);
        assert_eq!(rho22_full_modulation(0.0, std::f64::consts::FRAC_PI_2), 1.0);
        let v = rho22_full_modulation(2.0, PI / 3.0);
        assert!((v - 0.25 / 4.25).abs() < 1e-15);
    }

    #[test]
    fn demodulate_synthetic() {
        let nu = 0.37;
        let period = TAU / nu;
        let n = 4 * 128;
        let dt = 4.0 * period / n as f64;
        let flat = TimeSeries::from_fn(0.0, dt, n + 1, |_| 0.42).unwrap();
        assert!((demodulate(&flat, nu, 0).unwrap() - 0.42).abs() < 1e-14);
        let sig = TimeSeries::from_fn(3.0 * period, dt, n + 1, |t| 0.3 + 0.2 * (2.0 * nu * t).cos()).unwrap();
        assert!((demodulate(&sig, nu, 2).unwrap() - 0.2).abs() < 1e-6);
        assert!((demodulate(&sig, nu, 0).unwrap() - 0.3).abs() < 1e-12);
        assert!(demodulate(&sig, nu, 1).unwrap().abs() < 1e-12);
        let quad = TimeSeries::from_fn(0.0, dt, n + 1, |t| 0.1 * (nu * t).sin()).unwrap();
        let iq = demodulate_iq(&quad, nu, 1).unwrap();
        assert!((iq.sin - 0.1).abs() < 1e-12 && iq.cos.abs() < 1e-12);
    }

    #[test]
    fn demodulate_window_checks() {
        let nu = 1.0;
        let period = TAU / nu;
        let partial = TimeSeries::from_fn(0.0, 1.3 * period / 200.0, 201, |t| t.cos()).unwrap();
        assert!(matches!(demodulate(&partial, nu, 1), Err(Error::WindowMismatch { .. })));
        let coarse = TimeSeries::from_fn(0.0, period / 16.0, 17, |t| t.cos()).unwrap();
        assert!(matches!(demodulate(&coarse, nu, 1), Err(Error::Undersampled { .. })));
    }

    #[test]
    fn series_constructor_checks() {
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0, 3.0], vec![1.0; 3]).is_err());
        assert!(TimeSeries::new(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn parseval_identity() {
        for s in [0.2, 0.7, 1.0, 3.0] {
            let mean_sq = fourier_projection(|th| rho22_full_modulation(s, th).powi(2), 0, 0).cos;
            let f0 = f_coeff_quadrature(0, s);
            let rest: f64 = (1..200).map(|l| f_coeff_quadrature(l, s).powi(2) / 2.0).sum();
            assert!((mean_sq - (f0 * f0 + rest)).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn reconstruction_from_harmonics() {
        for (s, l_max) in [(0.1, 80), (0.4, 20), (1.0, 20), (5.0, 20)] {
            let coeffs: Vec<f64> = (0..=l_max).map(|l| f_coeff_quadrature(l, s)).collect();
            for k in 0..50 {
                let th = k as f64 * PI / 50.0;
                let sum: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(l, c)| c * (2.0 * l as f64 * th).cos())
                    .sum();
                assert!((sum - rho22_full_modulation(s, th)).abs() < 1e-6, "s={s} th={th}");
            }
        }
    }

    #[test]
    fn coefficients_vanish_for_strong_drive() {
        let big = 1e4;
        assert!((f_coeff_closed(0, big).unwrap() * big * big - 0.5).abs() < 1e-6);
        assert!((perturbative_coeff(0, big).unwrap() * big * big - 1.0).abs() < 1e-6);
        assert!(f_coeff_closed(1, big).unwrap().abs() < 1e-8);
        assert!(f_coeff_closed(2, big).unwrap().abs() < 1e-16);
        assert!(perturbative_coeff(1, big).unwrap().abs() < 1e-7);
        assert!(perturbative_coeff(2, big).unwrap().abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn closed_equals_quadrature(log_s in -3.0f64..3.0, l in 0usize..3) {
            let s = 10f64.powf(log_s);
            prop_assert!((f_coeff_closed(l, s).unwrap() - f_coeff_quadrature(l, s)).abs() < 1e-9);
        }

        #[test]
        fn perturbative_expansion_is_third_order(s in 0.05f64..10.0, theta in 0.0f64..TAU) {
            let x = theta.sin();
            let trunc = |a: f64| {
                let e = a * x;
                perturbative_coeff(0, s).unwrap()
                    + perturbative_coeff(1, s).unwrap() * e
                    + perturbative_coeff(2, s).unwrap() * e * e
            };
            let r1 = (rho22_perturbative(s, 0.01, theta) - trunc(0.01)).abs();
            // Residual is O(a³): bounded by a modest constant times a³.
            prop_assert!(r1 < 10.0 * 0.01f64.powi(3));
        }
    }
}
