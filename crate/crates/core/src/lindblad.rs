//! Master equation for the three-level Λ atom.
//!
//! Basis order is (|1⟩, |2⟩, |3⟩): |1⟩ is the excited state, the drive couples
//! |1⟩–|2⟩ and the probe couples |1⟩–|3⟩. Units are ħ = 1 and γ_p = 1, so every
//! rate and Rabi frequency is a multiple of the probe-transition decay rate.
//!
//! The Hamiltonian is taken in the frame rotating with the fields, where it is
//! time independent with the common one-photon detuning Δ on |1⟩. Populations
//! and the dark state are identical in both frames.
//!
//! Integration is fixed-step fourth-order Runge-Kutta. After each step the
//! state is re-Hermitized and its trace reset to one, so round-off never
//! accumulates into unphysical drift over the very long runs needed for steady
//! states.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use crate::error::{require, Error, Result};
use crate::fields::{instantaneous_probe, ModulationSpec};
use crate::modulation::TimeSeries;

/// A 3×3 complex operator on the (|1⟩, |2⟩, |3⟩) space.
pub type Operator = Matrix3<C64>;

/// Residual max-norm of dρ/dt below which a state counts as stationary.
pub const STEADY_STATE_TOL: f64 = 1e-10;
/// Eigenvalues down to −POSITIVITY_SLACK are accepted as round-off.
pub const POSITIVITY_SLACK: f64 = 1e-10;
/// Eigenvalues below −STEP_FAILURE_SLACK mean the integrator is unstable.
pub const STEP_FAILURE_SLACK: f64 = 1e-6;
/// Default integration horizon for [`steady_state`], in units of 1/γ_p.
pub const DEFAULT_MAX_TIME: f64 = 1e6;

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Excited state |1⟩.
    One,
    /// Lower state |2⟩, coupled to |1⟩ by the drive.
    Two,
    /// Lower state |3⟩, coupled to |1⟩ by the probe.
    Three,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::One => 0,
            Level::Two => 1,
            Level::Three => 2,
        }
    }
}

/// Physical parameters of the Λ system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaConfig {
    /// Probe Rabi frequency on |1⟩–|3⟩.
    pub omega_p: f64,
    /// Drive Rabi frequency on |1⟩–|2⟩.
    pub omega_s: f64,
    /// Common one-photon detuning; two-photon resonance always holds.
    pub delta: f64,
    /// Decay rate |1⟩ → |2⟩.
    pub gamma_s: f64,
    /// Decay rate |1⟩ → |3⟩. Fixed to 1 by the unit convention.
    pub gamma_p: f64,
}

impl LambdaConfig {
    /// Equal decay rates γ_s = γ_p = 1.
    pub fn new(omega_p: f64, omega_s: f64, delta: f64) -> Result<Self> {
        let config = Self {
            omega_p,
            omega_s,
            delta,
            gamma_s: 1.0,
            gamma_p: 1.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_gamma_s(self, gamma_s: f64) -> Result<Self> {
        let config = Self { gamma_s, ..self };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        require(nonneg(self.omega_p), "omega_p", self.omega_p, "must be finite and >= 0")?;
        require(nonneg(self.omega_s), "omega_s", self.omega_s, "must be finite and >= 0")?;
        require(self.delta.is_finite(), "delta", self.delta, "must be finite")?;
        require(
            self.gamma_s.is_finite() && self.gamma_s > 0.0,
            "gamma_s",
            self.gamma_s,
            "must be finite and > 0",
        )?;
        require(
            self.gamma_p == 1.0,
            "gamma_p",
            self.gamma_p,
            "rates are in units of gamma_p, so it must be 1",
        )
    }

    /// Total Rabi frequency Ω = √(Ω_p² + Ω_s²).
    pub fn rabi(&self) -> f64 {
        self.omega_p.hypot(self.omega_s)
    }

    pub fn total_decay(&self) -> f64 {
        self.gamma_s + self.gamma_p
    }

    /// Resonant optical-pumping rate Ω²/γ into the dark state.
    pub fn pumping_rate(&self) -> f64 {
        self.rabi().powi(2) / self.total_decay()
    }

    /// Slowest relaxation rate: optical pumping out of the bright state,
    /// Ω²γ/(γ² + 4Δ²), saturating at γ/2.
    pub fn relaxation_rate(&self) -> f64 {
        let g = self.total_decay();
        let omega2 = self.rabi().powi(2);
        (omega2 * g / (g * g + 4.0 * self.delta * self.delta)).min(0.5 * g)
    }

    /// Largest rate in the problem, used to size integration steps.
    pub fn fastest_rate(&self) -> f64 {
        self.rabi().max(self.total_decay()).max(self.delta.abs())
    }
}

fn hamiltonian(omega_p: f64, omega_s: f64, delta: f64) -> Operator {
    let mut h = Operator::zeros();
    h[(0, 0)] = C64::from(delta);
    h[(2, 0)] = C64::from(-omega_p);
    h[(0, 2)] = C64::from(-omega_p);
    h[(1, 0)] = C64::from(-omega_s);
    h[(0, 1)] = C64::from(-omega_s);
    h
}

/// Rotating-frame Hamiltonian Δ|1⟩⟨1| − (Ω_p|3⟩⟨1| + Ω_s|2⟩⟨1| + h.c.).
pub fn build_hamiltonian(config: &LambdaConfig) -> Operator {
    hamiltonian(config.omega_p, config.omega_s, config.delta)
}

fn rhs(rho: &Operator, h: &Operator, gamma_s: f64, gamma_p: f64) -> Operator {
    let i = C64::i();
    let mut d = (h * rho - rho * h) * i;

    // −(Γ/2)(|1⟩⟨1|ρ + ρ|1⟩⟨1|): row 0 and column 0, with the (0,0) element hit twice.
    let half_total = 0.5 * (gamma_s + gamma_p);
    for k in 0..3 {
        d[(0, k)] -= rho[(0, k)] * half_total;
        d[(k, 0)] -= rho[(k, 0)] * half_total;
    }
    let rho11 = rho[(0, 0)];
    d[(1, 1)] += rho11 * gamma_s;
    d[(2, 2)] += rho11 * gamma_p;
    d
}

/// dρ/dt for the Λ atom: i[H', ρ] plus spontaneous decay from |1⟩ into |2⟩
/// and |3⟩ at rates γ_s and γ_p.
pub fn lindblad_rhs(rho: &DensityMatrix, config: &LambdaConfig) -> Operator {
    rhs(
        &rho.0,
        &build_hamiltonian(config),
        config.gamma_s,
        config.gamma_p,
    )
}

fn max_norm(m: &Operator) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn tidy(m: &Operator) -> Operator {
    let mut h = (m + m.adjoint()) * C64::from(0.5);
    let tr = h.trace().re;
    h /= C64::from(tr);
    h
}

fn rk4_step<F>(rho: &Operator, t: f64, dt: f64, ham: &F, gamma_s: f64, gamma_p: f64) -> Operator
where
    F: Fn(f64) -> Operator,
{
    let half = C64::from(0.5 * dt);
    let full = C64::from(dt);
    let h0 = ham(t);
    let hm = ham(t + 0.5 * dt);
    let h1 = ham(t + dt);
    let k1 = rhs(rho, &h0, gamma_s, gamma_p);
    let k2 = rhs(&(rho + k1 * half), &hm, gamma_s, gamma_p);
    let k3 = rhs(&(rho + k2 * half), &hm, gamma_s, gamma_p);
    let k4 = rhs(&(rho + k3 * full), &h1, gamma_s, gamma_p);
    let incr = (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0);
    tidy(&(rho + incr))
}

/// A 3×3 Hermitian, unit-trace, positive semidefinite state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(m: Operator) -> Result<Self> {
        let rho = Self(m);
        let herm = rho.hermiticity_error();
        require(herm <= HERMITICITY_TOL, "hermiticity error", herm, "matrix is not Hermitian")?;
        let tr = m.trace();
        require(
            (tr - C64::from(1.0)).norm() <= TRACE_TOL,
            "trace",
            tr.re,
            "must equal 1",
        )?;
        let min = rho.eigenvalues()[0];
        require(min >= -POSITIVITY_SLACK, "eigenvalue", min, "must be >= 0")?;
        Ok(rho)
    }

    /// Pure state |ψ⟩⟨ψ|; amplitudes are normalized first.
    pub fn pure(amplitudes: [C64; 3]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        require(norm > 0.0 && norm.is_finite(), "state norm", norm, "must be > 0")?;
        let v = nalgebra::Vector3::from(amplitudes) / C64::from(norm);
        Ok(Self(tidy(&(v * v.adjoint()))))
    }

    pub fn basis(level: Level) -> Self {
        let mut m = Operator::zeros();
        m[(level.index(), level.index())] = C64::from(1.0);
        Self(m)
    }

    /// Diagonal (incoherent) mixture with the given populations.
    pub fn mixed(populations: [f64; 3]) -> Result<Self> {
        let m = Operator::from_diagonal(&nalgebra::Vector3::from(populations.map(C64::from)));
        Self::new(m)
    }

    pub fn as_matrix(&self) -> &Operator {
        &self.0
    }

    pub fn element(&self, row: Level, col: Level) -> C64 {
        self.0[(row.index(), col.index())]
    }

    pub fn population(&self, level: Level) -> f64 {
        self.element(level, level).re
    }

    pub fn populations(&self) -> [f64; 3] {
        [
            self.population(Level::One),
            self.population(Level::Two),
            self.population(Level::Three),
        ]
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        max_norm(&(self.0 - self.0.adjoint()))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let herm = (self.0 + self.0.adjoint()) * C64::from(0.5);
        let ev = herm.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Largest element-wise distance to another state.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        max_norm(&(self.0 - other.0))
    }

    fn checked(m: Operator, time: f64) -> Result<Self> {
        let rho = Self(m);
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::StepTooLarge {
                time,
                min_eigenvalue: f64::NAN,
            });
        }
        let min = rho.eigenvalues()[0];
        if min < -STEP_FAILURE_SLACK {
            return Err(Error::StepTooLarge {
                time,
                min_eigenvalue: min,
            });
        }
        Ok(rho)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// (ρ₁₁, ρ₂₂, ρ₃₃) for every stored state.
    pub fn populations(&self) -> Vec<[f64; 3]> {
        self.states.iter().map(DensityMatrix::populations).collect()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }
}

/// Integrates from `rho0` up to (at least) `t_end` with fixed step `dt`,
/// storing every step.
pub fn evolve(rho0: &DensityMatrix, config: &LambdaConfig, t_end: f64, dt: f64) -> Result<Trajectory> {
    evolve_strided(rho0, config, t_end, dt, 1)
}

/// Like [`evolve`] but keeps only every `stride`-th step (plus the last one).
pub fn evolve_strided(
    rho0: &DensityMatrix,
    config: &LambdaConfig,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    config.validate()?;
    require(t_end.is_finite() && t_end > 0.0, "t_end", t_end, "must be > 0")?;
    require(dt.is_finite() && dt > 0.0 && dt <= t_end, "dt", dt, "must satisfy 0 < dt <= t_end")?;
    require(stride >= 1, "stride", stride as f64, "must be >= 1")?;

    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let h = build_hamiltonian(config);
    let ham = |_t: f64| h;
    let mut times = Vec::with_capacity(steps / stride + 2);
    let mut states = Vec::with_capacity(steps / stride + 2);
    let mut rho = tidy(&rho0.0);
    times.push(0.0);
    states.push(DensityMatrix::checked(rho, 0.0)?);
    for n in 1..=steps {
        let t = (n - 1) as f64 * dt;
        rho = rk4_step(&rho, t, dt, &ham, config.gamma_s, config.gamma_p);
        if n % stride == 0 || n == steps {
            let t = n as f64 * dt;
            times.push(t);
            states.push(DensityMatrix::checked(rho, t)?);
        }
    }
    Ok(Trajectory { times, states })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    /// Bound on the residual max-norm of dρ/dt, divided by the slowest
    /// relaxation rate when that is below 1, that ends the integration.
    pub tol: f64,
    /// Integration horizon before giving up.
    pub max_time: f64,
    /// Step size; `None` picks one from the fastest rate in the config.
    pub dt: Option<f64>,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            tol: STEADY_STATE_TOL,
            max_time: DEFAULT_MAX_TIME,
            dt: None,
        }
    }
}

/// Integrates until the residual max-norm of dρ/dt falls below `tol`, or
/// below `tol` times [`LambdaConfig::relaxation_rate`] when that rate is
/// under 1, so that weak fields cannot pass the test before relaxing.
///
/// At two-photon resonance the result is the dark-state projector. With both
/// fields off the stationary state is not unique, so a non-stationary `rho0`
/// is rejected with [`Error::DegenerateFields`].
pub fn steady_state(rho0: &DensityMatrix, config: &LambdaConfig, tol: f64) -> Result<DensityMatrix> {
    steady_state_with(
        rho0,
        config,
        &SteadyStateOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn steady_state_with(
    rho0: &DensityMatrix,
    config: &LambdaConfig,
    options: &SteadyStateOptions,
) -> Result<DensityMatrix> {
    config.validate()?;
    require(options.tol > 0.0, "tol", options.tol, "must be > 0")?;
    require(options.max_time > 0.0, "max_time", options.max_time, "must be > 0")?;
    // Stability of RK4 needs |λ|·dt ≲ 2.8; the fixed point is exact for any
    // stable step, so a coarse step costs nothing in accuracy.
    let dt = options.dt.unwrap_or(0.05 / config.fastest_rate());
    require(dt.is_finite() && dt > 0.0, "dt", dt, "must be > 0")?;

    let h = build_hamiltonian(config);
    // Dividing by the slowest rate turns the residual into a bound on the
    // distance to the fixed point; otherwise weak fields would pass at once.
    let slow = match config.relaxation_rate().min(1.0) {
        r if r > 0.0 => r,
        _ => 1.0,
    };
    let residual = |m: &Operator| max_norm(&rhs(m, &h, config.gamma_s, config.gamma_p)) / slow;
    let mut rho = tidy(&rho0.0);
    let mut res = residual(&rho);
    if res < options.tol {
        return DensityMatrix::checked(rho, 0.0);
    }
    if config.omega_p == 0.0 && config.omega_s == 0.0 {
        return Err(Error::DegenerateFields);
    }

    const CHECK_EVERY: usize = 64;
    let ham = |_t: f64| h;
    let mut n: usize = 0;
    loop {
        for _ in 0..CHECK_EVERY {
            rho = rk4_step(&rho, n as f64 * dt, dt, &ham, config.gamma_s, config.gamma_p);
            n += 1;
        }
        let t = n as f64 * dt;
        let state = DensityMatrix::checked(rho, t)?;
        res = residual(&rho);
        if res < options.tol {
            return Ok(state);
        }
        if t >= options.max_time {
            return Err(Error::NoConvergence { time: t, residual: res });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModulatedOptions {
    /// Time discarded before sampling starts, rounded up to whole modulation
    /// periods. Defaults to ten dark-state pumping times.
    pub transient: Option<f64>,
    /// Integration step; must respect [`max_modulated_step`].
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedRun {
    /// ρ₂₂ sampled uniformly over the last `n_periods` modulation periods,
    /// both window endpoints included. Times are absolute.
    pub series: TimeSeries,
    /// Set when ν exceeds a tenth of the pumping rate, where the quasi-static
    /// harmonic formulas stop being reliable.
    pub adiabaticity_warning: bool,
    pub dt: f64,
}

/// Largest step resolving both the modulation and the fastest atomic rate:
/// min(1/(50ν), 0.01/max(Ω, γ, |Δ|)), with Ω at the peak probe amplitude.
pub fn max_modulated_step(config: &LambdaConfig, modulation: &ModulationSpec) -> f64 {
    let peak_probe = config.omega_p * modulation.peak_gain();
    let peak = LambdaConfig {
        omega_p: peak_probe,
        ..*config
    };
    let atomic = 0.01 / peak.fastest_rate();
    match modulation.nu() {
        Some(nu) => atomic.min(1.0 / (50.0 * nu)),
        None => atomic,
    }
}

/// Integrates with the probe Rabi frequency replaced by
/// `instantaneous_probe(config.omega_p, modulation, t)` and samples ρ₂₂ over
/// the final `n_periods` modulation periods.
///
/// Without modulation a nominal period 2π (ν = 1) sets the sampling window.
pub fn evolve_modulated(
    rho0: &DensityMatrix,
    config: &LambdaConfig,
    modulation: &ModulationSpec,
    n_periods: usize,
    samples_per_period: usize,
) -> Result<ModulatedRun> {
    evolve_modulated_with(
        rho0,
        config,
        modulation,
        n_periods,
        samples_per_period,
        &ModulatedOptions::default(),
    )
}

pub fn evolve_modulated_with(
    rho0: &DensityMatrix,
    config: &LambdaConfig,
    modulation: &ModulationSpec,
    n_periods: usize,
    samples_per_period: usize,
    options: &ModulatedOptions,
) -> Result<ModulatedRun> {
    config.validate()?;
    modulation.validate()?;
    require(n_periods >= 1, "n_periods", n_periods as f64, "must be >= 1")?;
    require(
        samples_per_period >= 2,
        "samples_per_period",
        samples_per_period as f64,
        "must be >= 2",
    )?;

    let nu = modulation.nu().unwrap_or(1.0);
    let period = std::f64::consts::TAU / nu;
    let dt_max = max_modulated_step(config, modulation);
    let dt_target = match options.dt {
        Some(dt) => {
            require(
                dt > 0.0 && dt <= dt_max,
                "dt",
                dt,
                "must be > 0 and resolve both the modulation and the atomic rates",
            )?;
            dt
        }
        None => dt_max,
    };
    let sample_dt = period / samples_per_period as f64;
    let substeps = (sample_dt / dt_target).ceil().max(1.0) as usize;
    let dt = sample_dt / substeps as f64;

    let pumping = config.pumping_rate();
    let transient = options.transient.unwrap_or(if pumping > 0.0 {
        10.0 / pumping
    } else {
        period
    });
    require(transient >= 0.0, "transient", transient, "must be >= 0")?;
    let transient_periods = (transient / period - 1e-9).ceil().max(0.0) as usize;

    let steps_per_period = samples_per_period * substeps;
    let first_sample_step = transient_periods * steps_per_period;
    let total_steps = first_sample_step + n_periods * steps_per_period;

    let ham = |t: f64| {
        hamiltonian(
            instantaneous_probe(config.omega_p, modulation, t),
            config.omega_s,
            config.delta,
        )
    };

    let n_samples = n_periods * samples_per_period + 1;
    let mut times = Vec::with_capacity(n_samples);
    let mut values = Vec::with_capacity(n_samples);
    let mut rho = tidy(&rho0.0);
    let mut record = |n: usize, rho: &Operator| -> Result<()> {
        if n >= first_sample_step && (n - first_sample_step).is_multiple_of(substeps) {
            let t = n as f64 * dt;
            let state = DensityMatrix::checked(*rho, t)?;
            times.push(t);
            values.push(state.population(Level::Two));
        }
        Ok(())
    };
    record(0, &rho)?;
    for n in 0..total_steps {
        rho = rk4_step(&rho, n as f64 * dt, dt, &ham, config.gamma_s, config.gamma_p);
        record(n + 1, &rho)?;
    }

    Ok(ModulatedRun {
        series: TimeSeries::new(times, values)?,
        adiabaticity_warning: modulation.nu().is_some_and(|nu| nu > 0.1 * pumping),
        dt,
    })
}
