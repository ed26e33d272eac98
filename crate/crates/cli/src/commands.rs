use cptsim_core::analytic::rho22_local;
use cptsim_core::fields::{field_ratio, FieldProfile, ModulationSpec, Position};
use cptsim_core::lindblad::{
    evolve_modulated_with, steady_state_with, DensityMatrix, LambdaConfig, Level, ModulatedOptions, SteadyStateOptions,
};
use cptsim_core::modulation::{demodulate_iq, f_coeff_closed, f_coeff_quadrature, perturbative_harmonic};
use cptsim_core::psf::{
    default_range, improvement_factor, measure_psf, sample_psf_2d, FeatureWidth, PsfFamily, Reference,
    DEFAULT_SAMPLES,
};
use rayon::prelude::*;

use crate::config::{Drive, Grid, Probe, RunConfig, Scenario, ECHO_PREFIX};
use crate::error::CliError;
use crate::table::{ResultTable, TableError};

/// Default points per axis for 2D surfaces.
pub const SURFACE_SAMPLES: usize = 201;

const WIDTH_DEFINITION: &str =
    "peak: full width at half maximum above zero; notch: full width at half depth from floor to adjacent lobe";

pub struct Output {
    pub main: ResultTable,
    /// Companion table of widths and improvement factors.
    pub widths: Option<ResultTable>,
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        CliError::Config(e.to_string())
    }
}

pub fn run(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.scenario {
        Scenario::Steady => cmd_steady(cfg).map(|main| Output { main, widths: None }),
        Scenario::Psf | Scenario::Figure => cmd_psf(cfg),
        Scenario::Modulate => cmd_modulate(cfg).map(|main| Output { main, widths: None }),
        Scenario::Sweep => cmd_sweep(cfg).map(|main| Output { main, widths: None }),
    }
}

/// Empty table carrying the provenance header.
pub fn provenance(cfg: &RunConfig) -> Result<ResultTable, CliError> {
    let mut t = ResultTable::new();
    t.set_meta("generator", "cptsim")?;
    t.set_meta("version", env!("CARGO_PKG_VERSION"))?;
    t.set_meta("figure", cfg.tag.map_or("none", |tag| tag.name()))?;
    for (k, v) in &cfg.echo {
        t.set_meta(format!("{ECHO_PREFIX}{k}"), v.as_str())?;
    }
    Ok(t)
}

/// Drive and probe profiles at a given ℛ; positions are kx (and ky).
struct Geometry {
    drive: FieldProfile,
    probe: FieldProfile,
    two_d: bool,
    expected_width: f64,
}

impl Geometry {
    fn new(cfg: &RunConfig, ratio: f64) -> Result<Self, CliError> {
        let amp = ratio.sqrt();
        let standing = || FieldProfile::standing_wave(amp, 1.0, 0.0);
        let drive = match cfg.drive {
            Drive::Standing => standing()?,
            Drive::Standing2d => FieldProfile::sum_2d(standing()?, standing()?)?,
            Drive::Lg => FieldProfile::lg_donut(amp, cfg.waist)?,
        };
        let probe = match cfg.probe {
            Probe::Uniform => FieldProfile::uniform(1.0)?,
            Probe::Gaussian => FieldProfile::gaussian(1.0, cfg.waist)?,
        };
        let scale = if cfg.drive == Drive::Lg { cfg.waist } else { 1.0 };
        Ok(Self {
            drive,
            probe,
            two_d: cfg.drive == Drive::Standing2d,
            expected_width: 2.0 * scale / amp,
        })
    }

    fn ratio_at(&self, pos: Position) -> f64 {
        field_ratio(&self.drive, &self.probe, pos).unwrap_or(f64::NAN)
    }

    /// Field ratio along x (the y = 0 axis in 2D).
    fn s(&self, x: f64) -> f64 {
        if self.two_d {
            self.ratio_at(Position::XY(x, 0.0))
        } else {
            self.ratio_at(Position::X(x))
        }
    }

    fn s2(&self, x: f64, y: f64) -> f64 {
        self.ratio_at(Position::XY(x, y))
    }

    fn default_range(&self) -> (f64, f64) {
        default_range(0.0, self.expected_width)
    }
}

fn grid_points(grid: Grid) -> Vec<f64> {
    let step = (grid.hi - grid.lo) / (grid.n - 1) as f64;
    (0..grid.n)
        .map(|i| if i == grid.n - 1 { grid.hi } else { grid.lo + i as f64 * step })
        .collect()
}

fn require_1d(cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    if cfg.drive == Drive::Standing2d {
        return Err(CliError::config(format!("{what} needs a 1D drive (standing or lg)")));
    }
    Ok(())
}

pub fn cmd_steady(cfg: &RunConfig) -> Result<ResultTable, CliError> {
    require_1d(cfg, "steady")?;
    let geo = Geometry::new(cfg, cfg.ratio)?;
    let grid = cfg.grid.expect("steady always has a grid");
    let xs = grid_points(grid);
    let start = DensityMatrix::mixed([1.0 / 3.0; 3])?;
    let options = SteadyStateOptions {
        max_time: cfg.max_time,
        ..Default::default()
    };
    let rows: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|&x| -> Result<(f64, f64), CliError> {
            let s = geo.s(x);
            let omega_p = cfg.rabi / (1.0 + s * s).sqrt();
            let omega_s = omega_p * s;
            let lambda = LambdaConfig::new(omega_p, omega_s, cfg.delta)?;
            let rho = steady_state_with(&start, &lambda, &options)?;
            Ok((rho22_local(omega_p, omega_s)?, rho.population(Level::Two)))
        })
        .collect::<Result<_, _>>()?;

    let mut t = provenance(cfg)?;
    t.add_column("kx", xs)?;
    t.add_column("rho22_analytic", rows.iter().map(|r| r.0).collect())?;
    t.add_column("rho22_lindblad", rows.iter().map(|r| r.1).collect())?;
    t.add_column("abs_error", rows.iter().map(|r| (r.0 - r.1).abs()).collect())?;
    Ok(t)
}

/// PSF families shown for a modulation setting.
pub fn families(modulation: &ModulationSpec, two_d: bool) -> Vec<PsfFamily> {
    match modulation {
        ModulationSpec::None if two_d => vec![PsfFamily::Unmodulated],
        ModulationSpec::None => vec![PsfFamily::Unmodulated, PsfFamily::CoupledLambda],
        ModulationSpec::Full { .. } => vec![
            PsfFamily::Unmodulated,
            PsfFamily::Full(0),
            PsfFamily::Full(1),
            PsfFamily::Full(2),
        ],
        ModulationSpec::Perturbative { .. } => vec![
            PsfFamily::Unmodulated,
            PsfFamily::Perturbative(1),
            PsfFamily::Perturbative(2),
        ],
    }
}

fn family_width(geo: &Geometry, family: PsfFamily, range: (f64, f64), n: usize) -> Result<FeatureWidth, CliError> {
    let f = family.evaluator()?;
    Ok(measure_psf(|x| f(geo.s(x)), range, n, 0.0)?)
}

/// Unmodulated width at the reference ratio, on its own default grid.
fn reference_width(cfg: &RunConfig) -> Result<f64, CliError> {
    let geo = Geometry::new(cfg, cfg.reference_ratio)?;
    Ok(family_width(&geo, PsfFamily::Unmodulated, geo.default_range(), DEFAULT_SAMPLES)?.width)
}

fn require_positive_ratio(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.ratio <= 0.0 || cfg.reference_ratio <= 0.0 {
        return Err(CliError::config("PSF widths need ratio > 0 and reference_ratio > 0"));
    }
    Ok(())
}

/// Curves (or surfaces) of each family plus their central widths at kx = 0.
pub fn cmd_psf(cfg: &RunConfig) -> Result<Output, CliError> {
    require_positive_ratio(cfg)?;
    let geo = Geometry::new(cfg, cfg.ratio)?;
    let fams = families(&cfg.modulation, geo.two_d);
    let evals = fams
        .iter()
        .map(|f| f.evaluator().map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let reference = reference_width(cfg)?;

    let (lo, hi) = geo.default_range();
    let mut main = provenance(cfg)?;
    let mut widths = provenance(cfg)?;
    widths.set_meta("width_definition", WIDTH_DEFINITION)?;
    widths.set_meta("rayleigh_width", "pi (lambda/2 in units of kx)")?;
    widths.add_column("reference_unmodulated_width", vec![reference])?;

    if geo.two_d {
        let grid = cfg.grid.unwrap_or(Grid {
            lo,
            hi,
            n: SURFACE_SAMPLES,
        });
        let axis = grid_points(grid);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for &y in &axis {
            for &x in &axis {
                xs.push(x);
                ys.push(y);
            }
        }
        main.add_column("kx", xs)?;
        main.add_column("ky", ys)?;
        for (fam, f) in fams.iter().zip(&evals) {
            let surface = sample_psf_2d(|x, y| f(geo.s2(x, y)), (grid.lo, grid.hi), (grid.lo, grid.hi), grid.n)?;
            let (wx, wy) = surface.axis_widths_refined((0.0, 0.0), |x, y| f(geo.s2(x, y)))?;
            let label = fam.label();
            main.add_column(label.as_str(), surface.values)?;
            widths.add_column(format!("{label}_width_x"), vec![wx.width])?;
            widths.add_column(format!("{label}_width_y"), vec![wy.width])?;
            widths.add_column(format!("{label}_vs_rayleigh"), vec![improvement_factor(&wx, Reference::Rayleigh)])?;
            widths.add_column(
                format!("{label}_vs_unmodulated"),
                vec![improvement_factor(&wx, Reference::Custom(reference))],
            )?;
        }
    } else {
        let grid = cfg.grid.unwrap_or(Grid {
            lo,
            hi,
            n: DEFAULT_SAMPLES,
        });
        let xs = grid_points(grid);
        let s: Vec<f64> = xs.par_iter().map(|&x| geo.s(x)).collect();
        main.add_column("kx", xs)?;
        for (fam, f) in fams.iter().zip(&evals) {
            let w = family_width(&geo, *fam, (grid.lo, grid.hi), grid.n)?;
            let label = fam.label();
            main.add_column(label.as_str(), s.iter().map(|&s| f(s)).collect())?;
            widths.add_column(format!("{label}_width"), vec![w.width])?;
            widths.add_column(format!("{label}_vs_rayleigh"), vec![improvement_factor(&w, Reference::Rayleigh)])?;
            widths.add_column(
                format!("{label}_vs_unmodulated"),
                vec![improvement_factor(&w, Reference::Custom(reference))],
            )?;
        }
    }
    Ok(Output {
        main,
        widths: Some(widths),
    })
}

/// Position where the field ratio is 1: arcsin(1/√ℛ) on a standing wave,
/// k·w₀/√ℛ for the donut over a Gaussian probe.
fn unit_ratio_position(cfg: &RunConfig) -> Result<f64, CliError> {
    match (cfg.drive, cfg.probe) {
        (Drive::Standing, Probe::Uniform) if cfg.ratio >= 1.0 => Ok((1.0 / cfg.ratio.sqrt()).asin()),
        (Drive::Lg, Probe::Gaussian) if cfg.ratio > 0.0 => Ok(cfg.waist / cfg.ratio.sqrt()),
        _ => Err(CliError::config(
            "no default position for this geometry and ratio; set position explicitly",
        )),
    }
}

/// Fully modulated reference: closed form for f₀..f₄, quadrature above.
fn full_reference(harmonic: usize, s: f64) -> Result<f64, CliError> {
    if harmonic % 2 == 1 {
        return Ok(0.0);
    }
    let l = harmonic / 2;
    if l <= 2 {
        Ok(f_coeff_closed(l, s)?)
    } else {
        Ok(f_coeff_quadrature(l, s))
    }
}

/// Simulates the modulated master equation at one position and compares the
/// lock-in harmonics with the quasi-static predictions.
pub fn cmd_modulate(cfg: &RunConfig) -> Result<ResultTable, CliError> {
    require_1d(cfg, "modulate")?;
    let nu = cfg
        .modulation
        .nu()
        .ok_or_else(|| CliError::config("modulate needs modulation = full:NU or pert:A,NU"))?;
    let x = match cfg.position {
        Some(x) => x,
        None => unit_ratio_position(cfg)?,
    };
    let geo = Geometry::new(cfg, cfg.ratio)?;
    let s = geo.s(x);
    if !s.is_finite() {
        return Err(CliError::config(format!("field ratio undefined at position {x}")));
    }
    let omega_p = cfg.rabi / (1.0 + s * s).sqrt();
    let lambda = LambdaConfig::new(omega_p, omega_p * s, cfg.delta)?;
    let run = evolve_modulated_with(
        &DensityMatrix::mixed([1.0 / 3.0; 3])?,
        &lambda,
        &cfg.modulation,
        cfg.periods,
        cfg.samples,
        &ModulatedOptions::default(),
    )?;

    let mut rows = Vec::new();
    for &h in &cfg.harmonics {
        let iq = demodulate_iq(&run.series, nu, h)?;
        let (got, want) = match cfg.modulation {
            ModulationSpec::Perturbative { a, .. } => {
                let exact = perturbative_harmonic(s, a, h);
                if h % 2 == 1 {
                    (iq.sin, exact.sin)
                } else {
                    (iq.cos, exact.cos)
                }
            }
            _ => (iq.cos, full_reference(h, s)?),
        };
        let err = if want == 0.0 {
            (got - want).abs()
        } else {
            ((got - want) / want).abs()
        };
        rows.push((h as f64, got, want, err));
    }

    let mut t = provenance(cfg)?;
    t.set_meta("position", x.to_string())?;
    t.set_meta("field_ratio", s.to_string())?;
    t.set_meta("dt", run.dt.to_string())?;
    t.set_meta("adiabaticity_warning", run.adiabaticity_warning.to_string())?;
    t.set_meta(
        "projection",
        "cos(h nu t) except odd harmonics of pert modulation, which use sin(h nu t)",
    )?;
    t.set_meta("rel_error", "absolute error where the reference is zero")?;
    t.add_column("harmonic", rows.iter().map(|r| r.0).collect())?;
    t.add_column("coeff_demodulated", rows.iter().map(|r| r.1).collect())?;
    t.add_column("coeff_closed_or_quadrature", rows.iter().map(|r| r.2).collect())?;
    t.add_column("rel_error", rows.iter().map(|r| r.3).collect())?;
    Ok(t)
}

/// All PSF families compared in sweeps.
pub const SWEEP_FAMILIES: [PsfFamily; 7] = [
    PsfFamily::Unmodulated,
    PsfFamily::Full(0),
    PsfFamily::Full(1),
    PsfFamily::Full(2),
    PsfFamily::Perturbative(1),
    PsfFamily::Perturbative(2),
    PsfFamily::CoupledLambda,
];

/// Central widths of every family for each ℛ, in ascending ℛ.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<ResultTable, CliError> {
    require_1d(cfg, "sweep")?;
    let mut ratios = cfg.ratios.clone();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let rows: Vec<Vec<f64>> = ratios
        .par_iter()
        .map(|&r| -> Result<Vec<f64>, CliError> {
            let geo = Geometry::new(cfg, r)?;
            SWEEP_FAMILIES
                .iter()
                .map(|&fam| Ok(family_width(&geo, fam, geo.default_range(), DEFAULT_SAMPLES)?.width))
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let monotone = (0..SWEEP_FAMILIES.len()).all(|j| rows.windows(2).all(|w| w[1][j] < w[0][j]));
    let mut t = provenance(cfg)?;
    t.set_meta("width_definition", WIDTH_DEFINITION)?;
    t.set_meta("monotone_decreasing", monotone.to_string())?;
    t.add_column("ratio", ratios)?;
    for (j, fam) in SWEEP_FAMILIES.iter().enumerate() {
        t.add_column(format!("{}_width", fam.label()), rows.iter().map(|r| r[j]).collect())?;
    }
    let (u, c) = (0, SWEEP_FAMILIES.len() - 1);
    t.add_column("coupled_over_unmodulated", rows.iter().map(|r| r[c] / r[u]).collect())?;
    Ok(t)
}
