//! Command-line driver: resolves a run configuration, dispatches to a
//! scenario and writes the resulting tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;

use crate::commands::Output;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::table::ResultTable;

#[derive(Debug, Parser)]
#[command(name = "cptsim", version, about = "Plot-ready data for CPT sub-wavelength localization")]
struct Flags {
    /// steady | psf | modulate | figure | sweep
    #[arg(long, allow_hyphen_values = true)]
    scenario: Option<String>,
    /// Figure preset: fig1b, fig2a, fig2b, fig3, fig5a, fig5b
    #[arg(long, allow_hyphen_values = true)]
    tag: Option<String>,
    /// Drive-to-probe intensity ratio
    #[arg(long, allow_hyphen_values = true)]
    ratio: Option<String>,
    /// Comma-separated ratios for sweeps
    #[arg(long, allow_hyphen_values = true)]
    ratios: Option<String>,
    /// Ratio of the unmodulated curve improvement factors are quoted against
    #[arg(long, allow_hyphen_values = true)]
    reference_ratio: Option<String>,
    /// standing | lg | 2d-standing
    #[arg(long, allow_hyphen_values = true)]
    drive: Option<String>,
    /// uniform | gaussian
    #[arg(long, allow_hyphen_values = true)]
    probe: Option<String>,
    /// Beam waist k*w0 for lg drive and gaussian probe
    #[arg(long, allow_hyphen_values = true)]
    waist: Option<String>,
    /// none | full:NU | pert:A,NU
    #[arg(long, allow_hyphen_values = true)]
    modulation: Option<String>,
    /// LO:HI:N in units of kx
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// kx at which to simulate a modulated run
    #[arg(long, allow_hyphen_values = true)]
    position: Option<String>,
    /// Common one-photon detuning
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Total Rabi frequency sqrt(Op^2 + Os^2)
    #[arg(long, allow_hyphen_values = true)]
    rabi: Option<String>,
    /// Steady-state integration horizon before giving up
    #[arg(long, allow_hyphen_values = true)]
    max_time: Option<String>,
    /// Modulation periods sampled
    #[arg(long, allow_hyphen_values = true)]
    periods: Option<String>,
    /// Samples per modulation period
    #[arg(long, allow_hyphen_values = true)]
    samples: Option<String>,
    /// Comma-separated harmonics to demodulate
    #[arg(long, allow_hyphen_values = true)]
    harmonics: Option<String>,
    /// csv | json
    #[arg(long, allow_hyphen_values = true)]
    format: Option<String>,
    /// Significant digits (1-17) or full
    #[arg(long, allow_hyphen_values = true)]
    precision: Option<String>,
    /// Output path; stdout when absent
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
    /// Config file, or a table written by a previous run
    #[arg(long, allow_hyphen_values = true)]
    config: Option<PathBuf>,
}

impl Flags {
    fn pairs(&self) -> Vec<(String, String)> {
        let fields = [
            ("scenario", &self.scenario),
            ("tag", &self.tag),
            ("ratio", &self.ratio),
            ("ratios", &self.ratios),
            ("reference_ratio", &self.reference_ratio),
            ("drive", &self.drive),
            ("probe", &self.probe),
            ("waist", &self.waist),
            ("modulation", &self.modulation),
            ("grid", &self.grid),
            ("position", &self.position),
            ("delta", &self.delta),
            ("rabi", &self.rabi),
            ("max_time", &self.max_time),
            ("periods", &self.periods),
            ("samples", &self.samples),
            ("harmonics", &self.harmonics),
            ("format", &self.format),
            ("precision", &self.precision),
            ("out", &self.out),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

/// Path of the companion widths table: `dir/name_widths.ext`.
pub fn widths_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_widths.{}", ext.to_string_lossy()),
        None => format!("{stem}_widths"),
    };
    out.with_file_name(name)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(cfg: &RunConfig, output: &Output) -> Result<(), CliError> {
    let render = |t: &ResultTable| t.render(cfg.format, cfg.precision);
    match &cfg.out {
        Some(path) => {
            write_file(path, &render(&output.main))?;
            if let Some(w) = &output.widths {
                write_file(&widths_path(path), &render(w))?;
            }
        }
        None => {
            let mut text = render(&output.main);
            if let Some(w) = &output.widths {
                text.push('\n');
                text.push_str(&render(w));
            }
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                })?;
        }
    }
    Ok(())
}

/// Runs the tool on `args` (including the program name).
pub fn cli_main<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = match Flags::try_parse_from(args) {
        Ok(f) => f,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    Ok(())
                }
                ErrorKind::UnknownArgument => Err(CliError::Unknown {
                    kind: "flag",
                    name: e
                        .get(clap::error::ContextKind::InvalidArg)
                        .map_or_else(|| e.to_string(), |v| v.to_string()),
                }),
                _ => Err(CliError::Config(e.to_string())),
            };
        }
    };
    let cfg = RunConfig::resolve(&flags.pairs(), flags.config.as_deref())?;
    let output = commands::run(&cfg)?;
    emit(&cfg, &output)
}
