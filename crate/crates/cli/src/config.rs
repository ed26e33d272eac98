//! Run configuration: flags over a flat `key = value` file over per-scenario
//! defaults.
//!
//! A config file may also be a table previously written by this tool. Its
//! `config.*` provenance entries are read back, so any output file reruns the
//! command that produced it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use cptsim_core::fields::ModulationSpec;

use crate::error::CliError;
use crate::table::{Format, Precision};

/// Every recognised key, in echo order.
pub const KEYS: &[&str] = &[
    "scenario",
    "tag",
    "ratio",
    "ratios",
    "reference_ratio",
    "drive",
    "probe",
    "waist",
    "modulation",
    "grid",
    "position",
    "delta",
    "rabi",
    "max_time",
    "periods",
    "samples",
    "harmonics",
    "format",
    "precision",
    "out",
];

/// Prefix of config entries in a table's provenance header.
pub const ECHO_PREFIX: &str = "config.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Steady,
    Psf,
    Modulate,
    Figure,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drive {
    Standing,
    Lg,
    Standing2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureTag {
    Fig1b,
    Fig2a,
    Fig2b,
    Fig3,
    Fig5a,
    Fig5b,
}

impl FigureTag {
    pub const ALL: [FigureTag; 6] = [
        FigureTag::Fig1b,
        FigureTag::Fig2a,
        FigureTag::Fig2b,
        FigureTag::Fig3,
        FigureTag::Fig5a,
        FigureTag::Fig5b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureTag::Fig1b => "fig1b",
            FigureTag::Fig2a => "fig2a",
            FigureTag::Fig2b => "fig2b",
            FigureTag::Fig3 => "fig3",
            FigureTag::Fig5a => "fig5a",
            FigureTag::Fig5b => "fig5b",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        Self::ALL.into_iter().find(|t| t.name() == s).ok_or(CliError::Unknown {
            kind: "figure tag",
            name: s.to_string(),
        })
    }

    /// Settings that fill keys left unset by the file and flags.
    fn preset(self) -> &'static [(&'static str, &'static str)] {
        match self {
            FigureTag::Fig1b => &[("drive", "2d-standing"), ("ratio", "1000"), ("modulation", "none")],
            FigureTag::Fig2a => &[
                ("drive", "standing"),
                ("ratio", "2000"),
                ("reference_ratio", "1000"),
                ("modulation", "full:0.1"),
            ],
            FigureTag::Fig2b => &[
                ("drive", "2d-standing"),
                ("ratio", "2000"),
                ("reference_ratio", "1000"),
                ("modulation", "full:0.1"),
            ],
            FigureTag::Fig3 => &[
                ("drive", "lg"),
                ("probe", "gaussian"),
                ("ratio", "1000"),
                ("modulation", "full:0.1"),
            ],
            FigureTag::Fig5a => &[("drive", "standing"), ("ratio", "1000"), ("modulation", "pert:0.1,0.1")],
            FigureTag::Fig5b => &[("drive", "2d-standing"), ("ratio", "1000"), ("modulation", "pert:0.1,0.1")],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub tag: Option<FigureTag>,
    pub ratio: f64,
    pub ratios: Vec<f64>,
    /// ℛ of the unmodulated curve that improvement factors are quoted against.
    pub reference_ratio: f64,
    pub drive: Drive,
    pub probe: Probe,
    /// Beam waist k·w₀ of the donut drive and Gaussian probe.
    pub waist: f64,
    pub modulation: ModulationSpec,
    pub grid: Option<Grid>,
    pub position: Option<f64>,
    pub delta: f64,
    pub rabi: f64,
    /// Steady-state integration horizon before giving up.
    pub max_time: f64,
    pub periods: usize,
    pub samples: usize,
    pub harmonics: Vec<usize>,
    pub format: Format,
    pub precision: Precision,
    pub out: Option<PathBuf>,
    /// Fully resolved settings, in [`KEYS`] order.
    pub echo: Vec<(String, String)>,
}

fn check_key(key: &str) -> Result<(), CliError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(CliError::Unknown {
            kind: "config key",
            name: key.to_string(),
        })
    }
}

/// Parses config text: either a flat `key = value` file, or a table written by
/// this tool (CSV or JSON) whose `config.*` entries are used.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("config JSON: {e}")))?;
        let meta = doc
            .get("meta")
            .and_then(|m| m.as_object())
            .ok_or_else(|| CliError::config("config JSON has no meta object"))?;
        for (k, v) in meta {
            if let (Some(key), Some(v)) = (k.strip_prefix(ECHO_PREFIX), v.as_str()) {
                check_key(key)?;
                map.insert(key.to_string(), v.to_string());
            }
        }
        return Ok(map);
    }

    let echo_line = format!("# {ECHO_PREFIX}");
    let echoed = text.lines().any(|l| l.starts_with(&echo_line));
    for (i, line) in text.lines().enumerate() {
        let body = if echoed {
            match line.strip_prefix(&echo_line) {
                Some(rest) => rest,
                None => continue,
            }
        } else {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            line
        };
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim();
        check_key(key)?;
        map.insert(key.to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_text(&text)
}

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::config(format!("{key} = {value}: {why}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| bad(key, v, "not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, v, "must be finite"))
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| bad(key, v, "not a non-negative integer"))
}

fn parse_modulation(v: &str) -> Result<ModulationSpec, CliError> {
    let spec = if v == "none" {
        ModulationSpec::None
    } else if let Some(nu) = v.strip_prefix("full:") {
        ModulationSpec::Full {
            nu: parse_f64("modulation", nu)?,
        }
    } else if let Some(rest) = v.strip_prefix("pert:") {
        let (a, nu) = rest
            .split_once(',')
            .ok_or_else(|| bad("modulation", v, "expected pert:A,NU"))?;
        ModulationSpec::Perturbative {
            a: parse_f64("modulation", a)?,
            nu: parse_f64("modulation", nu)?,
        }
    } else {
        return Err(bad("modulation", v, "expected none, full:NU or pert:A,NU"));
    };
    spec.validate().map_err(|e| bad("modulation", v, &e.to_string()))?;
    Ok(spec)
}

fn parse_grid(v: &str) -> Result<Grid, CliError> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("grid", v, "expected LO:HI:N"));
    }
    let grid = Grid {
        lo: parse_f64("grid", parts[0])?,
        hi: parse_f64("grid", parts[1])?,
        n: parse_usize("grid", parts[2])?,
    };
    if grid.lo >= grid.hi || grid.n < 2 {
        return Err(bad("grid", v, "need LO < HI and N >= 2"));
    }
    Ok(grid)
}

fn parse_list<T>(key: &str, v: &str, item: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    let items: Vec<T> = v
        .split(',')
        .map(|s| item(key, s.trim()))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(bad(key, v, "empty list"));
    }
    Ok(items)
}

fn scenario_defaults(scenario: Scenario) -> Vec<(&'static str, String)> {
    let mut d = vec![
        ("ratio", "1000".to_string()),
        ("drive", "standing".into()),
        ("waist", "10".into()),
        ("delta", "0".into()),
        ("rabi", "4".into()),
        ("max_time", "1e6".into()),
        ("periods", "2".into()),
        ("samples", "512".into()),
        ("harmonics", "0,1,2,3,4".into()),
        ("ratios", "100,1000,10000".into()),
        ("format", "csv".into()),
        ("precision", "12".into()),
    ];
    let modulation = match scenario {
        Scenario::Modulate => "full:0.1",
        _ => "none",
    };
    d.push(("modulation", modulation.into()));
    if scenario == Scenario::Steady {
        d.push(("grid", format!("{}:{}:101", -PI / 8.0, PI / 8.0)));
    }
    d
}

impl RunConfig {
    /// Resolves flags over an optional config file over defaults.
    pub fn resolve(flags: &[(String, String)], file: Option<&Path>) -> Result<Self, CliError> {
        let mut map = match file {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        for (k, v) in flags {
            check_key(k)?;
            map.insert(k.clone(), v.clone());
        }
        Self::from_map(map)
    }

    pub fn from_map(mut map: BTreeMap<String, String>) -> Result<Self, CliError> {
        for key in map.keys() {
            check_key(key)?;
        }
        let scenario = match map.get("scenario").map(String::as_str) {
            Some("steady") => Scenario::Steady,
            Some("psf") => Scenario::Psf,
            Some("modulate") => Scenario::Modulate,
            Some("figure") => Scenario::Figure,
            Some("sweep") => Scenario::Sweep,
            Some(other) => return Err(bad("scenario", other, "expected steady, psf, modulate, figure or sweep")),
            None => return Err(CliError::config("scenario is required")),
        };
        let tag = match (scenario, map.get("tag")) {
            (Scenario::Figure, Some(t)) => Some(FigureTag::parse(t)?),
            (Scenario::Figure, None) => return Err(CliError::config("figure scenario needs a tag")),
            (_, Some(t)) => {
                FigureTag::parse(t)?;
                return Err(bad("tag", t, "only used with scenario = figure"));
            }
            (_, None) => None,
        };
        if let Some(tag) = tag {
            for (k, v) in tag.preset() {
                map.entry(k.to_string()).or_insert_with(|| v.to_string());
            }
        }
        for (k, v) in scenario_defaults(scenario) {
            map.entry(k.to_string()).or_insert(v);
        }
        let drive = match map["drive"].as_str() {
            "standing" => Drive::Standing,
            "lg" => Drive::Lg,
            "2d-standing" => Drive::Standing2d,
            other => return Err(bad("drive", other, "expected standing, lg or 2d-standing")),
        };
        let default_probe = if drive == Drive::Lg { "gaussian" } else { "uniform" };
        map.entry("probe".into()).or_insert_with(|| default_probe.into());
        let ratio_text = map["ratio"].clone();
        map.entry("reference_ratio".into()).or_insert(ratio_text);

        let get = |k: &str| map[k].as_str();
        let probe = match get("probe") {
            "uniform" => Probe::Uniform,
            "gaussian" => Probe::Gaussian,
            other => return Err(bad("probe", other, "expected uniform or gaussian")),
        };
        let positive_ratio = |k: &str| -> Result<f64, CliError> {
            let r = parse_f64(k, get(k))?;
            if r < 0.0 {
                return Err(bad(k, get(k), "must be >= 0"));
            }
            Ok(r)
        };
        let ratio = positive_ratio("ratio")?;
        let reference_ratio = positive_ratio("reference_ratio")?;
        let ratios = parse_list("ratios", get("ratios"), parse_f64)?;
        if ratios.iter().any(|&r| r <= 0.0) {
            return Err(bad("ratios", get("ratios"), "all ratios must be > 0"));
        }
        let waist = parse_f64("waist", get("waist"))?;
        if waist <= 0.0 {
            return Err(bad("waist", get("waist"), "must be > 0"));
        }
        let rabi = parse_f64("rabi", get("rabi"))?;
        if rabi <= 0.0 {
            return Err(bad("rabi", get("rabi"), "must be > 0"));
        }
        let max_time = parse_f64("max_time", get("max_time"))?;
        if max_time <= 0.0 {
            return Err(bad("max_time", get("max_time"), "must be > 0"));
        }
        let precision = match get("precision") {
            "full" => Precision::Full,
            p => match parse_usize("precision", p)? {
                d @ 1..=17 => Precision::Significant(d),
                _ => return Err(bad("precision", p, "expected 1..=17 or full")),
            },
        };
        let format = match get("format") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(bad("format", other, "expected csv or json")),
        };
        let periods = parse_usize("periods", get("periods"))?;
        let samples = parse_usize("samples", get("samples"))?;
        if periods == 0 || samples < 2 {
            return Err(CliError::config("periods must be >= 1 and samples >= 2"));
        }

        let echo = KEYS
            .iter()
            .filter_map(|&k| map.get(k).map(|v| (k.to_string(), v.clone())))
            .collect();
        Ok(RunConfig {
            scenario,
            tag,
            ratio,
            ratios,
            reference_ratio,
            drive,
            probe,
            waist,
            modulation: parse_modulation(get("modulation"))?,
            grid: map.get("grid").map(|g| parse_grid(g)).transpose()?,
            position: map.get("position").map(|p| parse_f64("position", p)).transpose()?,
            delta: parse_f64("delta", get("delta"))?,
            rabi,
            max_time,
            periods,
            samples,
            harmonics: parse_list("harmonics", get("harmonics"), parse_usize)?,
            format,
            precision,
            out: map.get("out").map(PathBuf::from),
            echo,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::DEFAULT_PRECISION;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_map(map(&[("scenario", "psf")])).unwrap();
        assert_eq!(cfg.ratio, 1000.0);
        assert_eq!(cfg.drive, Drive::Standing);
        assert_eq!(cfg.probe, Probe::Uniform);
        assert_eq!(cfg.modulation, ModulationSpec::None);
        assert_eq!(cfg.reference_ratio, 1000.0);
        assert_eq!(cfg.precision, DEFAULT_PRECISION);
        assert!(cfg.grid.is_none());
    }

    #[test]
    fn presets_yield_to_explicit_keys() {
        let cfg = RunConfig::from_map(map(&[("scenario", "figure"), ("tag", "fig2a")])).unwrap();
        assert_eq!(cfg.ratio, 2000.0);
        assert_eq!(cfg.modulation, ModulationSpec::Full { nu: 0.1 });
        let cfg = RunConfig::from_map(map(&[("scenario", "figure"), ("tag", "fig2a"), ("ratio", "500")])).unwrap();
        assert_eq!(cfg.ratio, 500.0);
        let cfg = RunConfig::from_map(map(&[("scenario", "figure"), ("tag", "fig3")])).unwrap();
        assert_eq!((cfg.drive, cfg.probe), (Drive::Lg, Probe::Gaussian));
    }

    #[test]
    fn error_kinds() {
        let code = |m: &[(&str, &str)]| RunConfig::from_map(map(m)).unwrap_err().exit_code();
        assert_eq!(code(&[]), 2);
        assert_eq!(code(&[("scenario", "dance")]), 2);
        assert_eq!(code(&[("scenario", "figure"), ("tag", "fig9")]), 4);
        assert_eq!(code(&[("scenario", "psf"), ("colour", "red")]), 4);
        assert_eq!(code(&[("scenario", "psf"), ("ratio", "-1")]), 2);
        assert_eq!(code(&[("scenario", "psf"), ("modulation", "pert:0.5,1")]), 2);
        assert_eq!(code(&[("scenario", "psf"), ("grid", "1:0:10")]), 2);
        assert_eq!(code(&[("scenario", "psf"), ("precision", "30")]), 2);
    }

    #[test]
    fn parses_descriptors() {
        assert_eq!(parse_modulation("pert:0.1,2").unwrap(), ModulationSpec::Perturbative { a: 0.1, nu: 2.0 });
        assert_eq!(parse_grid("-1:1:5").unwrap(), Grid { lo: -1.0, hi: 1.0, n: 5 });
        assert!(parse_modulation("full:-1").is_err());
    }

    #[test]
    fn flat_file() {
        let m = parse_config_text("# comment\nscenario = steady\n\nratio=250\n").unwrap();
        assert_eq!(m["scenario"], "steady");
        assert_eq!(m["ratio"], "250");
        assert_eq!(parse_config_text("ratio 250\n").unwrap_err().exit_code(), 2);
        assert_eq!(parse_config_text("hue = 3\n").unwrap_err().exit_code(), 4);
    }

    #[test]
    fn echo_lines_only() {
        let text = "# version = 0.1.0\n# config.scenario = psf\n# config.ratio = 42\nkx,v\n1,2\n";
        let m = parse_config_text(text).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["ratio"], "42");
        let json = r#"{"meta": {"version": "x", "config.scenario": "sweep"}, "columns": {}}"#;
        assert_eq!(parse_config_text(json).unwrap()["scenario"], "sweep");
    }

    #[test]
    fn echo_is_complete_and_ordered() {
        let cfg = RunConfig::from_map(map(&[("scenario", "steady"), ("ratio", "10")])).unwrap();
        let keys: Vec<&str> = cfg.echo.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys[0], "scenario");
        assert!(keys.contains(&"grid") && keys.contains(&"reference_ratio"));
        let again = RunConfig::from_map(cfg.echo.iter().cloned().collect()).unwrap();
        assert_eq!(again, cfg);
    }
}
