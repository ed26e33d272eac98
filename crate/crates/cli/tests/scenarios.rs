use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use cptsim::commands::{run, Output};
use cptsim::config::RunConfig;
use cptsim::table::ResultTable;

fn run_with(pairs: &[(&str, &str)]) -> Output {
    let map: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    run(&RunConfig::from_map(map).unwrap()).unwrap()
}

fn col<'a>(t: &'a ResultTable, name: &str) -> &'a [f64] {
    t.column(name).unwrap_or_else(|| panic!("missing column {name}"))
}

fn widths(out: &Output) -> &ResultTable {
    out.widths.as_ref().expect("widths table")
}

fn one(t: &ResultTable, name: &str) -> f64 {
    col(t, name)[0]
}

#[test]
fn steady_matches_analytic() {
    let out = run_with(&[("scenario", "steady"), ("ratio", "1000")]);
    let t = &out.main;
    assert_eq!(t.names(), ["kx", "rho22_analytic", "rho22_lindblad", "abs_error"]);
    assert_eq!(t.rows(), 101);
    let worst = col(t, "abs_error").iter().cloned().fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    let kx = col(t, "kx");
    assert!((kx[0] + PI / 8.0).abs() < 1e-15 && (kx[100] - PI / 8.0).abs() < 1e-15);
}

#[test]
fn steady_at_antinode() {
    let grid = format!("{FRAC_PI_2}:2:2");
    let out = run_with(&[("scenario", "steady"), ("ratio", "1000"), ("grid", &grid)]);
    let a = col(&out.main, "rho22_analytic")[0];
    let l = col(&out.main, "rho22_lindblad")[0];
    assert!((a - 1.0 / 1001.0).abs() < 1e-15);
    assert!((l - 1.0 / 1001.0).abs() < 1e-6);
}

#[test]
fn steady_without_drive_is_one() {
    let out = run_with(&[("scenario", "steady"), ("ratio", "0"), ("grid", "-1:1:9")]);
    assert!(col(&out.main, "rho22_analytic").iter().all(|&v| v == 1.0));
    assert!(col(&out.main, "rho22_lindblad").iter().all(|&v| (v - 1.0).abs() < 1e-6));
}

#[test]
fn figure_single_standing_wave_peak() {
    let out = run_with(&[("scenario", "figure"), ("tag", "fig1b")]);
    let w = widths(&out);
    let f = one(w, "unmodulated_vs_rayleigh");
    assert!((f - 49.7).abs() < 0.1, "{f}");
    assert_eq!(one(w, "unmodulated_width_x"), one(w, "unmodulated_width_y"));
    assert_eq!(out.main.meta_value("figure"), Some("fig1b"));
}

#[test]
fn figure_full_modulation_bands() {
    for tag in ["fig2a", "fig2b"] {
        let out = run_with(&[("scenario", "figure"), ("tag", tag)]);
        let w = widths(&out);
        let vs_unmod = one(w, "f4_vs_unmodulated");
        let vs_rayleigh = one(w, "f4_vs_rayleigh");
        assert!((17.0..=29.0).contains(&vs_unmod), "{tag}: {vs_unmod}");
        assert!((750.0..=1500.0).contains(&vs_rayleigh), "{tag}: {vs_rayleigh}");
    }
    let out = run_with(&[("scenario", "figure"), ("tag", "fig2a")]);
    assert_eq!(out.main.names(), ["kx", "unmodulated", "f0", "f2", "f4"]);
    assert_eq!(out.main.rows(), 4001);
}

#[test]
fn figure_donut_band() {
    let out = run_with(&[("scenario", "figure"), ("tag", "fig3")]);
    let f = one(widths(&out), "f4_vs_unmodulated");
    assert!((14.0..=26.0).contains(&f), "{f}");
}

#[test]
fn figure_perturbative_factors() {
    for tag in ["fig5a", "fig5b"] {
        let out = run_with(&[("scenario", "figure"), ("tag", tag)]);
        let w = widths(&out);
        let p1 = one(w, "pert1_vs_unmodulated");
        let p2 = one(w, "pert2_vs_unmodulated");
        assert!((2.0..=3.0).contains(&p1) && (2.8..=4.2).contains(&p2), "{tag}: {p1} {p2}");
    }
}

#[test]
fn modulate_recovers_harmonics() {
    let out = run_with(&[("scenario", "modulate"), ("ratio", "1000")]);
    let t = &out.main;
    assert_eq!(t.names(), ["harmonic", "coeff_demodulated", "coeff_closed_or_quadrature", "rel_error"]);
    assert_eq!(t.meta_value("adiabaticity_warning"), Some("false"));
    let h = col(t, "harmonic");
    let err = col(t, "rel_error");
    let got = col(t, "coeff_demodulated");
    for i in 0..t.rows() {
        if (h[i] as usize).is_multiple_of(2) {
            assert!(err[i] < 0.02, "harmonic {}: {}", h[i], err[i]);
        } else {
            assert!(got[i].abs() < 1e-6, "odd harmonic {}: {}", h[i], got[i]);
        }
    }
}

#[test]
fn modulate_at_node() {
    let out = run_with(&[("scenario", "modulate"), ("position", "0"), ("harmonics", "0,2,4")]);
    let got = col(&out.main, "coeff_demodulated");
    assert!((got[0] - 1.0).abs() < 1e-9);
    assert!(got[1].abs() < 1e-9 && got[2].abs() < 1e-9);
}

#[test]
fn modulate_flags_fast_modulation() {
    let out = run_with(&[
        ("scenario", "modulate"),
        ("modulation", "full:2"),
        ("harmonics", "0"),
        ("periods", "1"),
    ]);
    assert_eq!(out.main.meta_value("adiabaticity_warning"), Some("true"));
}

#[test]
fn sweep_widths() {
    let out = run_with(&[("scenario", "sweep")]);
    let t = &out.main;
    assert_eq!(t.meta_value("monotone_decreasing"), Some("true"));
    let u = col(t, "unmodulated_width");
    for (w, r) in u.iter().zip([100.0f64, 1000.0, 1e4]) {
        assert!((w - 2.0 * (1.0 / r.sqrt()).asin()).abs() < 1e-12);
    }
    assert!((u[0] - 0.2003).abs() < 1e-4 && (u[1] - 0.06326).abs() < 1e-5 && (u[2] - 0.02000).abs() < 1e-5);
    for &q in col(t, "coupled_over_unmodulated") {
        assert!((q - 0.644).abs() < 2e-3, "{q}");
    }
    for name in t.names().iter().filter(|n| n.ends_with("_width")) {
        assert!(col(t, name).windows(2).all(|p| p[1] < p[0]), "{name}");
    }
}

#[test]
fn sweep_sorts_ratios() {
    let out = run_with(&[("scenario", "sweep"), ("ratios", "5000,200,1000")]);
    assert_eq!(col(&out.main, "ratio"), [200.0, 1000.0, 5000.0]);
}

#[test]
fn psf_custom_grid() {
    let out = run_with(&[("scenario", "psf"), ("ratio", "400"), ("grid", "-0.5:0.5:2001")]);
    assert_eq!(out.main.names(), ["kx", "unmodulated", "coupled"]);
    let w = one(widths(&out), "unmodulated_width");
    assert!((w - 2.0 * (0.05f64).asin()).abs() < 1e-12);
}

#[test]
fn psf_rejects_unsupported_combinations() {
    let map = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    };
    let cfg = RunConfig::from_map(map(&[("scenario", "steady"), ("drive", "2d-standing")])).unwrap();
    assert_eq!(run(&cfg).err().unwrap().exit_code(), 2);
    let cfg = RunConfig::from_map(map(&[("scenario", "modulate"), ("modulation", "none")])).unwrap();
    assert_eq!(run(&cfg).err().unwrap().exit_code(), 2);
    let cfg = RunConfig::from_map(map(&[("scenario", "psf"), ("grid", "0.1:0.5:101")])).unwrap();
    assert_eq!(run(&cfg).err().unwrap().exit_code(), 2);
}
