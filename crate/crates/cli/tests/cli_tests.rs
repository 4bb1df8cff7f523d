//! End-to-end runs of the installed binary: exit codes, file outputs,
//! determinism, preset smoke tests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lattice-laser"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SINGLE_ATOM: &str = r#"
[model]
g = 0.8
gamma0 = 0.3
pump_rate = 1.2

[geometry]
family = "chain"
n_atoms = 1
lattice_const = 1.0

[hilbert]
fock_cutoff = 4
"#;

const EMPTY_CAVITY: &str = r#"
[model]
g = 0.0
gamma0 = 0.0
pump_rate = 0.0
detuning = 0.3

[geometry]
family = "custom"
n_atoms = 0
positions = []

[hilbert]
fock_cutoff = 3
"#;

fn run_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn validate_reports_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SINGLE_ATOM);
    let out = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    run_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("hilbert dimension: 10"), "{text}");
    assert!(text.contains("superoperator side: 100"), "{text}");
    assert!(text.contains("direct sparse solver"), "{text}");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "[model]\ngamma0 = 0.1\npump_rate = 1.0\nbogus_field = 3\n[geometry]\nfamily = \"chain\"\nn_atoms = 1\n",
    );
    let out = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus_field"), "{err}");
}

#[test]
fn steady_writes_json_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SINGLE_ATOM);
    let outdir = dir.path().join("res");
    let ckpt = dir.path().join("rho.bin");
    let out = bin()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&outdir)
        .arg("--checkpoint")
        .arg(&ckpt)
        .output()
        .unwrap();
    run_ok(&out);
    assert!(outdir.join("steady.json").exists());
    let rho = lattice_laser::solvers::load_density(&ckpt).unwrap();
    assert!((rho.trace().re - 1.0).abs() < 1e-10);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("steady.json")).unwrap())
            .unwrap();
    assert!(json["n"].as_f64().unwrap() > 0.0);
}

#[test]
fn spectrum_cross_check_on_empty_cavity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", EMPTY_CAVITY);
    let outdir = dir.path().join("res");
    let out = bin()
        .args(["spectrum", "--cross-check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&outdir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("linewidth"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("spectrum.json")).unwrap())
            .unwrap();
    let fwhm = json["linewidth"].as_f64().unwrap();
    assert!((fwhm - 2.0).abs() / 2.0 < 0.01, "fwhm {fwhm}");
    // seeded reference line, centered at the cavity detuning
    assert!(json["flags"]["seeded_reference"].as_bool().unwrap());
    let shift = json["shift"].as_f64().unwrap();
    assert!((shift - 0.3).abs() < 5e-3, "shift {shift}");
    let dev = json["cross_check"]["max_rel_deviation"].as_f64().unwrap();
    assert!(dev < 0.01, "cross-check deviation {dev}");
    let lw_dev = json["cross_check"]["linewidth_rel_deviation"]
        .as_f64()
        .unwrap();
    assert!(lw_dev < 0.02, "linewidth deviation {lw_dev}");
    assert!(outdir.join("spectrum.csv").exists());
}

#[test]
fn sweep_outputs_are_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = format!(
        "{SINGLE_ATOM}\n[[sweep.axes]]\nname = \"pump_rate\"\nvalues = [0.4, 0.9, 1.7]\n"
    );
    let cfg = write_config(dir.path(), "c.toml", &cfg_text);
    let read_csv = |outdir: &Path| -> String {
        std::fs::read_to_string(outdir.join("sweep.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let o1 = dir.path().join("w1");
    let o2 = dir.path().join("w2");
    for (outdir, workers) in [(&o1, "1"), (&o2, "2")] {
        let out = bin()
            .args(["sweep", "--workers", workers, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(outdir)
            .output()
            .unwrap();
        run_ok(&out);
    }
    assert_eq!(read_csv(&o1), read_csv(&o2));
    // summary mirrors the rows
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(o1.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["n_points"], 3);
    assert_eq!(json["n_failed"], 0);
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn partial_failure_exits_three_and_keeps_good_rows() {
    let dir = tempfile::tempdir().unwrap();
    // pump_rate = 0 with g = 0 and gamma = 0 has a degenerate kernel
    let text = r#"
[model]
g = 0.0
gamma0 = 0.0
pump_rate = 1.0

[geometry]
family = "chain"
n_atoms = 1
lattice_const = 1.0

[hilbert]
fock_cutoff = 1

[[sweep.axes]]
name = "pump_rate"
values = [0.0, 1.0]
"#;
    let cfg = write_config(dir.path(), "c.toml", text);
    let outdir = dir.path().join("res");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&outdir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let csv = std::fs::read_to_string(outdir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3); // header + 2 rows
    assert!(rows[1].contains("degenerate") || rows[1].contains("converge"));
}

#[test]
fn preset_list_and_smoke_runs() {
    let out = bin().args(["preset", "list"]).output().unwrap();
    run_ok(&out);
    let names = String::from_utf8_lossy(&out.stdout);
    for expected in ["fig2a", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8a"] {
        assert!(names.contains(expected), "{names}");
    }
    let show = bin()
        .args(["preset", "fig4", "--show-config"])
        .output()
        .unwrap();
    run_ok(&show);
    assert!(String::from_utf8_lossy(&show.stdout).contains("[geometry]"));

    // smoke-run two cheap presets at drastically reduced resolution
    let dir = tempfile::tempdir().unwrap();
    for preset in ["fig2a", "fig5"] {
        let outdir = dir.path().join(preset);
        let out = bin()
            .args(["preset", preset, "--max-axis-points", "2", "--workers", "2", "--out"])
            .arg(&outdir)
            .output()
            .unwrap();
        run_ok(&out);
        let csv = std::fs::read_to_string(outdir.join("sweep.csv")).unwrap();
        let n_rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(n_rows, 4, "preset {preset} rows");
        // the assumptions note is echoed in the header
        assert!(csv.contains("# note:"), "preset {preset} lost its note");
    }
}

#[test]
fn fig3_preset_smoke_includes_empty_cavity_reference() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("fig3");
    let out = bin()
        .args(["preset", "fig3", "--max-axis-points", "2", "--out"])
        .arg(&outdir)
        .output()
        .unwrap();
    run_ok(&out);
    let csv = std::fs::read_to_string(outdir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    // N = 0 and N = 10 after trimming
    assert_eq!(rows.len(), 3);
    let header: Vec<&str> = rows[0].split(',').collect();
    let lw_col = header.iter().position(|&h| h == "linewidth").unwrap();
    let seeded_col = header.iter().position(|&h| h == "seeded_reference").unwrap();
    let first: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(first[seeded_col], "1", "N=0 must use the seeded reference");
    let fwhm: f64 = first[lw_col].parse().unwrap();
    assert!((fwhm - 2.0).abs() / 2.0 < 0.01, "empty-cavity fwhm {fwhm}");
    // per-point spectra written
    assert!(outdir.join("spectra").join("point_0000.csv").exists());
}

#[test]
fn total_solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[model]
g = 0.0
gamma0 = 0.0
pump_rate = 0.0

[geometry]
family = "chain"
n_atoms = 1
lattice_const = 1.0

[hilbert]
fock_cutoff = 1
"#;
    let cfg = write_config(dir.path(), "c.toml", text);
    let out = bin()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("res"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("degenerate"), "{err}");
}

#[test]
fn selftest_passes() {
    let out = bin().args(["selftest", "--seed", "7"]).output().unwrap();
    run_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all checks passed"), "{text}");
}
