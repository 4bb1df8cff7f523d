//! Sweep execution: point expansion, per-point solving, deterministic
//! output. Points are independent tasks; results are gathered and written in
//! axis order regardless of worker scheduling, so identical configs produce
//! byte-identical CSV files (modulo the timestamped header line).

use crate::config::{
    AxisValue, ConfigError, ModelKind, PointSpec, RunConfig, SeedMode,
};
use lattice_laser::collective::{collective_liouvillian, collective_observables, DickeSpace};
use lattice_laser::model::{liouvillian, ModelError, Superoperator};
use lattice_laser::observables::{observable_set, ObservableSet};
use lattice_laser::operators::HilbertSpace;
use lattice_laser::solvers::{
    correlation_adag_a, steady_state_adaptive, CorrelationOptions, SolveInfo,
    SolverError, SolverOptions,
};
use lattice_laser::spectrum::{
    lorentz_fit, spectrum_fft, spectrum_resolvent, LorentzFit, SpectrumError, SpectrumResult,
};
use lattice_laser::states::DensityMatrix;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RowFlags {
    pub truncation_warning: bool,
    pub fit_unreliable: bool,
    pub multi_peak: bool,
    /// g2(0) < 1 at this point.
    pub antibunching: bool,
    /// Correlation window hit its cap before decaying.
    pub window_warning: bool,
    /// The spectrum used a one-photon/thermal reference seed instead of the
    /// steady state (empty-cavity line).
    pub seeded_reference: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    /// Largest relative FFT/resolvent deviation on the prominent grid.
    pub max_rel_deviation: f64,
    /// Relative difference of the two fitted linewidths.
    pub linewidth_rel_deviation: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultRow {
    pub index: usize,
    /// Axis name/value echo in declaration order.
    pub axes: Vec<(String, String)>,
    pub spec: PointSpec,
    pub fock_cutoff_used: Option<usize>,
    pub n: Option<f64>,
    pub inversion: Option<f64>,
    pub g2: Option<f64>,
    pub linewidth: Option<f64>,
    /// Fitted line center relative to the bare atomic frequency.
    pub shift: Option<f64>,
    /// Fitted line center relative to the cavity frequency.
    pub shift_vs_cavity: Option<f64>,
    /// Atom-laser detuning in units of the single-atom linewidth.
    pub delta_a_over_gamma: Option<f64>,
    pub fit_residual: Option<f64>,
    pub flags: RowFlags,
    pub solve: Option<SolveInfo>,
    pub cross_check: Option<CrossCheck>,
    pub error: Option<String>,
    #[serde(skip)]
    pub spectrum: Option<SpectrumResult>,
}

impl ResultRow {
    fn empty(index: usize, axes: Vec<(String, String)>, spec: PointSpec) -> Self {
        ResultRow {
            index,
            axes,
            spec,
            fock_cutoff_used: None,
            n: None,
            inversion: None,
            g2: None,
            linewidth: None,
            shift: None,
            shift_vs_cavity: None,
            delta_a_over_gamma: None,
            fit_residual: None,
            flags: RowFlags::default(),
            solve: None,
            cross_check: None,
            error: None,
            spectrum: None,
        }
    }
}

/// Cartesian product of the sweep axes in declaration order (first axis
/// outermost). No axes means a single point.
pub fn expand_points(cfg: &RunConfig) -> Result<Vec<(Vec<(String, String)>, PointSpec)>, ConfigError> {
    let base = PointSpec::base(cfg);
    let axes = &cfg.sweep.axes;
    let mut out = Vec::new();
    match axes.len() {
        0 => out.push((Vec::new(), base)),
        1 => {
            for v in &axes[0].values {
                let mut spec = base.clone();
                spec.apply_axis(&axes[0].name, v)?;
                out.push((vec![(axes[0].name.clone(), v.to_string())], spec));
            }
        }
        2 => {
            for v0 in &axes[0].values {
                for v1 in &axes[1].values {
                    let mut spec = base.clone();
                    spec.apply_axis(&axes[0].name, v0)?;
                    spec.apply_axis(&axes[1].name, v1)?;
                    out.push((
                        vec![
                            (axes[0].name.clone(), v0.to_string()),
                            (axes[1].name.clone(), v1.to_string()),
                        ],
                        spec,
                    ));
                }
            }
        }
        n => return Err(ConfigError::TooManyAxes(n)),
    }
    Ok(out)
}

struct Solved {
    l: Superoperator,
    rho: DensityMatrix,
    info: SolveInfo,
    obs: ObservableSet,
}

fn solve_point(cfg: &RunConfig, spec: &PointSpec) -> Result<Solved, RunError> {
    let params = spec.model_params()?;
    let opts: SolverOptions = cfg.solver.to_options();
    let fock0 = spec.fock_cutoff;
    let cap = if cfg.hilbert.auto_extend {
        cfg.hilbert.max_fock_cutoff.max(fock0)
    } else {
        fock0
    };
    // an empty reduced model is just the empty cavity
    let use_full = spec.model_kind == ModelKind::Full || spec.n_atoms == 0;
    if use_full {
        let (l, ss) = steady_state_adaptive(
            |fock| liouvillian(&params, &HilbertSpace::new(spec.n_atoms, fock)),
            fock0,
            cap,
            &opts,
        )?;
        let space = HilbertSpace::new(spec.n_atoms, l.info().fock_cutoff());
        let obs = observable_set(&ss.rho, &space);
        Ok(Solved {
            l,
            rho: ss.rho,
            info: ss.info,
            obs,
        })
    } else {
        let (l, ss) = steady_state_adaptive(
            |fock| collective_liouvillian(&params, &DickeSpace::new(spec.n_atoms, fock)),
            fock0,
            cap,
            &opts,
        )?;
        let space = DickeSpace::new(spec.n_atoms, l.info().fock_cutoff());
        let obs = collective_observables(&ss.rho, &space);
        Ok(Solved {
            l,
            rho: ss.rho,
            info: ss.info,
            obs,
        })
    }
}

fn correlation_state(
    cfg: &RunConfig,
    solved: &Solved,
) -> (DensityMatrix, bool) {
    let info = *solved.l.info();
    match cfg.spectrum.seed_mode {
        SeedMode::Steady => (solved.rho.clone(), false),
        SeedMode::FockOne => (DensityMatrix::fock(info, 1.min(info.n_fock - 1)), true),
        SeedMode::Thermal => (DensityMatrix::thermal(info, cfg.spectrum.thermal_nbar), true),
        SeedMode::Auto => {
            if solved.obs.photon_number < 1e-9 {
                (DensityMatrix::fock(info, 1.min(info.n_fock - 1)), true)
            } else {
                (solved.rho.clone(), false)
            }
        }
    }
}

fn fill_fit(row: &mut ResultRow, fit: &LorentzFit, spec: &PointSpec) {
    row.linewidth = Some(fit.fwhm);
    row.shift = Some(fit.center);
    row.shift_vs_cavity = Some(fit.center - spec.detuning);
    row.delta_a_over_gamma = if spec.gamma0 > 0.0 {
        Some(fit.atom_laser_detuning() / spec.gamma0)
    } else {
        None
    };
    row.fit_residual = Some(fit.residual);
    row.flags.fit_unreliable = fit.unreliable;
    row.flags.multi_peak = fit.multi_peak;
}

/// Run one sweep point; failures are captured in the row.
pub fn run_point(
    cfg: &RunConfig,
    index: usize,
    axes: Vec<(String, String)>,
    spec: PointSpec,
) -> ResultRow {
    run_point_with_state(cfg, index, axes, spec).0
}

/// Same as [`run_point`], also returning the steady state (for checkpoints).
pub fn run_point_with_state(
    cfg: &RunConfig,
    index: usize,
    axes: Vec<(String, String)>,
    spec: PointSpec,
) -> (ResultRow, Option<DensityMatrix>) {
    let mut row = ResultRow::empty(index, axes, spec.clone());
    let solved = match solve_point(cfg, &spec) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return (row, None);
        }
    };
    row.fock_cutoff_used = Some(solved.l.info().fock_cutoff());
    row.flags.truncation_warning = !solved.info.truncation_ok;
    row.n = Some(solved.obs.photon_number);
    row.inversion = solved.obs.inversion;
    row.g2 = solved.obs.g2_zero;
    row.flags.antibunching = solved.obs.antibunching();
    row.solve = Some(solved.info.clone());

    if cfg.needs_spectrum() {
        let (state, seeded) = correlation_state(cfg, &solved);
        row.flags.seeded_reference = seeded;
        let corr_opts = CorrelationOptions {
            tau_step: cfg.spectrum.tau_step,
            initial_span: cfg.spectrum.initial_span,
            max_span: cfg.spectrum.max_span,
            rtol: cfg.solver.rtol,
            ..CorrelationOptions::default()
        };
        let outcome = (|| -> Result<(), RunError> {
            let corr = correlation_adag_a(&solved.l, &state, &corr_opts)?;
            row.flags.window_warning = !corr.decayed;
            let spec_fft = spectrum_fft(&corr)?;
            let fit = lorentz_fit(&spec_fft)?;
            fill_fit(&mut row, &fit, &spec);
            if cfg.spectrum.cross_check {
                row.cross_check = Some(cross_check(&solved.l, &state, &spec_fft, &fit)?);
            }
            row.spectrum = Some(spec_fft);
            Ok(())
        })();
        if let Err(e) = outcome {
            row.error = Some(e.to_string());
        }
    }
    (row, Some(solved.rho))
}

fn cross_check(
    l: &Superoperator,
    state: &DensityMatrix,
    spec_fft: &SpectrumResult,
    fit: &LorentzFit,
) -> Result<CrossCheck, RunError> {
    let (_, peak) = spec_fft.peak();
    let prominent: Vec<usize> = (0..spec_fft.omega.len())
        .filter(|&i| spec_fft.values[i] > 0.01 * peak)
        .collect();
    let stride = (prominent.len() / 100).max(1);
    let sel: Vec<usize> = prominent.into_iter().step_by(stride).collect();
    let omegas: Vec<f64> = sel.iter().map(|&i| spec_fft.omega[i]).collect();
    let res = spectrum_resolvent(l, state, &omegas)?;
    let mut max_dev = 0.0f64;
    for (k, &i) in sel.iter().enumerate() {
        let dev = (res.values[k] - spec_fft.values[i]).abs() / peak.max(spec_fft.values[i]);
        max_dev = max_dev.max(dev);
    }
    let lw_dev = lorentz_fit(&res)
        .ok()
        .map(|f2| (f2.fwhm - fit.fwhm).abs() / fit.fwhm);
    Ok(CrossCheck {
        max_rel_deviation: max_dev,
        linewidth_rel_deviation: lw_dev,
    })
}

pub struct EngineOutput {
    pub rows: Vec<ResultRow>,
    pub n_failed: usize,
}

/// Run all points on a worker pool, preserving axis order in the output.
pub fn run_sweep(cfg: &RunConfig, workers: usize) -> Result<EngineOutput, RunError> {
    let points = expand_points(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("worker pool: {e}")))?;
    let rows: Vec<ResultRow> = pool.install(|| {
        use rayon::prelude::*;
        let mut rows: Vec<ResultRow> = points
            .into_par_iter()
            .enumerate()
            .map(|(i, (axes, spec))| run_point(cfg, i, axes, spec))
            .collect();
        rows.sort_by_key(|r| r.index);
        rows
    });
    let n_failed = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(EngineOutput { rows, n_failed })
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Fixed column order: sweep axes, parameter echo, observables, fit fields,
/// flags, error.
pub fn write_csv<W: Write>(mut w: W, cfg: &RunConfig, rows: &[ResultRow]) -> std::io::Result<()> {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    writeln!(w, "# lattice-laser v{VERSION} generated_unix={now}")?;
    if let Some(note) = &cfg.note {
        writeln!(w, "# note: {note}")?;
    }
    let axis_names: Vec<String> = cfg.sweep.axes.iter().map(|a| a.name.clone()).collect();
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(axis_names.iter().cloned());
    header.extend(
        [
            "model_kind",
            "family",
            "n_atoms",
            "lattice_const",
            "g",
            "kappa",
            "gamma0",
            "pump_rate",
            "detuning",
            "decay_mode",
            "pump_mode",
            "fock_cutoff_used",
            "n",
            "inversion",
            "g2",
            "linewidth",
            "shift",
            "shift_vs_cavity",
            "delta_a_over_gamma",
            "fit_residual",
            "truncation_warning",
            "fit_unreliable",
            "multi_peak",
            "antibunching",
            "window_warning",
            "seeded_reference",
            "error",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let s = &row.spec;
        let mut cells: Vec<String> = vec![row.index.to_string()];
        for name in &axis_names {
            let v = row
                .axes
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .unwrap_or_default();
            cells.push(csv_escape(&v));
        }
        cells.extend([
            format!("{:?}", s.model_kind).to_lowercase(),
            format!("{:?}", s.family).to_lowercase(),
            s.n_atoms.to_string(),
            format!("{}", s.lattice_const),
            format!("{}", s.g),
            format!("{}", s.kappa),
            format!("{}", s.gamma0),
            format!("{}", s.pump_rate),
            format!("{}", s.detuning),
            format!("{:?}", s.decay_mode),
            format!("{:?}", s.pump_mode),
            row.fock_cutoff_used.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(row.n),
            fmt_opt(row.inversion),
            fmt_opt(row.g2),
            fmt_opt(row.linewidth),
            fmt_opt(row.shift),
            fmt_opt(row.shift_vs_cavity),
            fmt_opt(row.delta_a_over_gamma),
            fmt_opt(row.fit_residual),
            (row.flags.truncation_warning as u8).to_string(),
            (row.flags.fit_unreliable as u8).to_string(),
            (row.flags.multi_peak as u8).to_string(),
            (row.flags.antibunching as u8).to_string(),
            (row.flags.window_warning as u8).to_string(),
            (row.flags.seeded_reference as u8).to_string(),
            csv_escape(row.error.as_deref().unwrap_or("")),
        ]);
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(mut w: W, spec: &SpectrumResult) -> std::io::Result<()> {
    writeln!(w, "omega_over_kappa,S")?;
    for (omega, s) in spec.omega.iter().zip(&spec.values) {
        writeln!(w, "{omega},{s}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'static str,
    generated_unix: u64,
    config: &'a RunConfig,
    n_points: usize,
    n_failed: usize,
    rows: &'a [ResultRow],
}

pub fn write_summary_json<W: Write>(
    w: W,
    cfg: &RunConfig,
    out: &EngineOutput,
) -> Result<(), RunError> {
    let summary = Summary {
        version: VERSION,
        generated_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config: cfg,
        n_points: out.rows.len(),
        n_failed: out.n_failed,
        rows: &out.rows,
    };
    serde_json::to_writer_pretty(w, &summary)
        .map_err(|e| RunError::Io(std::io::Error::other(e)))?;
    Ok(())
}

/// Write sweep outputs (CSV, JSON summary, optional per-point spectra).
pub fn write_outputs(cfg: &RunConfig, out: &EngineOutput, dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    let csv = std::fs::File::create(dir.join("sweep.csv"))?;
    write_csv(std::io::BufWriter::new(csv), cfg, &out.rows)?;
    let json = std::fs::File::create(dir.join("summary.json"))?;
    write_summary_json(std::io::BufWriter::new(json), cfg, out)?;
    if cfg.output.write_spectra {
        let specdir = dir.join("spectra");
        std::fs::create_dir_all(&specdir)?;
        for row in &out.rows {
            if let Some(spec) = &row.spectrum {
                let f = std::fs::File::create(specdir.join(format!("point_{:04}.csv", row.index)))?;
                write_spectrum_csv(std::io::BufWriter::new(f), spec)?;
            }
        }
    }
    Ok(())
}

/// Static validation report: dimensions, solve sizes, memory estimate,
/// recommendations. Never solves anything.
pub fn validate_report(cfg: &RunConfig) -> Result<String, RunError> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let points = expand_points(cfg)?;
    let spec = &points[0].1;
    let n = spec.n_atoms;
    let nf = spec.fock_cutoff + 1;
    let dim = match cfg.model_kind {
        ModelKind::Full => (1usize << n) * nf,
        ModelKind::Collective => (n + 1) * nf,
    };
    let side = dim * dim;
    let sectors = 2 * (n + spec.fock_cutoff) + 1;
    let balanced = side / sectors.max(1);
    writeln!(
        s,
        "model: {:?}, {} atoms ({:?}, a = {}), fock cutoff {} (auto-extend: {})",
        cfg.model_kind, n, spec.family, spec.lattice_const, spec.fock_cutoff, cfg.hilbert.auto_extend
    )
    .ok();
    writeln!(s, "hilbert dimension: {dim}").ok();
    writeln!(s, "superoperator side: {side}").ok();
    writeln!(s, "balanced-sector solve size: ~{balanced}").ok();
    writeln!(
        s,
        "sweep: {} axes, {} points; outputs: {}",
        cfg.sweep.axes.len(),
        points.len(),
        cfg.sweep.outputs.join(", ")
    )
    .ok();
    // ~40 entries per superoperator row and a generous LU fill allowance
    let mem_mb = (balanced as f64 * 40.0 * 24.0 * 10.0 / 1e6).ceil();
    writeln!(s, "rough direct-solve memory estimate: {mem_mb} MB").ok();
    let recommendation = if side <= 250_000 {
        "direct sparse solver"
    } else {
        "krylov_nullspace solver (superoperator side above 250k)"
    };
    writeln!(s, "recommendation: {recommendation}").ok();
    let mut warnings: Vec<String> = Vec::new();
    if cfg.model_kind == ModelKind::Full && dim > 2000 {
        warnings.push(format!(
            "full model dimension {dim} is beyond desk scale; expect this to be intractable"
        ));
    }
    if cfg.needs_spectrum() && points.len() > 100 {
        warnings.push(format!(
            "{} spectra requested; consider trimming the grid",
            points.len()
        ));
    }
    if warnings.is_empty() {
        writeln!(s, "warnings: (none)").ok();
    } else {
        for wline in warnings {
            writeln!(s, "warning: {wline}").ok();
        }
    }
    Ok(s)
}

/// Single steady-state run (no sweep axes).
pub fn run_steady(cfg: &RunConfig) -> Result<ResultRow, RunError> {
    let mut cfg = cfg.clone();
    cfg.sweep.axes.clear();
    cfg.sweep.outputs = vec!["n".into(), "inversion".into(), "g2".into()];
    let row = run_point(&cfg, 0, Vec::new(), PointSpec::base(&cfg));
    Ok(row)
}

/// Single spectrum run; returns the row (with fit fields) and the spectrum.
pub fn run_spectrum(cfg: &RunConfig) -> Result<ResultRow, RunError> {
    let mut cfg = cfg.clone();
    cfg.sweep.axes.clear();
    if !cfg.needs_spectrum() {
        cfg.sweep.outputs.push("spectrum".into());
    }
    let row = run_point(&cfg, 0, Vec::new(), PointSpec::base(&cfg));
    Ok(row)
}

/// Keep at most `max_points` evenly spaced values per axis (smoke runs).
pub fn trim_axes(cfg: &mut RunConfig, max_points: usize) {
    assert!(max_points >= 1);
    for axis in &mut cfg.sweep.axes {
        if axis.values.len() > max_points {
            let n = axis.values.len();
            let picked: Vec<AxisValue> = (0..max_points)
                .map(|k| axis.values[k * (n - 1) / (max_points - 1).max(1)].clone())
                .collect();
            axis.values = picked;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"
[model]
gamma0 = 0.3
pump_rate = 1.0
g = 0.8

[geometry]
family = "chain"
n_atoms = 1
lattice_const = 1.0

[hilbert]
fock_cutoff = 3

[[sweep.axes]]
name = "pump_rate"
values = [0.5, 1.5]
"#;

    #[test]
    fn sweep_runs_and_rows_are_ordered() {
        let cfg = RunConfig::from_str(TINY).unwrap();
        let out = run_sweep(&cfg, 2).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.n_failed, 0);
        assert_eq!(out.rows[0].axes[0].1, "0.5");
        assert_eq!(out.rows[1].axes[0].1, "1.5");
        // higher pump, higher excited population
        assert!(out.rows[1].inversion.unwrap() > out.rows[0].inversion.unwrap());
    }

    #[test]
    fn csv_is_deterministic_across_worker_counts() {
        let cfg = RunConfig::from_str(TINY).unwrap();
        let render = |workers| {
            let out = run_sweep(&cfg, workers).unwrap();
            let mut buf = Vec::new();
            write_csv(&mut buf, &cfg, &out.rows).unwrap();
            let text = String::from_utf8(buf).unwrap();
            text.lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(render(1), render(2));
    }

    #[test]
    fn failed_point_is_isolated() {
        let mut cfg = RunConfig::from_str(TINY).unwrap();
        // a degenerate point: no pump, no decay, no coupling
        cfg.model.g = 0.0;
        cfg.model.gamma0 = 0.0;
        cfg.sweep.axes[0].values = vec![AxisValue::Number(0.0), AxisValue::Number(1.0)];
        let out = run_sweep(&cfg, 1).unwrap();
        assert_eq!(out.n_failed, 1);
        assert!(out.rows[0].error.is_some());
        assert!(out.rows[1].error.is_none());
    }

    #[test]
    fn trim_axes_keeps_endpoints() {
        let mut cfg = RunConfig::from_str(TINY).unwrap();
        cfg.sweep.axes[0].values = (0..9).map(|k| AxisValue::Number(k as f64)).collect();
        trim_axes(&mut cfg, 3);
        let vals: Vec<String> = cfg.sweep.axes[0].values.iter().map(|v| v.to_string()).collect();
        assert_eq!(vals, vec!["0", "4", "8"]);
    }
}
