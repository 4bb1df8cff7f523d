use clap::{Parser, Subcommand};
use lattice_laser_cli::config::{PointSpec, RunConfig};
use lattice_laser_cli::presets;
use lattice_laser_cli::run::{
    run_point_with_state, run_spectrum, run_sweep, trim_axes, validate_report, write_outputs,
    write_spectrum_csv, EngineOutput, RunError,
};
use lattice_laser_cli::selftest;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lattice-laser",
    version,
    about = "Steady states, photon statistics and spectra of a superradiant lattice laser"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a config and report dimensions, memory and recommendations.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve a single steady state and print its observables.
    Steady {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also dump the density matrix for reuse.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compute the output spectrum of a single operating point.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Recompute the line with the frequency-domain solver and report
        /// the agreement.
        #[arg(long)]
        cross_check: bool,
    },
    /// Run the configured parameter sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Trim every axis to at most this many values (smoke runs).
        #[arg(long)]
        max_axis_points: Option<usize>,
    },
    /// Run a bundled study preset ("list" prints the available names).
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Print the preset config instead of running it.
        #[arg(long)]
        show_config: bool,
        #[arg(long)]
        max_axis_points: Option<usize>,
    },
    /// Run the built-in consistency battery.
    Selftest {
        #[arg(long, default_value_t = 0xc0ffee)]
        seed: u64,
    },
}

fn classify(e: &RunError) -> u8 {
    match e {
        RunError::Config(_) | RunError::Model(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn load_config(path: &Path) -> Result<RunConfig, u8> {
    RunConfig::from_path(path).map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_CONFIG
    })
}

fn finish_sweep(cfg: &RunConfig, out_dir: &Path, engine: EngineOutput) -> u8 {
    if let Err(e) = write_outputs(cfg, &engine, out_dir) {
        eprintln!("output error: {e}");
        return EXIT_SOLVER;
    }
    let total = engine.rows.len();
    println!(
        "{} points, {} failed; results in {}",
        total,
        engine.n_failed,
        out_dir.display()
    );
    if engine.n_failed == 0 {
        EXIT_OK
    } else if engine.n_failed == total {
        EXIT_SOLVER
    } else {
        EXIT_PARTIAL
    }
}

fn cmd_steady(config: PathBuf, out: PathBuf, checkpoint: Option<PathBuf>) -> u8 {
    let mut cfg = match load_config(&config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    cfg.sweep.axes.clear();
    let (row, rho) = run_point_with_state(&cfg, 0, Vec::new(), PointSpec::base(&cfg));
    if let Some(err) = &row.error {
        eprintln!("solver error: {err}");
        return EXIT_SOLVER;
    }
    println!(
        "n = {}, inversion = {}, g2 = {} (fock cutoff {})",
        row.n.unwrap_or(f64::NAN),
        row.inversion.map_or("n/a".into(), |v| v.to_string()),
        row.g2.map_or("undefined".into(), |v| v.to_string()),
        row.fock_cutoff_used.unwrap_or(0),
    );
    if let Some(info) = &row.solve {
        println!(
            "residual = {:.3e} (scale {:.3e}), truncation ok: {}",
            info.residual, info.scale, info.truncation_ok
        );
    }
    let write = (|| -> Result<(), RunError> {
        std::fs::create_dir_all(&out)?;
        let f = std::fs::File::create(out.join("steady.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), &row)
            .map_err(|e| RunError::Io(std::io::Error::other(e)))?;
        if let (Some(path), Some(rho)) = (&checkpoint, &rho) {
            lattice_laser::solvers::save_density(path, rho)?;
        }
        Ok(())
    })();
    match write {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("output error: {e}");
            EXIT_SOLVER
        }
    }
}

fn cmd_spectrum(config: PathBuf, out: PathBuf, cross_check: bool) -> u8 {
    let mut cfg = match load_config(&config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    cfg.spectrum.cross_check |= cross_check;
    let row = match run_spectrum(&cfg) {
        Ok(row) => row,
        Err(e) => {
            eprintln!("error: {e}");
            return classify(&e);
        }
    };
    if let Some(err) = &row.error {
        eprintln!("solver error: {err}");
        return EXIT_SOLVER;
    }
    println!(
        "linewidth (FWHM) = {} kappa, center shift = {} kappa, fit residual = {}",
        row.linewidth.unwrap_or(f64::NAN),
        row.shift.unwrap_or(f64::NAN),
        row.fit_residual.unwrap_or(f64::NAN)
    );
    if let Some(cc) = &row.cross_check {
        println!(
            "cross-check: max spectral deviation {:.3e}, linewidth deviation {}",
            cc.max_rel_deviation,
            cc.linewidth_rel_deviation
                .map_or("n/a".into(), |v| format!("{v:.3e}"))
        );
    }
    let write = (|| -> Result<(), RunError> {
        std::fs::create_dir_all(&out)?;
        if let Some(spec) = &row.spectrum {
            let f = std::fs::File::create(out.join("spectrum.csv"))?;
            write_spectrum_csv(std::io::BufWriter::new(f), spec)?;
        }
        let f = std::fs::File::create(out.join("spectrum.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), &row)
            .map_err(|e| RunError::Io(std::io::Error::other(e)))?;
        Ok(())
    })();
    match write {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("output error: {e}");
            EXIT_SOLVER
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Validate { config } => match load_config(&config) {
            Err(code) => code,
            Ok(cfg) => match validate_report(&cfg) {
                Ok(report) => {
                    print!("{report}");
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("config error: {e}");
                    EXIT_CONFIG
                }
            },
        },
        Cmd::Steady {
            config,
            out,
            checkpoint,
        } => cmd_steady(config, out, checkpoint),
        Cmd::Spectrum {
            config,
            out,
            cross_check,
        } => cmd_spectrum(config, out, cross_check),
        Cmd::Sweep {
            config,
            out,
            workers,
            max_axis_points,
        } => match load_config(&config) {
            Err(code) => code,
            Ok(mut cfg) => {
                if let Some(k) = max_axis_points {
                    trim_axes(&mut cfg, k.max(1));
                }
                match run_sweep(&cfg, workers) {
                    Err(e) => {
                        eprintln!("error: {e}");
                        classify(&e)
                    }
                    Ok(engine) => finish_sweep(&cfg, &out, engine),
                }
            }
        },
        Cmd::Preset {
            name,
            out,
            workers,
            show_config,
            max_axis_points,
        } => {
            if name == "list" {
                for n in presets::names() {
                    println!("{n}");
                }
                return ExitCode::from(EXIT_OK);
            }
            let Some(text) = presets::get(&name) else {
                eprintln!(
                    "unknown preset '{name}'; available: {}",
                    presets::names().join(", ")
                );
                return ExitCode::from(EXIT_CONFIG);
            };
            if show_config {
                print!("{text}");
                return ExitCode::from(EXIT_OK);
            }
            match RunConfig::from_str(text) {
                Err(e) => {
                    eprintln!("preset config error: {e}");
                    EXIT_CONFIG
                }
                Ok(mut cfg) => {
                    if let Some(k) = max_axis_points {
                        trim_axes(&mut cfg, k.max(1));
                    }
                    let out_dir = out.unwrap_or_else(|| PathBuf::from("out").join(&name));
                    match run_sweep(&cfg, workers) {
                        Err(e) => {
                            eprintln!("error: {e}");
                            classify(&e)
                        }
                        Ok(engine) => finish_sweep(&cfg, &out_dir, engine),
                    }
                }
            }
        }
        Cmd::Selftest { seed } => {
            if selftest::run(seed) {
                println!("selftest: all checks passed");
                EXIT_OK
            } else {
                EXIT_SOLVER
            }
        }
    };
    ExitCode::from(code)
}
