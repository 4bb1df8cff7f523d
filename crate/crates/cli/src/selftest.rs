//! Seeded self-test battery: quick end-to-end checks against analytic
//! results, printable from the installed binary without the test harness.

use crate::config::RunConfig;
use crate::run::{run_sweep, write_csv};
use lattice_laser::geometry::{decay_kernel, shift_kernel, CouplingMatrices, Geometry};
use lattice_laser::model::{liouvillian, ModelParams};
use lattice_laser::observables::photon_number;
use lattice_laser::operators::HilbertSpace;
use lattice_laser::solvers::{
    correlation_adag_a, evolve, steady_state, CorrelationOptions, SolverOptions,
};
use lattice_laser::spectrum::{lorentz_fit, spectrum_fft, spectrum_resolvent};
use lattice_laser::states::DensityMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
}

fn check_kernels(_seed: u64) -> Result<(), String> {
    let f = decay_kernel(2.0 * PI, 0.0);
    let expect = 1.0 / (4.0 * PI * PI);
    if (f - expect).abs() > 1e-14 {
        return Err(format!("decay kernel at 2pi: {f} vs {expect}"));
    }
    let g = shift_kernel(PI, 0.0);
    let expect_g = 1.0 / PI - 1.0 / PI.powi(3);
    if (g - expect_g).abs() > 1e-14 {
        return Err(format!("shift kernel at pi: {g} vs {expect_g}"));
    }
    if (decay_kernel(1e-6, 0.7) - 2.0 / 3.0).abs() > 1e-9 {
        return Err("small-separation limit violated".into());
    }
    if shift_kernel(1.3, 0.4) != shift_kernel(1.3, -0.4) {
        return Err("shift kernel not even in cos(theta)".into());
    }
    Ok(())
}

fn check_pair_psd(seed: u64) -> Result<(), String> {
    let mut s = seed;
    for _ in 0..20 {
        let d = 0.02 + 2.0 * splitmix(&mut s);
        let cm = CouplingMatrices::compute(&Geometry::pair(d).unwrap(), 1.0)
            .map_err(|e| e.to_string())?;
        if cm.gamma(0, 1).abs() > 1.0 + 1e-12 {
            return Err(format!("pair rate exceeds single-atom rate at d={d}"));
        }
    }
    Ok(())
}

fn check_trace_preservation(seed: u64) -> Result<(), String> {
    let mut s = seed ^ 0xabcd;
    let space = HilbertSpace::new(2, 2);
    let params = ModelParams {
        g: 0.6 + splitmix(&mut s),
        gamma0: 0.1 + 0.3 * splitmix(&mut s),
        pump_rate: 0.5 + splitmix(&mut s),
        detuning: splitmix(&mut s) - 0.5,
        ..ModelParams::new(Geometry::pair(0.1 + splitmix(&mut s)).unwrap())
    };
    let lv = liouvillian(&params, &space).map_err(|e| e.to_string())?;
    let dim = space.dim();
    for _ in 0..10 {
        let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = Complex64::new(splitmix(&mut s) - 0.5, splitmix(&mut s) - 0.5);
                rho[i + j * dim] = v;
                rho[j + i * dim] = v.conj();
            }
        }
        let out = lv.apply(&rho);
        let trace: Complex64 = (0..dim).map(|k| out[k + k * dim]).sum();
        if trace.norm() > 1e-12 {
            return Err(format!("trace defect {}", trace.norm()));
        }
    }
    Ok(())
}

fn check_pump_balance(_seed: u64) -> Result<(), String> {
    let (r, gam) = (1.3, 0.45);
    let params = ModelParams {
        g: 0.0,
        gamma0: gam,
        pump_rate: r,
        ..ModelParams::new(
            Geometry::build(
                lattice_laser::geometry::LatticeFamily::Chain,
                1,
                1.0,
                [0.0, 0.0, 1.0],
            )
            .unwrap(),
        )
    };
    let lv = liouvillian(&params, &HilbertSpace::new(1, 0)).map_err(|e| e.to_string())?;
    let ss = steady_state(&lv, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let sz = ss.rho.get(1, 1).re - ss.rho.get(0, 0).re;
    let expect = (r - gam) / (r + gam);
    if (sz - expect).abs() > 1e-10 {
        return Err(format!("<sz> = {sz} vs {expect}"));
    }
    Ok(())
}

fn check_cavity_decay(_seed: u64) -> Result<(), String> {
    let space = HilbertSpace::new(0, 2);
    let params = ModelParams::new(Geometry::empty());
    let lv = liouvillian(&params, &space).map_err(|e| e.to_string())?;
    let rho0 = DensityMatrix::fock(space.info(), 1);
    let grid = vec![0.0, 0.7, 1.9];
    let snaps = evolve(&lv, &rho0, &grid, &SolverOptions::default()).map_err(|e| e.to_string())?;
    for (t, rho) in grid.iter().zip(&snaps) {
        let n = photon_number(rho);
        if (n - (-2.0 * t).exp()).abs() > 1e-8 {
            return Err(format!("photon decay at t={t}: {n}"));
        }
    }
    Ok(())
}

fn check_empty_cavity_line(_seed: u64) -> Result<(), String> {
    let space = HilbertSpace::new(0, 3);
    let params = ModelParams::new(Geometry::empty());
    let lv = liouvillian(&params, &space).map_err(|e| e.to_string())?;
    let seed_state = DensityMatrix::fock(space.info(), 1);
    let corr = correlation_adag_a(
        &lv,
        &seed_state,
        &CorrelationOptions {
            initial_span: 100.0,
            ..CorrelationOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let fit = lorentz_fit(&spectrum_fft(&corr).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if (fit.fwhm - 2.0).abs() / 2.0 > 0.01 {
        return Err(format!("empty-cavity FWHM {}", fit.fwhm));
    }
    Ok(())
}

fn check_cross_method(seed: u64) -> Result<(), String> {
    let mut s = seed ^ 0x7777;
    let params = ModelParams {
        g: 0.5 + 0.6 * splitmix(&mut s),
        gamma0: 0.1 + 0.2 * splitmix(&mut s),
        pump_rate: 0.6 + splitmix(&mut s),
        detuning: 0.6 * splitmix(&mut s) - 0.3,
        ..ModelParams::new(Geometry::pair(0.15 + 0.4 * splitmix(&mut s)).unwrap())
    };
    let lv = liouvillian(&params, &HilbertSpace::new(2, 4)).map_err(|e| e.to_string())?;
    let ss = steady_state(&lv, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let corr = correlation_adag_a(&lv, &ss.rho, &CorrelationOptions::default())
        .map_err(|e| e.to_string())?;
    let spec = spectrum_fft(&corr).map_err(|e| e.to_string())?;
    let (_, peak) = spec.peak();
    let sel: Vec<usize> = (0..spec.omega.len())
        .filter(|&i| spec.values[i] > 0.05 * peak)
        .step_by(40)
        .collect();
    let omegas: Vec<f64> = sel.iter().map(|&i| spec.omega[i]).collect();
    let res = spectrum_resolvent(&lv, &ss.rho, &omegas).map_err(|e| e.to_string())?;
    for (k, &i) in sel.iter().enumerate() {
        let dev = (res.values[k] - spec.values[i]).abs() / peak;
        if dev > 0.01 {
            return Err(format!("methods deviate {dev:.2e} at omega {}", omegas[k]));
        }
    }
    Ok(())
}

fn check_sweep_determinism(_seed: u64) -> Result<(), String> {
    let cfg = RunConfig::from_str(
        r#"
[model]
gamma0 = 0.3
pump_rate = 1.0
g = 0.7

[geometry]
family = "chain"
n_atoms = 1
lattice_const = 1.0

[hilbert]
fock_cutoff = 3

[[sweep.axes]]
name = "pump_rate"
values = [0.5, 1.5]
"#,
    )
    .map_err(|e| e.to_string())?;
    let render = |workers| -> Result<String, String> {
        let out = run_sweep(&cfg, workers).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_csv(&mut buf, &cfg, &out.rows).map_err(|e| e.to_string())?;
        Ok(String::from_utf8(buf)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n"))
    };
    if render(1)? != render(2)? {
        return Err("CSV differs across worker counts".into());
    }
    Ok(())
}

/// Run the battery; returns true when everything passed.
pub fn run(seed: u64) -> bool {
    let checks: Vec<(&str, fn(u64) -> Result<(), String>)> = vec![
        ("coupling kernels", check_kernels),
        ("pair rate bound", check_pair_psd),
        ("trace preservation", check_trace_preservation),
        ("pump/decay balance", check_pump_balance),
        ("cavity photon decay", check_cavity_decay),
        ("empty-cavity linewidth", check_empty_cavity_line),
        ("spectrum cross-method", check_cross_method),
        ("sweep determinism", check_sweep_determinism),
    ];
    let mut ok = true;
    for (name, f) in checks {
        match f(seed) {
            Ok(()) => println!("selftest {name}: ok"),
            Err(e) => {
                ok = false;
                println!("selftest {name}: FAIL ({e})");
            }
        }
    }
    ok
}
