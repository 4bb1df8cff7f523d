//! Cross-method validation of the spectral pipeline: FFT of the regression
//! correlation versus frequency-domain resolvent solves, Parseval, and frame
//! covariance of the fitted line center.

mod common;

use lattice_laser::geometry::Geometry;
use lattice_laser::model::{liouvillian, ModelParams};
use lattice_laser::observables::photon_number;
use lattice_laser::operators::HilbertSpace;
use lattice_laser::solvers::{correlation_adag_a, steady_state, CorrelationOptions, SolverOptions};
use lattice_laser::spectrum::{lorentz_fit, spectrum_fft, spectrum_resolvent};
use lattice_laser::states::DensityMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// FFT spectrum of a model plus a resolvent recomputation on the prominent
/// part of the grid; returns the maximum relative deviation there.
fn cross_method_deviation(
    lv: &lattice_laser::model::Superoperator,
    rho: &DensityMatrix,
    span: f64,
) -> (f64, f64) {
    let corr = correlation_adag_a(
        lv,
        rho,
        &CorrelationOptions {
            initial_span: span,
            ..CorrelationOptions::default()
        },
    )
    .unwrap();
    let spec = spectrum_fft(&corr).unwrap();
    let (_, peak) = spec.peak();
    let prominent: Vec<usize> = (0..spec.omega.len())
        .filter(|&i| spec.values[i] > 0.01 * peak)
        .collect();
    // cap the resolvent grid; points are spread over the prominent range
    let stride = (prominent.len() / 120).max(1);
    let sel: Vec<usize> = prominent.iter().cloned().step_by(stride).collect();
    let omega_sel: Vec<f64> = sel.iter().map(|&i| spec.omega[i]).collect();
    let res = spectrum_resolvent(lv, rho, &omega_sel).unwrap();
    assert!(res.window.flagged.is_empty(), "flagged resolvent points");
    let mut worst = 0.0f64;
    for (k, &i) in sel.iter().enumerate() {
        let dev = (res.values[k] - spec.values[i]).abs() / peak.max(spec.values[i]);
        worst = worst.max(dev);
    }
    (worst, spec.window.integral_rel_err.unwrap_or(0.0))
}

#[test]
fn cross_method_battery_small_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0123_4567);
    for case in 0..3 {
        let n_atoms = rng.gen_range(1..=2);
        let geom = if n_atoms == 1 {
            Geometry::build(
                lattice_laser::geometry::LatticeFamily::Chain,
                1,
                1.0,
                [0.0, 0.0, 1.0],
            )
            .unwrap()
        } else {
            Geometry::pair(rng.gen_range(0.1..0.7)).unwrap()
        };
        let params = ModelParams {
            g: rng.gen_range(0.4..1.2),
            gamma0: rng.gen_range(0.05..0.4),
            pump_rate: rng.gen_range(0.3..2.0),
            detuning: rng.gen_range(-0.8..0.8),
            ..ModelParams::new(geom)
        };
        let (lv, ss) = lattice_laser::solvers::steady_state_adaptive(
            |fock| liouvillian(&params, &HilbertSpace::new(n_atoms, fock)),
            4,
            12,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(ss.info.truncation_ok, "case {case}: inadequate cutoff");
        let (dev, parseval) = cross_method_deviation(&lv, &ss.rho, 200.0);
        assert!(dev < 0.01, "case {case}: methods deviate by {dev:.3e}");
        assert!(parseval < 0.01, "case {case}: Parseval off by {parseval:.3e}");
    }
}

#[test]
fn empty_cavity_seeded_spectrum_cross_method() {
    let space = HilbertSpace::new(0, 5);
    let params = ModelParams::new(Geometry::empty());
    let lv = liouvillian(&params, &space).unwrap();
    let seed = DensityMatrix::thermal(space.info(), 0.4);
    let (dev, _) = cross_method_deviation(&lv, &seed, 100.0);
    assert!(dev < 0.01, "methods deviate by {dev:.3e}");
}

#[test]
fn fitted_center_follows_cavity_detuning() {
    // shifting the cavity shifts the (empty cavity) line center by the same
    // amount within grid resolution
    let space = HilbertSpace::new(0, 3);
    let mut centers = Vec::new();
    for detuning in [0.3, 0.75] {
        let params = ModelParams {
            detuning,
            ..ModelParams::new(Geometry::empty())
        };
        let lv = liouvillian(&params, &space).unwrap();
        let seed = DensityMatrix::fock(space.info(), 1);
        let corr = correlation_adag_a(
            &lv,
            &seed,
            &CorrelationOptions {
                initial_span: 100.0,
                ..CorrelationOptions::default()
            },
        )
        .unwrap();
        let spec = spectrum_fft(&corr).unwrap();
        let fit = lorentz_fit(&spec).unwrap();
        assert!(!fit.unreliable);
        centers.push(fit.center);
    }
    let shift = centers[1] - centers[0];
    assert!(
        (shift - 0.45).abs() < 2e-3,
        "center moved by {shift}, expected 0.45"
    );
}

#[test]
fn resolvent_linearity_and_tails() {
    let space = HilbertSpace::new(1, 3);
    let params = ModelParams {
        g: 0.8,
        gamma0: 0.25,
        pump_rate: 1.4,
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
    let lv = liouvillian(&params, &space).unwrap();
    let ss = steady_state(&lv, &SolverOptions::default()).unwrap();
    let spec = spectrum_resolvent(&lv, &ss.rho, &[0.0, 0.2, 50.0]).unwrap();
    let peakish = spec.values[0].max(spec.values[1]);
    assert!(
        spec.values[2] < 1e-3 * peakish,
        "far tail not small: {} vs {peakish}",
        spec.values[2]
    );
    // doubling the state amplitude doubles the spectrum: S is linear in rho
    let doubled: Vec<num_complex::Complex64> =
        ss.rho.as_vec().iter().map(|v| v * 2.0).collect();
    let rho2 = DensityMatrix::from_raw_unchecked(*ss.rho.info(), doubled).unwrap();
    let spec2 = spectrum_resolvent(&lv, &rho2, &[0.0, 0.2]).unwrap();
    for k in 0..2 {
        assert!((spec2.values[k] - 2.0 * spec.values[k]).abs() < 1e-10 * peakish);
    }
}

#[test]
fn correlation_g0_equals_photon_number() {
    let space = HilbertSpace::new(2, 3);
    let params = ModelParams {
        g: 0.9,
        gamma0: 0.2,
        pump_rate: 1.0,
        ..ModelParams::new(Geometry::pair(0.58).unwrap())
    };
    let lv = liouvillian(&params, &space).unwrap();
    let ss = steady_state(&lv, &SolverOptions::default()).unwrap();
    let corr = correlation_adag_a(&lv, &ss.rho, &CorrelationOptions::default()).unwrap();
    let n = photon_number(&ss.rho);
    assert!((corr.values[0].re - n).abs() < 1e-12);
}
