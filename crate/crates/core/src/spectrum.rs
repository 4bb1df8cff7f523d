//! Output spectrum of the cavity field and Lorentzian line parameters.
//!
//! The stationary spectrum is the Fourier transform of the two-time field
//! correlation. We use the one-sided form `S(w) = 2 Re \int_0^inf e^{-i w
//! tau} g(tau) dtau`, which is real by construction and equals the two-sided
//! transform for stationary fields. Frequencies are measured in the rotating
//! frame, i.e. relative to the bare atomic transition.
//!
//! Two independent routes are provided: a padded FFT of the sampled
//! correlation, and a frequency-domain resolvent solve `(i w I - L) x = a
//! rho` per grid point. They agree within discretization error and serve as
//! mutual cross-checks.

use crate::blocks::ExcitationBlocks;
use crate::model::Superoperator;
use crate::solvers::{Correlation, SolverError, SparseLu};
use crate::sparse::CsrMatrix;
use crate::states::DensityMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("correlation window did not decay (tail/initial = {0:.3e}); extend the grid span")]
    NotDecayed(f64),
    #[error("spectrum carries no weight, nothing to fit")]
    NoPeak,
    #[error("Lorentzian fit did not converge within {0} iterations")]
    FitDiverged(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    FftTimeDomain,
    Resolvent,
}

/// Window and consistency metadata carried with every spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct WindowMeta {
    pub tau_step: Option<f64>,
    pub tau_end: Option<f64>,
    pub decayed: bool,
    /// `|(1/2pi) int S - <a'a>| / <a'a>` when the photon number is known.
    pub integral_rel_err: Option<f64>,
    /// Most negative sample relative to the peak (>= 0 means none).
    pub min_over_max: f64,
    /// Grid points where a resolvent solve was rejected.
    pub flagged: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    /// Frequencies relative to the bare atomic transition, ascending.
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    pub method: SpectrumMethod,
    pub window: WindowMeta,
}

impl SpectrumResult {
    pub fn peak(&self) -> (usize, f64) {
        let mut idx = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, &v) in self.values.iter().enumerate() {
            if v > best {
                best = v;
                idx = i;
            }
        }
        (idx, best)
    }

    /// `(1/2pi) int S dw` by the trapezoidal rule.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.omega.windows(2).zip(self.values.windows(2)) {
            let (ww, vv) = w;
            acc += 0.5 * (vv[0] + vv[1]) * (ww[1] - ww[0]);
        }
        acc / std::f64::consts::TAU
    }
}

/// One-sided transform of a sampled correlation on a zero-padded FFT grid.
///
/// With the half-weighted `tau = 0` sample the discrete transform satisfies
/// the Parseval identity `(1/2pi) int S dw = g(0)` exactly up to the
/// truncated tail, which the stored `integral_rel_err` reflects.
pub fn spectrum_fft(corr: &Correlation) -> Result<SpectrumResult, SpectrumError> {
    let m = corr.values.len();
    assert!(m >= 2, "need at least two correlation samples");
    let g0 = corr.values[0].re;
    if !corr.decayed {
        let tail = corr.values.last().unwrap().norm();
        if g0 > 0.0 && tail > 1e-2 * g0 {
            // hopeless window; a warning-grade tail is still transformed
            return Err(SpectrumError::NotDecayed(tail / g0));
        }
    }
    let dt = corr.tau_step;
    let n = (4 * m).next_power_of_two();
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
    for (b, v) in buf.iter_mut().zip(&corr.values) {
        *b = v * dt;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dw = std::f64::consts::TAU / (n as f64 * dt);
    let half = n / 2;
    let mut omega = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for ks in -(half as i64)..(half as i64) {
        let src = ((ks + n as i64) % n as i64) as usize;
        omega.push(ks as f64 * dw);
        values.push(2.0 * buf[src].re - dt * g0);
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let integral = values.iter().sum::<f64>() * dw / std::f64::consts::TAU;
    let integral_rel_err = if g0 > 1e-14 {
        Some((integral - g0).abs() / g0)
    } else {
        None
    };
    Ok(SpectrumResult {
        omega,
        values,
        method: SpectrumMethod::FftTimeDomain,
        window: WindowMeta {
            tau_step: Some(dt),
            tau_end: Some(corr.tau_end()),
            decayed: corr.decayed,
            integral_rel_err,
            min_over_max: if max > 0.0 { min / max } else { 0.0 },
            flagged: Vec::new(),
        },
    })
}

/// Frequency-domain spectrum: solve `(i w I - L) x = a rho` per point and
/// read out `2 Re Tr[a' x]`. Points whose solve residual is poor are flagged
/// and kept. Grid points are independent and solved in parallel.
pub fn spectrum_resolvent(
    l: &Superoperator,
    state: &DensityMatrix,
    omega_grid: &[f64],
) -> Result<SpectrumResult, SpectrumError> {
    assert_eq!(state.info(), l.info(), "state and generator space differ");
    let info = *l.info();
    let dim = info.dim();
    let a = info.annihilation_matrix();
    let adag = a.adjoint();
    let mut b0_full = vec![Complex64::new(0.0, 0.0); dim * dim];
    a.mul_dense_into(state.as_vec(), dim, &mut b0_full);

    let blocks = ExcitationBlocks::build(&info);
    let (lb, b0, mask) = match blocks.sector_indices(-1) {
        Some(idx) => {
            let lb = blocks.extract_block(l.matrix(), -1).expect("lowered sector");
            let b0 = blocks.gather(&b0_full, -1).expect("lowered sector");
            let mut pos_of = vec![usize::MAX; dim * dim];
            for (p, &g) in idx.iter().enumerate() {
                pos_of[g] = p;
            }
            let mask: Vec<(usize, Complex64)> = adag
                .triplets()
                .map(|(r, c, v)| (pos_of[c + r * dim], v))
                .collect();
            (lb, b0, mask)
        }
        None => {
            return Ok(SpectrumResult {
                omega: omega_grid.to_vec(),
                values: vec![0.0; omega_grid.len()],
                method: SpectrumMethod::Resolvent,
                window: WindowMeta {
                    tau_step: None,
                    tau_end: None,
                    decayed: true,
                    integral_rel_err: None,
                    min_over_max: 0.0,
                    flagged: Vec::new(),
                },
            })
        }
    };
    let nb = lb.nrows();
    let neg_lb = lb.scale(Complex64::new(-1.0, 0.0));
    let b0_norm = b0.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);

    let results: Vec<(f64, bool)> = omega_grid
        .par_iter()
        .map(|&w| {
            let mut trips: Vec<(usize, usize, Complex64)> = neg_lb.triplets().collect();
            for p in 0..nb {
                trips.push((p, p, Complex64::new(0.0, w)));
            }
            let shifted = CsrMatrix::from_triplets_owned(nb, nb, &mut trips);
            let lu = match SparseLu::new(&shifted) {
                Ok(lu) => lu,
                Err(_) => return (f64::NAN, true),
            };
            let x = lu.solve(&b0);
            // residual check against the assembled shifted system
            let r = shifted
                .matvec(&x)
                .iter()
                .zip(&b0)
                .map(|(ax, b)| (ax - b).norm())
                .fold(0.0, f64::max);
            let flagged = !(r <= 1e-8 * b0_norm);
            let s: Complex64 = mask.iter().map(|&(p, v)| v * x[p]).sum();
            (2.0 * s.re, flagged)
        })
        .collect();

    let values: Vec<f64> = results.iter().map(|(s, _)| *s).collect();
    let flagged: Vec<usize> = results
        .iter()
        .enumerate()
        .filter_map(|(i, (_, f))| f.then_some(i))
        .collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SpectrumResult {
        omega: omega_grid.to_vec(),
        values,
        method: SpectrumMethod::Resolvent,
        window: WindowMeta {
            tau_step: None,
            tau_end: None,
            decayed: true,
            integral_rel_err: None,
            min_over_max: if max > 0.0 { min / max } else { 0.0 },
            flagged,
        },
    })
}

/// Lorentzian line parameters extracted by least squares.
#[derive(Clone, Debug, Serialize)]
pub struct LorentzFit {
    /// Full width at half maximum.
    pub fwhm: f64,
    /// Line center relative to the bare atomic transition.
    pub center: f64,
    pub amplitude: f64,
    pub baseline: f64,
    /// Relative RMS of the fit residual over the fit window.
    pub residual: f64,
    /// Secondary peak above 20% of the main one detected.
    pub multi_peak: bool,
    /// Residual above 5% or multi-peak structure.
    pub unreliable: bool,
}

impl LorentzFit {
    /// Detuning of the lasing line from the bare atom, `omega_0 - omega_L`.
    pub fn atom_laser_detuning(&self) -> f64 {
        -self.center
    }
}

fn lorentz(w: f64, a: f64, x0: f64, fwhm: f64, b: f64) -> f64 {
    let hw = 0.5 * fwhm;
    a * hw * hw / ((w - x0).powi(2) + hw * hw) + b
}

/// Solve the 4x4 normal equations with partial pivoting.
fn solve4(mut m: [[f64; 5]; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&a, &b| {
            m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap()
        })?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..4 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..5 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([
        m[0][4] / m[0][0],
        m[1][4] / m[1][1],
        m[2][4] / m[2][2],
        m[3][4] / m[3][3],
    ])
}

fn detect_secondary_peak(s: &[f64], baseline: f64) -> bool {
    let n = s.len();
    if n < 5 {
        return false;
    }
    let (peak_idx, peak) = {
        let mut idx = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, &v) in s.iter().enumerate() {
            if v > best {
                best = v;
                idx = i;
            }
        }
        (idx, best)
    };
    let main_height = peak - baseline;
    if main_height <= 0.0 {
        return false;
    }
    for i in 1..n - 1 {
        if i == peak_idx || s[i] <= s[i - 1] || s[i] < s[i + 1] {
            continue;
        }
        let height = s[i] - baseline;
        if height <= 0.2 * main_height {
            continue;
        }
        // require a genuine valley between the candidate and the main peak
        let (lo, hi) = if i < peak_idx { (i, peak_idx) } else { (peak_idx, i) };
        let valley = s[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
        if valley - baseline < 0.8 * height {
            return true;
        }
    }
    false
}

fn lm_fit(
    omega: &[f64],
    s: &[f64],
    start: [f64; 4],
) -> Result<([f64; 4], f64, usize), SpectrumError> {
    let n = omega.len();
    let cost = |p: &[f64; 4]| -> f64 {
        omega
            .iter()
            .zip(s)
            .map(|(&w, &v)| (lorentz(w, p[0], p[1], p[2], p[3]) - v).powi(2))
            .sum()
    };
    let mut p = start;
    let mut lambda = 1e-3;
    let mut c = cost(&p);
    let max_iter = 400;
    for it in 0..max_iter {
        // normal equations JtJ dp = -Jtr with Levenberg damping
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        let hw = 0.5 * p[2];
        for (&w, &v) in omega.iter().zip(s) {
            let dx = w - p[1];
            let d = dx * dx + hw * hw;
            let u = hw * hw;
            let f = p[0] * u / d + p[3];
            let r = f - v;
            let j = [
                u / d,
                p[0] * u * 2.0 * dx / (d * d),
                p[0] * hw * dx * dx / (d * d),
                1.0,
            ];
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut m = [[0.0f64; 5]; 4];
            for a in 0..4 {
                for b in 0..4 {
                    m[a][b] = jtj[a][b];
                }
                m[a][a] *= 1.0 + lambda;
                m[a][4] = -jtr[a];
            }
            let Some(dp) = solve4(m) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + dp[0], p[1] + dp[1], p[2] + dp[2], p[3] + dp[3]];
            let ct = cost(&trial);
            if ct.is_finite() && ct <= c {
                // change relative to the natural scale of each parameter:
                // amplitudes for A and b, the width for x0 and fwhm
                let scale = [
                    p[0].abs().max(1e-300),
                    p[2].abs().max(1e-300),
                    p[2].abs().max(1e-300),
                    p[0].abs().max(1e-300),
                ];
                let rel_change = (0..4)
                    .map(|k| dp[k].abs() / p[k].abs().max(scale[k]))
                    .fold(0.0, f64::max);
                p = trial;
                c = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel_change < 1e-10 {
                    let rms = (c / n as f64).sqrt();
                    return Ok((p, rms, it + 1));
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // stalled in a flat valley; accept the current parameters
            let rms = (c / n as f64).sqrt();
            return Ok((p, rms, it + 1));
        }
    }
    Err(SpectrumError::FitDiverged(max_iter))
}

/// Fit `A (g/2)^2 / ((w - x0)^2 + (g/2)^2) + b` to the dominant line.
///
/// The fit is windowed to five widths around the peak and repeated twice so
/// the far wings (which deviate from a Lorentzian in the bad-cavity regime)
/// do not bias the width.
pub fn lorentz_fit(spec: &SpectrumResult) -> Result<LorentzFit, SpectrumError> {
    let n = spec.values.len();
    if n < 8 {
        return Err(SpectrumError::NoPeak);
    }
    let (peak_idx, peak) = spec.peak();
    let baseline0 = spec.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let height = peak - baseline0;
    if !(height > 0.0) || peak <= 0.0 {
        return Err(SpectrumError::NoPeak);
    }
    let multi_peak = detect_secondary_peak(&spec.values, baseline0);

    // half-maximum crossings for the initial width
    let half = baseline0 + height / 2.0;
    let mut left = None;
    for i in (0..peak_idx).rev() {
        if spec.values[i] < half {
            left = Some(spec.omega[i]);
            break;
        }
    }
    let mut right = None;
    for i in peak_idx + 1..n {
        if spec.values[i] < half {
            right = Some(spec.omega[i]);
            break;
        }
    }
    let x0 = spec.omega[peak_idx];
    let span = spec.omega[n - 1] - spec.omega[0];
    let fwhm0 = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x0 - l),
        (None, Some(r)) => 2.0 * (r - x0),
        (None, None) => span / 4.0,
    }
    .max(span / n as f64);

    let mut p = [height, x0, fwhm0, baseline0];
    let mut rms = f64::INFINITY;
    for _ in 0..3 {
        let halfwin = 5.0 * p[2].abs();
        let sel: Vec<usize> = (0..n)
            .filter(|&i| (spec.omega[i] - p[1]).abs() <= halfwin)
            .collect();
        // a usable window needs enough points to constrain four parameters
        let (wsel, ssel): (Vec<f64>, Vec<f64>) = if sel.len() >= 12 {
            (
                sel.iter().map(|&i| spec.omega[i]).collect(),
                sel.iter().map(|&i| spec.values[i]).collect(),
            )
        } else {
            (spec.omega.clone(), spec.values.clone())
        };
        let (pf, r, _) = lm_fit(&wsel, &ssel, p)?;
        p = pf;
        p[2] = p[2].abs();
        rms = r;
    }
    let amplitude = p[0];
    let residual = if amplitude.abs() > 0.0 {
        rms / amplitude.abs()
    } else {
        f64::INFINITY
    };
    Ok(LorentzFit {
        fwhm: p[2].abs(),
        center: p[1],
        amplitude,
        baseline: p[3],
        residual,
        multi_peak,
        unreliable: residual > 0.05 || multi_peak,
    })
}
