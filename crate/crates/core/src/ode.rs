//! Adaptive Dormand-Prince 5(4) propagation of complex linear systems with
//! dense output, so observables can be sampled on a fine grid without
//! forcing the step size down to the sampling interval.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e}; the system is too stiff for explicit stepping")]
    StepSizeUnderflow { t: f64 },
    #[error("exceeded {0} integration steps")]
    MaxStepsExceeded(usize),
    #[error("sample grid must be ascending")]
    BadGrid,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output quartic correction weights
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn axpy(y: &mut [Complex64], a: f64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Integrate `y' = f(y)` from `samples[0]` to `samples.last()`, invoking
/// `observe(index, t, y(t))` at every sample point (including the first).
/// Returns the state at the final time.
pub fn integrate_sampled<F, O>(
    mut f: F,
    y0: &[Complex64],
    samples: &[f64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<Vec<Complex64>, OdeError>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
    O: FnMut(usize, f64, &[Complex64]),
{
    let n = y0.len();
    if samples.is_empty() {
        return Ok(y0.to_vec());
    }
    if samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(OdeError::BadGrid);
    }
    let mut y = y0.to_vec();
    observe(0, samples[0], &y);
    let t0 = samples[0];
    let t_end = *samples.last().unwrap();
    if t_end <= t0 {
        for (i, &t) in samples.iter().enumerate().skip(1) {
            observe(i, t, &y);
        }
        return Ok(y);
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![zero; n]).collect();
    let mut y_stage = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut interp = vec![zero; n];

    let err_norm = |e: &[Complex64], ya: &[Complex64], yb: &[Complex64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let sc = opts.atol + opts.rtol * ya[i].norm().max(yb[i].norm());
            let r = e[i].norm() / sc;
            acc += r * r;
        }
        (acc / n as f64).sqrt()
    };

    let mut t = t0;
    {
        let (k_first, _) = k.split_at_mut(1);
        f(&y, &mut k_first[0]);
    }

    // conservative starting step from the initial slope
    let mut h = {
        let mut ynorm: f64 = 0.0;
        let mut fnorm: f64 = 0.0;
        for i in 0..n {
            let sc = opts.atol + opts.rtol * y[i].norm();
            ynorm = ynorm.max(y[i].norm() / sc);
            fnorm = fnorm.max(k[0][i].norm() / sc);
        }
        let guess = if fnorm > 1e-300 {
            0.01 * ynorm.max(1.0) / fnorm
        } else {
            (t_end - t0) * 0.1
        };
        guess.min(t_end - t0).max(1e-10 * (t_end - t0))
    };

    let mut next_sample = 1;
    while next_sample < samples.len() && samples[next_sample] <= t {
        observe(next_sample, samples[next_sample], &y);
        next_sample += 1;
    }

    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::MaxStepsExceeded(opts.max_steps));
        }
        h = h.min(t_end - t);
        if h < 1e-14 * (t.abs() + t_end - t0) {
            return Err(OdeError::StepSizeUnderflow { t });
        }

        // stages 2..6
        let tabs: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in tabs.iter().enumerate() {
            y_stage.copy_from_slice(&y);
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    axpy(&mut y_stage, h * a, &k[j]);
                }
            }
            let (_, rest) = k.split_at_mut(s + 1);
            f(&y_stage, &mut rest[0]);
        }
        // 5th order solution, then the FSAL stage k7 = f(y_new)
        y_new.copy_from_slice(&y);
        for (j, &b) in B.iter().enumerate() {
            if b != 0.0 {
                axpy(&mut y_new, h * b, &k[j]);
            }
        }
        {
            let (_, rest) = k.split_at_mut(6);
            f(&y_new, &mut rest[0]);
        }
        // embedded error estimate
        let mut err = vec![zero; n];
        for (j, &e) in E.iter().enumerate() {
            if e != 0.0 {
                axpy(&mut err, h * e, &k[j]);
            }
        }
        let enorm = err_norm(&err, &y, &y_new);

        if enorm <= 1.0 {
            // dense output for samples inside (t, t+h]
            let needs_interp =
                next_sample < samples.len() && samples[next_sample] <= t + h + 1e-12 * h;
            if needs_interp {
                // Hairer's quartic interpolant for the accepted step
                let mut rcont = vec![vec![zero; n]; 5];
                rcont[0].copy_from_slice(&y);
                for i in 0..n {
                    rcont[1][i] = y_new[i] - y[i];
                    rcont[2][i] = h * k[0][i] - rcont[1][i];
                    rcont[3][i] = rcont[1][i] - h * k[6][i] - rcont[2][i];
                }
                for (j, &d) in D.iter().enumerate() {
                    if d != 0.0 {
                        axpy(&mut rcont[4], h * d, &k[j]);
                    }
                }
                while next_sample < samples.len() && samples[next_sample] <= t + h + 1e-12 * h {
                    let ts = samples[next_sample];
                    let theta = ((ts - t) / h).clamp(0.0, 1.0);
                    let th1 = 1.0 - theta;
                    for i in 0..n {
                        interp[i] = rcont[0][i]
                            + theta
                                * (rcont[1][i]
                                    + th1
                                        * (rcont[2][i]
                                            + theta * (rcont[3][i] + th1 * rcont[4][i])));
                    }
                    observe(next_sample, ts, &interp);
                    next_sample += 1;
                }
            }
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL
            let fac = (0.9 * enorm.powf(-0.2)).clamp(0.2, 5.0);
            h *= fac;
        } else {
            let fac = (0.9 * enorm.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
        }
    }
    // numerically we reached t_end; flush any samples left by roundoff
    while next_sample < samples.len() {
        observe(next_sample, samples[next_sample], &y);
        next_sample += 1;
    }
    Ok(y)
}
