//! Steady states of the master equation and time propagation for
//! correlation functions.
//!
//! The steady state is the trace-one kernel element of the Liouvillian. The
//! direct method restricts the linear system to the conserved balanced
//! sector (see [`crate::blocks`]), replaces the equation for the
//! ground-state population by the trace constraint and solves with a sparse
//! LU. The Krylov method runs shifted inverse iteration instead, which also
//! handles generators whose kernel is reachable only from a chosen invariant
//! subspace. Both paths verify the residual against the full, unprojected
//! generator before returning.

use crate::blocks::ExcitationBlocks;
use crate::model::Superoperator;
use crate::ode::{integrate_sampled, OdeError, OdeOptions};
use crate::operators::{SpaceInfo, SpaceKind};
use crate::sparse::CsrMatrix;
use crate::states::{DensityMatrix, StateError};
use faer::complex_native::c64;
use faer::prelude::SpSolver;
use faer::sparse::SparseColMat;
use num_complex::Complex64;
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

/// Steady-state population allowed in the top Fock level before the
/// truncation is flagged as inadequate.
pub const TRUNCATION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("steady state did not converge: residual {residual:.3e} > {tol:.3e}")]
    NotConverged { residual: f64, tol: f64 },
    #[error("Liouvillian kernel is degenerate (independent solutions differ by {difference:.3e}); select a sector via a Krylov start state")]
    Multiplicity { difference: f64 },
    #[error("propagation step size underflow at t = {t:.6e}; consider a dense matrix exponential for this dimension")]
    Stiffness { t: f64 },
    #[error("integration exceeded {0} steps")]
    MaxSteps(usize),
    #[error("sample grid must be ascending and start at 0")]
    BadGrid,
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint file is not a density-matrix dump")]
    BadCheckpoint,
}

impl From<OdeError> for SolverError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::StepSizeUnderflow { t } => SolverError::Stiffness { t },
            OdeError::MaxStepsExceeded(n) => SolverError::MaxSteps(n),
            OdeError::BadGrid => SolverError::BadGrid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    DirectSparse,
    KrylovNullspace,
}

/// Start vector for inverse iteration.
#[derive(Clone, Debug)]
pub enum StartState {
    /// Maximally mixed state; overlaps every steady state of full rank.
    MaximallyMixed,
    /// All atoms ground, field vacuum; stays inside the symmetric Dicke
    /// manifold for collective models.
    Ground,
    /// Seeded random vector.
    Random(u64),
    /// Explicit vectorized start.
    Custom(Vec<Complex64>),
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Residual bound relative to the largest generator entry.
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Relative tolerance of adaptive propagation.
    pub rtol: f64,
    pub atol: f64,
    pub start: StartState,
    /// Re-solve from a random start and require agreement.
    pub verify_uniqueness: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: SolverMethod::DirectSparse,
            residual_tol: 1e-10,
            max_iterations: 200,
            rtol: 1e-9,
            atol: 1e-12,
            start: StartState::MaximallyMixed,
            verify_uniqueness: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveInfo {
    pub method: SolverMethod,
    /// `max |L[rho]|` of the returned state.
    pub residual: f64,
    /// Largest entry of the assembled generator; tolerance reference.
    pub scale: f64,
    pub iterations: usize,
    pub top_fock_population: f64,
    /// False when the top Fock level holds more than [`TRUNCATION_TOL`].
    pub truncation_ok: bool,
    pub uniqueness_verified: bool,
}

pub struct SteadyState {
    pub rho: DensityMatrix,
    pub info: SolveInfo,
}

fn csr_to_faer(m: &CsrMatrix) -> Result<SparseColMat<usize, c64>, SolverError> {
    let trips: Vec<(usize, usize, c64)> = m
        .triplets()
        .map(|(r, c, v)| (r, c, c64::new(v.re, v.im)))
        .collect();
    SparseColMat::try_new_from_triplets(m.nrows(), m.ncols(), &trips)
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))
}

pub(crate) struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, c64>,
    n: usize,
}

impl SparseLu {
    pub(crate) fn new(m: &CsrMatrix) -> Result<Self, SolverError> {
        let sp = csr_to_faer(m)?;
        // singular inputs can panic inside the factorization; surface them
        // as ordinary factorization errors instead
        let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| sp.sp_lu()))
            .map_err(|_| SolverError::Factorization("factorization panicked (singular system?)".into()))?
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        Ok(SparseLu { lu, n: m.nrows() })
    }

    pub(crate) fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let b = faer::Mat::<c64>::from_fn(self.n, 1, |i, _| c64::new(rhs[i].re, rhs[i].im));
        let x = self.lu.solve(b.as_ref());
        (0..self.n)
            .map(|i| {
                let v = x.read(i, 0);
                Complex64::new(v.re, v.im)
            })
            .collect()
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn random_unit(n: usize, seed: u64) -> Vec<Complex64> {
    let mut s = seed ^ 0xd1b54a32d192ed03;
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| {
            let re = (splitmix64(&mut s) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            let im = (splitmix64(&mut s) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            Complex64::new(re, im)
        })
        .collect();
    let m = v.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    for x in &mut v {
        *x /= m;
    }
    v
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Positions (within the balanced sector) of the density-matrix diagonal.
fn diagonal_positions(blocks: &ExcitationBlocks, dim: usize) -> Vec<usize> {
    let sector = blocks.sector_indices(0).expect("balanced sector exists");
    let mut pos = Vec::with_capacity(dim);
    for (local, &global) in sector.iter().enumerate() {
        if global % dim == global / dim {
            pos.push(local);
        }
    }
    assert_eq!(pos.len(), dim);
    pos
}

struct BalancedSector {
    indices: Vec<usize>,
    matrix: CsrMatrix,
    diag_pos: Vec<usize>,
    /// Local position of the component used for the trace-constraint row.
    anchor: usize,
}

fn balanced_sector(l: &Superoperator, blocks: &ExcitationBlocks) -> BalancedSector {
    let dim = l.dim();
    let indices = blocks
        .sector_indices(0)
        .expect("balanced sector exists")
        .to_vec();
    let matrix = blocks.extract_block(l.matrix(), 0).expect("balanced sector");
    let diag_pos = diagonal_positions(blocks, dim);
    // global vec index 0 is the ground-population component (0,0)
    let anchor = indices.binary_search(&0).expect("component (0,0) is balanced");
    BalancedSector {
        indices,
        matrix,
        diag_pos,
        anchor,
    }
}

/// Replace the anchor row with the trace constraint.
fn with_trace_row(sector: &BalancedSector) -> CsrMatrix {
    let n = sector.matrix.nrows();
    let mut trips: Vec<(usize, usize, Complex64)> = Vec::with_capacity(sector.matrix.nnz());
    for (r, c, v) in sector.matrix.triplets() {
        if r != sector.anchor {
            trips.push((r, c, v));
        }
    }
    for &p in &sector.diag_pos {
        trips.push((sector.anchor, p, Complex64::new(1.0, 0.0)));
    }
    CsrMatrix::from_triplets_owned(n, n, &mut trips)
}

/// Hermitize, trace-normalize and residual-check a candidate kernel vector
/// given on the balanced sector.
fn finalize_candidate(
    l: &Superoperator,
    sector: &BalancedSector,
    x_block: &[Complex64],
) -> Result<(Vec<Complex64>, f64), SolverError> {
    let dim = l.dim();
    let side = dim * dim;
    let mut full = vec![Complex64::new(0.0, 0.0); side];
    for (&global, &v) in sector.indices.iter().zip(x_block) {
        full[global] = v;
    }
    // hermitize
    for i in 0..dim {
        for j in i..dim {
            let a = full[i + j * dim];
            let b = full[j + i * dim];
            let avg = 0.5 * (a + b.conj());
            full[i + j * dim] = avg;
            full[j + i * dim] = avg.conj();
        }
    }
    let trace: Complex64 = (0..dim).map(|i| full[i + i * dim]).sum();
    if trace.norm() < 1e-300 {
        return Err(SolverError::NotConverged {
            residual: f64::INFINITY,
            tol: 0.0,
        });
    }
    for v in &mut full {
        *v /= trace;
    }
    let residual = max_abs(&l.apply(&full));
    Ok((full, residual))
}

fn inverse_iteration(
    sector: &BalancedSector,
    start: &[Complex64],
    opts: &SolverOptions,
    scale: f64,
) -> Result<(Vec<Complex64>, usize), SolverError> {
    let n = sector.matrix.nrows();
    assert_eq!(start.len(), n);
    let shift = 1e-8 * scale;
    let mut trips: Vec<(usize, usize, Complex64)> =
        sector.matrix.triplets().collect();
    for p in 0..n {
        trips.push((p, p, Complex64::new(-shift, 0.0)));
    }
    let shifted = CsrMatrix::from_triplets_owned(n, n, &mut trips);
    let lu = SparseLu::new(&shifted)?;
    let mut x = start.to_vec();
    let nrm = max_abs(&x).max(1e-300);
    for v in &mut x {
        *v /= nrm;
    }
    let tol = opts.residual_tol * scale;
    for it in 1..=opts.max_iterations {
        let mut y = lu.solve(&x);
        let nrm = max_abs(&y).max(1e-300);
        for v in &mut y {
            *v /= nrm;
        }
        x = y;
        let r = max_abs(&sector.matrix.matvec(&x));
        if r <= tol {
            return Ok((x, it));
        }
    }
    let r = max_abs(&sector.matrix.matvec(&x));
    Err(SolverError::NotConverged {
        residual: r,
        tol,
    })
}

fn start_vector(
    sector: &BalancedSector,
    info: &SpaceInfo,
    start: &StartState,
) -> Vec<Complex64> {
    let n = sector.matrix.nrows();
    match start {
        StartState::MaximallyMixed => {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for &p in &sector.diag_pos {
                v[p] = Complex64::new(1.0, 0.0);
            }
            v
        }
        StartState::Ground => {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[sector.anchor] = Complex64::new(1.0, 0.0);
            v
        }
        StartState::Random(seed) => random_unit(n, *seed),
        StartState::Custom(full) => {
            assert_eq!(full.len(), info.dim() * info.dim(), "custom start length");
            sector.indices.iter().map(|&g| full[g]).collect()
        }
    }
}

/// Solve `L[rho] = 0` for the trace-one steady state.
pub fn steady_state(l: &Superoperator, opts: &SolverOptions) -> Result<SteadyState, SolverError> {
    let info = *l.info();
    let blocks = ExcitationBlocks::build(&info);
    let sector = balanced_sector(l, &blocks);
    let scale = l.scale();
    let tol = opts.residual_tol * scale;

    let attempt: Result<(Vec<Complex64>, usize), SolverError> = match opts.method {
        SolverMethod::DirectSparse => (|| {
            let system = with_trace_row(&sector);
            let lu = SparseLu::new(&system)?;
            let mut rhs = vec![Complex64::new(0.0, 0.0); system.nrows()];
            rhs[sector.anchor] = Complex64::new(1.0, 0.0);
            Ok((lu.solve(&rhs), 1))
        })(),
        SolverMethod::KrylovNullspace => {
            let x0 = start_vector(&sector, &info, &opts.start);
            inverse_iteration(&sector, &x0, opts, scale)
        }
    };

    let finalized = attempt.and_then(|(candidate, iterations)| {
        finalize_candidate(l, &sector, &candidate).map(|(f, r)| (f, r, iterations))
    });
    // a failed factorization or a poor residual both feed the degeneracy probe
    let (full, residual, iterations) = finalized.unwrap_or((Vec::new(), f64::INFINITY, 0));
    if full.is_empty() || !residual.is_finite() || residual > tol {
        // distinguish a degenerate kernel from plain non-convergence:
        // two independent random starts converging to different states
        let probe = |seed: u64| -> Option<Vec<Complex64>> {
            let x0 = random_unit(sector.matrix.nrows(), seed);
            let xi = inverse_iteration(&sector, &x0, opts, scale).ok()?;
            finalize_candidate(l, &sector, &xi.0)
                .ok()
                .filter(|(_, r)| *r <= tol)
                .map(|(f, _)| f)
        };
        if let (Some(a), Some(b)) = (probe(0x1234_5678), probe(0x9abc_def0)) {
            let diff = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            if diff > 1e-8 {
                return Err(SolverError::Multiplicity { difference: diff });
            }
        }
        return Err(SolverError::NotConverged { residual, tol });
    }

    let mut uniqueness_verified = false;
    if opts.verify_uniqueness {
        let x0 = random_unit(sector.matrix.nrows(), 0x5eed_cafe);
        let (alt, _) = inverse_iteration(&sector, &x0, opts, scale)?;
        let (alt_full, alt_res) = finalize_candidate(l, &sector, &alt)?;
        let diff = alt_full
            .iter()
            .zip(&full)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        if alt_res <= tol && diff > 1e-8 {
            return Err(SolverError::Multiplicity { difference: diff });
        }
        uniqueness_verified = true;
    }

    let top = info.top_fock_population(&full);
    let rho = DensityMatrix::from_raw(info, full)?;
    Ok(SteadyState {
        rho,
        info: SolveInfo {
            method: opts.method,
            residual,
            scale,
            iterations,
            top_fock_population: top,
            truncation_ok: top < TRUNCATION_TOL,
            uniqueness_verified,
        },
    })
}

/// Solve for the steady state, growing the Fock cutoff by two levels while
/// the top-level population exceeds [`TRUNCATION_TOL`], up to `fock_cap`.
/// Returns the generator actually used together with the solution; when the
/// cap is hit the result carries `truncation_ok = false` instead of failing.
pub fn steady_state_adaptive(
    mut build: impl FnMut(usize) -> Result<Superoperator, crate::model::ModelError>,
    fock_start: usize,
    fock_cap: usize,
    opts: &SolverOptions,
) -> Result<(Superoperator, SteadyState), SolverError> {
    let mut fock = fock_start;
    loop {
        let l = build(fock)?;
        let ss = steady_state(&l, opts)?;
        if ss.info.truncation_ok || fock + 2 > fock_cap {
            return Ok((l, ss));
        }
        fock += 2;
    }
}

/// Propagate a vectorized matrix (not necessarily a state) on a sample grid.
/// Returns the sampled snapshots.
pub fn evolve_vec(
    l: &Superoperator,
    y0: &[Complex64],
    t_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<Vec<Complex64>>, SolverError> {
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(SolverError::BadGrid);
    }
    let m = l.matrix();
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(t_grid.len());
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        ..OdeOptions::default()
    };
    integrate_sampled(
        |y, dy| m.matvec_into(y, dy),
        y0,
        t_grid,
        &ode,
        |_, _, y| out.push(y.to_vec()),
    )?;
    Ok(out)
}

/// Propagate a density matrix; snapshots keep the space of the input.
pub fn evolve(
    l: &Superoperator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<DensityMatrix>, SolverError> {
    assert_eq!(rho0.info(), l.info(), "state and generator space differ");
    let snaps = evolve_vec(l, rho0.as_vec(), t_grid, opts)?;
    snaps
        .into_iter()
        .map(|v| DensityMatrix::from_raw_unchecked(*l.info(), v).map_err(SolverError::from))
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct CorrelationOptions {
    /// Sample spacing of the correlation grid (units 1/kappa when rates are
    /// given in kappa).
    pub tau_step: f64,
    /// Grid length before decay-driven extension.
    pub initial_span: f64,
    /// Hard cap of the extension loop.
    pub max_span: f64,
    /// Extension stops once `|g(tau_end)| < decay_threshold * g(0)`.
    pub decay_threshold: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions {
            tau_step: 0.05,
            initial_span: 200.0,
            max_span: 1600.0,
            decay_threshold: 1e-4,
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

/// Two-time field correlation `g(tau) = <a'(t+tau) a(t)>` on a uniform grid.
#[derive(Clone, Debug)]
pub struct Correlation {
    pub tau_step: f64,
    pub values: Vec<Complex64>,
    /// Whether the grid reached the decay criterion before `max_span`.
    pub decayed: bool,
}

impl Correlation {
    pub fn tau_end(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.tau_step
    }
}

/// Correlation of the cavity field by quantum regression: apply `a`, evolve
/// in the lowered sector, read out against `a'`. `state` is the steady state
/// (or a seed state for reference lines such as the empty cavity).
pub fn correlation_adag_a(
    l: &Superoperator,
    state: &DensityMatrix,
    opts: &CorrelationOptions,
) -> Result<Correlation, SolverError> {
    assert_eq!(state.info(), l.info(), "state and generator space differ");
    let info = *l.info();
    let dim = info.dim();
    let a = info.annihilation_matrix();
    let adag = a.adjoint();

    // b0 = a rho (column-major product)
    let mut b0 = vec![Complex64::new(0.0, 0.0); dim * dim];
    a.mul_dense_into(state.as_vec(), dim, &mut b0);

    let n_initial = (opts.initial_span / opts.tau_step).round() as usize;
    let g0: Complex64 = adag
        .triplets()
        .map(|(r, c, v)| v * b0[c + r * dim])
        .sum();
    if g0.norm() < 1e-14 {
        return Ok(Correlation {
            tau_step: opts.tau_step,
            values: vec![Complex64::new(0.0, 0.0); n_initial + 1],
            decayed: true,
        });
    }

    let blocks = ExcitationBlocks::build(&info);
    let lowered = match blocks.sector_indices(-1) {
        Some(idx) => idx.to_vec(),
        None => {
            return Ok(Correlation {
                tau_step: opts.tau_step,
                values: vec![Complex64::new(0.0, 0.0); n_initial + 1],
                decayed: true,
            })
        }
    };
    let lb = blocks
        .extract_block(l.matrix(), -1)
        .expect("lowered sector");
    let mut pos_of = vec![usize::MAX; dim * dim];
    for (p, &g) in lowered.iter().enumerate() {
        pos_of[g] = p;
    }
    // trace mask: g(tau) = sum a'[r,c] * B[c,r]
    let mask: Vec<(usize, Complex64)> = adag
        .triplets()
        .map(|(r, c, v)| {
            let p = pos_of[c + r * dim];
            assert_ne!(p, usize::MAX, "readout leaves the lowered sector");
            (p, v)
        })
        .collect();
    let read_g = |y: &[Complex64]| -> Complex64 { mask.iter().map(|&(p, v)| v * y[p]).sum() };

    let mut y = blocks.gather(&b0, -1).expect("lowered sector");
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        ..OdeOptions::default()
    };

    let mut values: Vec<Complex64> = Vec::with_capacity(n_initial + 1);
    let mut span_steps = n_initial;
    let mut t_done = 0usize; // in grid steps
    loop {
        let samples: Vec<f64> = (t_done..=span_steps)
            .map(|j| j as f64 * opts.tau_step)
            .collect();
        let skip_first = t_done > 0;
        y = integrate_sampled(
            |x, dx| lb.matvec_into(x, dx),
            &y,
            &samples,
            &ode,
            |i, _, snapshot| {
                if !(skip_first && i == 0) {
                    values.push(read_g(snapshot));
                }
            },
        )?;
        t_done = span_steps;
        let tail = values.last().map(|v| v.norm()).unwrap_or(0.0);
        if tail < opts.decay_threshold * g0.norm() {
            return Ok(Correlation {
                tau_step: opts.tau_step,
                values,
                decayed: true,
            });
        }
        if (span_steps as f64 * opts.tau_step) * 2.0 > opts.max_span + 1e-9 {
            return Ok(Correlation {
                tau_step: opts.tau_step,
                values,
                decayed: false,
            });
        }
        span_steps *= 2;
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"LLRHO\x00\x01\x00";

/// Binary dump of a density matrix: header with the space descriptor, then
/// row-major (re, im) little-endian doubles.
pub fn save_density(path: &Path, rho: &DensityMatrix) -> Result<(), SolverError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(CHECKPOINT_MAGIC)?;
    let info = rho.info();
    let kind: u8 = match info.kind {
        SpaceKind::Spins { .. } => 0,
        SpaceKind::Dicke { .. } => 1,
    };
    f.write_all(&[kind])?;
    f.write_all(&(info.n_atoms() as u64).to_le_bytes())?;
    f.write_all(&(info.fock_cutoff() as u64).to_le_bytes())?;
    let dim = rho.dim();
    for i in 0..dim {
        for j in 0..dim {
            let v = rho.get(i, j);
            f.write_all(&v.re.to_le_bytes())?;
            f.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_density(path: &Path) -> Result<DensityMatrix, SolverError> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(SolverError::BadCheckpoint);
    }
    let mut kind = [0u8; 1];
    f.read_exact(&mut kind)?;
    let mut buf8 = [0u8; 8];
    f.read_exact(&mut buf8)?;
    let n_atoms = u64::from_le_bytes(buf8) as usize;
    f.read_exact(&mut buf8)?;
    let fock_cutoff = u64::from_le_bytes(buf8) as usize;
    let info = match kind[0] {
        0 => SpaceInfo {
            kind: SpaceKind::Spins { n_atoms },
            n_blocks: 1usize << n_atoms,
            n_fock: fock_cutoff + 1,
        },
        1 => SpaceInfo {
            kind: SpaceKind::Dicke { n_atoms },
            n_blocks: n_atoms + 1,
            n_fock: fock_cutoff + 1,
        },
        _ => return Err(SolverError::BadCheckpoint),
    };
    let dim = info.dim();
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            f.read_exact(&mut buf8)?;
            let re = f64::from_le_bytes(buf8);
            f.read_exact(&mut buf8)?;
            let im = f64::from_le_bytes(buf8);
            data[i + j * dim] = Complex64::new(re, im);
        }
    }
    Ok(DensityMatrix::from_raw(info, data)?)
}
