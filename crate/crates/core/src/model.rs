//! Rotating-frame Hamiltonian and Liouvillian assembly.
//!
//! In the frame rotating at the atomic transition frequency the Hamiltonian
//! reads
//!
//! ```text
//! H = detuning * a'a + sum_{i != j} omega_ij s+_i s-_j
//!     + g * sum_i (a s+_i + a' s-_i)
//! ```
//!
//! and the Liouvillian adds correlated atomic decay, incoherent pumping and
//! cavity loss. Conventions frozen project-wide: the cavity dissipator is
//! `kappa (2 a rho a' - a'a rho - rho a'a)`, so the field amplitude decays at
//! `kappa`, the photon number at `2 kappa`, and the empty-cavity spectral
//! width (FWHM) is `2 kappa`.
//!
//! Density matrices are vectorized by column stacking: `vec(X)[i + j*dim] =
//! X[i][j]`, hence `vec(L X R) = (R^T kron L) vec(X)`. The superoperator
//! keeps its left/right factor pairs, which gives both a matrix-free action
//! for propagation and an explicit sparse assembly for direct solves.

use crate::geometry::{CouplingMatrices, Geometry};
use crate::operators::{HilbertSpace, SparseOperator, SpaceInfo};
use crate::sparse::CsrMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{name} must be finite and {constraint}, got {value}")]
    InvalidRate {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("geometry has {geometry} atoms but the space holds {space}")]
    AtomCountMismatch { geometry: usize, space: usize },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// How spontaneous emission is correlated across atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// Rates and shifts from the positions via the radiative kernels.
    FullGeometry,
    /// `gamma_ij = gamma0 * delta_ij`, no shifts.
    Independent,
    /// `gamma_ij = gamma0` for every pair, no shifts.
    FullyCollective,
}

/// Whether the incoherent pump addresses atoms one by one or through the
/// collective raising operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpMode {
    Individual,
    Collective,
}

/// Physical rates in units of the cavity decay rate `kappa`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Atom-cavity coupling.
    pub g: f64,
    /// Cavity field decay rate; the frequency unit of every output.
    pub kappa: f64,
    /// Single-atom spontaneous linewidth.
    pub gamma0: f64,
    /// Incoherent pump rate.
    pub pump_rate: f64,
    /// Cavity-atom detuning, `omega_c - omega_0`.
    pub detuning: f64,
    pub decay_mode: DecayMode,
    pub pump_mode: PumpMode,
    pub geometry: Geometry,
}

impl ModelParams {
    /// Defaults used by presets: resonant cavity, `g = kappa`, individual
    /// pump, geometry-resolved decay.
    pub fn new(geometry: Geometry) -> Self {
        ModelParams {
            g: 1.0,
            kappa: 1.0,
            gamma0: 0.2,
            pump_rate: 1.0,
            detuning: 0.0,
            decay_mode: DecayMode::FullGeometry,
            pump_mode: PumpMode::Individual,
            geometry,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let checks: [(&'static str, f64, bool); 5] = [
            ("kappa", self.kappa, self.kappa > 0.0),
            ("g", self.g, self.g >= 0.0),
            ("gamma0", self.gamma0, self.gamma0 >= 0.0),
            ("pump_rate", self.pump_rate, self.pump_rate >= 0.0),
            ("detuning", self.detuning, true),
        ];
        for (name, value, ok) in checks {
            if !value.is_finite() || !ok {
                let constraint = if name == "kappa" {
                    "> 0"
                } else if name == "detuning" {
                    "a real number"
                } else {
                    ">= 0"
                };
                return Err(ModelError::InvalidRate {
                    name,
                    constraint,
                    value,
                });
            }
        }
        Ok(())
    }

    /// Effective decay/shift matrices for the selected decay mode.
    pub fn couplings(&self) -> Result<CouplingMatrices, ModelError> {
        let n = self.geometry.n_atoms();
        Ok(match self.decay_mode {
            DecayMode::FullGeometry => {
                if n == 0 {
                    CouplingMatrices::independent(0, self.gamma0.max(f64::MIN_POSITIVE))
                } else {
                    CouplingMatrices::compute(&self.geometry, self.gamma0.max(f64::MIN_POSITIVE))?
                }
            }
            DecayMode::Independent => CouplingMatrices::independent(n, self.gamma0),
            DecayMode::FullyCollective => CouplingMatrices::fully_collective(n, self.gamma0),
        })
    }
}

/// One Lindblad group `(1/2) sum_ij rates_ij (2 L_i rho L_j' - L_i'L_j rho -
/// rho L_i'L_j)` with a real symmetric rate matrix.
pub struct DissipatorSpec {
    pub ops: Vec<CsrMatrix>,
    /// Row-major `ops.len() x ops.len()` rate matrix.
    pub rates: Vec<f64>,
}

struct SuperTerm {
    coeff: Complex64,
    left: Option<CsrMatrix>,
    right: Option<CsrMatrix>,
}

/// Linear generator of the master equation acting on vectorized density
/// matrices (column stacking).
pub struct Superoperator {
    info: SpaceInfo,
    terms: Vec<SuperTerm>,
    explicit: OnceLock<CsrMatrix>,
}

impl Superoperator {
    /// Assemble from a Hamiltonian and dissipator groups.
    pub fn build(info: SpaceInfo, h: Option<&CsrMatrix>, groups: &[DissipatorSpec]) -> Self {
        let dim = info.dim();
        if let Some(h) = h {
            assert_eq!(h.nrows(), dim, "hamiltonian dimension");
        }
        // accumulated anticommutator part K = 1/2 sum rates_ij L_i' L_j
        let mut k_acc: Option<CsrMatrix> = None;
        let mut terms: Vec<SuperTerm> = Vec::new();
        for group in groups {
            let n = group.ops.len();
            assert_eq!(group.rates.len(), n * n, "rate matrix shape");
            let adjoints: Vec<CsrMatrix> = group.ops.iter().map(|o| o.adjoint()).collect();
            for i in 0..n {
                for j in 0..n {
                    let m = group.rates[i * n + j];
                    if m == 0.0 {
                        continue;
                    }
                    let mij = Complex64::new(m, 0.0);
                    terms.push(SuperTerm {
                        coeff: mij,
                        left: Some(group.ops[i].clone()),
                        right: Some(adjoints[j].clone()),
                    });
                    let prod = adjoints[i].matmul(&group.ops[j]);
                    let half = prod.scale(Complex64::new(0.5 * m, 0.0));
                    k_acc = Some(match k_acc {
                        Some(k) => k.add(&half),
                        None => half,
                    });
                }
            }
        }
        let minus_i = Complex64::new(0.0, -1.0);
        let plus_i = Complex64::new(0.0, 1.0);
        let neg = Complex64::new(-1.0, 0.0);
        let (drift_left, drift_right) = match (h, &k_acc) {
            (Some(h), Some(k)) => (
                Some(h.scale(minus_i).add(&k.scale(neg))),
                Some(h.scale(plus_i).add(&k.scale(neg))),
            ),
            (Some(h), None) => (Some(h.scale(minus_i)), Some(h.scale(plus_i))),
            (None, Some(k)) => (Some(k.scale(neg)), Some(k.scale(neg))),
            (None, None) => (None, None),
        };
        if let Some(a) = drift_left {
            terms.insert(
                0,
                SuperTerm {
                    coeff: Complex64::new(1.0, 0.0),
                    left: Some(a),
                    right: None,
                },
            );
        }
        if let Some(a) = drift_right {
            terms.insert(
                1,
                SuperTerm {
                    coeff: Complex64::new(1.0, 0.0),
                    left: None,
                    right: Some(a),
                },
            );
        }
        Superoperator {
            info,
            terms,
            explicit: OnceLock::new(),
        }
    }

    pub fn info(&self) -> &SpaceInfo {
        &self.info
    }

    pub fn dim(&self) -> usize {
        self.info.dim()
    }

    pub fn dim_sq(&self) -> usize {
        self.dim() * self.dim()
    }

    /// Matrix-free action on a vectorized state.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        let mut scratch = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply_into(x, &mut y, &mut scratch);
        y
    }

    /// `y = L[x]` with a caller-provided scratch buffer of the same length.
    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64], scratch: &mut [Complex64]) {
        let dim = self.dim();
        assert_eq!(x.len(), dim * dim, "vectorized state length");
        assert_eq!(y.len(), x.len());
        assert_eq!(scratch.len(), x.len());
        y.fill(Complex64::new(0.0, 0.0));
        for term in &self.terms {
            match (&term.left, &term.right) {
                (Some(l), None) => {
                    // y += coeff * L X  (column by column)
                    for j in 0..dim {
                        let xc = &x[j * dim..(j + 1) * dim];
                        let yc = &mut y[j * dim..(j + 1) * dim];
                        l.matvec_acc(term.coeff, xc, yc);
                    }
                }
                (None, Some(r)) => {
                    // y[:,j] += coeff * sum_k R[k,j] X[:,k]
                    for k in 0..dim {
                        let (cols, vals) = r.row(k);
                        for (&j, &v) in cols.iter().zip(vals) {
                            let w = term.coeff * v;
                            for i in 0..dim {
                                y[i + j * dim] += w * x[i + k * dim];
                            }
                        }
                    }
                }
                (Some(l), Some(r)) => {
                    // scratch = L X, then y += coeff * scratch R
                    l.mul_dense_into(x, dim, scratch);
                    for k in 0..dim {
                        let (cols, vals) = r.row(k);
                        for (&j, &v) in cols.iter().zip(vals) {
                            let w = term.coeff * v;
                            for i in 0..dim {
                                y[i + j * dim] += w * scratch[i + k * dim];
                            }
                        }
                    }
                }
                (None, None) => {
                    for (yi, xi) in y.iter_mut().zip(x) {
                        *yi += term.coeff * xi;
                    }
                }
            }
        }
    }

    /// Explicit sparse matrix of the superoperator (assembled once, cached).
    pub fn matrix(&self) -> &CsrMatrix {
        self.explicit.get_or_init(|| self.assemble())
    }

    fn assemble(&self) -> CsrMatrix {
        let dim = self.dim();
        let side = dim * dim;
        let mut nnz_est = 0usize;
        for t in &self.terms {
            let nl = t.left.as_ref().map_or(dim, |m| m.nnz());
            let nr = t.right.as_ref().map_or(dim, |m| m.nnz());
            nnz_est += nl * nr;
        }
        let mut trips: Vec<(usize, usize, Complex64)> = Vec::with_capacity(nnz_est);
        for t in &self.terms {
            match (&t.left, &t.right) {
                (Some(l), None) => {
                    // kron(I, L)
                    for (rl, cl, vl) in l.triplets() {
                        let v = t.coeff * vl;
                        for d in 0..dim {
                            trips.push((d * dim + rl, d * dim + cl, v));
                        }
                    }
                }
                (None, Some(r)) => {
                    // kron(R^T, I)
                    for (rr, cr, vr) in r.triplets() {
                        let v = t.coeff * vr;
                        for d in 0..dim {
                            trips.push((cr * dim + d, rr * dim + d, v));
                        }
                    }
                }
                (Some(l), Some(r)) => {
                    for (rr, cr, vr) in r.triplets() {
                        for (rl, cl, vl) in l.triplets() {
                            trips.push((cr * dim + rl, rr * dim + cl, t.coeff * vr * vl));
                        }
                    }
                }
                (None, None) => {
                    for d in 0..side {
                        trips.push((d, d, t.coeff));
                    }
                }
            }
        }
        CsrMatrix::from_triplets_owned(side, side, &mut trips)
    }

    /// Magnitude scale of the generator, the largest entry of the assembled
    /// matrix. Residual tolerances are relative to this.
    pub fn scale(&self) -> f64 {
        self.matrix().max_abs()
    }
}

/// Collective raising operator `sum_i s+_i` on the full space.
pub fn collective_raising(space: &HilbertSpace) -> SparseOperator {
    let n = space.n_atoms();
    assert!(n > 0, "collective raising needs at least one atom");
    let mut acc = space.sigma_plus(0);
    for i in 1..n {
        acc = &acc + &space.sigma_plus(i);
    }
    acc
}

/// Rotating-frame Hamiltonian. The result is Hermitian by construction;
/// `hermiticity_defect` of the output stays below 1e-14.
pub fn hamiltonian(params: &ModelParams, space: &HilbertSpace) -> Result<SparseOperator, ModelError> {
    params.validate()?;
    let n = space.n_atoms();
    if params.geometry.n_atoms() != n {
        return Err(ModelError::AtomCountMismatch {
            geometry: params.geometry.n_atoms(),
            space: n,
        });
    }
    let cm = params.couplings()?;
    let a = space.annihilation();
    let ad = space.creation();
    let mut h = if params.detuning != 0.0 {
        &(&ad * &a) * Complex64::new(params.detuning, 0.0)
    } else {
        SparseOperator::from_matrix(space.info(), CsrMatrix::zeros(space.dim(), space.dim()))
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = cm.omega(i, j);
            if w != 0.0 {
                let hop = &space.sigma_plus(i) * &space.sigma_minus(j);
                h = &h + &(&hop * Complex64::new(w, 0.0));
            }
        }
        if params.g != 0.0 {
            let jc = &(&a * &space.sigma_plus(i)) + &(&ad * &space.sigma_minus(i));
            h = &h + &(&jc * Complex64::new(params.g, 0.0));
        }
    }
    let h = SparseOperator::from_matrix(space.info(), h.matrix().prune(0.0));
    debug_assert!(h.hermiticity_defect() < 1e-14);
    Ok(h)
}

/// Full Liouvillian: Hamiltonian part plus correlated decay, pump and cavity
/// loss dissipators.
pub fn liouvillian(params: &ModelParams, space: &HilbertSpace) -> Result<Superoperator, ModelError> {
    let h = hamiltonian(params, space)?;
    let n = space.n_atoms();
    let cm = params.couplings()?;
    let mut groups: Vec<DissipatorSpec> = Vec::new();
    if n > 0 && params.gamma0 > 0.0 {
        let ops: Vec<CsrMatrix> = (0..n)
            .map(|i| space.sigma_minus(i).into_matrix())
            .collect();
        let mut rates = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                rates[i * n + j] = cm.gamma(i, j);
            }
        }
        groups.push(DissipatorSpec { ops, rates });
    }
    if n > 0 && params.pump_rate > 0.0 {
        match params.pump_mode {
            PumpMode::Individual => {
                let ops: Vec<CsrMatrix> = (0..n)
                    .map(|i| space.sigma_plus(i).into_matrix())
                    .collect();
                let mut rates = vec![0.0; n * n];
                for i in 0..n {
                    rates[i * n + i] = params.pump_rate;
                }
                groups.push(DissipatorSpec { ops, rates });
            }
            PumpMode::Collective => {
                groups.push(DissipatorSpec {
                    ops: vec![collective_raising(space).into_matrix()],
                    rates: vec![params.pump_rate],
                });
            }
        }
    }
    groups.push(DissipatorSpec {
        ops: vec![space.annihilation().into_matrix()],
        rates: vec![2.0 * params.kappa],
    });
    Ok(Superoperator::build(space.info(), Some(h.matrix()), &groups))
}
