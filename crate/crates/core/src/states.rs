//! Density matrices and standard reference states.
//!
//! A [`DensityMatrix`] owns a column-major `dim * dim` complex buffer; that
//! buffer is exactly the column-stacked vector the superoperator machinery
//! acts on, so no copies happen between solving and observable evaluation.

use crate::operators::SpaceInfo;
use faer::complex_native::c64;
use num_complex::Complex64;
use thiserror::Error;

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Numerical positive semidefiniteness: eigenvalues may undershoot zero by
/// at most this much.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("state buffer has {got} entries, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("hermiticity defect {0:.3e} exceeds {HERMITICITY_TOL:.0e}")]
    NotHermitian(f64),
    #[error("trace deviates from one by {0:.3e}")]
    TraceDeviation(f64),
    #[error("minimum eigenvalue {0:.3e} below -{PSD_TOL:.0e}")]
    NotPositive(f64),
}

/// Quality diagnostics of a numerical density matrix.
#[derive(Clone, Copy, Debug)]
pub struct StateQuality {
    pub hermiticity_defect: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    info: SpaceInfo,
    /// Column-major dim x dim buffer; `data[i + j*dim] = rho_ij`.
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// Wrap a buffer after checking the physicality invariants.
    pub fn from_raw(info: SpaceInfo, data: Vec<Complex64>) -> Result<Self, StateError> {
        let dm = Self::from_raw_unchecked(info, data)?;
        let q = dm.quality();
        if q.hermiticity_defect > HERMITICITY_TOL {
            return Err(StateError::NotHermitian(q.hermiticity_defect));
        }
        if q.trace_deviation > TRACE_TOL {
            return Err(StateError::TraceDeviation(q.trace_deviation));
        }
        if q.min_eigenvalue < -PSD_TOL {
            return Err(StateError::NotPositive(q.min_eigenvalue));
        }
        Ok(dm)
    }

    /// Wrap without physicality checks (size is still enforced). Used for
    /// intermediate propagation states that are deliberately not states.
    pub fn from_raw_unchecked(info: SpaceInfo, data: Vec<Complex64>) -> Result<Self, StateError> {
        let dim = info.dim();
        if data.len() != dim * dim {
            return Err(StateError::BufferSize {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(DensityMatrix { info, data })
    }

    pub fn info(&self) -> &SpaceInfo {
        &self.info
    }

    pub fn dim(&self) -> usize {
        self.info.dim()
    }

    /// The column-stacked buffer.
    pub fn as_vec(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i + j * self.dim()]
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|k| self.data[k + k * dim]).sum()
    }

    pub fn quality(&self) -> StateQuality {
        let dim = self.dim();
        let mut herm: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                let d = (self.data[i + j * dim] - self.data[j + i * dim].conj()).norm();
                herm = herm.max(d);
            }
        }
        let trace_deviation = (self.trace() - Complex64::new(1.0, 0.0)).norm();
        let m = faer::Mat::<c64>::from_fn(dim, dim, |i, j| {
            let a = self.data[i + j * dim];
            let b = self.data[j + i * dim].conj();
            c64::new(0.5 * (a.re + b.re), 0.5 * (a.im + b.im))
        });
        let eigs: Vec<f64> = m.as_ref().selfadjoint_eigenvalues(faer::Side::Lower);
        let min_eigenvalue = eigs.into_iter().fold(f64::INFINITY, f64::min);
        StateQuality {
            hermiticity_defect: herm,
            trace_deviation,
            min_eigenvalue,
        }
    }

    /// Population of the highest retained Fock level.
    pub fn top_fock_population(&self) -> f64 {
        self.info.top_fock_population(&self.data)
    }

    /// Pure product state: atomic block `b`, photon number `n`.
    pub fn basis_state(info: SpaceInfo, block: usize, n_photons: usize) -> Self {
        let dim = info.dim();
        assert!(block < info.n_blocks && n_photons < info.n_fock);
        let idx = block * info.n_fock + n_photons;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        data[idx + idx * dim] = Complex64::new(1.0, 0.0);
        DensityMatrix { info, data }
    }

    /// All atoms in the ground state, field in vacuum.
    pub fn ground(info: SpaceInfo) -> Self {
        Self::basis_state(info, 0, 0)
    }

    /// Atoms in the ground state, field in Fock state `n`.
    pub fn fock(info: SpaceInfo, n: usize) -> Self {
        Self::basis_state(info, 0, n)
    }

    /// Atoms in the ground state, field in a truncated coherent state of
    /// amplitude `alpha` (renormalized on the retained levels).
    pub fn coherent(info: SpaceInfo, alpha: Complex64) -> Self {
        let dim = info.dim();
        let nf = info.n_fock;
        let mut amp = vec![Complex64::new(0.0, 0.0); nf];
        let mut cur = Complex64::new(1.0, 0.0);
        amp[0] = cur;
        for n in 1..nf {
            cur *= alpha / Complex64::new((n as f64).sqrt(), 0.0);
            amp[n] = cur;
        }
        let norm2: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
        let scale = 1.0 / norm2.sqrt();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for n in 0..nf {
            for m in 0..nf {
                data[n + m * dim] = amp[n] * amp[m].conj() * scale * scale;
            }
        }
        DensityMatrix { info, data }
    }

    /// Atoms in the ground state, field thermal with mean occupation `nbar`
    /// of the untruncated distribution, renormalized on the retained levels.
    pub fn thermal(info: SpaceInfo, nbar: f64) -> Self {
        assert!(nbar >= 0.0);
        let dim = info.dim();
        let nf = info.n_fock;
        let q = nbar / (nbar + 1.0);
        let mut p = vec![0.0; nf];
        let mut cur = 1.0;
        for n in 0..nf {
            p[n] = cur;
            cur *= q;
        }
        let norm: f64 = p.iter().sum();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for n in 0..nf {
            data[n + n * dim] = Complex64::new(p[n] / norm, 0.0);
        }
        DensityMatrix { info, data }
    }

    /// Maximally mixed state.
    pub fn maximally_mixed(info: SpaceInfo) -> Self {
        let dim = info.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            data[k + k * dim] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { info, data }
    }
}
