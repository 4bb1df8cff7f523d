//! Reduced collective-spin model.
//!
//! When every atom decays and is pumped through the same collective channel,
//! the total spin magnitude is conserved and the atomic factor can be
//! restricted to the symmetric ladder of a spin-N/2: N+1 states instead of
//! 2^N. Dipole-dipole shifts are absent in this regime, so the Hamiltonian
//! keeps only the detuning and the collective exchange with the mode.

use crate::model::{DissipatorSpec, ModelError, ModelParams, Superoperator};
use crate::observables::{g2_from_moments, ObservableSet};
use crate::operators::{SparseOperator, SpaceInfo, SpaceKind};
use crate::sparse::CsrMatrix;
use crate::states::DensityMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Symmetric spin-N/2 ladder tensored with a truncated photon ladder.
/// Basis: `index = m_idx * (n_max + 1) + n` with `m = m_idx - N/2`, so block
/// `m_idx` carries `m_idx` atomic excitations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DickeSpace {
    n_atoms: usize,
    fock_cutoff: usize,
}

impl DickeSpace {
    pub fn new(n_atoms: usize, fock_cutoff: usize) -> Self {
        assert!(n_atoms >= 1, "the reduced model needs at least one atom");
        DickeSpace {
            n_atoms,
            fock_cutoff,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn dim(&self) -> usize {
        (self.n_atoms + 1) * (self.fock_cutoff + 1)
    }

    pub fn info(&self) -> SpaceInfo {
        SpaceInfo {
            kind: SpaceKind::Dicke {
                n_atoms: self.n_atoms,
            },
            n_blocks: self.n_atoms + 1,
            n_fock: self.fock_cutoff + 1,
        }
    }

    pub fn index(&self, m_idx: usize, n_photons: usize) -> usize {
        debug_assert!(m_idx <= self.n_atoms && n_photons <= self.fock_cutoff);
        m_idx * (self.fock_cutoff + 1) + n_photons
    }

    fn spin_j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// Collective raising operator, `<m+1|S+|m> = sqrt(J(J+1) - m(m+1))`.
    pub fn s_plus(&self) -> SparseOperator {
        let j = self.spin_j();
        let nf = self.fock_cutoff + 1;
        let mut trips = Vec::new();
        for m_idx in 0..self.n_atoms {
            let m = m_idx as f64 - j;
            let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
            for n in 0..nf {
                trips.push((
                    (m_idx + 1) * nf + n,
                    m_idx * nf + n,
                    Complex64::new(amp, 0.0),
                ));
            }
        }
        SparseOperator::from_matrix(
            self.info(),
            CsrMatrix::from_triplets(self.dim(), self.dim(), &trips),
        )
    }

    pub fn s_minus(&self) -> SparseOperator {
        self.s_plus().adjoint()
    }

    /// Collective inversion `S_z` with eigenvalues `m = -N/2 .. N/2`.
    pub fn s_z(&self) -> SparseOperator {
        let j = self.spin_j();
        let nf = self.fock_cutoff + 1;
        let mut trips = Vec::new();
        for m_idx in 0..=self.n_atoms {
            let m = m_idx as f64 - j;
            for n in 0..nf {
                trips.push((m_idx * nf + n, m_idx * nf + n, Complex64::new(m, 0.0)));
            }
        }
        SparseOperator::from_matrix(
            self.info(),
            CsrMatrix::from_triplets(self.dim(), self.dim(), &trips),
        )
    }

    pub fn annihilation(&self) -> SparseOperator {
        SparseOperator::from_matrix(self.info(), self.info().annihilation_matrix())
    }

    pub fn creation(&self) -> SparseOperator {
        self.annihilation().adjoint()
    }

    pub fn identity(&self) -> SparseOperator {
        SparseOperator::from_matrix(self.info(), CsrMatrix::identity(self.dim()))
    }
}

/// Liouvillian of the reduced model: `H = detuning a'a + g (a S+ + a' S-)`,
/// collective decay at `gamma0`, collective pump at `pump_rate`, cavity loss
/// per the project convention. Geometry, decay and pump mode fields of
/// `params` are ignored; the reduced model is collective by construction.
pub fn collective_liouvillian(
    params: &ModelParams,
    space: &DickeSpace,
) -> Result<Superoperator, ModelError> {
    params.validate()?;
    let info = space.info();
    let a = space.annihilation();
    let ad = space.creation();
    let sp = space.s_plus();
    let sm = space.s_minus();
    let mut h = &(&ad * &a) * Complex64::new(params.detuning, 0.0);
    if params.g != 0.0 {
        let exchange = &(&a * &sp) + &(&ad * &sm);
        h = &h + &(&exchange * Complex64::new(params.g, 0.0));
    }
    let h = h.matrix().prune(0.0);
    let mut groups = Vec::new();
    if params.gamma0 > 0.0 {
        groups.push(DissipatorSpec {
            ops: vec![sm.matrix().clone()],
            rates: vec![params.gamma0],
        });
    }
    if params.pump_rate > 0.0 {
        groups.push(DissipatorSpec {
            ops: vec![sp.matrix().clone()],
            rates: vec![params.pump_rate],
        });
    }
    groups.push(DissipatorSpec {
        ops: vec![a.matrix().clone()],
        rates: vec![2.0 * params.kappa],
    });
    Ok(Superoperator::build(info, Some(&h), &groups))
}

/// Photon number, per-atom inversion `<Sz>/J` and second-order coherence for
/// a reduced-model state.
pub fn collective_observables(rho: &DensityMatrix, space: &DickeSpace) -> ObservableSet {
    let info = space.info();
    assert_eq!(rho.info(), &info, "state does not live on this space");
    let nf = info.n_fock;
    let mut n_mean = 0.0;
    let mut n2_fact = 0.0;
    let mut sz = 0.0;
    let j = space.spin_j();
    for b in 0..info.n_blocks {
        let m = b as f64 - j;
        for n in 0..nf {
            let idx = b * nf + n;
            let p = rho.get(idx, idx).re;
            n_mean += n as f64 * p;
            n2_fact += (n * n.saturating_sub(1)) as f64 * p;
            sz += m * p;
        }
    }
    let inversion = sz / j;
    ObservableSet {
        photon_number: n_mean.max(0.0),
        inversion: Some(inversion),
        per_atom_inversion: vec![inversion; space.n_atoms()],
        g2_zero: g2_from_moments(n_mean, n2_fact),
    }
}
