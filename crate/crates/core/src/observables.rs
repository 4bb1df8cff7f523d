//! Scalar diagnostics of a state: photon number, atomic inversion and the
//! normalized second-order coherence g2(0) = <a'a'aa> / <a'a>^2.

use crate::operators::HilbertSpace;
use crate::states::DensityMatrix;
use serde::Serialize;

/// Photon number below which g2(0) is reported as undefined rather than as a
/// ratio of numerical noise.
pub const G2_PHOTON_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct ObservableSet {
    /// `<a'a>`, clipped at zero against roundoff.
    pub photon_number: f64,
    /// Per-atom averaged `<sigma_z>`; `None` for an empty cavity.
    pub inversion: Option<f64>,
    pub per_atom_inversion: Vec<f64>,
    /// `None` when the field is essentially vacuum.
    pub g2_zero: Option<f64>,
}

impl ObservableSet {
    /// Sub-Poissonian output per the g2(0) < 1 criterion.
    pub fn antibunching(&self) -> bool {
        matches!(self.g2_zero, Some(g2) if g2 < 1.0)
    }
}

pub(crate) fn g2_from_moments(n_mean: f64, n2_factorial: f64) -> Option<f64> {
    if n_mean < G2_PHOTON_FLOOR {
        None
    } else {
        Some((n2_factorial / (n_mean * n_mean)).max(0.0))
    }
}

/// `<a'a>` from the Fock-diagonal populations.
pub fn photon_number(rho: &DensityMatrix) -> f64 {
    let info = *rho.info();
    let nf = info.n_fock;
    let mut n_mean = 0.0;
    for b in 0..info.n_blocks {
        for n in 1..nf {
            let idx = b * nf + n;
            n_mean += n as f64 * rho.get(idx, idx).re;
        }
    }
    n_mean.max(0.0)
}

/// Normally ordered `<a'a'aa> = <n(n-1)>`.
pub fn photon_number_factorial2(rho: &DensityMatrix) -> f64 {
    let info = *rho.info();
    let nf = info.n_fock;
    let mut acc = 0.0;
    for b in 0..info.n_blocks {
        for n in 2..nf {
            let idx = b * nf + n;
            acc += (n * (n - 1)) as f64 * rho.get(idx, idx).re;
        }
    }
    acc
}

/// `g2(0)`; `None` on (numerical) vacuum.
pub fn g2_zero(rho: &DensityMatrix) -> Option<f64> {
    g2_from_moments(photon_number(rho), photon_number_factorial2(rho))
}

/// `<sigma_z>` of each atom in the full model.
pub fn per_atom_inversion(rho: &DensityMatrix, space: &HilbertSpace) -> Vec<f64> {
    assert_eq!(rho.info(), &space.info(), "state does not live on this space");
    let nf = space.fock_cutoff() + 1;
    let n_atoms = space.n_atoms();
    let mut out = vec![0.0; n_atoms];
    for bits in 0..(1usize << n_atoms) {
        let mut block_pop = 0.0;
        for n in 0..nf {
            let idx = bits * nf + n;
            block_pop += rho.get(idx, idx).re;
        }
        for (i, inv) in out.iter_mut().enumerate() {
            *inv += if bits >> i & 1 == 1 {
                block_pop
            } else {
                -block_pop
            };
        }
    }
    out
}

/// Atom-averaged inversion; `None` for zero atoms.
pub fn inversion(rho: &DensityMatrix, space: &HilbertSpace) -> Option<f64> {
    let per_atom = per_atom_inversion(rho, space);
    if per_atom.is_empty() {
        None
    } else {
        Some(per_atom.iter().sum::<f64>() / per_atom.len() as f64)
    }
}

/// Full observable bundle for a full-model state.
pub fn observable_set(rho: &DensityMatrix, space: &HilbertSpace) -> ObservableSet {
    let per_atom = per_atom_inversion(rho, space);
    let inv = if per_atom.is_empty() {
        None
    } else {
        Some(per_atom.iter().sum::<f64>() / per_atom.len() as f64)
    };
    ObservableSet {
        photon_number: photon_number(rho),
        inversion: inv,
        per_atom_inversion: per_atom,
        g2_zero: g2_zero(rho),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::DensityMatrix;
    use num_complex::Complex64;

    #[test]
    fn fock_one_statistics() {
        let space = HilbertSpace::new(0, 3);
        let rho = DensityMatrix::fock(space.info(), 1);
        assert!((photon_number(&rho) - 1.0).abs() < 1e-15);
        assert_eq!(g2_zero(&rho), Some(0.0));
    }

    #[test]
    fn coherent_state_is_poissonian() {
        let space = HilbertSpace::new(0, 20);
        let rho = DensityMatrix::coherent(space.info(), Complex64::new(2f64.sqrt(), 0.0));
        let g2 = g2_zero(&rho).unwrap();
        assert!((g2 - 1.0).abs() < 1e-6, "coherent g2 = {g2}");
    }

    #[test]
    fn thermal_state_is_bunched() {
        let space = HilbertSpace::new(0, 20);
        let rho = DensityMatrix::thermal(space.info(), 0.5);
        let g2 = g2_zero(&rho).unwrap();
        assert!((g2 - 2.0).abs() < 1e-3, "thermal g2 = {g2}");
        // exact truncated oracle: geometric weights w_n = q^n
        let q: f64 = 0.5 / 1.5;
        let nf = 21;
        let z: f64 = (0..nf).map(|n| q.powi(n)).sum();
        let nbar: f64 = (0..nf).map(|n| n as f64 * q.powi(n)).sum::<f64>() / z;
        let n2f: f64 = (0..nf).map(|n| (n * (n - 1)) as f64 * q.powi(n)).sum::<f64>() / z;
        assert!((g2 - n2f / (nbar * nbar)).abs() < 1e-12);
    }

    #[test]
    fn vacuum_g2_undefined() {
        let space = HilbertSpace::new(1, 2);
        let rho = DensityMatrix::ground(space.info());
        assert!(g2_zero(&rho).is_none());
    }

    #[test]
    fn inversion_extremes() {
        let space = HilbertSpace::new(3, 1);
        let ground = DensityMatrix::ground(space.info());
        assert_eq!(inversion(&ground, &space), Some(-1.0));
        let all_excited = DensityMatrix::basis_state(space.info(), 0b111, 0);
        assert_eq!(inversion(&all_excited, &space), Some(1.0));
        let one_excited = DensityMatrix::basis_state(space.info(), 0b001, 0);
        let per = per_atom_inversion(&one_excited, &space);
        assert_eq!(per, vec![1.0, -1.0, -1.0]);
        assert!((inversion(&one_excited, &space).unwrap() + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_cavity_inversion_undefined() {
        let space = HilbertSpace::new(0, 2);
        let rho = DensityMatrix::fock(space.info(), 1);
        assert_eq!(inversion(&rho, &space), None);
    }

    #[test]
    fn observables_invariant_under_global_phase_rotation() {
        // conjugation by exp(i phi (a'a + sum sigma_z / 2)) leaves every
        // reported observable unchanged
        let space = HilbertSpace::new(2, 3);
        let info = space.info();
        let dim = info.dim();
        // a correlated (non-diagonal) state: projector onto a superposition
        let amps: Vec<Complex64> = (0..dim)
            .map(|k| Complex64::new(1.0 + (k as f64 * 0.7).sin(), 0.3 * (k as f64).cos()))
            .collect();
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i + j * dim] = amps[i] * amps[j].conj() / norm2;
            }
        }
        let rho = DensityMatrix::from_raw(info, data.clone()).unwrap();
        let phi = 0.7;
        let nf = info.n_fock;
        let phase = |idx: usize| -> Complex64 {
            let bits = idx / nf;
            let n = idx % nf;
            // sigma_z/2 eigenvalue relative to the all-ground state
            let half_sz = bits.count_ones() as f64 - space.n_atoms() as f64 / 2.0;
            Complex64::new(0.0, phi * (n as f64 + half_sz)).exp()
        };
        let mut rotated = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                rotated[i + j * dim] = phase(i) * data[i + j * dim] * phase(j).conj();
            }
        }
        let rho2 = DensityMatrix::from_raw(info, rotated).unwrap();
        let a = observable_set(&rho, &space);
        let b = observable_set(&rho2, &space);
        assert!((a.photon_number - b.photon_number).abs() < 1e-13);
        assert!((a.inversion.unwrap() - b.inversion.unwrap()).abs() < 1e-13);
        assert!((a.g2_zero.unwrap() - b.g2_zero.unwrap()).abs() < 1e-12);
    }
}
