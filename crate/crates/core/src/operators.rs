//! Composite Hilbert space of N two-level atoms and a truncated field mode,
//! with sparse embedded operators.
//!
//! Basis ordering is frozen because steady-state vectors are serialized:
//! `index = atom_bits * (n_max + 1) + n_photons`, where atom `i` contributes
//! bit `i` (bit value 1 = excited) and atom 0 is the least significant bit.
//! Index 0 is therefore all atoms in the ground state with the field in
//! vacuum.

use crate::sparse::CsrMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Which kind of atomic factor a space carries.
///
/// `Spins` is the full 2^N product space; `Dicke` is the (N+1)-state
/// symmetric collective-spin ladder used by the reduced model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    Spins { n_atoms: usize },
    Dicke { n_atoms: usize },
}

/// Structural description shared by the full and the reduced space: a block
/// index for the atomic factor times a photon-number ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceInfo {
    pub kind: SpaceKind,
    /// Number of atomic basis states (2^N or N+1).
    pub n_blocks: usize,
    /// Number of retained Fock levels, `fock_cutoff + 1`.
    pub n_fock: usize,
}

impl SpaceInfo {
    pub fn dim(&self) -> usize {
        self.n_blocks * self.n_fock
    }

    pub fn n_atoms(&self) -> usize {
        match self.kind {
            SpaceKind::Spins { n_atoms } | SpaceKind::Dicke { n_atoms } => n_atoms,
        }
    }

    pub fn fock_cutoff(&self) -> usize {
        self.n_fock - 1
    }

    /// Number of atomic excitations carried by atomic block `b`.
    pub fn block_excitation(&self, b: usize) -> u32 {
        match self.kind {
            SpaceKind::Spins { .. } => (b as u64).count_ones(),
            SpaceKind::Dicke { .. } => b as u32,
        }
    }

    /// Total excitation (atomic + photonic) of basis state `index`.
    pub fn excitation_of(&self, index: usize) -> u32 {
        let block = index / self.n_fock;
        let n = index % self.n_fock;
        self.block_excitation(block) + n as u32
    }

    /// Photon annihilation operator embedded on this space.
    pub fn annihilation_matrix(&self) -> CsrMatrix {
        let nf = self.n_fock;
        let mut trips = Vec::with_capacity(self.n_blocks * nf.saturating_sub(1));
        for b in 0..self.n_blocks {
            for n in 1..nf {
                trips.push((
                    b * nf + n - 1,
                    b * nf + n,
                    Complex64::new((n as f64).sqrt(), 0.0),
                ));
            }
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), &trips)
    }

    /// Population of the highest retained Fock level, `sum_b <b,n_max|rho|b,n_max>`,
    /// given a column-major density matrix buffer.
    pub fn top_fock_population(&self, rho: &[Complex64]) -> f64 {
        let dim = self.dim();
        assert_eq!(rho.len(), dim * dim);
        let mut p = 0.0;
        for b in 0..self.n_blocks {
            let i = b * self.n_fock + self.n_fock - 1;
            p += rho[i + i * dim].re;
        }
        p
    }
}

/// N two-level atoms tensored with a photon ladder truncated at `fock_cutoff`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpace {
    n_atoms: usize,
    fock_cutoff: usize,
}

impl HilbertSpace {
    /// Panics if the space would overflow the address space (n_atoms > 24).
    pub fn new(n_atoms: usize, fock_cutoff: usize) -> Self {
        assert!(n_atoms <= 24, "2^{n_atoms} atomic states is not tractable");
        HilbertSpace {
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
        (1usize << self.n_atoms) * (self.fock_cutoff + 1)
    }

    pub fn info(&self) -> SpaceInfo {
        SpaceInfo {
            kind: SpaceKind::Spins {
                n_atoms: self.n_atoms,
            },
            n_blocks: 1usize << self.n_atoms,
            n_fock: self.fock_cutoff + 1,
        }
    }

    /// Basis index of the product state `|atom_bits> ⊗ |n_photons>`.
    pub fn index(&self, atom_bits: usize, n_photons: usize) -> usize {
        debug_assert!(atom_bits < (1 << self.n_atoms));
        debug_assert!(n_photons <= self.fock_cutoff);
        atom_bits * (self.fock_cutoff + 1) + n_photons
    }

    fn atom_op(&self, i: usize, f: impl Fn(usize) -> Option<(usize, f64)>) -> SparseOperator {
        assert!(i < self.n_atoms, "atom index {i} out of range");
        let nf = self.fock_cutoff + 1;
        let nb = 1usize << self.n_atoms;
        let mut trips = Vec::with_capacity(nb * nf);
        for bits in 0..nb {
            if let Some((target, val)) = f(bits) {
                for n in 0..nf {
                    trips.push((target * nf + n, bits * nf + n, Complex64::new(val, 0.0)));
                }
            }
        }
        SparseOperator {
            space: self.info(),
            matrix: CsrMatrix::from_triplets(self.dim(), self.dim(), &trips),
        }
    }

    /// Raising operator of atom `i`: flips its bit 0 -> 1, else annihilates.
    pub fn sigma_plus(&self, i: usize) -> SparseOperator {
        self.atom_op(i, |bits| {
            (bits >> i & 1 == 0).then(|| (bits | 1 << i, 1.0))
        })
    }

    /// Lowering operator of atom `i`.
    pub fn sigma_minus(&self, i: usize) -> SparseOperator {
        self.atom_op(i, |bits| {
            (bits >> i & 1 == 1).then(|| (bits & !(1 << i), 1.0))
        })
    }

    /// Inversion operator of atom `i`: +1 on excited, -1 on ground.
    pub fn sigma_z(&self, i: usize) -> SparseOperator {
        self.atom_op(i, |bits| {
            Some((bits, if bits >> i & 1 == 1 { 1.0 } else { -1.0 }))
        })
    }

    pub fn annihilation(&self) -> SparseOperator {
        SparseOperator {
            space: self.info(),
            matrix: self.info().annihilation_matrix(),
        }
    }

    pub fn creation(&self) -> SparseOperator {
        self.annihilation().adjoint()
    }

    pub fn identity(&self) -> SparseOperator {
        SparseOperator {
            space: self.info(),
            matrix: CsrMatrix::identity(self.dim()),
        }
    }
}

/// A sparse operator bound to the space it acts on.
///
/// Arithmetic panics on space mismatch; operators from different spaces never
/// compose silently.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    space: SpaceInfo,
    matrix: CsrMatrix,
}

impl SparseOperator {
    pub fn from_matrix(space: SpaceInfo, matrix: CsrMatrix) -> Self {
        assert_eq!(matrix.nrows(), space.dim(), "operator shape mismatch");
        assert!(matrix.is_square(), "operators are square");
        SparseOperator { space, matrix }
    }

    pub fn space(&self) -> &SpaceInfo {
        &self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CsrMatrix {
        self.matrix
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn adjoint(&self) -> Self {
        SparseOperator {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        SparseOperator {
            space: self.space,
            matrix: self.matrix.scale(c),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix.get(i, j)
    }

    /// Trace of `op * rho` for a column-major density-matrix buffer.
    pub fn expectation(&self, rho: &[Complex64]) -> Complex64 {
        let dim = self.space.dim();
        assert_eq!(rho.len(), dim * dim, "state buffer size");
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, c, v) in self.matrix.triplets() {
            // (op rho)_{rr} picks rho[c, r]
            acc += v * rho[c + r * dim];
        }
        acc
    }

    /// Largest absolute deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = self.matrix.add(&self.matrix.adjoint().scale(Complex64::new(-1.0, 0.0)));
        diff.max_abs()
    }

    fn check_space(&self, other: &SparseOperator) {
        assert_eq!(
            self.space, other.space,
            "operators act on different spaces"
        );
    }

    /// Write the stored entries as JSON triplets `[row, col, re, im]`.
    pub fn dump_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{{")?;
        writeln!(
            w,
            "  \"dim\": {}, \"n_atoms\": {}, \"fock_cutoff\": {},",
            self.space.dim(),
            self.space.n_atoms(),
            self.space.fock_cutoff()
        )?;
        writeln!(w, "  \"triplets\": [")?;
        let nnz = self.matrix.nnz();
        for (k, (r, c, v)) in self.matrix.triplets().enumerate() {
            let comma = if k + 1 < nnz { "," } else { "" };
            writeln!(w, "    [{}, {}, {:e}, {:e}]{}", r, c, v.re, v.im, comma)?;
        }
        writeln!(w, "  ]")?;
        writeln!(w, "}}")
    }
}

impl std::ops::Add for &SparseOperator {
    type Output = SparseOperator;
    fn add(self, rhs: &SparseOperator) -> SparseOperator {
        self.check_space(rhs);
        SparseOperator {
            space: self.space,
            matrix: self.matrix.add(&rhs.matrix),
        }
    }
}

impl std::ops::Sub for &SparseOperator {
    type Output = SparseOperator;
    fn sub(self, rhs: &SparseOperator) -> SparseOperator {
        self.check_space(rhs);
        SparseOperator {
            space: self.space,
            matrix: self
                .matrix
                .add(&rhs.matrix.scale(Complex64::new(-1.0, 0.0))),
        }
    }
}

impl std::ops::Mul for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: &SparseOperator) -> SparseOperator {
        self.check_space(rhs);
        SparseOperator {
            space: self.space,
            matrix: self.matrix.matmul(&rhs.matrix),
        }
    }
}

impl std::ops::Mul<Complex64> for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: Complex64) -> SparseOperator {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dim_formula() {
        let s = HilbertSpace::new(3, 4);
        assert_eq!(s.dim(), 8 * 5);
        assert_eq!(s.info().dim(), s.dim());
        let empty = HilbertSpace::new(0, 2);
        assert_eq!(empty.dim(), 3);
    }

    #[test]
    fn sigma_z_single_atom_ordering() {
        // N=1, n_max=0: basis (g, e); sigma_z = diag(-1, +1)
        let s = HilbertSpace::new(1, 0);
        let sz = s.sigma_z(0);
        assert_eq!(sz.get(0, 0), Complex64::new(-1.0, 0.0));
        assert_eq!(sz.get(1, 1), Complex64::new(1.0, 0.0));
        assert_eq!(sz.nnz(), 2);
    }

    #[test]
    fn two_level_algebra() {
        let s = HilbertSpace::new(2, 1);
        for i in 0..2 {
            let sp = s.sigma_plus(i);
            let sm = s.sigma_minus(i);
            let anti = &(&sp * &sm) + &(&sm * &sp);
            let id = s.identity();
            assert!((&anti - &id).matrix().max_abs() < 1e-15);
        }
    }

    #[test]
    fn cross_atom_hop() {
        // sigma+_0 sigma-_1 maps |g e> -> |e g> and kills |e e>
        let s = HilbertSpace::new(2, 0);
        let hop = &s.sigma_plus(0) * &s.sigma_minus(1);
        let ge = s.index(0b10, 0); // atom 1 excited
        let eg = s.index(0b01, 0);
        let ee = s.index(0b11, 0);
        assert_eq!(hop.get(eg, ge), Complex64::new(1.0, 0.0));
        assert_eq!(hop.nnz(), 1);
        let mut col_ee_empty = true;
        for (_, c, _) in hop.matrix().triplets() {
            if c == ee {
                col_ee_empty = false;
            }
        }
        assert!(col_ee_empty);
    }

    #[test]
    fn ladder_matrix_elements() {
        let s = HilbertSpace::new(0, 2);
        let a = s.annihilation();
        // <1|a|2> = sqrt(2)
        assert!((a.get(1, 2) - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(a.nnz(), 2);
        let n = &s.creation() * &a;
        for k in 0..=2 {
            assert!((n.get(k, k) - Complex64::new(k as f64, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn truncated_commutator() {
        // [a, a+] = 1 except on the top Fock row
        let s = HilbertSpace::new(0, 3);
        let a = s.annihilation();
        let ad = s.creation();
        let comm = &(&a * &ad) - &(&ad * &a);
        for k in 0..3 {
            assert!((comm.get(k, k) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        // row n_max: a a+ vanishes there, leaving -n_max
        assert!((comm.get(3, 3) - Complex64::new(-3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn adjoint_pairs() {
        let s = HilbertSpace::new(2, 2);
        for i in 0..2 {
            let d = &s.sigma_plus(i).adjoint() - &s.sigma_minus(i);
            assert_eq!(d.matrix().prune(1e-15).nnz(), 0);
        }
        let d = &s.annihilation().adjoint() - &s.creation();
        assert_eq!(d.matrix().prune(1e-15).nnz(), 0);
    }

    #[test]
    fn embeddings_commute_across_sites() {
        let s = HilbertSpace::new(3, 1);
        let a = s.annihilation();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let x = s.sigma_plus(i);
                let y = s.sigma_minus(j);
                let comm = &(&x * &y) - &(&y * &x);
                assert_eq!(comm.matrix().prune(0.0).nnz(), 0);
            }
            let comm = &(&s.sigma_plus(i) * &a) - &(&a * &s.sigma_plus(i));
            assert_eq!(comm.matrix().prune(0.0).nnz(), 0);
        }
    }

    #[test]
    #[should_panic(expected = "atom index")]
    fn atom_index_out_of_range() {
        let s = HilbertSpace::new(2, 1);
        let _ = s.sigma_plus(2);
    }

    #[test]
    #[should_panic(expected = "different spaces")]
    fn space_mismatch_panics() {
        let s1 = HilbertSpace::new(1, 1);
        let s2 = HilbertSpace::new(1, 2);
        let _ = &s1.identity() + &s2.identity();
    }

    #[test]
    fn excitation_bookkeeping() {
        let s = HilbertSpace::new(2, 3).info();
        // |e g> ⊗ |2>: bits=0b01, n=2 -> excitation 3
        let idx = s.n_fock + 2;
        assert_eq!(s.excitation_of(idx), 3);
        assert_eq!(s.excitation_of(0), 0);
    }

    #[test]
    fn scalar_identity_trace() {
        let s = HilbertSpace::new(2, 1);
        let op = &s.identity() * Complex64::new(0.0, 2.5);
        let tr: Complex64 = (0..s.dim()).map(|k| op.get(k, k)).sum();
        assert!((tr - Complex64::new(0.0, 2.5 * s.dim() as f64)).norm() < 1e-12);
    }

    #[test]
    fn json_dump_has_triplets() {
        let s = HilbertSpace::new(0, 2);
        let mut buf = Vec::new();
        s.annihilation().dump_json(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"dim\": 3"));
        assert!(text.contains("[0, 1, 1e0, 0e0]"), "{text}");
        assert!(text.contains("[1, 2, 1.4142135623730951e0, 0e0]"), "{text}");
    }
}
