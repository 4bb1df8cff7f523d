//! Conserved-sector decomposition of vectorized density matrices.
//!
//! Without a coherent drive every term of the Liouvillian either commutes
//! with the total excitation number or lowers/raises bra and ket sides
//! together, so the difference `k = excitation(row) - excitation(column)` of
//! a density-matrix element is conserved. Steady states live in the `k = 0`
//! sector and first-order field correlations in `k = -1`, which cuts direct
//! solves and propagation by roughly the number of sectors.
//!
//! Every solver that exploits this re-checks its result against the full
//! generator, so correctness never rests on the sector argument alone.

use crate::operators::SpaceInfo;
use crate::sparse::CsrMatrix;
use num_complex::Complex64;

pub struct ExcitationBlocks {
    dim: usize,
    /// Sector label of each vectorized index.
    sector_of: Vec<i32>,
    /// Position of each vectorized index inside its sector.
    pos_in_sector: Vec<u32>,
    /// Sector labels in ascending order with their member indices
    /// (ascending as well, so gather/scatter are deterministic).
    sectors: Vec<(i32, Vec<usize>)>,
}

impl ExcitationBlocks {
    pub fn build(info: &SpaceInfo) -> Self {
        let dim = info.dim();
        let exc: Vec<i32> = (0..dim).map(|i| info.excitation_of(i) as i32).collect();
        let side = dim * dim;
        let mut sector_of = vec![0i32; side];
        for j in 0..dim {
            for i in 0..dim {
                sector_of[i + j * dim] = exc[i] - exc[j];
            }
        }
        let (min_k, max_k) = sector_of
            .iter()
            .fold((i32::MAX, i32::MIN), |(lo, hi), &k| (lo.min(k), hi.max(k)));
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); (max_k - min_k + 1) as usize];
        for (v, &k) in sector_of.iter().enumerate() {
            members[(k - min_k) as usize].push(v);
        }
        let mut pos_in_sector = vec![0u32; side];
        let mut sectors = Vec::new();
        for (off, idxs) in members.into_iter().enumerate() {
            if idxs.is_empty() {
                continue;
            }
            for (p, &v) in idxs.iter().enumerate() {
                pos_in_sector[v] = p as u32;
            }
            sectors.push((min_k + off as i32, idxs));
        }
        ExcitationBlocks {
            dim,
            sector_of,
            pos_in_sector,
            sectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sector_indices(&self, k: i32) -> Option<&[usize]> {
        self.sectors
            .iter()
            .find(|(label, _)| *label == k)
            .map(|(_, idx)| idx.as_slice())
    }

    pub fn sector_of(&self, vec_index: usize) -> i32 {
        self.sector_of[vec_index]
    }

    /// Restrict a superoperator matrix to one sector. Entries leaving the
    /// sector are rejected: the generator must be block closed.
    pub fn extract_block(&self, full: &CsrMatrix, k: i32) -> Option<CsrMatrix> {
        let idx = self.sector_indices(k)?;
        let n = idx.len();
        let mut trips: Vec<(usize, usize, Complex64)> = Vec::new();
        for (local_r, &global_r) in idx.iter().enumerate() {
            let (cols, vals) = full.row(global_r);
            for (&c, &v) in cols.iter().zip(vals) {
                assert_eq!(
                    self.sector_of[c], k,
                    "generator couples sectors {} and {}",
                    self.sector_of[c], k
                );
                trips.push((local_r, self.pos_in_sector[c] as usize, v));
            }
        }
        Some(CsrMatrix::from_triplets_owned(n, n, &mut trips))
    }

    /// Whether every stored entry of `full` stays within one sector.
    pub fn is_block_closed(&self, full: &CsrMatrix) -> bool {
        (0..full.nrows()).all(|r| {
            let (cols, _) = full.row(r);
            cols.iter().all(|&c| self.sector_of[c] == self.sector_of[r])
        })
    }

    pub fn gather(&self, full: &[Complex64], k: i32) -> Option<Vec<Complex64>> {
        let idx = self.sector_indices(k)?;
        Some(idx.iter().map(|&v| full[v]).collect())
    }

    /// Write sector components back into a full-length buffer.
    pub fn scatter(&self, block: &[Complex64], k: i32, full: &mut [Complex64]) {
        let idx = self.sector_indices(k).expect("unknown sector");
        assert_eq!(block.len(), idx.len());
        for (&v, &x) in idx.iter().zip(block) {
            full[v] = x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::model::{liouvillian, ModelParams};
    use crate::operators::HilbertSpace;

    #[test]
    fn sectors_partition_all_indices() {
        let info = HilbertSpace::new(2, 2).info();
        let blocks = ExcitationBlocks::build(&info);
        let total: usize = (-4..=4)
            .filter_map(|k| blocks.sector_indices(k).map(|s| s.len()))
            .sum();
        assert_eq!(total, info.dim() * info.dim());
        // diagonal entries all live in k = 0
        for i in 0..info.dim() {
            assert_eq!(blocks.sector_of(i + i * info.dim()), 0);
        }
    }

    #[test]
    fn liouvillian_is_block_closed() {
        let space = HilbertSpace::new(2, 2);
        let params = ModelParams {
            gamma0: 0.4,
            pump_rate: 0.9,
            detuning: 0.3,
            ..ModelParams::new(Geometry::pair(0.17).unwrap())
        };
        let lv = liouvillian(&params, &space).unwrap();
        let blocks = ExcitationBlocks::build(lv.info());
        assert!(blocks.is_block_closed(lv.matrix()));
    }

    #[test]
    fn block_matvec_matches_full() {
        let space = HilbertSpace::new(1, 2);
        let params = ModelParams {
            gamma0: 0.2,
            pump_rate: 0.5,
            ..ModelParams::new(
                Geometry::build(crate::geometry::LatticeFamily::Chain, 1, 1.0, [0.0, 0.0, 1.0])
                    .unwrap(),
            )
        };
        let lv = liouvillian(&params, &space).unwrap();
        let blocks = ExcitationBlocks::build(lv.info());
        let side = lv.dim_sq();
        // a full vector supported on k=0 only
        let mut x = vec![Complex64::new(0.0, 0.0); side];
        let idx = blocks.sector_indices(0).unwrap().to_vec();
        for (p, &v) in idx.iter().enumerate() {
            x[v] = Complex64::new(1.0 + p as f64, -0.5 * p as f64);
        }
        let full = lv.matrix().matvec(&x);
        let lb = blocks.extract_block(lv.matrix(), 0).unwrap();
        let xb = blocks.gather(&x, 0).unwrap();
        let yb = lb.matvec(&xb);
        for (p, &v) in idx.iter().enumerate() {
            assert!((full[v] - yb[p]).norm() < 1e-13);
        }
        // nothing leaks outside the sector
        for (v, val) in full.iter().enumerate() {
            if blocks.sector_of(v) != 0 {
                assert_eq!(val.norm(), 0.0);
            }
        }
    }
}
