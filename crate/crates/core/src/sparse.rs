//! Compressed sparse row matrices over complex doubles.
//!
//! This is the workhorse storage for embedded operators and assembled
//! superoperators. Rows are sorted by column index and duplicate entries are
//! merged on construction, so structural comparisons (e.g. exact commutator
//! cancellation) are meaningful after [`CsrMatrix::prune`].

use num_complex::Complex64;

/// Sparse complex matrix in CSR format.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<Complex64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, Complex64)],
    ) -> Self {
        let mut entries: Vec<(usize, usize, Complex64)> = triplets.to_vec();
        Self::from_triplets_owned(nrows, ncols, &mut entries)
    }

    /// Same as [`from_triplets`](Self::from_triplets) but consumes the buffer
    /// to avoid a copy during superoperator assembly.
    pub fn from_triplets_owned(
        nrows: usize,
        ncols: usize,
        entries: &mut Vec<(usize, usize, Complex64)>,
    ) -> Self {
        for &(r, c, _) in entries.iter() {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in entries.iter() {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] = indices.len();
                last = Some((r, c));
            }
        }
        // rows without entries inherit the running count
        for r in 0..nrows {
            if indptr[r + 1] < indptr[r] {
                indptr[r + 1] = indptr[r];
            }
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    /// Diagonal matrix from a dense vector.
    pub fn diag(values: &[Complex64]) -> Self {
        let n = values.len();
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: values.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[Complex64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Iterate over (row, col, value) of stored entries.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals.iter()).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, other: &CsrMatrix) -> Self {
        assert_eq!(
            (self.nrows, self.ncols),
            (other.nrows, other.ncols),
            "shape mismatch in sparse add"
        );
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let take_a = j >= cb.len() || (i < ca.len() && ca[i] <= cb[j]);
                let take_b = i >= ca.len() || (j < cb.len() && cb[j] <= ca[i]);
                if take_a && take_b {
                    indices.push(ca[i]);
                    data.push(va[i] + vb[j]);
                    i += 1;
                    j += 1;
                } else if take_a {
                    indices.push(ca[i]);
                    data.push(va[i]);
                    i += 1;
                } else {
                    indices.push(cb[j]);
                    data.push(vb[j]);
                    j += 1;
                }
            }
            indptr[r + 1] = indices.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// Sparse-sparse product (Gustavson row scheme).
    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(
            self.ncols, other.nrows,
            "inner dimension mismatch in sparse matmul"
        );
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = vec![zero; other.ncols];
        let mut marker = vec![usize::MAX; other.ncols];
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.nrows {
            let mut row_cols: Vec<usize> = Vec::new();
            let (ca, va) = self.row(r);
            for (&k, &vr) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                for (&c, &vk) in cb.iter().zip(vb) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = zero;
                        row_cols.push(c);
                    }
                    acc[c] += vr * vk;
                }
            }
            row_cols.sort_unstable();
            for &c in &row_cols {
                indices.push(c);
                data.push(acc[c]);
            }
            indptr[r + 1] = indices.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CsrMatrix) -> Self {
        let nrows = self.nrows * other.nrows;
        let ncols = self.ncols * other.ncols;
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(self.nnz() * other.nnz());
        let mut data = Vec::with_capacity(self.nnz() * other.nnz());
        for ra in 0..self.nrows {
            let (ca, va) = self.row(ra);
            for rb in 0..other.nrows {
                let (cb, vb) = other.row(rb);
                for (&ja, &a) in ca.iter().zip(va) {
                    for (&jb, &b) in cb.iter().zip(vb) {
                        indices.push(ja * other.ncols + jb);
                        data.push(a * b);
                    }
                }
                indptr[ra * other.nrows + rb + 1] = indices.len();
            }
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        self.transpose_impl(false)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose_impl(true)
    }

    fn transpose_impl(&self, conj: bool) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut indptr = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![Complex64::new(0.0, 0.0); self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let pos = indptr[c];
                indices[pos] = r;
                data[pos] = if conj { v.conj() } else { v };
                indptr[c] += 1;
            }
        }
        // rows were filled in increasing source-row order, so columns are sorted
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            data,
        }
    }

    /// Drop entries with |v| <= tol.
    pub fn prune(&self, tol: f64) -> Self {
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.nnz());
        let mut data = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if v.norm() > tol {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr[r + 1] = indices.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// y = A x.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// y = A x without allocating.
    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    /// y += alpha * A x.
    pub fn matvec_acc(&self, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] += alpha * acc;
        }
    }

    /// Out-of-place Y = A X for a dense column-major X with `ncols_x` columns.
    ///
    /// X and Y are stored column-major as contiguous slices.
    pub fn mul_dense_into(&self, x: &[Complex64], ncols_x: usize, y: &mut [Complex64]) {
        assert_eq!(x.len(), self.ncols * ncols_x);
        assert_eq!(y.len(), self.nrows * ncols_x);
        for j in 0..ncols_x {
            let xc = &x[j * self.ncols..(j + 1) * self.ncols];
            let yc = &mut y[j * self.nrows..(j + 1) * self.nrows];
            self.matvec_into(xc, yc);
        }
    }

    /// Dense representation as a column-major buffer (row index fast).
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.nrows * self.ncols];
        for (r, c, v) in self.triplets() {
            out[r + c * self.nrows] += v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn triplets_merge_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 1.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
        assert_eq!(m.get(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn add_and_scale() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, c(1.0, 0.0)), (1, 0, c(2.0, 0.0))]);
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 1, c(0.5, 0.0)), (1, 0, c(-2.0, 0.0))]);
        let s = a.add(&b);
        assert_eq!(s.get(0, 0), c(1.0, 0.0));
        assert_eq!(s.get(0, 1), c(0.5, 0.0));
        assert_eq!(s.get(1, 0), c(0.0, 0.0));
        let t = s.scale(c(0.0, 2.0));
        assert_eq!(t.get(0, 1), c(0.0, 1.0));
    }

    #[test]
    fn matmul_small() {
        // [[0,1],[0,0]] * [[0,0],[1,0]] = [[1,0],[0,0]]
        let sp = CsrMatrix::from_triplets(2, 2, &[(0, 1, c(1.0, 0.0))]);
        let sm = CsrMatrix::from_triplets(2, 2, &[(1, 0, c(1.0, 0.0))]);
        let p = sp.matmul(&sm);
        assert_eq!(p.get(0, 0), c(1.0, 0.0));
        assert_eq!(p.nnz(), 1);
    }

    #[test]
    fn kron_matches_definition() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, c(2.0, 0.0)), (1, 0, c(0.0, 1.0))]);
        let b = CsrMatrix::identity(3);
        let k = a.kron(&b);
        assert_eq!(k.nrows(), 6);
        for i in 0..3 {
            assert_eq!(k.get(i, 3 + i), c(2.0, 0.0));
            assert_eq!(k.get(3 + i, i), c(0.0, 1.0));
        }
        assert_eq!(k.nnz(), 6);
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, c(1.0, -2.0)), (1, 0, c(3.0, 4.0))]);
        let ad = a.adjoint();
        assert_eq!(ad.nrows(), 3);
        assert_eq!(ad.get(2, 0), c(1.0, 2.0));
        assert_eq!(ad.get(0, 1), c(3.0, -4.0));
    }

    #[test]
    fn matvec_and_dense_agree() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, c(1.0, 0.0)),
                (0, 2, c(0.0, 1.0)),
                (2, 1, c(-1.0, 0.5)),
            ],
        );
        let x = vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)];
        let y = a.matvec(&x);
        let d = a.to_dense();
        for r in 0..3 {
            let mut acc = c(0.0, 0.0);
            for j in 0..3 {
                acc += d[r + j * 3] * x[j];
            }
            assert!((acc - y[r]).norm() < 1e-15);
        }
    }
}
