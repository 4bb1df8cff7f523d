//! Dense reference implementations used as independent oracles.
//!
//! Everything here deliberately avoids the sparse/sector code paths of the
//! library: dense eigendecomposition, dense SVD null spaces and a dense
//! scaling-and-squaring matrix exponential.

#![allow(dead_code)]

use faer::complex_native::c64;
use faer::prelude::*;
use lattice_laser::model::Superoperator;
use lattice_laser::sparse::CsrMatrix;
use num_complex::Complex64;

pub fn csr_to_dense(m: &CsrMatrix) -> faer::Mat<c64> {
    let mut out = faer::Mat::<c64>::zeros(m.nrows(), m.ncols());
    for (r, c, v) in m.triplets() {
        let cur = out.read(r, c);
        out.write(r, c, c64::new(cur.re + v.re, cur.im + v.im));
    }
    out
}

pub fn superop_dense(l: &Superoperator) -> faer::Mat<c64> {
    csr_to_dense(l.matrix())
}

/// All eigenvalues of a dense complex matrix.
pub fn dense_eigenvalues(m: &faer::Mat<c64>) -> Vec<Complex64> {
    m.as_ref()
        .eigenvalues::<c64>()
        .into_iter()
        .map(|v| Complex64::new(v.re, v.im))
        .collect()
}

/// Kernel vector of a dense matrix from the smallest singular triplet.
/// Returns (null vector, smallest singular value).
pub fn dense_null_vector(m: &faer::Mat<c64>) -> (Vec<Complex64>, f64) {
    let svd = m.as_ref().svd();
    let n = m.ncols();
    let s = svd.s_diagonal();
    let mut idx = 0;
    let mut smin = f64::INFINITY;
    for k in 0..n {
        let sv = s.read(k).re;
        if sv < smin {
            smin = sv;
            idx = k;
        }
    }
    let v = svd.v();
    let vec: Vec<Complex64> = (0..n)
        .map(|i| {
            let x = v.read(i, idx);
            Complex64::new(x.re, x.im)
        })
        .collect();
    (vec, smin)
}

fn mat_scale(m: &faer::Mat<c64>, f: f64) -> faer::Mat<c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let v = m.read(i, j);
        c64::new(v.re * f, v.im * f)
    })
}

fn mat_add(a: &faer::Mat<c64>, b: &faer::Mat<c64>) -> faer::Mat<c64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let x = a.read(i, j);
        let y = b.read(i, j);
        c64::new(x.re + y.re, x.im + y.im)
    })
}

fn mat_one_norm(m: &faer::Mat<c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let mut col = 0.0;
        for i in 0..m.nrows() {
            let v = m.read(i, j);
            col += (v.re * v.re + v.im * v.im).sqrt();
        }
        best = best.max(col);
    }
    best
}

/// Dense matrix exponential by degree-13 Pade approximation with scaling and
/// squaring.
pub fn expm(m: &faer::Mat<c64>) -> faer::Mat<c64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let theta13 = 5.371920351148152;
    let norm = mat_one_norm(m);
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as u32
    } else {
        0
    };
    let a = mat_scale(m, 1.0 / 2f64.powi(s as i32));
    let id = faer::Mat::<c64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let inner_u = mat_add(
        &mat_add(&mat_scale(&a6, B[13]), &mat_scale(&a4, B[11])),
        &mat_scale(&a2, B[9]),
    );
    let u_poly = mat_add(
        &(&a6 * &inner_u),
        &mat_add(
            &mat_add(&mat_scale(&a6, B[7]), &mat_scale(&a4, B[5])),
            &mat_add(&mat_scale(&a2, B[3]), &mat_scale(&id, B[1])),
        ),
    );
    let u = &a * &u_poly;
    let inner_v = mat_add(
        &mat_add(&mat_scale(&a6, B[12]), &mat_scale(&a4, B[10])),
        &mat_scale(&a2, B[8]),
    );
    let v = mat_add(
        &(&a6 * &inner_v),
        &mat_add(
            &mat_add(&mat_scale(&a6, B[6]), &mat_scale(&a4, B[4])),
            &mat_add(&mat_scale(&a2, B[2]), &mat_scale(&id, B[0])),
        ),
    );
    let denom = mat_add(&v, &mat_scale(&u, -1.0));
    let numer = mat_add(&v, &u);
    let mut e = denom.partial_piv_lu().solve(numer.as_ref());
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

pub fn mat_vec(m: &faer::Mat<c64>, x: &[Complex64]) -> Vec<Complex64> {
    let n = m.nrows();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj.norm_sqr() == 0.0 {
            continue;
        }
        for i in 0..n {
            let v = m.read(i, j);
            y[i] += Complex64::new(v.re, v.im) * xj;
        }
    }
    y
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Hermitize and trace-normalize a raw kernel vector (column-major square).
pub fn normalize_kernel_vector(dim: usize, raw: &[Complex64]) -> Vec<Complex64> {
    let mut m = raw.to_vec();
    for i in 0..dim {
        for j in i..dim {
            let avg = 0.5 * (m[i + j * dim] + m[j + i * dim].conj());
            m[i + j * dim] = avg;
            m[j + i * dim] = avg.conj();
        }
    }
    let tr: Complex64 = (0..dim).map(|k| m[k + k * dim]).sum();
    for v in &mut m {
        *v /= tr;
    }
    m
}

#[cfg(test)]
mod sanity {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let m = faer::Mat::<c64>::from_fn(2, 2, |i, j| {
            if i == j {
                c64::new(-(1.0 + i as f64), 0.5)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let e = expm(&m);
        for i in 0..2 {
            let expect = Complex64::new(-(1.0 + i as f64), 0.5).exp();
            let got = e.read(i, i);
            assert!((Complex64::new(got.re, got.im) - expect).norm() < 1e-13);
        }
    }
}
