//! Atom position configurations and pairwise radiative coupling matrices.
//!
//! Distances are measured in units of the transition wavelength, so the
//! dimensionless kernel argument is `xi = 2*pi*r`. Collective decay rates and
//! coherent dipole-dipole shifts follow from the scalar kernels
//!
//! ```text
//! F(xi) = (1 - cos^2 th) sin(xi)/xi + (1 - 3 cos^2 th)(cos(xi)/xi^2 - sin(xi)/xi^3)
//! G(xi) = -(1 - cos^2 th) cos(xi)/xi + (1 - 3 cos^2 th)(sin(xi)/xi^2 + cos(xi)/xi^3)
//! ```
//!
//! with `th` the angle between the common dipole axis and the separation
//! vector. Off-diagonal rates are `gamma_ij = (3/2) gamma0 F`, shifts
//! `omega_ij = (3/4) gamma0 G`.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("family {family:?} requires {expected} atoms, got {got}")]
    FamilyAtomMismatch {
        family: LatticeFamily,
        expected: usize,
        got: usize,
    },
    #[error("lattice constant must be > 0, got {0}")]
    NonPositiveLatticeConst(f64),
    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),
    #[error("dipole axis must be a nonzero vector")]
    ZeroDipoleAxis,
    #[error("need at least one atom for family {0:?}")]
    NoAtoms(LatticeFamily),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeFamily {
    Chain,
    Triangle,
    Square,
    Custom,
}

/// Atomic positions (units of the transition wavelength) plus a common
/// transition-dipole orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    positions: Vec<[f64; 3]>,
    dipole_axis: [f64; 3],
    family: LatticeFamily,
    lattice_const: f64,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn normalize(v: [f64; 3]) -> Result<[f64; 3], GeometryError> {
    let n = norm3(v);
    if n < 1e-300 || !n.is_finite() {
        return Err(GeometryError::ZeroDipoleAxis);
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

impl Geometry {
    /// Regular arrangement of `n_atoms` with the given spacing, centered at
    /// the origin. Chains run along x, triangles and squares lie in the xy
    /// plane. The dipole axis is normalized.
    pub fn build(
        family: LatticeFamily,
        n_atoms: usize,
        lattice_const: f64,
        dipole_axis: [f64; 3],
    ) -> Result<Self, GeometryError> {
        if !(lattice_const > 0.0) {
            return Err(GeometryError::NonPositiveLatticeConst(lattice_const));
        }
        let a = lattice_const;
        let positions: Vec<[f64; 3]> = match family {
            LatticeFamily::Chain => {
                if n_atoms == 0 {
                    return Err(GeometryError::NoAtoms(family));
                }
                let mid = (n_atoms as f64 - 1.0) / 2.0;
                (0..n_atoms)
                    .map(|i| [(i as f64 - mid) * a, 0.0, 0.0])
                    .collect()
            }
            LatticeFamily::Triangle => {
                if n_atoms != 3 {
                    return Err(GeometryError::FamilyAtomMismatch {
                        family,
                        expected: 3,
                        got: n_atoms,
                    });
                }
                // equilateral with side a, centroid at origin
                let r = a / (3.0f64).sqrt();
                (0..3)
                    .map(|k| {
                        let phi = std::f64::consts::FRAC_PI_2 + k as f64 * TAU / 3.0;
                        [r * phi.cos(), r * phi.sin(), 0.0]
                    })
                    .collect()
            }
            LatticeFamily::Square => {
                if n_atoms != 4 {
                    return Err(GeometryError::FamilyAtomMismatch {
                        family,
                        expected: 4,
                        got: n_atoms,
                    });
                }
                vec![
                    [-a / 2.0, -a / 2.0, 0.0],
                    [a / 2.0, -a / 2.0, 0.0],
                    [-a / 2.0, a / 2.0, 0.0],
                    [a / 2.0, a / 2.0, 0.0],
                ]
            }
            LatticeFamily::Custom => {
                return Err(GeometryError::FamilyAtomMismatch {
                    family,
                    expected: 0,
                    got: n_atoms,
                })
            }
        };
        let g = Geometry {
            positions,
            dipole_axis: normalize(dipole_axis)?,
            family,
            lattice_const: a,
        };
        g.check_distinct()?;
        Ok(g)
    }

    /// Explicit position list.
    pub fn custom(positions: Vec<[f64; 3]>, dipole_axis: [f64; 3]) -> Result<Self, GeometryError> {
        let g = Geometry {
            positions,
            dipole_axis: normalize(dipole_axis)?,
            family: LatticeFamily::Custom,
            lattice_const: 1.0,
        };
        g.check_distinct()?;
        Ok(g)
    }

    /// Zero atoms; models an empty cavity.
    pub fn empty() -> Self {
        Geometry {
            positions: Vec::new(),
            dipole_axis: [0.0, 0.0, 1.0],
            family: LatticeFamily::Custom,
            lattice_const: 1.0,
        }
    }

    /// Two atoms separated by `distance` along x, dipoles along z.
    pub fn pair(distance: f64) -> Result<Self, GeometryError> {
        Geometry::custom(
            vec![[0.0, 0.0, 0.0], [distance, 0.0, 0.0]],
            [0.0, 0.0, 1.0],
        )
    }

    fn check_distinct(&self) -> Result<(), GeometryError> {
        for i in 0..self.positions.len() {
            for j in (i + 1)..self.positions.len() {
                if self.distance(i, j) < 1e-12 {
                    return Err(GeometryError::CoincidentAtoms(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn dipole_axis(&self) -> [f64; 3] {
        self.dipole_axis
    }

    pub fn family(&self) -> LatticeFamily {
        self.family
    }

    pub fn lattice_const(&self) -> f64 {
        self.lattice_const
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (self.positions[i], self.positions[j]);
        norm3([p[0] - q[0], p[1] - q[1], p[2] - q[2]])
    }

    /// Cosine of the angle between the dipole axis and the i-j separation.
    pub fn cos_theta(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (self.positions[i], self.positions[j]);
        let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
        let r = norm3(d);
        let e = self.dipole_axis;
        ((d[0] * e[0] + d[1] * e[1] + d[2] * e[2]) / r).clamp(-1.0, 1.0)
    }
}

// sin(xi)/xi
fn sinc_series(u: f64) -> f64 {
    // u = xi^2; terms (-1)^k u^k / (2k+1)!
    let mut term = 1.0;
    let mut acc = 1.0;
    for k in 1..=12 {
        term *= -u / ((2 * k) as f64 * (2 * k + 1) as f64);
        acc += term;
    }
    acc
}

// cos(xi)/xi^2 - sin(xi)/xi^3, regular part of the decay kernel
fn decay_tail_series(u: f64) -> f64 {
    // sum_{k>=1} (-1)^k (2k)/(2k+1)! u^{k-1}
    let mut fact = 6.0; // (2k+1)! at k=1
    let mut acc = -2.0 / fact;
    let mut upow = 1.0;
    let mut sign = -1.0;
    for k in 2..=12 {
        fact *= (2 * k) as f64 * (2 * k + 1) as f64;
        upow *= u;
        sign = -sign;
        acc += sign * (2 * k) as f64 / fact * upow;
    }
    acc
}

/// Angular decay kernel `F`. The `xi -> 0` limit is 2/3 independent of the
/// dipole angle; below `xi = 1` a series form avoids the `1/xi^3`
/// cancellation of the closed expression.
///
/// Panics are avoided; `xi <= 0` is a caller error and returns NaN only via
/// the closed form, so we guard with a debug assertion and document the
/// domain: `xi > 0`.
pub fn decay_kernel(xi: f64, cos_theta: f64) -> f64 {
    debug_assert!(xi > 0.0, "decay_kernel domain is xi > 0");
    let c2 = cos_theta * cos_theta;
    if xi < 1.0 {
        let u = xi * xi;
        (1.0 - c2) * sinc_series(u) + (1.0 - 3.0 * c2) * decay_tail_series(u)
    } else {
        let (s, c) = xi.sin_cos();
        (1.0 - c2) * s / xi + (1.0 - 3.0 * c2) * (c / (xi * xi) - s / (xi * xi * xi))
    }
}

/// Angular shift kernel `G`, diverging as `(1 - 3 cos^2 th)/xi^3` for small
/// separations. The closed form has no cancellation between its singular
/// terms, so it is used for all `xi > 0`.
pub fn shift_kernel(xi: f64, cos_theta: f64) -> f64 {
    debug_assert!(xi > 0.0, "shift_kernel domain is xi > 0");
    let c2 = cos_theta * cos_theta;
    let (s, c) = xi.sin_cos();
    -(1.0 - c2) * c / xi + (1.0 - 3.0 * c2) * (s / (xi * xi) + c / (xi * xi * xi))
}

/// Pairwise decay rates and coherent shifts for a geometry.
///
/// Both matrices are real symmetric, stored row-major. The diagonal of
/// `gamma` is the single-atom rate exactly (the analytic small-separation
/// limit); the diagonal of `omega` is zero by convention since the
/// Hamiltonian sums over distinct pairs only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrices {
    n: usize,
    pub single_atom_gamma: f64,
    gamma: Vec<f64>,
    omega: Vec<f64>,
}

impl CouplingMatrices {
    pub fn compute(geom: &Geometry, gamma0: f64) -> Result<Self, GeometryError> {
        assert!(gamma0 > 0.0, "single-atom rate must be positive");
        let n = geom.n_atoms();
        let mut gamma = vec![0.0; n * n];
        let mut omega = vec![0.0; n * n];
        for i in 0..n {
            gamma[i * n + i] = gamma0;
            for j in (i + 1)..n {
                let r = geom.distance(i, j);
                if r < 1e-12 {
                    return Err(GeometryError::CoincidentAtoms(i, j));
                }
                let xi = TAU * r;
                let ct = geom.cos_theta(i, j);
                let g = 1.5 * gamma0 * decay_kernel(xi, ct);
                let w = 0.75 * gamma0 * shift_kernel(xi, ct);
                gamma[i * n + j] = g;
                gamma[j * n + i] = g;
                omega[i * n + j] = w;
                omega[j * n + i] = w;
            }
        }
        Ok(CouplingMatrices {
            n,
            single_atom_gamma: gamma0,
            gamma,
            omega,
        })
    }

    /// N x N identity-decay variant (independent atoms).
    pub fn independent(n: usize, gamma0: f64) -> Self {
        let mut gamma = vec![0.0; n * n];
        for i in 0..n {
            gamma[i * n + i] = gamma0;
        }
        CouplingMatrices {
            n,
            single_atom_gamma: gamma0,
            gamma,
            omega: vec![0.0; n * n],
        }
    }

    /// All-to-all decay at the single-atom rate, no shifts.
    pub fn fully_collective(n: usize, gamma0: f64) -> Self {
        CouplingMatrices {
            n,
            single_atom_gamma: gamma0,
            gamma: vec![gamma0; n * n],
            omega: vec![0.0; n * n],
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.n + j]
    }

    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.omega[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kernel_reference_points() {
        // direct evaluations of the closed form at benign arguments
        let f = decay_kernel(TAU, 0.0);
        assert!((f - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
        let f2 = decay_kernel(PI, 1.0);
        assert!((f2 - 2.0 / (PI * PI)).abs() < 1e-15);
        let g = shift_kernel(TAU, 0.0);
        assert!((g - (-1.0 / (2.0 * PI) + 1.0 / (8.0 * PI.powi(3)))).abs() < 1e-15);
        let g2 = shift_kernel(PI, 0.0);
        assert!((g2 - (1.0 / PI - 1.0 / PI.powi(3))).abs() < 1e-15);
    }

    #[test]
    fn decay_kernel_small_xi_limit() {
        for &c in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!(
                (decay_kernel(1e-6, c) - 2.0 / 3.0).abs() < 1e-9,
                "limit violated at cos_theta={c}"
            );
        }
    }

    #[test]
    fn kernels_match_two_term_expansions_on_log_grid() {
        // F ~ 2/3 - xi^2 (2 - c^2)/15
        // G ~ (1-3c^2)/xi^3 + ((1-3c^2)/2 - (1-c^2))/xi + xi ((1-c^2)/2 - (1-3c^2)/8)
        let cs = [0.0, 0.5, 1.0 / 3f64.sqrt(), 1.0];
        let mut xi = 1e-3;
        while xi <= 0.1 + 1e-12 {
            for &c in &cs {
                let c2 = c * c;
                let f_exp = 2.0 / 3.0 - xi * xi * (2.0 - c2) / 15.0;
                let f = decay_kernel(xi, c);
                assert!(
                    ((f - f_exp) / f_exp).abs() < 1e-3,
                    "F deviates at xi={xi}, c={c}: {f} vs {f_exp}"
                );
                let g_exp = (1.0 - 3.0 * c2) / (xi * xi * xi)
                    + ((1.0 - 3.0 * c2) / 2.0 - (1.0 - c2)) / xi
                    + xi * ((1.0 - c2) / 2.0 - (1.0 - 3.0 * c2) / 8.0);
                let g = shift_kernel(xi, c);
                let scale = g_exp.abs().max(1e-6);
                assert!(
                    ((g - g_exp) / scale).abs() < 1e-3,
                    "G deviates at xi={xi}, c={c}: {g} vs {g_exp}"
                );
            }
            xi *= 10f64.powf(0.25);
        }
    }

    #[test]
    fn shift_kernel_even_in_cos_theta() {
        for &xi in &[0.3, 1.7, 6.0] {
            for &c in &[0.2, 0.8] {
                assert_eq!(shift_kernel(xi, c), shift_kernel(xi, -c));
            }
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_crossover() {
        for &c in &[0.0, 0.6, 1.0] {
            for &xi in &[0.9999f64, 1.0001, 0.7, 0.99] {
                let c2: f64 = c * c;
                let (s, co) = xi.sin_cos();
                let closed = (1.0 - c2) * s / xi
                    + (1.0 - 3.0 * c2) * (co / (xi * xi) - s / (xi * xi * xi));
                assert!(
                    (decay_kernel(xi, c) - closed).abs() < 1e-13,
                    "branch mismatch at xi={xi}"
                );
            }
        }
    }

    #[test]
    fn square_distances() {
        let g = Geometry::build(LatticeFamily::Square, 4, 0.58, [0.0, 0.0, 1.0]).unwrap();
        let mut dists: Vec<f64> = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                dists.push(g.distance(i, j));
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let side = 0.58;
        let diag = 0.58 * 2f64.sqrt();
        for d in &dists[..4] {
            assert!((d - side).abs() < 1e-12);
        }
        for d in &dists[4..] {
            assert!((d - diag).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_equilateral_and_chain_degenerate() {
        let t = Geometry::build(LatticeFamily::Triangle, 3, 0.1, [0.0, 0.0, 1.0]).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!((t.distance(i, j) - 0.1).abs() < 1e-12);
            }
        }
        let c = Geometry::build(LatticeFamily::Chain, 1, 2.5, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(c.n_atoms(), 1);
        assert!(norm3(c.positions()[0]) < 1e-15);
    }

    #[test]
    fn builder_errors() {
        assert!(matches!(
            Geometry::build(LatticeFamily::Triangle, 4, 0.2, [0.0, 0.0, 1.0]),
            Err(GeometryError::FamilyAtomMismatch { .. })
        ));
        assert!(matches!(
            Geometry::build(LatticeFamily::Chain, 2, 0.0, [0.0, 0.0, 1.0]),
            Err(GeometryError::NonPositiveLatticeConst(_))
        ));
        assert!(matches!(
            Geometry::custom(vec![[0.0; 3], [0.0; 3]], [0.0, 0.0, 1.0]),
            Err(GeometryError::CoincidentAtoms(0, 1))
        ));
        assert!(matches!(
            Geometry::custom(vec![[0.0; 3]], [0.0, 0.0, 0.0]),
            Err(GeometryError::ZeroDipoleAxis)
        ));
    }

    #[test]
    fn coupling_matrix_contract() {
        let g = Geometry::build(LatticeFamily::Square, 4, 0.3, [0.0, 0.0, 1.0]).unwrap();
        let cm = CouplingMatrices::compute(&g, 0.7).unwrap();
        for i in 0..4 {
            assert_eq!(cm.gamma(i, i), 0.7);
            assert_eq!(cm.omega(i, i), 0.0);
            for j in 0..4 {
                assert!((cm.gamma(i, j) - cm.gamma(j, i)).abs() < 1e-14);
                assert!((cm.omega(i, j) - cm.omega(j, i)).abs() < 1e-14);
                assert!(cm.gamma(i, j).abs() <= 0.7 + 1e-12);
            }
        }
    }

    #[test]
    fn two_atom_perpendicular_at_one_wavelength() {
        let g = Geometry::pair(1.0).unwrap();
        let cm = CouplingMatrices::compute(&g, 1.0).unwrap();
        let expected = 1.5 / (4.0 * PI * PI);
        assert!((cm.gamma(0, 1) - expected).abs() < 1e-12);
    }

    #[test]
    fn single_atom_trivial() {
        let g = Geometry::build(LatticeFamily::Chain, 1, 1.0, [0.0, 0.0, 1.0]).unwrap();
        let cm = CouplingMatrices::compute(&g, 2.0).unwrap();
        assert_eq!(cm.gamma(0, 0), 2.0);
        assert_eq!(cm.omega(0, 0), 0.0);
    }

    #[test]
    fn far_separation_decouples() {
        let g = Geometry::pair(1e3).unwrap();
        let cm = CouplingMatrices::compute(&g, 1.0).unwrap();
        assert!(cm.gamma(0, 1).abs() < 1e-3);
        assert!(cm.omega(0, 1).abs() < 1e-3);
    }

    #[test]
    fn pair_matrix_positive_semidefinite() {
        // eigenvalues of [[g0, g01],[g01, g0]] are g0 +- g01
        let mut d = 0.02;
        while d < 3.0 {
            let cm = CouplingMatrices::compute(&Geometry::pair(d).unwrap(), 1.0).unwrap();
            let g01 = cm.gamma(0, 1);
            assert!(1.0 - g01.abs() >= -1e-12, "PSD violated at distance {d}");
            d *= 1.37;
        }
    }

    #[test]
    fn translation_invariance() {
        let base: Vec<[f64; 3]> = vec![[0.0, 0.0, 0.0], [0.21, 0.13, 0.0], [0.4, -0.3, 0.1]];
        let shift = [5.0, -2.0, 3.3];
        let shifted: Vec<[f64; 3]> = base
            .iter()
            .map(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]])
            .collect();
        let axis = [0.3, -0.2, 0.93];
        let a = CouplingMatrices::compute(&Geometry::custom(base, axis).unwrap(), 1.0).unwrap();
        let b = CouplingMatrices::compute(&Geometry::custom(shifted, axis).unwrap(), 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.gamma(i, j) - b.gamma(i, j)).abs() < 1e-14);
                assert!((a.omega(i, j) - b.omega(i, j)).abs() < 1e-14);
            }
        }
    }
}
