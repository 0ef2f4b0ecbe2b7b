//! Irreducible unitary representations of SO(3).
//!
//! Degree `k` acts on a `(2k+1)`-dimensional space. Degree 1 is realized as
//! the real rotation matrix itself (legitimate, since the standard
//! representation of SO(3) is real), which keeps the final rounding of
//! synchronization pipelines in the real world; degrees 2..=8 use the
//! Wigner-D construction from ZYZ Euler angles with the explicit
//! factorial-sum little-d formula. Every realization choice only enters the
//! pipelines through traces and unitary-invariant quantities, so mixing a
//! real degree-1 with complex higher degrees is consistent.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

use super::rotation::Rotation;

/// Largest supported representation degree.
pub const MAX_DEGREE: usize = 8;

/// Dimension `d_k = 2k + 1`.
pub fn rep_dim(k: usize) -> usize {
    2 * k + 1
}

/// Factorials 0..=16 are exact in f64.
const FACTORIAL: [f64; 17] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
    87178291200.0,
    1307674368000.0,
    20922789888000.0,
];

/// ZYZ Euler angles of a rotation: `R = Rz(alpha) Ry(beta) Rz(gamma)`.
fn euler_zyz(g: &Rotation) -> (f64, f64, f64) {
    let m = g.matrix();
    let sy = m[0][2].hypot(m[1][2]);
    if sy > 1e-12 {
        (
            m[1][2].atan2(m[0][2]),
            sy.atan2(m[2][2]),
            m[2][1].atan2(-m[2][0]),
        )
    } else if m[2][2] > 0.0 {
        // beta = 0: pure z-rotation by alpha + gamma.
        (m[1][0].atan2(m[0][0]), 0.0, 0.0)
    } else {
        // beta = pi.
        ((-m[1][0]).atan2(m[1][1]), std::f64::consts::PI, 0.0)
    }
}

/// Wigner little-d element for integer degree `j`, row index `mdashi = m'+j`,
/// column index `mi = m+j`.
fn little_d(j: usize, mdashi: usize, mi: usize, beta: f64) -> f64 {
    let two_j = 2 * j;
    let t_min = mdashi.saturating_sub(mi);
    let t_max = mdashi.min(two_j - mi);
    let (cos_half, sin_half) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let root = (FACTORIAL[mdashi]
        * FACTORIAL[two_j - mdashi]
        * FACTORIAL[mi]
        * FACTORIAL[two_j - mi])
        .sqrt();
    let mut acc = 0.0;
    for t in t_min..=t_max {
        let den = FACTORIAL[mdashi - t]
            * FACTORIAL[two_j - mi - t]
            * FACTORIAL[t]
            * FACTORIAL[t + mi - mdashi];
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        let trig = cos_half.powi((two_j + mdashi - mi - 2 * t) as i32)
            * sin_half.powi((2 * t + mi - mdashi) as i32);
        acc += sign * root / den * trig;
    }
    acc
}

/// The degree-`k` irreducible unitary representation of a rotation.
pub fn wigner_rep(k: usize, g: &Rotation) -> Result<ComplexMatrix> {
    if k < 1 || k > MAX_DEGREE {
        return Err(Error::UnsupportedDegree { k, max: MAX_DEGREE });
    }
    if k == 1 {
        let m = g.matrix();
        return Ok(ComplexMatrix::from_fn(3, 3, |i, j| {
            Complex64::new(m[i][j], 0.0)
        }));
    }
    let (alpha, beta, gamma) = euler_zyz(g);
    let dim = rep_dim(k);
    Ok(ComplexMatrix::from_fn(dim, dim, |mdashi, mi| {
        let mdash = mdashi as f64 - k as f64;
        let m = mi as f64 - k as f64;
        let phase = Complex64::from_polar(1.0, -(alpha * mdash + gamma * m));
        phase * little_d(k, mdashi, mi, beta)
    }))
}

/// Character of degree `k` at rotation angle `a`: the Dirichlet kernel
/// `sin((k + 1/2) a) / sin(a / 2)`.
pub fn character(k: usize, angle: f64) -> f64 {
    crate::harmonic::dirichlet(k, angle)
}

/// Evaluator bundle for degrees `1..=k_max`.
#[derive(Debug, Clone, Copy)]
pub struct RepresentationTable {
    k_max: usize,
}

impl RepresentationTable {
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max < 1 || k_max > MAX_DEGREE {
            return Err(Error::UnsupportedDegree {
                k: k_max,
                max: MAX_DEGREE,
            });
        }
        Ok(Self { k_max })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dim(&self, k: usize) -> usize {
        rep_dim(k)
    }

    pub fn rep(&self, k: usize, g: &Rotation) -> Result<ComplexMatrix> {
        if k > self.k_max {
            return Err(Error::UnsupportedDegree { k, max: self.k_max });
        }
        wigner_rep(k, g)
    }

    /// All degrees at once, `reps[k-1]` for degree `k`.
    pub fn all(&self, g: &Rotation) -> Result<Vec<ComplexMatrix>> {
        (1..=self.k_max).map(|k| wigner_rep(k, g)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupsync::rotation::sample_rotation;
    use crate::rng::seeded;

    fn assert_unitary(m: &ComplexMatrix, tol: f64) {
        let gram = m.mul(&m.adjoint());
        let dev = gram.sub(&ComplexMatrix::identity(m.rows())).max_abs();
        assert!(dev < tol, "unitarity deviation {dev}");
    }

    #[test]
    fn identity_maps_to_identity_exactly() {
        for k in 1..=MAX_DEGREE {
            let rep = wigner_rep(k, &Rotation::identity()).unwrap();
            assert_eq!(rep, ComplexMatrix::identity(rep_dim(k)));
        }
    }

    #[test]
    fn representations_are_unitary() {
        let mut rng = seeded(90);
        for k in 1..=MAX_DEGREE {
            for _ in 0..20 {
                let g = sample_rotation(&mut rng);
                assert_unitary(&wigner_rep(k, &g).unwrap(), 1e-9);
            }
        }
    }

    #[test]
    fn representations_are_homomorphic() {
        let mut rng = seeded(91);
        for k in 1..=MAX_DEGREE {
            for _ in 0..20 {
                let g = sample_rotation(&mut rng);
                let h = sample_rotation(&mut rng);
                let lhs = wigner_rep(k, &g.compose(&h)).unwrap();
                let rhs = wigner_rep(k, &g).unwrap().mul(&wigner_rep(k, &h).unwrap());
                let dev = lhs.sub(&rhs).max_abs();
                assert!(dev < 1e-8, "degree {k}: homomorphism deviation {dev}");
            }
        }
    }

    #[test]
    fn trace_matches_character_formula() {
        let mut rng = seeded(92);
        for k in 1..=MAX_DEGREE {
            for _ in 0..20 {
                let g = sample_rotation(&mut rng);
                let rep = wigner_rep(k, &g).unwrap();
                let trace: Complex64 = (0..rep_dim(k)).map(|i| rep[(i, i)]).sum();
                let want = character(k, g.angle());
                assert!(trace.im.abs() < 1e-8);
                assert!(
                    (trace.re - want).abs() < 1e-8,
                    "degree {k}: trace {} vs {want}",
                    trace.re
                );
            }
        }
    }

    #[test]
    fn z_rotation_trace_at_degree_one() {
        for &alpha in &[0.1, 1.0, 2.5, 3.14] {
            let g = Rotation::from_axis_angle([0.0, 0.0, 1.0], alpha);
            let rep = wigner_rep(1, &g).unwrap();
            let trace: Complex64 = (0..3).map(|i| rep[(i, i)]).sum();
            assert!((trace.re - (1.0 + 2.0 * alpha.cos())).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_euler_angles_are_handled() {
        // beta = pi rotations exercise the gimbal branch.
        let g = Rotation::from_axis_angle([0.0, 1.0, 0.0], std::f64::consts::PI);
        for k in 2..=4 {
            let rep = wigner_rep(k, &g).unwrap();
            assert_unitary(&rep, 1e-9);
        }
        let h = Rotation::from_axis_angle([1.0, 0.0, 0.0], std::f64::consts::PI);
        let hh = wigner_rep(2, &h).unwrap().mul(&wigner_rep(2, &h).unwrap());
        assert!(hh.sub(&ComplexMatrix::identity(5)).max_abs() < 1e-9);
    }

    #[test]
    fn out_of_range_degrees_are_rejected() {
        let g = Rotation::identity();
        assert!(matches!(
            wigner_rep(0, &g),
            Err(Error::UnsupportedDegree { .. })
        ));
        assert!(matches!(
            wigner_rep(9, &g),
            Err(Error::UnsupportedDegree { .. })
        ));
        assert!(RepresentationTable::new(9).is_err());
    }
}
