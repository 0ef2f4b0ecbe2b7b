//! Rotations as unit quaternions with a canonical sign.

use std::io::Write as _;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A 3D rotation stored as a unit quaternion `(w, x, y, z)` with `w >= 0`
/// (both signs of a quaternion encode the same rotation; the canonical sign
/// makes equality and serialization well defined).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Rotation {
    pub fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Validate components as a unit quaternion (tolerance 1e-12) and
    /// canonicalize the sign.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "quaternion",
                message: format!("norm {norm} is not 1"),
            });
        }
        Ok(Self { w, x, y, z }.canonical())
    }

    /// Normalize arbitrary nonzero components.
    pub fn from_unnormalized(w: f64, x: f64, y: f64, z: f64) -> Self {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        assert!(norm > 0.0, "zero quaternion has no direction");
        Self {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        }
        .canonical()
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        assert!(norm > 0.0, "axis must be nonzero");
        let half = angle / 2.0;
        let s = half.sin() / norm;
        Self {
            w: half.cos(),
            x: s * axis[0],
            y: s * axis[1],
            z: s * axis[2],
        }
        .canonical()
    }

    fn canonical(self) -> Self {
        let flip = self.w < 0.0
            || (self.w == 0.0
                && (self.x < 0.0
                    || (self.x == 0.0 && (self.y < 0.0 || (self.y == 0.0 && self.z < 0.0)))));
        if flip {
            Self {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            self
        }
    }

    /// Hamilton product `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Rotation) -> Rotation {
        let (a, b, c, d) = (self.w, self.x, self.y, self.z);
        let (e, f, g, h) = (rhs.w, rhs.x, rhs.y, rhs.z);
        Rotation {
            w: a * e - b * f - c * g - d * h,
            x: a * f + b * e + c * h - d * g,
            y: a * g - b * h + c * e + d * f,
            z: a * h + b * g - c * f + d * e,
        }
        .canonical()
    }

    pub fn inverse(&self) -> Rotation {
        Rotation {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
        .canonical()
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        let v = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        2.0 * v.atan2(self.w.abs())
    }

    /// Geodesic distance to another rotation.
    pub fn distance(&self, other: &Rotation) -> f64 {
        self.inverse().compose(other).angle()
    }

    /// The 3x3 real rotation matrix (active convention).
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    /// Quaternion from a rotation matrix (Shepperd's method: pick the
    /// largest diagonal combination for stability).
    pub fn from_matrix(m: &[[f64; 3]; 3]) -> Rotation {
        let trace = m[0][0] + m[1][1] + m[2][2];
        let (w, x, y, z);
        if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m[2][1] - m[1][2]) / s;
            y = (m[0][2] - m[2][0]) / s;
            z = (m[1][0] - m[0][1]) / s;
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            w = (m[2][1] - m[1][2]) / s;
            x = 0.25 * s;
            y = (m[0][1] + m[1][0]) / s;
            z = (m[0][2] + m[2][0]) / s;
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            w = (m[0][2] - m[2][0]) / s;
            x = (m[0][1] + m[1][0]) / s;
            y = 0.25 * s;
            z = (m[1][2] + m[2][1]) / s;
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            w = (m[1][0] - m[0][1]) / s;
            x = (m[0][2] + m[2][0]) / s;
            y = (m[1][2] + m[2][1]) / s;
            z = 0.25 * s;
        }
        Rotation::from_unnormalized(w, x, y, z)
    }
}

/// Haar-uniform rotation: a normalized 4D standard Gaussian quaternion.
pub fn sample_rotation(rng: &mut Rng) -> Rotation {
    loop {
        let w: f64 = StandardNormal.sample(rng);
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if norm > 1e-12 {
            return Rotation::from_unnormalized(w, x, y, z);
        }
    }
}

/// Write rotations as a CSV of quaternion components.
pub fn write_rotations_csv(rotations: &[Rotation], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "w,x,y,z")?;
    for r in rotations {
        writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", r.w, r.x, r.y, r.z)?;
    }
    out.flush()?;
    Ok(())
}

/// Read rotations back from [`write_rotations_csv`] output.
pub fn read_rotations_csv(path: &Path) -> Result<Vec<Rotation>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != "w,x,y,z" {
        return Err(Error::Config(format!("unexpected rotation header {header:?}")));
    }
    let mut out = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::Config(format!("rotation line {} malformed", ln + 2)));
        }
        let mut vals = [0.0f64; 4];
        for (v, cell) in vals.iter_mut().zip(&cells) {
            *v = cell
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("rotation line {}: {e}", ln + 2)))?;
        }
        out.push(Rotation::new(vals[0], vals[1], vals[2], vals[3])?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn compose_and_inverse() {
        let mut rng = seeded(80);
        for _ in 0..20 {
            let g = sample_rotation(&mut rng);
            let h = sample_rotation(&mut rng);
            let gh = g.compose(&h);
            let back = gh.compose(&h.inverse());
            assert!(back.distance(&g) < 1e-12);
        }
        let id = Rotation::identity();
        assert!(id.angle() == 0.0);
    }

    #[test]
    fn matrix_round_trip() {
        let mut rng = seeded(81);
        for _ in 0..50 {
            let g = sample_rotation(&mut rng);
            let back = Rotation::from_matrix(&g.matrix());
            assert!(back.distance(&g) < 1e-12);
        }
    }

    #[test]
    fn matrix_is_homomorphic() {
        let mut rng = seeded(82);
        let g = sample_rotation(&mut rng);
        let h = sample_rotation(&mut rng);
        let gm = g.matrix();
        let hm = h.matrix();
        let ghm = g.compose(&h).matrix();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += gm[i][k] * hm[k][j];
                }
                assert!((acc - ghm[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_rotation(&mut seeded(83));
        let b = sample_rotation(&mut seeded(83));
        assert_eq!(a, b);
        assert!(a.w >= 0.0);
    }

    #[test]
    fn haar_mean_angle() {
        // Haar angle density (1 - cos a)/pi on [0, pi] has mean
        // pi/2 + 2/pi = 126.48 degrees.
        let mut rng = seeded(84);
        let mean: f64 =
            (0..100_000).map(|_| sample_rotation(&mut rng).angle()).sum::<f64>() / 1e5;
        let deg = mean.to_degrees();
        assert!((deg - 126.48).abs() < 1.0, "mean angle {deg}");
    }

    #[test]
    fn haar_mean_matrix_vanishes() {
        // Schur orthogonality: the nontrivial irrep averages to zero.
        let mut rng = seeded(85);
        let mut mean = [[0.0f64; 3]; 3];
        let samples = 10_000;
        for _ in 0..samples {
            let m = sample_rotation(&mut rng).matrix();
            for i in 0..3 {
                for j in 0..3 {
                    mean[i][j] += m[i][j] / samples as f64;
                }
            }
        }
        let trace = mean[0][0] + mean[1][1] + mean[2][2];
        assert!(trace.abs() < 0.05, "mean trace {trace}");
    }

    #[test]
    fn rotation_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rot.csv");
        let mut rng = seeded(86);
        let rotations: Vec<Rotation> = (0..7).map(|_| sample_rotation(&mut rng)).collect();
        write_rotations_csv(&rotations, &path).unwrap();
        let back = read_rotations_csv(&path).unwrap();
        assert_eq!(back.len(), 7);
        for (a, b) in rotations.iter().zip(&back) {
            assert!(a.distance(b) < 1e-12);
        }
    }
}
