//! Small fixed-size linear algebra: 3-vectors and symmetric 3x3 matrices.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A velocity-space 3-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3 { x, y, z }
    }

    pub fn dot(&self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm2(&self) -> f64 {
        self.dot(*self)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn normalized(&self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn cross(&self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// Japanese bracket ⟨v⟩ = sqrt(1 + |v|²).
    pub fn bracket(&self) -> f64 {
        (1.0 + self.norm2()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Two unit vectors spanning the orthogonal complement of `self`
    /// (which must be nonzero). Deterministic choice.
    pub fn orthonormal_complement(&self) -> (Vec3, Vec3) {
        let d = self.normalized();
        let ax = d.x.abs();
        let ay = d.y.abs();
        let az = d.z.abs();
        let seed = if ax <= ay && ax <= az {
            Vec3::new(1.0, 0.0, 0.0)
        } else if ay <= az {
            Vec3::new(0.0, 1.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        let t1 = (seed - d * seed.dot(d)).normalized();
        let t2 = d.cross(t1);
        (t1, t2)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Symmetric 3x3 matrix stored by its six independent entries.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymMat3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl SymMat3 {
    pub const ZERO: SymMat3 =
        SymMat3 { xx: 0.0, xy: 0.0, xz: 0.0, yy: 0.0, yz: 0.0, zz: 0.0 };

    pub fn identity() -> SymMat3 {
        SymMat3 { xx: 1.0, yy: 1.0, zz: 1.0, ..SymMat3::ZERO }
    }

    pub fn diag(a: f64, b: f64, c: f64) -> SymMat3 {
        SymMat3 { xx: a, yy: b, zz: c, ..SymMat3::ZERO }
    }

    /// Rank-one symmetric product v ⊗ v.
    pub fn outer(v: Vec3) -> SymMat3 {
        SymMat3 {
            xx: v.x * v.x,
            xy: v.x * v.y,
            xz: v.x * v.z,
            yy: v.y * v.y,
            yz: v.y * v.z,
            zz: v.z * v.z,
        }
    }

    pub fn scale(&self, s: f64) -> SymMat3 {
        SymMat3 {
            xx: self.xx * s,
            xy: self.xy * s,
            xz: self.xz * s,
            yy: self.yy * s,
            yz: self.yz * s,
            zz: self.zz * s,
        }
    }

    pub fn add(&self, o: &SymMat3) -> SymMat3 {
        SymMat3 {
            xx: self.xx + o.xx,
            xy: self.xy + o.xy,
            xz: self.xz + o.xz,
            yy: self.yy + o.yy,
            yz: self.yz + o.yz,
            zz: self.zz + o.zz,
        }
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.xx * v.x + self.xy * v.y + self.xz * v.z,
            self.xy * v.x + self.yy * v.y + self.yz * v.z,
            self.xz * v.x + self.yz * v.y + self.zz * v.z,
        )
    }

    /// Quadratic form ⟨M u, u⟩.
    pub fn quad_form(&self, u: Vec3) -> f64 {
        u.dot(self.mul_vec(u))
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.xz * self.xz + self.yz * self.yz))
            .sqrt()
    }

    fn to_rows(self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    /// Eigenvalues in ascending order, by cyclic Jacobi sweeps.
    #[allow(clippy::needless_range_loop)] // k walks columns of two rows at once
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut a = self.to_rows();
        for _ in 0..32 {
            let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
            let scale = a[0][0].abs() + a[1][1].abs() + a[2][2].abs() + off;
            if off <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let akp = row[p];
                    let akq = row[q];
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        let mut ev = [a[0][0], a[1][1], a[2][2]];
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    /// Positive semidefinite up to the floating-point symmetrization
    /// tolerance: all eigenvalues ≥ -1e-12 × trace.
    pub fn is_positive_semidefinite(&self) -> bool {
        let tol = 1e-12 * self.trace().abs().max(f64::MIN_POSITIVE);
        self.eigenvalues()[0] >= -tol
    }

    /// Congruence R M Rᵗ by a general 3x3 matrix given in rows.
    pub fn congruence(&self, r: &[[f64; 3]; 3]) -> SymMat3 {
        let m = self.to_rows();
        let mut rm = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rm[i][j] = (0..3).map(|k| r[i][k] * m[k][j]).sum();
            }
        }
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| rm[i][k] * r[j][k]).sum();
            }
        }
        SymMat3 {
            xx: out[0][0],
            xy: out[0][1],
            xz: out[0][2],
            yy: out[1][1],
            yz: out[1][2],
            zz: out[2][2],
        }
    }
}

/// Rotation matrix about `axis` by `angle`, rows of the matrix.
pub fn rotation_rows(axis: Vec3, angle: f64) -> [[f64; 3]; 3] {
    let u = axis.normalized();
    let (s, c) = angle.sin_cos();
    let omc = 1.0 - c;
    [
        [
            c + u.x * u.x * omc,
            u.x * u.y * omc - u.z * s,
            u.x * u.z * omc + u.y * s,
        ],
        [
            u.y * u.x * omc + u.z * s,
            c + u.y * u.y * omc,
            u.y * u.z * omc - u.x * s,
        ],
        [
            u.z * u.x * omc - u.y * s,
            u.z * u.y * omc + u.x * s,
            c + u.z * u.z * omc,
        ],
    ]
}

pub fn rotate_vec(r: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    Vec3::new(
        r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
        r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
        r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = SymMat3::diag(3.0, -1.0, 2.0);
        let ev = m.eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-12);
        assert!((ev[1] - 2.0).abs() < 1e-12);
        assert!((ev[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_rank_one() {
        let v = Vec3::new(1.0, 2.0, 2.0);
        let ev = SymMat3::outer(v).eigenvalues();
        assert!(ev[0].abs() < 1e-12);
        assert!(ev[1].abs() < 1e-12);
        assert!((ev[2] - 9.0).abs() < 1e-10);
    }

    #[test]
    fn complement_is_orthonormal() {
        let d = Vec3::new(0.3, -1.2, 0.5);
        let (t1, t2) = d.orthonormal_complement();
        assert!(t1.dot(d.normalized()).abs() < 1e-14);
        assert!(t2.dot(d.normalized()).abs() < 1e-14);
        assert!(t1.dot(t2).abs() < 1e-14);
        assert!((t1.norm() - 1.0).abs() < 1e-14);
        assert!((t2.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_preserves_norm() {
        let r = rotation_rows(Vec3::new(1.0, 1.0, 0.0), 0.7);
        let v = Vec3::new(0.2, -0.4, 1.1);
        assert!((rotate_vec(&r, v).norm() - v.norm()).abs() < 1e-13);
    }
}
