//! Fourth-order elasticity tensors in 2D and their Voigt / gradient forms.

use nalgebra::{Matrix2, Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

/// `C_ijkl` with indices in `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tensor4(pub [[[[f64; 2]; 2]; 2]; 2]);

/// Voigt index of the symmetric pair `(i, j)` in the order (11, 22, 12).
pub fn voigt_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        _ => 2,
    }
}

impl Tensor4 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut c = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        c[i][j][k][l] = lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                    }
                }
            }
        }
        Tensor4(c)
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j][k][l]
    }

    /// `C : E`.
    pub fn contract(&self, e: &Matrix2<f64>) -> Matrix2<f64> {
        Matrix2::from_fn(|i, j| {
            let mut s = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    s += self.0[i][j][k][l] * e[(k, l)];
                }
            }
            s
        })
    }

    /// Voigt matrix with engineering shear: `σ_V = C_V ε_V` where
    /// `ε_V = (ε11, ε22, 2ε12)`.
    pub fn voigt(&self) -> Matrix3<f64> {
        let pairs = [(0, 0), (1, 1), (0, 1)];
        Matrix3::from_fn(|a, b| {
            let (i, j) = pairs[a];
            let (k, l) = pairs[b];
            self.0[i][j][k][l]
        })
    }

    /// Inverse of [`Tensor4::voigt`], producing a tensor with minor symmetries.
    pub fn from_voigt(m: &Matrix3<f64>) -> Self {
        let mut c = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        c[i][j][k][l] = m[(voigt_index(i, j), voigt_index(k, l))];
                    }
                }
            }
        }
        Tensor4(c)
    }

    /// Operator on `vec(G) = (G00, G01, G10, G11)` with
    /// `D vec(G) = vec(C : sym G)`.
    pub fn gradient_operator(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|r, s| {
            let (i, j) = (r / 2, r % 2);
            let (k, l) = (s / 2, s % 2);
            0.5 * (self.0[i][j][k][l] + self.0[i][j][l][k])
        })
    }

    /// Largest minor/major symmetry defect relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let mut scale: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let c = self.0[i][j][k][l];
                        scale = scale.max(c.abs());
                        worst = worst
                            .max((c - self.0[j][i][k][l]).abs())
                            .max((c - self.0[i][j][l][k]).abs())
                            .max((c - self.0[k][l][i][j]).abs());
                    }
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut c = self.0;
        c.iter_mut().flatten().flatten().flatten().for_each(|v| *v *= s);
        Tensor4(c)
    }

    pub fn add(&self, other: &Tensor4) -> Self {
        let mut c = self.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        c[i][j][k][l] += other.0[i][j][k][l];
                    }
                }
            }
        }
        Tensor4(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_voigt_form() {
        let c = Tensor4::isotropic(1.0, 1.0);
        let v = c.voigt();
        assert_eq!(v, Matrix3::new(3.0, 1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 1.0));
        assert_eq!(Tensor4::from_voigt(&v), c);
        assert_eq!(c.symmetry_defect(), 0.0);
    }

    #[test]
    fn engineering_shear_convention() {
        let c = Tensor4::isotropic(2.0, 0.5);
        let e = Matrix2::new(0.1, 0.3, 0.3, -0.2);
        let s = c.contract(&e);
        let ev = nalgebra::Vector3::new(e[(0, 0)], e[(1, 1)], 2.0 * e[(0, 1)]);
        let sv = c.voigt() * ev;
        assert!((sv - nalgebra::Vector3::new(s[(0, 0)], s[(1, 1)], s[(0, 1)])).norm() < 1e-15);
    }

    #[test]
    fn gradient_operator_ignores_skew_part() {
        let c = Tensor4::isotropic(1.0, 1.0);
        let d = c.gradient_operator();
        let skew = nalgebra::Vector4::new(0.0, 1.0, -1.0, 0.0);
        assert!((d * skew).norm() < 1e-15);
        assert_eq!(d, d.transpose());
    }
}
