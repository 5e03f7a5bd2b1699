//! Material parameters and polynomial data descriptors.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Polynomial of total degree ≤ 2 in `(x, y)`, coefficients ordered
/// `[1, x, y, x², xy, y²]`; shorter lists are zero-padded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly2(pub Vec<f64>);

impl Poly2 {
    pub fn constant(c: f64) -> Self {
        Poly2(vec![c])
    }

    pub fn zero() -> Self {
        Poly2(Vec::new())
    }

    fn coeff(&self, i: usize) -> f64 {
        self.0.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, p: &Vector2<f64>) -> f64 {
        let (x, y) = (p[0], p[1]);
        let basis = [1.0, x, y, x * x, x * y, y * y];
        basis.iter().enumerate().map(|(i, b)| b * self.coeff(i)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// Largest absolute value over the unit square (checked at a fine grid,
    /// exact for the affine part).
    pub fn max_abs_on_unit_square(&self) -> f64 {
        let n = 64;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let p = Vector2::new(i as f64 / n as f64, j as f64 / n as f64);
                m = m.max(self.eval(&p).abs());
            }
        }
        m
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.0.len() > 6 {
            return Err(Error::Invalid(format!("{name}: at most 6 coefficients (degree 2)")));
        }
        if self.0.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!("{name}: non-finite coefficient")));
        }
        Ok(())
    }
}

/// Thermal conductivity: scalar (isotropic) or a full symmetric 2×2 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Conductivity {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

impl Conductivity {
    pub fn matrix(&self) -> Matrix2<f64> {
        match self {
            Conductivity::Scalar(k) => Matrix2::identity() * *k,
            Conductivity::Matrix(m) => Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
        }
    }
}

impl Default for Conductivity {
    fn default() -> Self {
        Conductivity::Scalar(1.0)
    }
}

fn one() -> f64 {
    1.0
}

/// Physical parameters; every scalar defaults to 1 and every source to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "one")]
    pub heat_capacity: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub conductivity: Conductivity,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub sigma0: f64,
    #[serde(default = "one")]
    pub latent_heat: f64,
    /// Body force components `[f_x, f_y]`.
    #[serde(default)]
    pub f: [Poly2; 2],
    #[serde(default)]
    pub g: Poly2,
    #[serde(default)]
    pub theta0: Poly2,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            heat_capacity: 1.0,
            alpha: 1.0,
            conductivity: Conductivity::default(),
            lambda: 1.0,
            mu: 1.0,
            sigma0: 1.0,
            latent_heat: 1.0,
            f: [Poly2::zero(), Poly2::zero()],
            g: Poly2::zero(),
            theta0: Poly2::zero(),
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho", self.rho),
            ("heat_capacity", self.heat_capacity),
            ("alpha", self.alpha),
            ("sigma0", self.sigma0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.latent_heat.is_finite() {
            return Err(Error::Invalid("latent_heat must be finite".into()));
        }
        let k = self.conductivity.matrix();
        if (k[(0, 1)] - k[(1, 0)]).abs() > 1e-14 * k.norm() {
            return Err(Error::Invalid("conductivity must be symmetric".into()));
        }
        if !(k[(0, 0)] > 0.0 && k.determinant() > 0.0) {
            return Err(Error::Invalid("conductivity must be positive definite".into()));
        }
        if !(self.mu > 0.0 && self.lambda + self.mu > 0.0) {
            return Err(Error::Invalid("Lamé parameters need mu > 0 and lambda + mu > 0".into()));
        }
        self.f[0].validate("f[0]")?;
        self.f[1].validate("f[1]")?;
        self.g.validate("g")?;
        self.theta0.validate("theta0")?;
        Ok(())
    }

    /// Volumetric heat capacity `ρc`.
    pub fn volumetric_heat(&self) -> f64 {
        self.rho * self.heat_capacity
    }

    pub fn conductivity_matrix(&self) -> Matrix2<f64> {
        self.conductivity.matrix()
    }

    pub fn body_force(&self, p: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(self.f[0].eval(p), self.f[1].eval(p))
    }

    /// Stable hash of the material constants entering the cell problems,
    /// used to bind tables to the parameters they were computed with. Sources,
    /// initial data and the latent heat are excluded.
    pub fn fingerprint(&self) -> String {
        let material = serde_json::json!({
            "rho": self.rho,
            "heat_capacity": self.heat_capacity,
            "alpha": self.alpha,
            "conductivity": self.conductivity,
            "lambda": self.lambda,
            "mu": self.mu,
            "sigma0": self.sigma0,
        });
        let json = serde_json::to_string(&material).expect("parameters serialize");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_eval_and_padding() {
        let p = Poly2(vec![1.0, 2.0, 3.0, 0.0, 1.0]);
        assert_eq!(p.eval(&Vector2::new(0.5, 2.0)), 1.0 + 1.0 + 6.0 + 1.0);
        assert_eq!(Poly2::zero().eval(&Vector2::new(3.0, 4.0)), 0.0);
    }

    #[test]
    fn defaults_are_unity() {
        let p: PhysicalParams = serde_json::from_str("{}").unwrap();
        assert_eq!(p, PhysicalParams::default());
        p.validate().unwrap();
        assert_eq!(p.conductivity_matrix(), Matrix2::identity());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<PhysicalParams>(r#"{"kappa": 2}"#).is_err());
    }

    #[test]
    fn fingerprint_tracks_conductivity() {
        let a = PhysicalParams::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.conductivity = Conductivity::Scalar(2.0);
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut p = PhysicalParams::default();
        p.mu = 0.0;
        assert!(p.validate().is_err());
        let mut q = PhysicalParams::default();
        q.conductivity = Conductivity::Matrix([[1.0, 2.0], [2.0, 1.0]]);
        assert!(q.validate().is_err());
    }
}
