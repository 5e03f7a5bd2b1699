//! Height-parametrized deformation of the unit cell:
//! `s(x) = x + h n(P(x)) χ(d(x))`.

use nalgebra::{Const, DimMin};

use super::cutoff::Cutoff;
use super::shape::{Point, Shape, Tensor};
use crate::error::{Error, Result};

const INVERSE_MAX_ITER: usize = 50;

/// Geometric data of a point relative to Γ that does not depend on `h`.
///
/// Everything the transform needs at `x` is `d`, `n(P(x))`, `D²d` and the
/// cutoff; caching frames lets callers evaluate many heights cheaply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandFrame<const D: usize> {
    pub distance: f64,
    pub normal: Point<D>,
    /// `D²d(x) = -L(P)(Id - d L(P))⁻¹`, zero outside the cutoff support.
    pub hessian: Tensor<D>,
    pub cutoff: f64,
    pub cutoff_slope: f64,
}

impl<const D: usize> BandFrame<D> {
    /// Frame of a point where the transform is the identity.
    pub fn inactive() -> Self {
        Self {
            distance: f64::INFINITY,
            normal: Point::<D>::zeros(),
            hessian: Tensor::<D>::zeros(),
            cutoff: 0.0,
            cutoff_slope: 0.0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.cutoff != 0.0 || self.cutoff_slope != 0.0
    }

    /// Displacement `s(x) - x` per unit height: `n χ(d)`. This is also the
    /// transform velocity per unit normal speed.
    pub fn direction(&self) -> Point<D> {
        self.normal * self.cutoff
    }

    /// `F = Id + h (χ D²d + χ' n nᵀ)`.
    pub fn jacobian(&self, h: f64) -> Tensor<D> {
        if !self.is_active() {
            return Tensor::<D>::identity();
        }
        Tensor::<D>::identity()
            + (self.hessian * self.cutoff + self.normal * self.normal.transpose() * self.cutoff_slope) * h
    }
}

/// The Hanzawa transform of one cell at a fixed height.
#[derive(Debug, Clone)]
pub struct HanzawaTransform<'a, const D: usize> {
    shape: &'a Shape<D>,
    cutoff: Cutoff,
    h: f64,
}

impl<'a, const D: usize> HanzawaTransform<'a, D>
where
    Const<D>: DimMin<Const<D>, Output = Const<D>>,
{
    /// Accepts `|h| ≤ a*/10`; anything larger is an admissibility error.
    pub fn new(shape: &'a Shape<D>, h: f64) -> Result<Self> {
        let (lo, hi) = shape.height_band();
        if !(lo <= h && h <= hi) {
            return Err(Error::Admissibility { h, lo, hi });
        }
        Ok(Self { shape, cutoff: Cutoff::new(shape.a1(), shape.a2()), h })
    }

    pub fn shape(&self) -> &Shape<D> {
        self.shape
    }

    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    /// Height-independent frame at `x`.
    pub fn frame(&self, x: &Point<D>) -> Result<BandFrame<D>> {
        band_frame(self.shape, &self.cutoff, x)
    }

    pub fn map(&self, x: &Point<D>) -> Result<Point<D>> {
        if self.h == 0.0 {
            return Ok(*x);
        }
        let f = self.frame(x)?;
        Ok(x + f.direction() * self.h)
    }

    /// Analytic `F = Ds` and `J = det F`.
    pub fn jacobian(&self, x: &Point<D>) -> Result<(Tensor<D>, f64)> {
        let f = self.frame(x)?.jacobian(self.h);
        Ok((f, f.determinant()))
    }

    /// Solves `s(x) = y` by damped Newton, seeded with `y - h n(P(y)) χ(d(y))`.
    pub fn inverse_map(&self, y: &Point<D>) -> Result<Point<D>> {
        if self.h == 0.0 {
            return Ok(*y);
        }
        let seed = self.frame(y)?;
        let mut x = y - seed.direction() * self.h;
        let mut frame = self.frame(&x)?;
        let mut res = x + frame.direction() * self.h - y;
        for _ in 0..INVERSE_MAX_ITER {
            if res.norm() <= 1e-14 {
                return Ok(x);
            }
            let jac = frame.jacobian(self.h);
            let step = jac.try_inverse().ok_or(Error::Singular)? * res;
            let mut alpha = 1.0;
            loop {
                let cand = x - step * alpha;
                let cf = self.frame(&cand)?;
                let cres = cand + cf.direction() * self.h - y;
                if cres.norm() < res.norm() || alpha < 1e-6 {
                    x = cand;
                    frame = cf;
                    res = cres;
                    break;
                }
                alpha *= 0.5;
            }
        }
        if res.norm() <= 1e-12 {
            Ok(x)
        } else {
            Err(Error::InverseFailure { residual: res.norm() })
        }
    }
}

/// Frame at `x` for a given shape and cutoff.
pub fn band_frame<const D: usize>(shape: &Shape<D>, cutoff: &Cutoff, x: &Point<D>) -> Result<BandFrame<D>>
where
    Const<D>: DimMin<Const<D>, Output = Const<D>>,
{
    let p = shape.project(x)?;
    let (lo, hi) = cutoff.support();
    if !p.in_band || p.distance <= lo || p.distance >= hi {
        return Ok(BandFrame::inactive());
    }
    let c = cutoff.eval(p.distance);
    if c.value == 0.0 && c.slope == 0.0 {
        return Ok(BandFrame::inactive());
    }
    let l = shape.shape_tensor_unchecked(&p.point);
    let normal = shape_normal(shape, &p.point);
    let m = (Tensor::<D>::identity() - l * p.distance).try_inverse().ok_or(Error::Singular)?;
    Ok(BandFrame {
        distance: p.distance,
        normal,
        hessian: -(l * m),
        cutoff: c.value,
        cutoff_slope: c.slope,
    })
}

fn shape_normal<const D: usize>(shape: &Shape<D>, gamma: &Point<D>) -> Point<D>
where
    Const<D>: DimMin<Const<D>, Output = Const<D>>,
{
    // The projection lands on Γ to round-off; skip the residual check.
    shape.normal(gamma).unwrap_or_else(|_| {
        let e = gamma - shape.center();
        e / e.norm()
    })
}
