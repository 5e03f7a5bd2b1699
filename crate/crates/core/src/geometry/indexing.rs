//! ε-tiling of the macroscopic domain and the unfolding brackets `[x]`, `{x}`.

use nalgebra::SVector;

/// Tiling of `Ω = (0,1)^D` by `2ⁿ × … × 2ⁿ` cells of size `ε = 2⁻ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellIndexing {
    pub level: u32,
}

impl CellIndexing {
    pub fn new(level: u32) -> Self {
        Self { level }
    }

    pub fn eps(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    /// Cells per coordinate direction.
    pub fn cells_per_side(&self) -> usize {
        1usize << self.level
    }

    pub fn cell_count(&self, dim: usize) -> usize {
        self.cells_per_side().pow(dim as u32)
    }

    /// Splits `x ∈ Ω̄` into `(k, ŷ)` with `x = ε(k + ŷ)`.
    ///
    /// Points on the far faces `x_i = 1` belong to the last cell, with the
    /// corresponding local coordinate equal to `1`.
    pub fn decompose<const D: usize>(&self, x: &SVector<f64, D>) -> ([usize; D], SVector<f64, D>) {
        let eps = self.eps();
        let last = self.cells_per_side() - 1;
        let mut k = [0usize; D];
        let mut local = SVector::<f64, D>::zeros();
        for i in 0..D {
            let scaled = x[i] / eps;
            let idx = (scaled.floor().max(0.0) as usize).min(last);
            k[i] = idx;
            local[i] = scaled - idx as f64;
        }
        (k, local)
    }

    /// Inverse of [`CellIndexing::decompose`].
    pub fn compose<const D: usize>(&self, k: &[usize; D], local: &SVector<f64, D>) -> SVector<f64, D> {
        let eps = self.eps();
        SVector::<f64, D>::from_fn(|i, _| eps * (k[i] as f64 + local[i]))
    }

    /// Linear cell id for 2D cells, row-major in `(kx, ky)` with `kx` fastest.
    pub fn linear_index(&self, k: [usize; 2]) -> usize {
        k[1] * self.cells_per_side() + k[0]
    }

    pub fn cell_of(&self, id: usize) -> [usize; 2] {
        let n = self.cells_per_side();
        [id % n, id / n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use proptest::prelude::*;

    #[test]
    fn decomposition_examples() {
        let half = CellIndexing::new(1);
        let (k, y) = half.decompose(&Vector2::new(0.6, 0.3));
        assert_eq!(k, [1, 0]);
        assert!((y - Vector2::new(0.2, 0.6)).norm() < 1e-14);

        let quarter = CellIndexing::new(2);
        let (k, y) = quarter.decompose(&Vector2::new(0.0, 0.0));
        assert_eq!(k, [0, 0]);
        assert_eq!(y, Vector2::zeros());

        let (k, y) = quarter.decompose(&Vector2::new(0.999, 0.999));
        assert_eq!(k, [3, 3]);
        assert!((y - Vector2::new(0.996, 0.996)).norm() < 1e-12);
    }

    #[test]
    fn far_face_belongs_to_last_cell() {
        let idx = CellIndexing::new(2);
        let (k, y) = idx.decompose(&Vector2::new(1.0, 0.5));
        assert_eq!(k, [3, 2]);
        assert_eq!(y[0], 1.0);
    }

    proptest! {
        #[test]
        fn decompose_then_compose_is_identity(x in 0.0f64..1.0, y in 0.0f64..1.0, n in 0u32..6) {
            let idx = CellIndexing::new(n);
            let p = Vector2::new(x, y);
            let (k, local) = idx.decompose(&p);
            prop_assert!(local.iter().all(|&v| (0.0..1.0 + 1e-12).contains(&v)));
            prop_assert!((idx.compose(&k, &local) - p).norm() < 1e-14);
        }
    }
}
