//! Node-centered 2D grids on a chart rectangle, and the scalar-field trait
//! shared by the transform and normal-operator layers.

use crate::error::{Error, Result};
use crate::vec2::{Axis, Rect, Vec2};

/// Anything that can be evaluated pointwise on the chart.
pub trait ScalarField: Sync {
    fn eval(&self, z: Vec2) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(Vec2) -> f64 + Sync,
{
    fn eval(&self, z: Vec2) -> f64 {
        self(z)
    }
}

/// Dense row-major grid of samples at the nodes of `ax × ay`
/// (index `j * ax.n + i` holds the value at `(ax.node(i), ay.node(j))`).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2 {
    pub ax: Axis,
    pub ay: Axis,
    pub data: Vec<f64>,
}

impl Grid2 {
    pub fn zeros(ax: Axis, ay: Axis) -> Self {
        Grid2 {
            ax,
            ay,
            data: vec![0.0; ax.n * ay.n],
        }
    }

    pub fn from_fn(ax: Axis, ay: Axis, f: impl Fn(Vec2) -> f64) -> Self {
        let mut data = Vec::with_capacity(ax.n * ay.n);
        for j in 0..ay.n {
            for i in 0..ax.n {
                data.push(f(Vec2::new(ax.node(i), ay.node(j))));
            }
        }
        Grid2 { ax, ay, data }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.ax.lo, self.ax.hi, self.ay.lo, self.ay.hi)
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.ax.n && j < self.ay.n);
        j * self.ax.n + i
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.ax.node(i), self.ay.node(j))
    }

    /// Bilinear interpolation; clamps to the rectangle.
    pub fn interp(&self, z: Vec2) -> f64 {
        let (i, fx) = locate(&self.ax, z.x);
        let (j, fy) = locate(&self.ay, z.y);
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy
            + v11 * fx * fy
    }

    /// Discrete L² norm with trapezoid cell weights (converges to the
    /// continuum norm under refinement).
    pub fn l2_norm(&self) -> f64 {
        let (hx, hy) = (self.ax.step(), self.ay.step());
        let mut acc = 0.0;
        for j in 0..self.ay.n {
            let wy = if j == 0 || j == self.ay.n - 1 { 0.5 } else { 1.0 };
            for i in 0..self.ax.n {
                let wx = if i == 0 || i == self.ax.n - 1 { 0.5 } else { 1.0 };
                let v = self.at(i, j);
                acc += wx * wy * v * v;
            }
        }
        (acc * hx * hy).sqrt()
    }

    pub fn validate_finite(&self, what: &str) -> Result<()> {
        if let Some(k) = self.data.iter().position(|v| !v.is_finite()) {
            let (i, j) = (k % self.ax.n, k / self.ax.n);
            return Err(Error::validation(format!(
                "{what}: non-finite value at node ({i}, {j})"
            )));
        }
        Ok(())
    }
}

impl ScalarField for Grid2 {
    fn eval(&self, z: Vec2) -> f64 {
        self.interp(z)
    }
}

fn locate(ax: &Axis, x: f64) -> (usize, f64) {
    let h = ax.step();
    let u = ((x - ax.lo) / h).clamp(0.0, (ax.n - 1) as f64);
    let i = (u.floor() as usize).min(ax.n - 2);
    (i, u - i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bilinear_reproduces_affine() {
        let g = Grid2::from_fn(
            Axis::new(0.0, 1.0, 5),
            Axis::new(-1.0, 1.0, 7),
            |z| 2.0 + 3.0 * z.x - 0.5 * z.y,
        );
        for &(x, y) in &[(0.13, -0.4), (0.77, 0.91), (0.0, 1.0)] {
            assert_relative_eq!(
                g.interp(Vec2::new(x, y)),
                2.0 + 3.0 * x - 0.5 * y,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn l2_norm_of_constant() {
        let g = Grid2::from_fn(Axis::new(0.0, 2.0, 9), Axis::new(0.0, 3.0, 11), |_| 5.0);
        // ∫∫ 25 over a 2×3 rectangle = 150.
        assert_relative_eq!(g.l2_norm(), 150.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn nan_detected() {
        let mut g = Grid2::zeros(Axis::new(0.0, 1.0, 3), Axis::new(0.0, 1.0, 3));
        g.data[4] = f64::NAN;
        assert!(g.validate_finite("test grid").is_err());
    }
}
