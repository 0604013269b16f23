//! Discrete domain, field storage and quadrature.
//!
//! The domain is the square (0,L) x (0,L) on a uniform tensor grid.
//! Homogeneous Dirichlet conditions in x eliminate the columns i = 0 and
//! i = Nx from the unknown vector; all y-rows are retained (the y-boundary
//! conditions are Neumann-type and enter through ghost elimination in the
//! operator stencils). The discrete L^2 pairing uses trapezoid weights:
//! full weight hx*hy at interior nodes, halved at j = 0 and j = Ny.

use ndarray::Array1;

use crate::error::{KpError, Result};

/// Uniform tensor grid on (0,L)^2.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    l: f64,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl Grid2D {
    /// Builds a grid with `nx` subdivisions in x and `ny` in y.
    pub fn build(l: f64, nx: usize, ny: usize) -> Result<Grid2D> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(KpError::Config(format!(
                "domain length L must be positive and finite, got {l}"
            )));
        }
        if nx < 8 {
            return Err(KpError::Config(format!("Nx must be at least 8, got {nx}")));
        }
        if ny < 8 {
            return Err(KpError::Config(format!("Ny must be at least 8, got {ny}")));
        }
        Ok(Grid2D {
            l,
            nx,
            ny,
            hx: l / nx as f64,
            hy: l / ny as f64,
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Number of active unknowns, (Nx-1)*(Ny+1).
    pub fn n_unknowns(&self) -> usize {
        (self.nx - 1) * (self.ny + 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    /// Flat index of the active node (i, j), 1 <= i <= Nx-1, 0 <= j <= Ny.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.nx - 1);
        debug_assert!(j <= self.ny);
        (i - 1) * (self.ny + 1) + j
    }

    /// Inverse of [`Grid2D::flat`].
    pub fn node(&self, k: usize) -> (usize, usize) {
        let stride = self.ny + 1;
        (k / stride + 1, k % stride)
    }

    /// Trapezoid factor in y: 1/2 on the rows j = 0 and j = Ny.
    pub fn y_factor(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny {
            0.5
        } else {
            1.0
        }
    }

    /// Quadrature weight of the active node (i, j).
    pub fn quad_weight(&self, _i: usize, j: usize) -> f64 {
        self.hx * self.hy * self.y_factor(j)
    }

    /// All quadrature weights in flat-index order.
    pub fn quad_weights(&self) -> Array1<f64> {
        let mut w = Array1::zeros(self.n_unknowns());
        for k in 0..w.len() {
            let (i, j) = self.node(k);
            w[k] = self.quad_weight(i, j);
        }
        w
    }

    /// 1-D trapezoid integral along y of per-row values (length Ny+1).
    pub fn trapz_y(&self, vals: &[f64]) -> f64 {
        assert_eq!(vals.len(), self.ny + 1);
        let mut s = 0.0;
        for (j, v) in vals.iter().enumerate() {
            s += self.y_factor(j) * v;
        }
        self.hy * s
    }

    /// 1-D trapezoid integral along x of per-column values (length Nx+1).
    pub fn trapz_x(&self, vals: &[f64]) -> f64 {
        assert_eq!(vals.len(), self.nx + 1);
        let mut s = 0.5 * (vals[0] + vals[self.nx]);
        for v in &vals[1..self.nx] {
            s += v;
        }
        self.hx * s
    }
}

/// Scalar field over the active unknowns of a [`Grid2D`].
#[derive(Debug, Clone)]
pub struct StateField {
    pub values: Array1<f64>,
    grid: Grid2D,
}

impl StateField {
    pub fn zeros(grid: &Grid2D) -> StateField {
        StateField {
            values: Array1::zeros(grid.n_unknowns()),
            grid: grid.clone(),
        }
    }

    /// Builds a field by sampling `f(x, y)` at the active nodes.
    pub fn from_fn(grid: &Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> StateField {
        let mut u = StateField::zeros(grid);
        for k in 0..u.values.len() {
            let (i, j) = grid.node(k);
            u.values[k] = f(grid.x(i), grid.y(j));
        }
        u
    }

    pub fn from_values(grid: &Grid2D, values: Array1<f64>) -> Result<StateField> {
        if values.len() != grid.n_unknowns() {
            return Err(KpError::Dimension(format!(
                "field length {} does not match unknown count {}",
                values.len(),
                grid.n_unknowns()
            )));
        }
        Ok(StateField {
            values,
            grid: grid.clone(),
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Value at grid node (i, j); Dirichlet traces at i = 0, Nx are
    /// structurally zero and never stored.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        if i == 0 || i == self.grid.nx {
            0.0
        } else {
            self.values[self.grid.flat(i, j)]
        }
    }

    pub fn scaled(&self, c: f64) -> StateField {
        StateField {
            values: &self.values * c,
            grid: self.grid.clone(),
        }
    }

    /// self + c * other.
    pub fn add_scaled(&self, c: f64, other: &StateField) -> Result<StateField> {
        check_same_grid(self, other)?;
        Ok(StateField {
            values: &self.values + &(&other.values * c),
            grid: self.grid.clone(),
        })
    }
}

fn check_same_grid(a: &StateField, b: &StateField) -> Result<()> {
    if a.grid != b.grid {
        return Err(KpError::Dimension(
            "fields live on different grids".into(),
        ));
    }
    Ok(())
}

/// Trapezoid-weighted discrete L^2(Omega) inner product.
pub fn inner_product(a: &StateField, b: &StateField) -> Result<f64> {
    check_same_grid(a, b)?;
    let g = a.grid();
    let mut s = 0.0;
    for k in 0..a.values.len() {
        let (i, j) = g.node(k);
        s += g.quad_weight(i, j) * a.values[k] * b.values[k];
    }
    Ok(s)
}

/// Squared discrete L^2 norm.
pub fn norm_sq(a: &StateField) -> f64 {
    inner_product(a, a).expect("same field")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn build_examples() {
        let g = Grid2D::build(1.0, 10, 10).unwrap();
        assert_eq!(g.hx(), 0.1);
        assert_eq!(g.hy(), 0.1);
        assert_eq!(g.n_unknowns(), 99);

        let g = Grid2D::build(std::f64::consts::PI, 8, 8).unwrap();
        assert_relative_eq!(g.hx(), std::f64::consts::PI / 8.0);
        assert_eq!(g.n_unknowns(), 63);
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(matches!(
            Grid2D::build(0.0, 10, 10),
            Err(KpError::Config(_))
        ));
        assert!(matches!(Grid2D::build(1.0, 4, 10), Err(KpError::Config(_))));
        assert!(matches!(Grid2D::build(1.0, 10, 7), Err(KpError::Config(_))));
    }

    #[test]
    fn index_maps_are_bijective() {
        let g = Grid2D::build(2.0, 12, 9).unwrap();
        for k in 0..g.n_unknowns() {
            let (i, j) = g.node(k);
            assert_eq!(g.flat(i, j), k);
        }
    }

    #[test]
    fn spacing_times_count_recovers_length() {
        for &(l, nx, ny) in &[(1.0, 10usize, 10usize), (std::f64::consts::PI, 16, 24)] {
            let g = Grid2D::build(l, nx, ny).unwrap();
            assert_relative_eq!(g.hx() * nx as f64, l, max_relative = 1e-15);
            assert_relative_eq!(g.hy() * ny as f64, l, max_relative = 1e-15);
        }
    }

    #[test]
    fn inner_product_of_ones_is_weight_sum() {
        let g = Grid2D::build(1.0, 10, 10).unwrap();
        let ones = StateField::from_fn(&g, |_, _| 1.0);
        // Independent oracle: sum the quadrature weights explicitly.
        let expected: f64 = g.quad_weights().sum();
        assert_relative_eq!(
            inner_product(&ones, &ones).unwrap(),
            expected,
            max_relative = 1e-14
        );
        // 9 interior columns of width hx, full [0,L] trapezoid in y.
        assert_relative_eq!(expected, 0.9, max_relative = 1e-14);
    }

    #[test]
    fn inner_product_zero_field() {
        let g = Grid2D::build(1.0, 8, 8).unwrap();
        let z = StateField::zeros(&g);
        let b = StateField::from_fn(&g, |x, y| x + y);
        assert_eq!(inner_product(&z, &b).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_rejects_mismatched_grids() {
        let g1 = Grid2D::build(1.0, 8, 8).unwrap();
        let g2 = Grid2D::build(1.0, 10, 8).unwrap();
        let a = StateField::zeros(&g1);
        let b = StateField::zeros(&g2);
        assert!(matches!(inner_product(&a, &b), Err(KpError::Dimension(_))));
    }

    #[test]
    fn quadrature_exact_for_bilinear_fields() {
        // Interior x-nodes with uniform weight hx form a composite midpoint
        // rule on [hx/2, L - hx/2], exact for polynomials linear in x;
        // trapezoid in y is exact for polynomials linear in y.
        let g = Grid2D::build(1.0, 16, 12).unwrap();
        let p = StateField::from_fn(&g, |x, y| 2.0 * x - 0.5 * y + 3.0 * x * y + 1.0);
        let ones = StateField::from_fn(&g, |_, _| 1.0);
        let a = g.hx() / 2.0;
        let b = g.l() - g.hx() / 2.0;
        let l = g.l();
        // integral of p over [a,b] x [0,L]
        let ix1 = b - a;
        let ixx = (b * b - a * a) / 2.0;
        let exact = 2.0 * ixx * l - 0.5 * ix1 * l * l / 2.0 + 3.0 * ixx * l * l / 2.0 + ix1 * l;
        assert_relative_eq!(inner_product(&p, &ones).unwrap(), exact, max_relative = 1e-13);
    }

    #[test]
    fn dirichlet_traces_are_zero() {
        let g = Grid2D::build(1.0, 8, 8).unwrap();
        let u = StateField::from_fn(&g, |_, _| 7.0);
        assert_eq!(u.value(0, 3), 0.0);
        assert_eq!(u.value(8, 5), 0.0);
        assert_eq!(u.value(1, 0), 7.0);
    }

    proptest! {
        #[test]
        fn inner_product_symmetric_and_positive(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let g = Grid2D::build(1.0, 8, 8).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = StateField::from_fn(&g, |_, _| rng.gen_range(-1.0..1.0));
            let b = StateField::from_fn(&g, |_, _| rng.gen_range(-1.0..1.0));
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(norm_sq(&a) >= 0.0);
        }

        #[test]
        fn norm_definite(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let g = Grid2D::build(1.0, 8, 8).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = StateField::from_fn(&g, |_, _| rng.gen_range(-1.0..1.0));
            let nonzero = a.values.iter().any(|&v| v != 0.0);
            prop_assert_eq!(norm_sq(&a) > 0.0, nonzero);
        }
    }
}
