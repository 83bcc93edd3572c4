//! Tensor-product grid functions on one habitat and on the pair.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::banded::Scalar;
use crate::error::{Error, Result};
use crate::model::{ModelParameters, Side};

/// Node values on `[x0, x1] x [0, 1]` with `nx` by `ny` intervals, stored
/// row-major as `[x][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction2D<T> {
    pub side: Side,
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> GridFunction2D<T> {
    pub fn zeros(side: Side, x0: f64, x1: f64, nx: usize, ny: usize) -> Self {
        Self { side, x0, x1, nx, ny, values: vec![T::zero(); (nx + 1) * (ny + 1)] }
    }

    pub fn from_fn(side: Side, x0: f64, x1: f64, nx: usize, ny: usize, f: impl Fn(f64, f64) -> T) -> Self {
        let mut g = Self::zeros(side, x0, x1, nx, ny);
        for i in 0..=nx {
            for j in 0..=ny {
                let v = f(g.x(i), g.y(j));
                g.values[i * (ny + 1) + j] = v;
            }
        }
        g
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.x1
        } else {
            self.x0 + i as f64 * self.hx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * (self.ny + 1) + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.values[i * (self.ny + 1) + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * (self.ny + 1)..(i + 1) * (self.ny + 1)]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let w = self.ny + 1;
        &mut self.values[i * w..(i + 1) * w]
    }

    /// Index of the node on the interface `x = 0`.
    pub fn interface_index(&self) -> usize {
        match self.side {
            Side::Infected => self.nx,
            Side::Susceptible => 0,
        }
    }

    /// Index of the node on the outer Dirichlet boundary.
    pub fn outer_index(&self) -> usize {
        match self.side {
            Side::Infected => 0,
            Side::Susceptible => self.nx,
        }
    }

    pub fn same_shape<U>(&self, other: &GridFunction2D<U>) -> bool {
        self.side == other.side && self.nx == other.nx && self.ny == other.ny && self.x0 == other.x0 && self.x1 == other.x1
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> GridFunction2D<U> {
        GridFunction2D {
            side: self.side,
            x0: self.x0,
            x1: self.x1,
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(Error::GridMismatch("grid functions differ in shape".into()));
        }
        let mut out = self.clone();
        for (o, &v) in out.values.iter_mut().zip(&other.values) {
            *o = f(*o, v);
        }
        Ok(out)
    }

    fn trapezoid(&self, f: impl Fn(T) -> f64) -> f64 {
        let (hx, hy) = (self.hx(), self.hy());
        let mut acc = 0.0;
        for i in 0..=self.nx {
            let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
            let mut s = 0.0;
            for j in 0..=self.ny {
                let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
                s += wy * f(self.at(i, j));
            }
            acc += wx * s;
        }
        acc * hx * hy
    }

    pub fn l1(&self) -> f64 {
        self.trapezoid(|v| v.modulus())
    }

    pub fn l2_squared(&self) -> f64 {
        self.trapezoid(|v| {
            let m = v.modulus();
            m * m
        })
    }

    pub fn l2(&self) -> f64 {
        self.l2_squared().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    /// Largest magnitude on `y = 0`, `y = 1` and the outer `x` edge.
    pub fn dirichlet_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..=self.nx {
            m = m.max(self.at(i, 0).modulus()).max(self.at(i, self.ny).modulus());
        }
        for v in self.row(self.outer_index()) {
            m = m.max(v.modulus());
        }
        m
    }
}

impl GridFunction2D<f64> {
    pub fn integral(&self) -> f64 {
        self.trapezoid(|v| v)
    }

    pub fn to_complex(&self) -> GridFunction2D<C64> {
        self.map(|v| C64::new(v, 0.0))
    }
}

impl GridFunction2D<C64> {
    pub fn real_part(&self) -> GridFunction2D<f64> {
        self.map(|v| v.re)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }
}

/// One density on both habitats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidePair<T> {
    pub infected: GridFunction2D<T>,
    pub susceptible: GridFunction2D<T>,
}

impl<T: Scalar> SidePair<T> {
    pub fn l2(&self) -> f64 {
        (self.infected.l2_squared() + self.susceptible.l2_squared()).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.infected.linf().max(self.susceptible.linf())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U + Copy) -> SidePair<U> {
        SidePair { infected: self.infected.map(f), susceptible: self.susceptible.map(f) }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T + Copy) -> Result<Self> {
        Ok(SidePair {
            infected: self.infected.zip_with(&other.infected, f)?,
            susceptible: self.susceptible.zip_with(&other.susceptible, f)?,
        })
    }

    pub fn side(&self, side: Side) -> &GridFunction2D<T> {
        match side {
            Side::Infected => &self.infected,
            Side::Susceptible => &self.susceptible,
        }
    }
}

/// Discretization of the two habitats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub ell: f64,
    pub width_s: f64,
    pub nx_i: usize,
    pub nx_s: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(params: &ModelParameters, nx_i: usize, nx_s: usize, ny: usize) -> Self {
        Self { ell: params.ell, width_s: params.width_s, nx_i, nx_s, ny }
    }

    pub fn validate(&self, min: usize) -> Result<()> {
        if self.nx_i < min || self.nx_s < min || self.ny < min {
            return Err(Error::InvalidParams(format!(
                "grid sizes ({}, {}, {}) must each be >= {min}",
                self.nx_i, self.nx_s, self.ny
            )));
        }
        Ok(())
    }

    pub fn zeros<T: Scalar>(&self) -> SidePair<T> {
        SidePair {
            infected: GridFunction2D::zeros(Side::Infected, -self.ell, 0.0, self.nx_i, self.ny),
            susceptible: GridFunction2D::zeros(Side::Susceptible, 0.0, self.width_s, self.nx_s, self.ny),
        }
    }

    pub fn from_fn<T: Scalar>(&self, f: impl Fn(Side, f64, f64) -> T) -> SidePair<T> {
        SidePair {
            infected: GridFunction2D::from_fn(Side::Infected, -self.ell, 0.0, self.nx_i, self.ny, |x, y| {
                f(Side::Infected, x, y)
            }),
            susceptible: GridFunction2D::from_fn(Side::Susceptible, 0.0, self.width_s, self.nx_s, self.ny, |x, y| {
                f(Side::Susceptible, x, y)
            }),
        }
    }

    pub fn matches<T: Scalar>(&self, pair: &SidePair<T>) -> bool {
        let z: SidePair<T> = self.zeros();
        z.infected.same_shape(&pair.infected) && z.susceptible.same_shape(&pair.susceptible)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trapezoid_norms_of_separable_product() {
        let g = GridFunction2D::<f64>::from_fn(Side::Susceptible, 0.0, 1.0, 200, 200, |x, y| {
            (PI * x).sin() * (PI * y).sin()
        });
        assert!((g.l2() - 0.5).abs() < 1e-4);
        assert!((g.integral() - 4.0 / (PI * PI)).abs() < 1e-4);
        assert!((g.linf() - 1.0).abs() < 1e-12);
        assert!(g.dirichlet_defect() < 1e-15);
    }

    #[test]
    fn interface_and_outer_indices() {
        let grid = Grid { ell: 1.0, width_s: 2.0, nx_i: 8, nx_s: 16, ny: 4 };
        let p: SidePair<f64> = grid.zeros();
        assert_eq!(p.infected.interface_index(), 8);
        assert_eq!(p.infected.x(8), 0.0);
        assert_eq!(p.susceptible.interface_index(), 0);
        assert_eq!(p.susceptible.x(16), 2.0);
        assert_eq!(p.infected.x(0), -1.0);
    }
}
