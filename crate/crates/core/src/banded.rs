//! Banded LU with partial pivoting, generic over real and complex entries.

use num_complex::Complex64 as C64;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + From<f64>
{
    fn modulus(self) -> f64;
    fn zero() -> Self {
        Self::from(0.0)
    }
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for C64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Square matrix with `kl` sub- and `ku` super-diagonals. Each row keeps
/// room for `kl` extra super-diagonals created by pivoting.
#[derive(Debug, Clone)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![T::zero(); n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku, "({r}, {c}) outside band");
        r * self.width + c + self.kl - r
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        if c + self.kl < r || c > r + self.ku {
            T::zero()
        } else {
            self.data[self.idx(r, c)]
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: T) {
        assert!(c + self.kl >= r && c <= r + self.ku, "({r}, {c}) outside band");
        let i = self.idx(r, c);
        self.data[i] = self.data[i] + v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku + 1).min(self.n);
                (lo..hi).fold(T::zero(), |acc, c| acc + self.data[self.idx(r, c)] * x[c])
            })
            .collect()
    }

    pub fn factor(self) -> Result<BandedLu<T>> {
        let BandedMatrix { n, kl, ku, width, mut data } = self;
        let at = |r: usize, c: usize| r * width + c + kl - r;
        let reach = kl + ku;
        let mut piv = vec![0; n];
        for i in 0..n {
            let last = (i + kl + 1).min(n);
            let mut p = i;
            let mut best = data[at(i, i)].modulus();
            for r in i + 1..last {
                let m = data[at(r, i)].modulus();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem(i));
            }
            piv[i] = p;
            let cend = (i + reach + 1).min(n);
            if p != i {
                for c in i..cend {
                    data.swap(at(i, c), at(p, c));
                }
            }
            let pivot = data[at(i, i)];
            for r in i + 1..last {
                let m = data[at(r, i)] / pivot;
                data[at(r, i)] = m;
                if m.modulus() == 0.0 {
                    continue;
                }
                for c in i + 1..cend {
                    let v = data[at(i, c)];
                    data[at(r, c)] = data[at(r, c)] - m * v;
                }
            }
        }
        Ok(BandedLu { n, kl, reach, width, data, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    reach: usize,
    width: usize,
    data: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with the solution.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, kl, w) = (self.n, self.kl, self.width);
        let at = |r: usize, c: usize| r * w + c + kl - r;
        for i in 0..n {
            b.swap(i, self.piv[i]);
            let bi = b[i];
            for r in i + 1..(i + kl + 1).min(n) {
                b[r] = b[r] - self.data[at(r, i)] * bi;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for c in i + 1..(i + self.reach + 1).min(n) {
                s = s - self.data[at(i, c)] * b[c];
            }
            b[i] = s / self.data[at(i, i)];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for i in 0..n {
            let p = (i..n).max_by(|&r, &s| m[r][i].abs().total_cmp(&m[s][i].abs())).unwrap();
            m.swap(i, p);
            x.swap(i, p);
            for r in i + 1..n {
                let f = m[r][i] / m[i][i];
                for c in i..n {
                    m[r][c] -= f * m[i][c];
                }
                x[r] -= f * x[i];
            }
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|c| m[i][c] * x[c]).sum();
            x[i] = (x[i] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn pivoting_is_required_and_handled() {
        let mut a = BandedMatrix::<f64>::new(3, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 2, 2.0);
        a.add(2, 1, 3.0);
        a.add(2, 2, 1.0);
        let x = a.clone().factor().unwrap().solve(&[1.0, 2.0, 3.0]);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = BandedMatrix::<C64>::new(4, 1, 1);
        assert!(matches!(a.factor(), Err(Error::SingularSystem(0))));
    }

    proptest! {
        #[test]
        fn matches_dense_elimination(
            n in 3usize..24, kl in 0usize..4, ku in 0usize..4,
            seed in prop::collection::vec(-1.0f64..1.0, 24 * 24 + 24),
        ) {
            let mut band = BandedMatrix::<f64>::new(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            for r in 0..n {
                for c in r.saturating_sub(kl)..(r + ku + 1).min(n) {
                    let v = seed[r * 24 + c] + if r == c { 3.0 } else { 0.0 };
                    band.add(r, c, v);
                    dense[r][c] = v;
                }
            }
            let b: Vec<f64> = (0..n).map(|i| seed[24 * 24 + i]).collect();
            let x = band.factor().unwrap().solve(&b);
            let y = dense_solve(&dense, &b);
            for (xi, yi) in x.iter().zip(&y) {
                prop_assert!((xi - yi).abs() < 1e-9 * (1.0 + yi.abs()));
            }
        }
    }
}
