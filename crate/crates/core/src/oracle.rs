//! Brute-force finite-difference solver for the scalar two-interval problem
//! with skew interface conditions. Independent of the closed-form mode
//! solver and used to cross-check it.

use num_complex::Complex64 as C64;

use crate::banded::{BandedMatrix, Scalar};
use crate::error::{Error, Result};

pub const MIN_RESOLUTION: usize = 512;

/// `h'' - omega^2 h = g` on both intervals, zero outer Dirichlet data,
/// continuity and `beta_I h_I'(0) = beta_S h_S'(0)` at the interface.
/// `g_i` holds samples at `-ell + i h_I`, `g_s` at `j h_S`.
#[derive(Debug, Clone)]
pub struct TwoIntervalBvp {
    pub omega_minus_sq: C64,
    pub omega_plus_sq: C64,
    pub g_i: Vec<C64>,
    pub g_s: Vec<C64>,
    pub beta_i: f64,
    pub beta_s: f64,
    pub ell: f64,
    pub width_s: f64,
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x_i: Vec<f64>,
    pub h_i: Vec<C64>,
    pub x_s: Vec<f64>,
    pub h_s: Vec<C64>,
}

impl OracleSolution {
    /// Discrete L2 norm (trapezoid) over both intervals.
    pub fn l2(&self) -> f64 {
        let part = |x: &[f64], v: &[C64]| -> f64 {
            let h = x[1] - x[0];
            let n = v.len() - 1;
            v.iter()
                .enumerate()
                .map(|(i, z)| if i == 0 || i == n { 0.5 } else { 1.0 } * z.norm_sqr())
                .sum::<f64>()
                * h
        };
        (part(&self.x_i, &self.h_i) + part(&self.x_s, &self.h_s)).sqrt()
    }

    /// Subsample onto the grid of `coarse` (node counts must divide).
    pub fn restrict_to(&self, coarse_i: usize, coarse_s: usize) -> Result<OracleSolution> {
        let pick = |x: &[f64], v: &[C64], n: usize| -> Result<(Vec<f64>, Vec<C64>)> {
            let fine = v.len() - 1;
            if n == 0 || !fine.is_multiple_of(n) {
                return Err(Error::GridMismatch(format!("{fine} intervals do not refine {n}")));
            }
            let r = fine / n;
            Ok(((0..=n).map(|i| x[i * r]).collect(), (0..=n).map(|i| v[i * r]).collect()))
        };
        let (x_i, h_i) = pick(&self.x_i, &self.h_i, coarse_i)?;
        let (x_s, h_s) = pick(&self.x_s, &self.h_s, coarse_s)?;
        Ok(OracleSolution { x_i, h_i, x_s, h_s })
    }

    /// Node-wise `a * self + b * other` on identical grids.
    pub fn combine(&self, a: f64, other: &OracleSolution, b: f64) -> OracleSolution {
        let mix = |u: &[C64], v: &[C64]| u.iter().zip(v).map(|(p, q)| a * p + b * q).collect();
        OracleSolution {
            x_i: self.x_i.clone(),
            h_i: mix(&self.h_i, &other.h_i),
            x_s: self.x_s.clone(),
            h_s: mix(&self.h_s, &other.h_s),
        }
    }
}

/// Two-interval matrix with interior rows `a (u_{i-1} - 2 u_i + u_{i+1}) + b u_i`
/// and the two interface rows. Unknowns: infected nodes `1..=n` (the last is
/// the left trace), then susceptible nodes `0..m` (the first is the right
/// trace); outer Dirichlet nodes are eliminated.
pub(crate) struct InterfaceRows<T> {
    pub n: usize,
    pub m: usize,
    pub h_i: f64,
    pub h_s: f64,
    pub a_i: T,
    pub b_i: T,
    pub a_s: T,
    pub b_s: T,
    pub beta_i: f64,
    pub beta_s: f64,
}

impl<T: Scalar> InterfaceRows<T> {
    pub fn assemble(&self) -> BandedMatrix<T> {
        let (n, m) = (self.n, self.m);
        let dim = n + m;
        let mut a = BandedMatrix::new(dim, 3, 2);
        for i in 1..n {
            let r = i - 1;
            if i > 1 {
                a.add(r, r - 1, self.a_i);
            }
            a.add(r, r, self.b_i - T::from(2.0) * self.a_i);
            a.add(r, r + 1, self.a_i);
        }
        // Interface rows are scaled to the magnitude of the interior rows;
        // without this the pivots they produce cost several digits.
        let scale = self.a_i.modulus().max(self.a_s.modulus()).max(1.0);
        // continuity: u_I(0) - u_S(0) = 0
        a.add(n - 1, n - 1, T::from(scale));
        a.add(n - 1, n, T::from(-scale));
        // beta_I (3 u_n - 4 u_{n-1} + u_{n-2}) / (2 h_I)
        //   - beta_S (-3 v_0 + 4 v_1 - v_2) / (2 h_S) = 0
        let h = self.h_i.min(self.h_s);
        let ci = scale * h * self.beta_i / (2.0 * self.h_i * (self.beta_i + self.beta_s));
        let cs = scale * h * self.beta_s / (2.0 * self.h_s * (self.beta_i + self.beta_s));
        a.add(n, n - 1, T::from(3.0 * ci));
        a.add(n, n - 2, T::from(-4.0 * ci));
        if n >= 3 {
            a.add(n, n - 3, T::from(ci));
        }
        a.add(n, n, T::from(3.0 * cs));
        a.add(n, n + 1, T::from(-4.0 * cs));
        a.add(n, n + 2, T::from(cs));
        for j in 1..m {
            let r = n + j;
            a.add(r, r - 1, self.a_s);
            a.add(r, r, self.b_s - T::from(2.0) * self.a_s);
            if j + 1 < m {
                a.add(r, r + 1, self.a_s);
            }
        }
        a
    }
}

pub fn solve_fd(bvp: &TwoIntervalBvp) -> Result<OracleSolution> {
    let n = bvp.g_i.len().saturating_sub(1);
    let m = bvp.g_s.len().saturating_sub(1);
    if n < 3 || m < 3 {
        return Err(Error::Degenerate("each interval needs at least three cells".into()));
    }
    let h_i = bvp.ell / n as f64;
    let h_s = bvp.width_s / m as f64;
    let rows = InterfaceRows {
        n,
        m,
        h_i,
        h_s,
        a_i: C64::new(1.0 / (h_i * h_i), 0.0),
        b_i: -bvp.omega_minus_sq,
        a_s: C64::new(1.0 / (h_s * h_s), 0.0),
        b_s: -bvp.omega_plus_sq,
        beta_i: bvp.beta_i,
        beta_s: bvp.beta_s,
    };
    let lu = rows.assemble().factor()?;
    let mut rhs = vec![C64::new(0.0, 0.0); n + m];
    rhs[..(n - 1)].copy_from_slice(&bvp.g_i[1..n]);
    rhs[(n + 1)..(n + m)].copy_from_slice(&bvp.g_s[1..m]);
    lu.solve_in_place(&mut rhs);

    let mut h_i_vals = vec![C64::new(0.0, 0.0); n + 1];
    h_i_vals[1..=n].copy_from_slice(&rhs[..n]);
    let mut h_s_vals = vec![C64::new(0.0, 0.0); m + 1];
    h_s_vals[..m].copy_from_slice(&rhs[n..]);
    Ok(OracleSolution {
        x_i: (0..=n).map(|i| -bvp.ell + i as f64 * h_i).collect(),
        h_i: h_i_vals,
        x_s: (0..=m).map(|j| j as f64 * h_s).collect(),
        h_s: h_s_vals,
    })
}

/// Problem family indexed by resolution, for refinement studies.
pub trait BvpFamily {
    fn at(&self, n_i: usize, n_s: usize) -> TwoIntervalBvp;
}

impl<F: Fn(usize, usize) -> TwoIntervalBvp> BvpFamily for F {
    fn at(&self, n_i: usize, n_s: usize) -> TwoIntervalBvp {
        self(n_i, n_s)
    }
}

/// Oracle answer on the `(n_i, n_s)` grid, sharpened by Richardson
/// extrapolation over `levels` successive doublings. The raw scheme has
/// error `c2 h^2 + c3 h^3 + c4 h^4 + ...`; level 2 removes `h^2`, level 3
/// also removes `h^3`.
pub fn solve_extrapolated(family: &impl BvpFamily, n_i: usize, n_s: usize, levels: usize) -> Result<OracleSolution> {
    if n_i < MIN_RESOLUTION || n_s < MIN_RESOLUTION {
        return Err(Error::Degenerate(format!(
            "oracle resolution ({n_i}, {n_s}) below {MIN_RESOLUTION}"
        )));
    }
    let levels = levels.max(1);
    let mut sols = Vec::with_capacity(levels);
    for l in 0..levels {
        let f = 1usize << l;
        let s = solve_fd(&family.at(n_i * f, n_s * f))?;
        sols.push(if l == 0 { s } else { s.restrict_to(n_i, n_s)? });
    }
    // Neville-style elimination of h^2, h^3, ... in turn.
    let mut table = sols;
    for power in (2..).take(levels - 1) {
        let r = 2f64.powi(power);
        let next: Vec<OracleSolution> = table
            .windows(2)
            .map(|w| w[1].combine(r / (r - 1.0), &w[0], -1.0 / (r - 1.0)))
            .collect();
        table = next;
    }
    Ok(table.into_iter().next().expect("at least one level"))
}

/// Observed order from three successive doublings,
/// `log2(|u_n - u_2n| / |u_2n - u_4n|)`, measured on the coarse nodes.
pub fn self_convergence_order(family: &impl BvpFamily, n: usize) -> Result<f64> {
    let a = solve_fd(&family.at(n, n))?;
    let b = solve_fd(&family.at(2 * n, 2 * n))?.restrict_to(n, n)?;
    let c = solve_fd(&family.at(4 * n, 4 * n))?.restrict_to(n, n)?;
    let d1 = a.combine(1.0, &b, -1.0).l2();
    let d2 = b.combine(1.0, &c, -1.0).l2();
    Ok((d1 / d2).log2())
}
