//! Scalar two-interval problem for one sine mode,
//!
//! ```text
//! h_I'' - p_minus^2 h_I = g_I  on (-ell, 0),   h_I(-ell) = 0,
//! h_S'' - p_plus^2  h_S = g_S  on (0, L),      h_S(L)    = 0,
//! h_I(0) = h_S(0),   beta_I h_I'(0) = beta_S h_S'(0),
//! ```
//!
//! solved through variation of constants. On every grid cell the forcing is
//! a linear polynomial plus decaying exponentials, and the convolution
//! against `e^{p t}` is integrated in closed form, so the only error left is
//! rounding.

use num_complex::Complex64 as C64;

use crate::cmath::{exp_divided, expm1, phi1, phi2};
use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// `coef * e^{rate * tau}`
    Left,
    /// `coef * e^{rate * (h - tau)}`
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coef: C64,
    pub rate: C64,
    pub anchor: Anchor,
}

/// Forcing on one cell in the local coordinate `tau in [0, h]`:
/// `constant + slope * tau + sum of exponential terms`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellForcing {
    pub constant: C64,
    pub slope: C64,
    pub exps: Vec<ExpTerm>,
}

impl CellForcing {
    pub fn linear(constant: C64, slope: C64) -> Self {
        Self { constant, slope, exps: Vec::new() }
    }

    pub fn eval(&self, tau: f64, h: f64) -> C64 {
        let mut v = self.constant + self.slope * tau;
        for e in &self.exps {
            v += e.coef
                * match e.anchor {
                    Anchor::Left => (e.rate * tau).exp(),
                    Anchor::Right => (e.rate * (h - tau)).exp(),
                };
        }
        v
    }

    /// `g(h - tau)` as a cell forcing in `tau`.
    pub fn reflect(&self, h: f64) -> Self {
        Self {
            constant: self.constant + self.slope * h,
            slope: -self.slope,
            exps: self
                .exps
                .iter()
                .map(|e| ExpTerm {
                    anchor: match e.anchor {
                        Anchor::Left => Anchor::Right,
                        Anchor::Right => Anchor::Left,
                    },
                    ..*e
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, s: C64) {
        self.constant *= s;
        self.slope *= s;
        for e in &mut self.exps {
            e.coef *= s;
        }
    }

    fn push_exp(&mut self, coef: C64, rate: C64, anchor: Anchor) {
        if let Some(e) = self.exps.iter_mut().find(|e| e.rate == rate && e.anchor == anchor) {
            e.coef += coef;
        } else {
            self.exps.push(ExpTerm { coef, rate, anchor });
        }
    }

    fn absorb(&mut self, other: &CellForcing, s: C64) {
        self.constant += other.constant * s;
        self.slope += other.slope * s;
        for e in &other.exps {
            self.push_exp(e.coef * s, e.rate, e.anchor);
        }
    }

    /// `int_0^s e^{(s - tau) p} g(tau) dtau`.
    pub fn forward_integral(&self, s: f64, h: f64, p: C64) -> C64 {
        if s == 0.0 {
            return ZERO;
        }
        let sp = p * s;
        let mut acc = self.constant * s * phi1(sp) + self.slope * s * s * phi2(sp);
        for e in &self.exps {
            acc += e.coef
                * match e.anchor {
                    Anchor::Left => s * exp_divided(sp, e.rate * s),
                    Anchor::Right => (e.rate * (h - s)).exp() * s * phi1((p + e.rate) * s),
                };
        }
        acc
    }

    /// `int_{h-r}^h e^{(tau - (h - r)) p} g(tau) dtau`.
    pub fn backward_integral(&self, r: f64, h: f64, p: C64) -> C64 {
        self.reflect(h).forward_integral(r, h, p)
    }

    /// `tau -> int_0^tau e^{(tau - t) p} g(t) dt` as a cell forcing. Only
    /// linear pieces are supported.
    fn forward_primitive(&self, p: C64) -> Result<Self> {
        if !self.exps.is_empty() {
            return Err(Error::Degenerate(
                "closed-form primitive needs piecewise-linear forcing".into(),
            ));
        }
        let (a, b) = (self.constant, self.slope);
        let p2 = p * p;
        let mut out = Self::linear(-a / p - b / p2, -b / p);
        out.push_exp(a / p + b / p2, p, Anchor::Left);
        Ok(out)
    }
}

/// Forcing on one habitat: `cells[i]` lives on `[x0 + i h, x0 + (i+1) h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SideForcing {
    pub x0: f64,
    pub h: f64,
    pub cells: Vec<CellForcing>,
}

impl SideForcing {
    pub fn zero(x0: f64, x1: f64, cells: usize) -> Self {
        Self { x0, h: (x1 - x0) / cells as f64, cells: vec![CellForcing::linear(ZERO, ZERO); cells] }
    }

    /// Piecewise-linear interpolant of node samples on a uniform grid.
    pub fn piecewise_linear(x0: f64, x1: f64, samples: &[C64]) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::QuadratureResolution(format!(
                "{} samples; at least two cells are needed",
                samples.len()
            )));
        }
        let n = samples.len() - 1;
        let h = (x1 - x0) / n as f64;
        let cells = samples.windows(2).map(|w| CellForcing::linear(w[0], (w[1] - w[0]) / h)).collect();
        Ok(Self { x0, h, cells })
    }

    pub fn from_fn(x0: f64, x1: f64, cells: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        let h = (x1 - x0) / cells as f64;
        let s: Vec<C64> = (0..=cells).map(|i| f(x0 + i as f64 * h)).collect();
        Self::piecewise_linear(x0, x1, &s)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.h * self.cells.len() as f64
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.cells.len();
        let i = (((x - self.x0) / self.h).floor().max(0.0) as usize).min(n - 1);
        (i, x - (self.x0 + i as f64 * self.h))
    }

    pub fn eval(&self, x: f64) -> C64 {
        let (i, s) = self.locate(x);
        self.cells[i].eval(s, self.h)
    }

    pub fn scaled(mut self, s: C64) -> Self {
        for c in &mut self.cells {
            c.scale(s);
        }
        self
    }
}

/// Convolution data on one habitat: node values of the forward and
/// backward integrals against `e^{p t}`.
#[derive(Debug, Clone)]
struct Kernel {
    p: C64,
    forcing: SideForcing,
    /// `F(x_i) = int_{x_0}^{x_i} e^{(x_i - t) p} g(t) dt`
    fwd: Vec<C64>,
    /// `B(x_i) = int_{x_i}^{x_n} e^{(t - x_i) p} g(t) dt`
    bwd: Vec<C64>,
}

impl Kernel {
    fn new(p: C64, forcing: SideForcing) -> Self {
        let n = forcing.len();
        let h = forcing.h;
        let decay = (p * h).exp();
        let mut fwd = vec![ZERO; n + 1];
        for i in 0..n {
            fwd[i + 1] = decay * fwd[i] + forcing.cells[i].forward_integral(h, h, p);
        }
        let mut bwd = vec![ZERO; n + 1];
        for i in (0..n).rev() {
            bwd[i] = decay * bwd[i + 1] + forcing.cells[i].backward_integral(h, h, p);
        }
        Self { p, forcing, fwd, bwd }
    }

    fn n(&self) -> usize {
        self.forcing.len()
    }

    /// `(F(x), B(x))` at any point of the habitat.
    fn integrals(&self, x: f64) -> (C64, C64) {
        let (i, s) = self.forcing.locate(x);
        let h = self.forcing.h;
        let cell = &self.forcing.cells[i];
        let f = (self.p * s).exp() * self.fwd[i] + cell.forward_integral(s, h, self.p);
        let b = (self.p * (h - s)).exp() * self.bwd[i + 1] + cell.backward_integral(h - s, h, self.p);
        (f, b)
    }

    /// Particular solution `w = (F + B)/(2p)` and its derivative `(F - B)/2`.
    fn particular(&self, x: f64) -> (C64, C64) {
        let (f, b) = self.integrals(x);
        ((f + b) / (2.0 * self.p), 0.5 * (f - b))
    }

    fn particular_at_node(&self, i: usize) -> C64 {
        (self.fwd[i] + self.bwd[i]) / (2.0 * self.p)
    }

    fn particular_slope_at_node(&self, i: usize) -> C64 {
        0.5 * (self.fwd[i] - self.bwd[i])
    }

    /// The particular solution on cell `i` as a cell forcing in `tau`.
    fn particular_cell(&self, i: usize) -> Result<CellForcing> {
        let h = self.forcing.h;
        let p = self.p;
        let cell = &self.forcing.cells[i];
        let mut out = CellForcing::linear(ZERO, ZERO);
        let inv = 1.0 / (2.0 * p);
        out.push_exp(self.fwd[i] * inv, p, Anchor::Left);
        out.absorb(&cell.forward_primitive(p)?, inv);
        out.push_exp(self.bwd[i + 1] * inv, p, Anchor::Right);
        out.absorb(&cell.reflect(h).forward_primitive(p)?.reflect(h), inv);
        Ok(out)
    }
}

/// One mode problem. `p_minus`, `p_plus` must have negative real part.
#[derive(Debug, Clone)]
pub struct ModeProblem {
    pub k: usize,
    pub p_minus: C64,
    pub p_plus: C64,
    pub forcing_i: SideForcing,
    pub forcing_s: SideForcing,
    pub beta_i: f64,
    pub beta_s: f64,
}

impl ModeProblem {
    /// Mode roots `p = -sqrt(k^2 pi^2 + (c + lambda)/d)` for both habitats.
    pub fn roots(kappa: f64, lambda: C64, c_minus: f64, d_minus: f64, c_plus: f64, d_plus: f64) -> (C64, C64) {
        (
            -(kappa + (lambda + c_minus) / d_minus).sqrt(),
            -(kappa + (lambda + c_plus) / d_plus).sqrt(),
        )
    }

    pub fn ell(&self) -> f64 {
        -self.forcing_i.x0
    }

    pub fn width_s(&self) -> f64 {
        self.forcing_s.x1()
    }
}

/// Solved mode: boundary-layer coefficients plus the convolution data that
/// make `h_I`, `h_S` and their derivatives evaluable anywhere.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub k: usize,
    pub gamma_i: C64,
    pub delta_i: C64,
    pub gamma_s: C64,
    pub delta_s: C64,
    pub determinant: C64,
    ell: f64,
    width_s: f64,
    kernel_i: Kernel,
    kernel_s: Kernel,
}

pub fn solve_mode(problem: &ModeProblem) -> Result<ModeSolution> {
    let (pm, pp) = (problem.p_minus, problem.p_plus);
    if !(pm.re < 0.0 && pp.re < 0.0) {
        return Err(Error::Degenerate(format!("mode roots must have negative real part, got {pm} and {pp}")));
    }
    if problem.forcing_i.len() < 2 || problem.forcing_s.len() < 2 {
        return Err(Error::QuadratureResolution("each habitat needs at least two cells".into()));
    }
    let ell = problem.ell();
    let width_s = problem.width_s();
    if (problem.forcing_i.x1()).abs() > 1e-12 * ell || problem.forcing_s.x0 != 0.0 {
        return Err(Error::GridMismatch("forcing grids must meet at x = 0".into()));
    }
    let ki = Kernel::new(pm, problem.forcing_i.clone());
    let ks = Kernel::new(pp, problem.forcing_s.clone());
    let (ni, ns) = (ki.n(), ks.n());

    let half_m = (ell * pm).exp();
    let half_p = (width_s * pp).exp();
    let w_i_outer = ki.bwd[0] / (2.0 * pm);
    let w_s_outer = ks.fwd[ns] / (2.0 * pp);
    let r_i = ki.fwd[ni] / (2.0 * pm) - half_m * w_i_outer;
    let r_s = ks.bwd[0] / (2.0 * pp) - half_p * w_s_outer;

    // 1 - e^{2 ell p-} and 1 - e^{2 L p+} without cancellation.
    let one_minus_m = -expm1(2.0 * ell * pm);
    let one_minus_p = -expm1(2.0 * width_s * pp);
    let one_plus_m = 2.0 - one_minus_m;
    let one_plus_p = 2.0 - one_minus_p;
    let ratio = pp / pm;
    let (bi, bs) = (problem.beta_i, problem.beta_s);

    let a11 = one_minus_m;
    let a12 = -one_minus_p;
    let a21 = bi * one_plus_m;
    let a22 = bs * ratio * one_plus_p;
    let rhs1 = r_s - r_i;
    let rhs2 = bi * r_i + bs * ratio * r_s;
    let det = a11 * a22 - a12 * a21;
    if !(det.norm() >= 1e-300) {
        return Err(Error::DeterminantUnderflow { k: problem.k, modulus: det.norm() });
    }
    let delta_i = (rhs1 * a22 - a12 * rhs2) / det;
    let gamma_s = (a11 * rhs2 - a21 * rhs1) / det;
    let gamma_i = -half_m * delta_i - w_i_outer;
    let delta_s = -half_p * gamma_s - w_s_outer;
    Ok(ModeSolution {
        k: problem.k,
        gamma_i,
        delta_i,
        gamma_s,
        delta_s,
        determinant: det,
        ell,
        width_s,
        kernel_i: ki,
        kernel_s: ks,
    })
}

impl ModeSolution {
    pub fn p_minus(&self) -> C64 {
        self.kernel_i.p
    }

    pub fn p_plus(&self) -> C64 {
        self.kernel_s.p
    }

    /// `(h_I(x), h_I'(x))` for `x in [-ell, 0]`.
    pub fn infected(&self, x: f64) -> (C64, C64) {
        let p = self.kernel_i.p;
        let a = (p * (x + self.ell)).exp() * self.gamma_i;
        let b = (-p * x).exp() * self.delta_i;
        let (w, dw) = self.kernel_i.particular(x);
        (a + b + w, p * (a - b) + dw)
    }

    /// `(h_S(x), h_S'(x))` for `x in [0, L]`.
    pub fn susceptible(&self, x: f64) -> (C64, C64) {
        let p = self.kernel_s.p;
        let a = (p * x).exp() * self.gamma_s;
        let b = (p * (self.width_s - x)).exp() * self.delta_s;
        let (w, dw) = self.kernel_s.particular(x);
        (a + b + w, p * (a - b) + dw)
    }

    /// Values at the forcing grid nodes of each habitat.
    pub fn node_values(&self) -> (Vec<C64>, Vec<C64>) {
        let ki = &self.kernel_i;
        let ks = &self.kernel_s;
        let hi = ki.forcing.h;
        let hs = ks.forcing.h;
        let vi = (0..=ki.n())
            .map(|i| {
                let x = -self.ell + i as f64 * hi;
                (ki.p * (x + self.ell)).exp() * self.gamma_i + (-ki.p * x).exp() * self.delta_i + ki.particular_at_node(i)
            })
            .collect();
        let vs = (0..=ks.n())
            .map(|j| {
                let x = j as f64 * hs;
                (ks.p * x).exp() * self.gamma_s + (ks.p * (self.width_s - x)).exp() * self.delta_s + ks.particular_at_node(j)
            })
            .collect();
        (vi, vs)
    }

    /// Interface traces `(h_I(0), h_S(0), h_I'(0), h_S'(0))`.
    pub fn interface(&self) -> (C64, C64, C64, C64) {
        let ki = &self.kernel_i;
        let ks = &self.kernel_s;
        let (pm, pp) = (ki.p, ks.p);
        let a = (pm * self.ell).exp() * self.gamma_i;
        let b = self.delta_i;
        let vi = a + b + ki.particular_at_node(ki.n());
        let di = pm * (a - b) + ki.particular_slope_at_node(ki.n());
        let c = self.gamma_s;
        let d = (pp * self.width_s).exp() * self.delta_s;
        let vs = c + d + ks.particular_at_node(0);
        let ds = pp * (c - d) + ks.particular_slope_at_node(0);
        (vi, vs, di, ds)
    }

    /// Outer boundary values `(h_I(-ell), h_S(L))`.
    pub fn outer(&self) -> (C64, C64) {
        let ki = &self.kernel_i;
        let ks = &self.kernel_s;
        let vi = self.gamma_i + (ki.p * self.ell).exp() * self.delta_i + ki.particular_at_node(0);
        let vs = (ks.p * self.width_s).exp() * self.gamma_s + self.delta_s + ks.particular_at_node(ks.n());
        (vi, vs)
    }

    /// The solution itself, cell by cell, in the same closed-form
    /// representation used for forcing terms. Requires the forcing this
    /// solution was built from to be piecewise linear.
    pub fn as_forcing(&self) -> Result<(SideForcing, SideForcing)> {
        let ki = &self.kernel_i;
        let ks = &self.kernel_s;
        let (pm, pp) = (ki.p, ks.p);
        let (hi, hs) = (ki.forcing.h, ks.forcing.h);
        let mut ci = Vec::with_capacity(ki.n());
        for i in 0..ki.n() {
            let xl = -self.ell + i as f64 * hi;
            let xr = xl + hi;
            let mut cell = ki.particular_cell(i)?;
            cell.push_exp(self.gamma_i * (pm * (xl + self.ell)).exp(), pm, Anchor::Left);
            cell.push_exp(self.delta_i * (-pm * xr).exp(), pm, Anchor::Right);
            ci.push(cell);
        }
        let mut cs = Vec::with_capacity(ks.n());
        for j in 0..ks.n() {
            let xl = j as f64 * hs;
            let xr = xl + hs;
            let mut cell = ks.particular_cell(j)?;
            cell.push_exp(self.gamma_s * (pp * xl).exp(), pp, Anchor::Left);
            cell.push_exp(self.delta_s * (pp * (self.width_s - xr)).exp(), pp, Anchor::Right);
            cs.push(cell);
        }
        Ok((
            SideForcing { x0: -self.ell, h: hi, cells: ci },
            SideForcing { x0: 0.0, h: hs, cells: cs },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn constant_problem(omega: f64, width: f64, n: usize, value: f64) -> ModeProblem {
        ModeProblem {
            k: 1,
            p_minus: c(-omega, 0.0),
            p_plus: c(-omega, 0.0),
            forcing_i: SideForcing::from_fn(-width, 0.0, n, |_| c(value, 0.0)).unwrap(),
            forcing_s: SideForcing::from_fn(0.0, width, n, |_| c(value, 0.0)).unwrap(),
            beta_i: 1.3,
            beta_s: 1.3,
        }
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let mut p = constant_problem(2.0, 1.0, 8, 0.0);
        p.p_plus = c(-3.0, 1.0);
        let s = solve_mode(&p).unwrap();
        for v in [s.gamma_i, s.delta_i, s.gamma_s, s.delta_s] {
            assert_eq!(v, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn symmetric_constant_forcing_matches_cosh_profile() {
        let (omega, width) = (2.5, 0.8);
        let s = solve_mode(&constant_problem(omega, width, 4, -1.0)).unwrap();
        let exact = |x: f64| (1.0 - (omega * x).cosh() / (omega * width).cosh()) / (omega * omega);
        for x in [-width / 2.0, -0.123, 0.0] {
            assert_relative_eq!(s.infected(x).0.re, exact(x), epsilon = 1e-14);
        }
        for x in [0.0, width / 2.0, 0.77] {
            assert_relative_eq!(s.susceptible(x).0.re, exact(x), epsilon = 1e-14);
        }
    }

    #[test]
    fn interface_and_boundary_conditions_hold_to_rounding() {
        let p = ModeProblem {
            k: 3,
            p_minus: -c(12.0, 4.0).sqrt(),
            p_plus: -c(30.0, -7.0).sqrt(),
            forcing_i: SideForcing::from_fn(-1.0, 0.0, 40, |x| c((3.0 * x).sin(), x * x)).unwrap(),
            forcing_s: SideForcing::from_fn(0.0, 1.5, 60, |x| c(x.exp(), -1.0)).unwrap(),
            beta_i: 0.3,
            beta_s: 2.1,
        };
        let s = solve_mode(&p).unwrap();
        let (vi, vs, di, ds) = s.interface();
        assert!((vi - vs).norm() < 1e-14 * vi.norm().max(1.0));
        assert!((0.3 * di - 2.1 * ds).norm() < 1e-14 * di.norm().max(1.0));
        let (oi, os) = s.outer();
        assert!(oi.norm() < 1e-15 && os.norm() < 1e-15);
        let (ni, ns) = s.node_values();
        assert!((ni[40] - vi).norm() < 1e-15);
        assert!((ns[0] - vs).norm() < 1e-15);
        assert!((s.infected(0.0).1 - di).norm() < 1e-13);
    }

    #[test]
    fn solution_satisfies_the_ode_between_nodes() {
        // Central second difference of the evaluable solution reproduces
        // p^2 h + g up to O(eps^2).
        let p = ModeProblem {
            k: 2,
            p_minus: c(-5.0, 1.0),
            p_plus: c(-3.0, -0.5),
            forcing_i: SideForcing::from_fn(-1.0, 0.0, 16, |x| c(x.cos(), 0.0)).unwrap(),
            forcing_s: SideForcing::from_fn(0.0, 1.0, 16, |x| c(1.0 + x, 0.3)).unwrap(),
            beta_i: 1.0,
            beta_s: 0.5,
        };
        let s = solve_mode(&p).unwrap();
        let e = 1e-4;
        for x in [-0.7, -0.31] {
            let d2 = (s.infected(x + e).0 - 2.0 * s.infected(x).0 + s.infected(x - e).0) / (e * e);
            let rhs = p.p_minus * p.p_minus * s.infected(x).0 + p.forcing_i.eval(x);
            assert!((d2 - rhs).norm() < 1e-5 * rhs.norm().max(1.0), "{d2} vs {rhs}");
        }
        for x in [0.2, 0.66] {
            let d2 = (s.susceptible(x + e).0 - 2.0 * s.susceptible(x).0 + s.susceptible(x - e).0) / (e * e);
            let rhs = p.p_plus * p.p_plus * s.susceptible(x).0 + p.forcing_s.eval(x);
            assert!((d2 - rhs).norm() < 1e-5 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn closed_form_representation_reproduces_the_solution() {
        let p = ModeProblem {
            k: 1,
            p_minus: c(-4.0, 2.0),
            p_plus: c(-6.0, 0.0),
            forcing_i: SideForcing::from_fn(-1.0, 0.0, 12, |x| c(x * x, 1.0)).unwrap(),
            forcing_s: SideForcing::from_fn(0.0, 0.7, 9, |x| c(-x, 0.0)).unwrap(),
            beta_i: 0.7,
            beta_s: 0.4,
        };
        let s = solve_mode(&p).unwrap();
        let (fi, fs) = s.as_forcing().unwrap();
        for x in [-1.0, -0.95, -0.5, -0.01, 0.0] {
            assert!((fi.eval(x) - s.infected(x).0).norm() < 1e-14);
        }
        for x in [0.0, 0.1, 0.33, 0.7] {
            assert!((fs.eval(x) - s.susceptible(x).0).norm() < 1e-14);
        }
    }

    #[test]
    fn exponential_cell_integrals_match_quadrature() {
        let h = 0.3;
        let p = c(-7.0, 3.0);
        let cell = CellForcing {
            constant: c(0.5, -1.0),
            slope: c(2.0, 0.0),
            exps: vec![
                ExpTerm { coef: c(1.0, 1.0), rate: c(-3.0, 2.0), anchor: Anchor::Left },
                ExpTerm { coef: c(-0.4, 0.0), rate: c(-9.0, -1.0), anchor: Anchor::Right },
                ExpTerm { coef: c(0.2, 0.0), rate: p, anchor: Anchor::Left },
            ],
        };
        let s = 0.21;
        let m = 20000;
        let dt = s / m as f64;
        let mut fwd = C64::new(0.0, 0.0);
        let mut bwd = C64::new(0.0, 0.0);
        for q in 0..m {
            let t = (q as f64 + 0.5) * dt;
            fwd += (p * (s - t)).exp() * cell.eval(t, h) * dt;
            let tb = h - s + t;
            bwd += (p * t).exp() * cell.eval(tb, h) * dt;
        }
        assert!((cell.forward_integral(s, h, p) - fwd).norm() < 1e-8);
        assert!((cell.backward_integral(s, h, p) - bwd).norm() < 1e-8);
    }

    #[test]
    fn two_cells_minimum() {
        let err = SideForcing::piecewise_linear(0.0, 1.0, &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::QuadratureResolution(_)));
    }
}
