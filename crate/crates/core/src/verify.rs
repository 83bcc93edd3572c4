//! Randomized cross-checks of the closed-form mode solver against the
//! finite-difference oracle.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::Result;
use crate::mode::{solve_mode, ModeProblem, SideForcing};
use crate::oracle::{solve_extrapolated, TwoIntervalBvp};
use crate::sector::SectorConfig;

pub const MODE_SET: [usize; 4] = [1, 3, 10, 40];

/// Low-frequency random function on `[x0, x1]`.
#[derive(Debug, Clone)]
pub struct SmoothProfile {
    terms: Vec<(C64, f64, f64)>,
}

impl SmoothProfile {
    pub fn random(rng: &mut impl Rng, terms: usize) -> Self {
        let terms = (0..terms)
            .map(|n| {
                let amp = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) / (1.0 + n as f64);
                let freq = PI * n as f64 * rng.random_range(0.5..1.5);
                let phase = rng.random_range(0.0..2.0 * PI);
                (amp, freq, phase)
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.terms.iter().map(|(a, f, ph)| a * (f * x + ph).cos()).sum()
    }
}

/// One randomized mode problem, independent of any grid.
#[derive(Debug, Clone)]
pub struct RandomModeCase {
    pub k: usize,
    pub lambda: C64,
    pub d_minus: f64,
    pub d_plus: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub beta_i: f64,
    pub beta_s: f64,
    pub ell: f64,
    pub width_s: f64,
    pub g_i: SmoothProfile,
    pub g_s: SmoothProfile,
}

impl RandomModeCase {
    /// Case number `index` of the seeded family: modes cycle through
    /// `MODE_SET`, arguments through `{0, +-pi/3, +-(sector edge - 0.01)}`,
    /// moduli are log-uniform in `[1, 1e3]`.
    pub fn generate(seed: u64, index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let edge = SectorConfig::with_r0(1.0).expect("valid").lambda_angle() - 0.01;
        let args = [0.0, PI / 3.0, -PI / 3.0, edge, -edge];
        let k = MODE_SET[index % MODE_SET.len()];
        let arg = args[(index / MODE_SET.len()) % args.len()];
        let modulus = 10f64.powf(rng.random_range(0.0..3.0));
        Self {
            k,
            lambda: C64::from_polar(modulus, arg),
            d_minus: 10f64.powf(rng.random_range(-1.3..0.3)),
            d_plus: 10f64.powf(rng.random_range(-1.3..0.3)),
            c_minus: rng.random_range(0.0..1.0),
            c_plus: rng.random_range(0.0..1.0),
            beta_i: rng.random_range(0.05..1.0),
            beta_s: rng.random_range(0.05..1.0),
            ell: rng.random_range(0.5..1.5),
            width_s: rng.random_range(0.5..1.5),
            g_i: SmoothProfile::random(&mut rng, 4),
            g_s: SmoothProfile::random(&mut rng, 4),
        }
    }

    pub fn roots(&self) -> (C64, C64) {
        let kappa = (self.k * self.k) as f64 * PI * PI;
        ModeProblem::roots(kappa, self.lambda, self.c_minus, self.d_minus, self.c_plus, self.d_plus)
    }

    pub fn mode_problem(&self, cells: usize) -> Result<ModeProblem> {
        let (p_minus, p_plus) = self.roots();
        Ok(ModeProblem {
            k: self.k,
            p_minus,
            p_plus,
            forcing_i: SideForcing::from_fn(-self.ell, 0.0, cells, |x| self.g_i.eval(x))?,
            forcing_s: SideForcing::from_fn(0.0, self.width_s, cells, |x| self.g_s.eval(x))?,
            beta_i: self.beta_i,
            beta_s: self.beta_s,
        })
    }

    pub fn bvp(&self, n_i: usize, n_s: usize) -> TwoIntervalBvp {
        let (pm, pp) = self.roots();
        let hi = self.ell / n_i as f64;
        let hs = self.width_s / n_s as f64;
        TwoIntervalBvp {
            omega_minus_sq: pm * pm,
            omega_plus_sq: pp * pp,
            g_i: (0..=n_i).map(|i| self.g_i.eval(-self.ell + i as f64 * hi)).collect(),
            g_s: (0..=n_s).map(|j| self.g_s.eval(j as f64 * hs)).collect(),
            beta_i: self.beta_i,
            beta_s: self.beta_s,
            ell: self.ell,
            width_s: self.width_s,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub index: usize,
    pub k: usize,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub relative_l2: f64,
    pub continuity_defect: f64,
    pub flux_defect: f64,
    pub oracle_h: f64,
}

/// Compare the closed-form solution (forcing resolved on `refine * n`
/// cells) with the extrapolated oracle on `n` cells per interval.
pub fn compare_case(case: &RandomModeCase, index: usize, n: usize, levels: usize, refine: usize) -> Result<OracleComparison> {
    let sol = solve_mode(&case.mode_problem(refine * n)?)?;
    let oracle = solve_extrapolated(&|a, b| case.bvp(a, b), n, n, levels)?;
    let mut diff = 0.0;
    let mut norm = 0.0;
    let mut acc = |x: &[f64], v: &[C64], eval: &dyn Fn(f64) -> C64| {
        let h = x[1] - x[0];
        let last = v.len() - 1;
        for (i, (xi, vi)) in x.iter().zip(v).enumerate() {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 } * h;
            diff += w * (eval(*xi) - vi).norm_sqr();
            norm += w * vi.norm_sqr();
        }
    };
    acc(&oracle.x_i, &oracle.h_i, &|x| sol.infected(x).0);
    acc(&oracle.x_s, &oracle.h_s, &|x| sol.susceptible(x).0);
    let (vi, vs, di, ds) = sol.interface();
    Ok(OracleComparison {
        index,
        k: case.k,
        lambda_re: case.lambda.re,
        lambda_im: case.lambda.im,
        relative_l2: (diff / norm).sqrt(),
        continuity_defect: (vi - vs).norm(),
        flux_defect: (case.beta_i * di - case.beta_s * ds).norm(),
        oracle_h: case.ell.max(case.width_s) / n as f64,
    })
}

/// [`compare_case`] on cases `0..cases` of one seed, in case order.
pub fn oracle_suite(seed: u64, cases: usize, n: usize, levels: usize, refine: usize) -> Result<Vec<OracleComparison>> {
    (0..cases)
        .into_par_iter()
        .map(|i| compare_case(&RandomModeCase::generate(seed, i), i, n, levels, refine))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_deterministic_and_cover_the_mode_set() {
        let a = RandomModeCase::generate(5, 3);
        let b = RandomModeCase::generate(5, 3);
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.k, 40);
        let ks: Vec<usize> = (0..4).map(|i| RandomModeCase::generate(5, i).k).collect();
        assert_eq!(ks, MODE_SET.to_vec());
    }

    #[test]
    fn modest_resolution_agreement() {
        let case = RandomModeCase::generate(1, 1);
        let c = compare_case(&case, 1, 512, 3, 4).unwrap();
        assert!(c.relative_l2 < 1e-6, "{c:?}");
    }
}
