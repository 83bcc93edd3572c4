//! Seeded Monte Carlo sweeps over the sector estimates. Each sweep reports
//! how many samples violate the stated inequality beyond a relative
//! rounding slack and the smallest margin encountered.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::model::{Species, SpeciesCoefficients, PI_SQ};
use crate::sector::{
    cosine_lower_bound, f_lambda, mode_determinant, one_pm_exp_bounds, root_estimates, z_pm,
    SectorConfig, SpectralShift,
};

pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaOutcome {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

impl LemmaOutcome {
    fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), samples: 0, violations: 0, worst_margin: f64::INFINITY }
    }

    fn record(&mut self, margin: f64) {
        self.samples += 1;
        if !(margin >= -ROUNDING_SLACK) {
            self.violations += 1;
        }
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.samples > 0
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn in_open_sector(rng: &mut impl Rng, lo: f64, hi: f64, angle: f64) -> C64 {
    let r = log_uniform(rng, lo, hi);
    let a = rng.random_range(-1.0..1.0) * angle;
    C64::from_polar(r, a)
}

/// Host-like coefficients satisfying the growth hypothesis for `r0`.
pub fn random_host_coefficients(rng: &mut impl Rng, r0: f64) -> SpeciesCoefficients {
    loop {
        let d_minus = log_uniform(rng, 1e-2, 10.0);
        let d_plus = log_uniform(rng, 1e-2, 10.0);
        let c_minus = 1.0 - rng.random_range(0.0..1.0) * (1.0 + rng.random_range(0.0..1.0) * rng.random_range(0.0..5.0));
        let c_plus = 1.0 - rng.random_range(0.0..1.0) * (1.0 + rng.random_range(0.0..5.0));
        if -c_minus / d_minus <= r0 && -c_plus / d_plus <= r0 {
            return SpeciesCoefficients {
                species: Species::Host,
                d_minus,
                d_plus,
                c_minus,
                c_plus,
                weight_minus: 0.0,
                weight_plus: 0.0,
            };
        }
    }
}

pub fn cosine_sweep(seed: u64, n: usize) -> LemmaOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LemmaOutcome::new("cosine inequality");
    for _ in 0..n {
        let z1 = in_open_sector(&mut rng, 1e-3, 1e6, PI);
        let z2 = in_open_sector(&mut rng, 1e-3, 1e6, PI);
        let (lhs, rhs) = cosine_lower_bound(z1, z2).expect("nonzero samples");
        out.record((lhs - rhs) / (z1.norm() + z2.norm()));
    }
    out
}

pub fn exp_bounds_sweep(seed: u64, n: usize) -> Vec<LemmaOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outs = vec![
        LemmaOutcome::new("1+-exp: argument gap"),
        LemmaOutcome::new("1+-exp: plus floor"),
        LemmaOutcome::new("1+-exp: minus bracket"),
    ];
    let alphas = [PI / 6.0, PI / 4.0, PI / 3.0];
    for i in 0..n {
        let alpha = alphas[i % 3];
        let z = in_open_sector(&mut rng, 1e-3, 1e6, alpha);
        let b = one_pm_exp_bounds(z, alpha).expect("sampled inside sector");
        outs[0].record((b.alpha - b.arg_gap) / b.alpha);
        outs[1].record((b.plus_modulus - b.plus_lower) / b.plus_lower);
        outs[2].record(
            ((b.minus_modulus - b.minus_lower) / b.minus_lower)
                .min((b.minus_upper - b.minus_modulus) / b.minus_upper),
        );
    }
    outs
}

struct SymbolSample {
    cfg: SectorConfig,
    coeffs: SpeciesCoefficients,
    z: C64,
    shift: SpectralShift,
    beta_i: f64,
    beta_s: f64,
    ell: f64,
    width_s: f64,
}

fn symbol_sample(rng: &mut impl Rng, epsilon0: Option<f64>) -> SymbolSample {
    let eps0 = epsilon0.unwrap_or_else(|| rng.random_range(1e-3..PI / 8.0 - 1e-3));
    let r0 = rng.random_range(1e-3..PI_SQ - 1e-3);
    let cfg = SectorConfig::new(eps0, r0).expect("sampled inside ranges");
    let coeffs = random_host_coefficients(rng, r0);
    let z = PI_SQ + in_open_sector(rng, 1e-3, 1e6, cfg.z_angle());
    let lambda = in_open_sector(rng, 1e-3, 1e6, cfg.lambda_angle());
    SymbolSample {
        cfg,
        coeffs,
        z,
        shift: SpectralShift::new(lambda, &coeffs),
        beta_i: log_uniform(rng, 1e-2, 1e2),
        beta_s: log_uniform(rng, 1e-2, 1e2),
        ell: log_uniform(rng, 0.1, 10.0),
        width_s: log_uniform(rng, 0.1, 10.0),
    }
}

pub fn root_sweep(seed: u64, n: usize) -> Vec<LemmaOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outs = vec![
        LemmaOutcome::new("roots: modulus floor"),
        LemmaOutcome::new("roots: argument gap"),
        LemmaOutcome::new("roots: plus floor"),
        LemmaOutcome::new("roots: minus bracket"),
    ];
    for _ in 0..n {
        let s = symbol_sample(&mut rng, None);
        let est = root_estimates(s.z, &s.shift, s.ell, s.width_s, &s.cfg).expect("admissible sample");
        for (o, m) in outs.iter_mut().zip(est.as_array()) {
            o.record(m);
        }
    }
    outs
}

/// Argument of `Z_+/Z_-` for spectral parameters in the first case of the
/// determinant argument, `-(pi - eps)/3 <= arg lambda < 2(pi - eps)/3`.
pub fn root_ratio_sweep(seed: u64, n: usize) -> LemmaOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LemmaOutcome::new("roots: ratio argument");
    for _ in 0..n {
        let s = symbol_sample(&mut rng, None);
        let a = s.cfg.z_angle();
        let lambda = C64::from_polar(s.shift.lambda.norm(), rng.random_range(-a..2.0 * a));
        let shift = SpectralShift::new(lambda, &s.coeffs);
        let (zm, zp) = z_pm(s.z, &shift, &s.cfg).expect("admissible sample");
        let bound = 0.5 * PI - 0.5 * s.cfg.epsilon;
        out.record((bound - (zp / zm).arg().abs()) / bound);
    }
    out
}

/// `|f_lambda(z)|` against `sin(epsilon0/2)`; also returns the smallest
/// modulus seen.
pub fn symbol_floor_sweep(seed: u64, n: usize, epsilon0: f64) -> (LemmaOutcome, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LemmaOutcome::new("symbol floor");
    let mut smallest = f64::INFINITY;
    for _ in 0..n {
        let s = symbol_sample(&mut rng, Some(epsilon0));
        let f = f_lambda(s.z, &s.shift, s.beta_i, s.beta_s, s.ell, s.width_s, &s.cfg)
            .expect("admissible sample");
        let floor = s.cfg.symbol_floor();
        smallest = smallest.min(f.norm());
        out.record((f.norm() - floor) / floor);
    }
    (out, smallest)
}

/// Nonvanishing of the mode determinant for `k = 1..=modes` over random
/// admissible parameters. The margin is `log10 |D|` above the underflow floor.
pub fn determinant_sweep(seed: u64, n: usize, modes: usize) -> LemmaOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LemmaOutcome::new("mode determinant nonvanishing");
    for _ in 0..n {
        let s = symbol_sample(&mut rng, None);
        for k in 1..=modes {
            let margin = match mode_determinant(k, &s.shift, s.beta_i, s.beta_s, s.ell, s.width_s, &s.cfg) {
                Ok(d) => (d.norm().log10() + 300.0) / 300.0,
                Err(_) => -1.0,
            };
            out.record(margin);
        }
    }
    out
}

/// Every sweep with `n` samples, the symbol floor with `symbol_n` samples at `epsilon0`.
pub fn run_all(seed: u64, n: usize, symbol_n: usize, epsilon0: f64) -> Vec<LemmaOutcome> {
    let mut all = vec![cosine_sweep(seed, n)];
    all.extend(exp_bounds_sweep(seed.wrapping_add(1), n));
    all.extend(root_sweep(seed.wrapping_add(2), n));
    all.push(root_ratio_sweep(seed.wrapping_add(3), n));
    all.push(symbol_floor_sweep(seed.wrapping_add(4), symbol_n, epsilon0).0);
    all.push(determinant_sweep(seed.wrapping_add(5), (n / 100).max(1), 100));
    all
}
