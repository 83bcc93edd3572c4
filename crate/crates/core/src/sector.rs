//! Sector geometry and the scalar symbol calculus behind the interface
//! determinant.
//!
//! A sector `S_omega` is the open set `{z != 0 : |arg z| < omega}`; for
//! `omega = 0` it degenerates to the open positive half-line.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::cmath::{expm1, one_minus_exp_neg};
use crate::error::{Error, Result};
use crate::model::{SpeciesCoefficients, PI_SQ};

/// Angle bookkeeping for the resolvent construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorConfig {
    pub epsilon0: f64,
    pub epsilon: f64,
    pub r0: f64,
}

impl SectorConfig {
    pub const DEFAULT_EPSILON0: f64 = PI / 16.0;

    pub fn new(epsilon0: f64, r0: f64) -> Result<Self> {
        if !(epsilon0 > 0.0 && epsilon0 < PI / 8.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon0 = {epsilon0} must lie in (0, pi/8)"
            )));
        }
        if !(r0 > 0.0 && r0 < PI_SQ) {
            return Err(Error::InvalidR0(r0));
        }
        Ok(Self {
            epsilon0,
            epsilon: PI / 7.0 + 6.0 * epsilon0 / 7.0,
            r0,
        })
    }

    pub fn with_r0(r0: f64) -> Result<Self> {
        Self::new(Self::DEFAULT_EPSILON0, r0)
    }

    /// Half-angle of the sector of admissible spectral parameters,
    /// `4(pi - epsilon0)/7`, which equals `2(pi - epsilon)/3`.
    pub fn lambda_angle(&self) -> f64 {
        4.0 * (PI - self.epsilon0) / 7.0
    }

    /// Half-angle of the sector around `pi^2` where the symbol lives.
    pub fn z_angle(&self) -> f64 {
        (PI - self.epsilon) / 3.0
    }

    /// Guaranteed lower bound for `|f_lambda|`.
    pub fn symbol_floor(&self) -> f64 {
        (0.5 * self.epsilon0).sin()
    }

    /// Lower bound for `|Z_pm|`.
    pub fn root_floor(&self) -> f64 {
        (0.5 * 3f64.sqrt() * (PI_SQ - self.r0) * (0.5 * self.epsilon).sin()).sqrt()
    }
}

pub fn in_sector(z: C64, omega: f64) -> bool {
    if z.re == 0.0 && z.im == 0.0 {
        return false;
    }
    if omega == 0.0 {
        return z.im == 0.0 && z.re > 0.0;
    }
    z.arg().abs() < omega
}

fn require_sector(what: &'static str, z: C64, omega: f64) -> Result<()> {
    if in_sector(z, omega) {
        Ok(())
    } else {
        Err(Error::NotInSector { what, re: z.re, im: z.im, angle: omega })
    }
}

/// Both sides of `|z1 + z2| >= (|z1| + |z2|) |cos((arg z1 - arg z2)/2)|`.
pub fn cosine_lower_bound(z1: C64, z2: C64) -> Result<(f64, f64)> {
    if z1.norm() == 0.0 || z2.norm() == 0.0 {
        return Err(Error::ZeroArgument("cosine_lower_bound"));
    }
    let lhs = (z1 + z2).norm();
    let rhs = (z1.norm() + z2.norm()) * (0.5 * (z1.arg() - z2.arg())).cos().abs();
    Ok((lhs, rhs))
}

/// Quantities bounded by the `1 +- e^{-z}` estimates on `S_alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpBounds {
    pub alpha: f64,
    /// `|arg(1 - e^{-z}) - arg(1 + e^{-z})|`, must stay below `alpha`.
    pub arg_gap: f64,
    /// `|1 + e^{-z}|`.
    pub plus_modulus: f64,
    /// `1 - e^{-pi/(2 tan alpha)}`.
    pub plus_lower: f64,
    /// `|1 - e^{-z}|`.
    pub minus_modulus: f64,
    /// `|z| cos(alpha) / (1 + |z| cos(alpha))`.
    pub minus_lower: f64,
    /// `2|z| / (1 + |z| cos(alpha))`.
    pub minus_upper: f64,
}

impl ExpBounds {
    /// Worst relative margin over the three statements; negative means violated.
    pub fn worst_margin(&self) -> f64 {
        let a = (self.alpha - self.arg_gap) / self.alpha;
        let b = (self.plus_modulus - self.plus_lower) / self.plus_lower;
        let c = (self.minus_modulus - self.minus_lower) / self.minus_lower;
        let d = (self.minus_upper - self.minus_modulus) / self.minus_upper;
        a.min(b).min(c).min(d)
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.worst_margin() >= -slack
    }
}

/// Argument of `(1 - e^{-z})/(1 + e^{-z})`, i.e. the gap between the two
/// arguments without branch wrapping.
fn tanh_arg(z: C64) -> f64 {
    let minus = one_minus_exp_neg(z);
    let plus = 2.0 - minus;
    (minus / plus).arg().abs()
}

pub fn one_pm_exp_bounds(z: C64, alpha: f64) -> Result<ExpBounds> {
    if !(alpha > 0.0 && alpha < 0.5 * PI) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must lie in (0, pi/2)")));
    }
    require_sector("z", z, alpha)?;
    let minus = one_minus_exp_neg(z);
    let plus = 2.0 - minus;
    let r = z.norm();
    let ca = alpha.cos();
    Ok(ExpBounds {
        alpha,
        arg_gap: tanh_arg(z),
        plus_modulus: plus.norm(),
        plus_lower: -(-PI / (2.0 * alpha.tan())).exp_m1(),
        minus_modulus: minus.norm(),
        minus_lower: r * ca / (1.0 + r * ca),
        minus_upper: 2.0 * r / (1.0 + r * ca),
    })
}

/// A spectral parameter together with the shifted values it induces for
/// one species: `lambda_side = -(c_side + lambda)/d_side`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralShift {
    pub lambda: C64,
    pub lambda_minus: C64,
    pub lambda_plus: C64,
}

impl SpectralShift {
    pub fn new(lambda: C64, coeffs: &SpeciesCoefficients) -> Self {
        Self {
            lambda,
            lambda_minus: -(lambda + coeffs.c_minus) / coeffs.d_minus,
            lambda_plus: -(lambda + coeffs.c_plus) / coeffs.d_plus,
        }
    }

    fn check(&self, cfg: &SectorConfig) -> Result<()> {
        require_sector("lambda", self.lambda, cfg.lambda_angle())
    }
}

fn check_z(z: C64, cfg: &SectorConfig) -> Result<()> {
    require_sector("z - pi^2", z - PI_SQ, cfg.z_angle())
}

/// Principal roots `(sqrt(z - lambda_minus), sqrt(z - lambda_plus))`.
pub fn z_pm(z: C64, shift: &SpectralShift, cfg: &SectorConfig) -> Result<(C64, C64)> {
    check_z(z, cfg)?;
    shift.check(cfg)?;
    Ok(roots(z, shift))
}

fn roots(z: C64, shift: &SpectralShift) -> (C64, C64) {
    ((z - shift.lambda_minus).sqrt(), (z - shift.lambda_plus).sqrt())
}

/// Margins of the four root estimates at one sample point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootEstimates {
    /// `min |Z_pm| / floor - 1`.
    pub modulus: f64,
    /// Relative gap to the `(pi - epsilon)/3` argument bound.
    pub arg_gap: f64,
    /// `|1 + e^{-2 width Z}|` against `1 - e^{-pi/(2 tan((pi-epsilon)/3))}`,
    /// and that constant against `1 - e^{-pi/(2 sqrt 3)}`.
    pub plus: f64,
    /// The two-sided bracket on `|1 - e^{-2 width Z}|`.
    pub bracket: f64,
}

impl RootEstimates {
    pub fn as_array(&self) -> [f64; 4] {
        [self.modulus, self.arg_gap, self.plus, self.bracket]
    }
}

pub fn root_estimates(
    z: C64,
    shift: &SpectralShift,
    ell: f64,
    width_s: f64,
    cfg: &SectorConfig,
) -> Result<RootEstimates> {
    let (zm, zp) = z_pm(z, shift, cfg)?;
    let floor = cfg.root_floor();
    let modulus = zm.norm().min(zp.norm()) / floor - 1.0;
    let angle = cfg.z_angle();
    let plus_const = -(-PI / (2.0 * angle.tan())).exp_m1();
    let plus_weak = -(-PI / (2.0 * 3f64.sqrt())).exp_m1();
    let mut arg_gap = f64::INFINITY;
    let mut plus = (plus_const - plus_weak) / plus_weak;
    let mut bracket = f64::INFINITY;
    for (root, width) in [(zm, ell), (zp, width_s)] {
        let w = 2.0 * width * root;
        arg_gap = arg_gap.min((angle - tanh_arg(w)) / angle);
        let minus = one_minus_exp_neg(w);
        let pm = (2.0 - minus).norm();
        plus = plus.min((pm - plus_const) / plus_const);
        let lz = width * root.norm();
        let lower = lz / (1.0 + lz);
        let upper = 4.0 * lz / (1.0 + lz);
        let m = minus.norm();
        bracket = bracket.min((m - lower) / lower).min((upper - m) / upper);
    }
    Ok(RootEstimates { modulus, arg_gap, plus, bracket })
}

/// The interface symbol whose invertibility controls the mode determinant.
pub fn f_lambda(
    z: C64,
    shift: &SpectralShift,
    beta_i: f64,
    beta_s: f64,
    ell: f64,
    width_s: f64,
    cfg: &SectorConfig,
) -> Result<C64> {
    check_z(z, cfg)?;
    shift.check(cfg)?;
    Ok(symbol(z, shift, beta_i, beta_s, ell, width_s))
}

pub(crate) fn symbol(z: C64, shift: &SpectralShift, beta_i: f64, beta_s: f64, ell: f64, width_s: f64) -> C64 {
    let (zm, zp) = roots(z, shift);
    let em = one_minus_exp_neg(2.0 * ell * zm);
    let ep = one_minus_exp_neg(2.0 * width_s * zp);
    1.0 + (beta_s / beta_i) * (zp / zm) * (em * (2.0 - ep)) / ((2.0 - em) * ep)
}

/// `D(k) = beta_I (1 + e^{2 ell p-})(1 - e^{2 L p+}) f_lambda(k^2 pi^2)` with
/// `p-+ = -Z-+` evaluated at `z = k^2 pi^2`.
pub fn mode_determinant(
    k: usize,
    shift: &SpectralShift,
    beta_i: f64,
    beta_s: f64,
    ell: f64,
    width_s: f64,
    cfg: &SectorConfig,
) -> Result<C64> {
    if k == 0 {
        return Err(Error::Degenerate("mode index must be >= 1".into()));
    }
    shift.check(cfg)?;
    let z = C64::new((k * k) as f64 * PI_SQ, 0.0);
    let (zm, zp) = roots(z, shift);
    let det = beta_i * (2.0 + expm1(-2.0 * ell * zm)) * (-expm1(-2.0 * width_s * zp))
        * symbol(z, shift, beta_i, beta_s, ell, width_s);
    if !(det.norm() >= 1e-300) {
        return Err(Error::DeterminantUnderflow { k, modulus: det.norm() });
    }
    Ok(det)
}
