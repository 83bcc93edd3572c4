//! Resolvent of the diffusion-reaction operator `d Laplacian - c` with skew
//! interface conditions, one species at a time. Sine modes in `y` turn each
//! species problem into independent two-interval problems in `x`.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::dst::SineTransform;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction2D, SidePair};
use crate::mode::{solve_mode, ModeProblem, ModeSolution, SideForcing};
use crate::model::{species_coefficients, ModelParameters, Species, SpeciesCoefficients};
use crate::sector::{in_sector, SectorConfig};

pub const DEFAULT_MODES: usize = 64;

fn check_lambda(lambda: C64, cfg: &SectorConfig) -> Result<()> {
    if in_sector(lambda, cfg.lambda_angle()) {
        Ok(())
    } else {
        Err(Error::NotInSector { what: "lambda", re: lambda.re, im: lambda.im, angle: cfg.lambda_angle() })
    }
}

fn check_host(coeffs: &SpeciesCoefficients, cfg: &SectorConfig) -> Result<()> {
    if coeffs.species != Species::Host {
        return Ok(());
    }
    let minus = -coeffs.c_minus / coeffs.d_minus;
    let plus = -coeffs.c_plus / coeffs.d_plus;
    if minus.max(plus) <= cfg.r0 {
        Ok(())
    } else {
        Err(Error::HypothesisViolation { minus, plus, r0: cfg.r0 })
    }
}

/// All mode solutions for one species at one spectral parameter.
#[derive(Debug, Clone)]
pub struct SpeciesSolution {
    pub lambda: C64,
    pub coeffs: SpeciesCoefficients,
    pub ny: usize,
    pub modes: Vec<ModeSolution>,
    ell: f64,
    width_s: f64,
    nx_i: usize,
    nx_s: usize,
}

/// Solve mode by mode for forcing already expressed per mode (in units of
/// the right-hand side, before division by the diffusion coefficients).
pub fn solve_species_modal(
    lambda: C64,
    coeffs: &SpeciesCoefficients,
    forcing: Vec<(SideForcing, SideForcing)>,
    ny: usize,
    cfg: &SectorConfig,
) -> Result<SpeciesSolution> {
    check_lambda(lambda, cfg)?;
    check_host(coeffs, cfg)?;
    let first = forcing.first().ok_or_else(|| Error::Degenerate("no modes requested".into()))?;
    let (ell, width_s) = (-first.0.x0, first.1.x1());
    let (nx_i, nx_s) = (first.0.len(), first.1.len());
    let inv_m = C64::new(1.0 / coeffs.d_minus, 0.0);
    let inv_p = C64::new(1.0 / coeffs.d_plus, 0.0);
    let modes = forcing
        .into_par_iter()
        .enumerate()
        .map(|(idx, (gi, gs))| {
            let k = idx + 1;
            let kappa = (k * k) as f64 * PI * PI;
            let (p_minus, p_plus) =
                ModeProblem::roots(kappa, lambda, coeffs.c_minus, coeffs.d_minus, coeffs.c_plus, coeffs.d_plus);
            solve_mode(&ModeProblem {
                k,
                p_minus,
                p_plus,
                forcing_i: gi.scaled(inv_m),
                forcing_s: gs.scaled(inv_p),
                beta_i: coeffs.weight_minus,
                beta_s: coeffs.weight_plus,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpeciesSolution { lambda, coeffs: *coeffs, ny, modes, ell, width_s, nx_i, nx_s })
}

/// Per-mode piecewise-linear forcing from a grid right-hand side.
pub fn modal_forcing(rhs: &SidePair<C64>, modes: usize) -> Result<Vec<(SideForcing, SideForcing)>> {
    let ny = rhs.infected.ny;
    if rhs.susceptible.ny != ny {
        return Err(Error::GridMismatch("habitats use different y-grids".into()));
    }
    let t = SineTransform::new(ny);
    t.check_modes(modes)?;
    let side = |g: &GridFunction2D<C64>| -> Vec<Vec<C64>> {
        (0..=g.nx).into_par_iter().map(|i| t.forward(g.row(i), modes)).collect()
    };
    let ci = side(&rhs.infected);
    let cs = side(&rhs.susceptible);
    (0..modes)
        .map(|k| {
            let si: Vec<C64> = ci.iter().map(|c| c[k]).collect();
            let ss: Vec<C64> = cs.iter().map(|c| c[k]).collect();
            Ok((
                SideForcing::piecewise_linear(rhs.infected.x0, rhs.infected.x1, &si)?,
                SideForcing::piecewise_linear(rhs.susceptible.x0, rhs.susceptible.x1, &ss)?,
            ))
        })
        .collect()
}

pub fn solve_species(
    lambda: C64,
    coeffs: &SpeciesCoefficients,
    rhs: &SidePair<C64>,
    modes: usize,
    cfg: &SectorConfig,
) -> Result<SpeciesSolution> {
    check_lambda(lambda, cfg)?;
    check_host(coeffs, cfg)?;
    solve_species_modal(lambda, coeffs, modal_forcing(rhs, modes)?, rhs.infected.ny, cfg)
}

/// `(d Laplacian - c - lambda)^{-1} rhs` for one species, on the grid of `rhs`.
pub fn resolve_species(
    lambda: C64,
    coeffs: &SpeciesCoefficients,
    rhs: &SidePair<C64>,
    modes: usize,
    cfg: &SectorConfig,
) -> Result<SidePair<C64>> {
    Ok(solve_species(lambda, coeffs, rhs, modes, cfg)?.to_grid())
}

impl SpeciesSolution {
    pub fn grid(&self) -> Grid {
        Grid { ell: self.ell, width_s: self.width_s, nx_i: self.nx_i, nx_s: self.nx_s, ny: self.ny }
    }

    /// Node values on the grid the forcing was given on.
    pub fn to_grid(&self) -> SidePair<C64> {
        let t = SineTransform::new(self.ny);
        let nodes: Vec<(Vec<C64>, Vec<C64>)> = self.modes.par_iter().map(|m| m.node_values()).collect();
        let mut out: SidePair<C64> = self.grid().zeros();
        let fill = |g: &mut GridFunction2D<C64>, pick: &(dyn Fn(&(Vec<C64>, Vec<C64>), usize) -> C64 + Sync)| {
            let rows: Vec<Vec<C64>> = (0..=g.nx)
                .into_par_iter()
                .map(|i| {
                    let c: Vec<C64> = nodes.iter().map(|n| pick(n, i)).collect();
                    t.inverse(&c)
                })
                .collect();
            for (i, r) in rows.iter().enumerate() {
                g.row_mut(i).copy_from_slice(r);
            }
        };
        fill(&mut out.infected, &|n, i| n.0[i]);
        fill(&mut out.susceptible, &|n, i| n.1[i]);
        out
    }

    /// The solution as exact per-mode forcing, ready to be fed to another
    /// resolvent without any resampling.
    pub fn as_forcing(&self) -> Result<Vec<(SideForcing, SideForcing)>> {
        self.modes.iter().map(|m| m.as_forcing()).collect()
    }

    /// Largest continuity and weighted-flux mismatch over the `y` nodes,
    /// with derivatives taken from the closed-form solution.
    pub fn interface_defects(&self) -> (f64, f64) {
        let t = SineTransform::new(self.ny);
        let mut jump = Vec::with_capacity(self.modes.len());
        let mut flux = Vec::with_capacity(self.modes.len());
        for m in &self.modes {
            let (vi, vs, di, ds) = m.interface();
            jump.push(vi - vs);
            flux.push(self.coeffs.weight_minus * di - self.coeffs.weight_plus * ds);
        }
        let max = |v: Vec<C64>| v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        (max(t.inverse(&jump)), max(t.inverse(&flux)))
    }
}

/// Relative residual of the five-point finite-difference operator applied
/// to `sol` at interior nodes: `||Lap_h sol - (lambda + c)/d sol - rhs/d|| / ||rhs/d||`.
pub fn fd_residual(lambda: C64, coeffs: &SpeciesCoefficients, sol: &SidePair<C64>, rhs: &SidePair<C64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (g, f, d, c) in [
        (&sol.infected, &rhs.infected, coeffs.d_minus, coeffs.c_minus),
        (&sol.susceptible, &rhs.susceptible, coeffs.d_plus, coeffs.c_plus),
    ] {
        let (hx2, hy2) = (g.hx() * g.hx(), g.hy() * g.hy());
        let shift = (lambda + c) / d;
        for i in 1..g.nx {
            for j in 1..g.ny {
                let lap = (g.at(i - 1, j) - 2.0 * g.at(i, j) + g.at(i + 1, j)) / hx2
                    + (g.at(i, j - 1) - 2.0 * g.at(i, j) + g.at(i, j + 1)) / hy2;
                let target = f.at(i, j) / d;
                num += (lap - shift * g.at(i, j) - target).norm_sqr();
                den += target.norm_sqr();
            }
        }
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Smooth random field: a few low sine modes in `y` times low cosines in `x`.
pub fn smooth_random_field(grid: &Grid, rng: &mut impl Rng) -> SidePair<C64> {
    let mut side_coeffs = || -> Vec<(usize, usize, f64)> {
        let mut v = Vec::new();
        for m in 1..=4 {
            for n in 0..4 {
                v.push((m, n, rng.random_range(-1.0..1.0) / (m + n) as f64));
            }
        }
        v
    };
    let ci = side_coeffs();
    let cs = side_coeffs();
    let (ell, ws) = (grid.ell, grid.width_s);
    grid.from_fn(|side, x, y| {
        let (coeffs, xi) = match side {
            crate::model::Side::Infected => (&ci, (x + ell) / ell),
            crate::model::Side::Susceptible => (&cs, x / ws),
        };
        let v: f64 = coeffs
            .iter()
            .map(|&(m, n, a)| a * (m as f64 * PI * y).sin() * (n as f64 * PI * xi).cos())
            .sum();
        C64::new(v, 0.0)
    })
}

pub fn seeded_field(grid: &Grid, seed: u64) -> SidePair<C64> {
    smooth_random_field(grid, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Three species fields `(juvenile, adult, host)`.
pub type SpeciesFields = [SidePair<C64>; 3];

pub fn fields_l2(f: &SpeciesFields) -> f64 {
    f.iter().map(|p| p.l2() * p.l2()).sum::<f64>().sqrt()
}

/// Max over species of the per-species L2 norms.
pub fn fields_norm(f: &SpeciesFields) -> f64 {
    f.iter().map(|p| p.l2()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct FullResolve {
    pub fields: SpeciesFields,
    /// `(1 + |lambda|) ||phi|| / ||psi||` in the max-over-species norm.
    pub scaled_ratio: f64,
    pub solutions: Vec<SpeciesSolution>,
}

/// `(L - lambda)^{-1} psi` for the block-diagonal operator on all three species.
pub fn resolve_full(
    lambda: C64,
    params: &ModelParameters,
    psi: &SpeciesFields,
    modes: usize,
    cfg: &SectorConfig,
) -> Result<FullResolve> {
    let mut solutions = Vec::with_capacity(3);
    for (s, rhs) in Species::ALL.iter().zip(psi) {
        let coeffs = species_coefficients(params, *s)?;
        solutions.push(solve_species(lambda, &coeffs, rhs, modes, cfg)?);
    }
    let fields: SpeciesFields = [solutions[0].to_grid(), solutions[1].to_grid(), solutions[2].to_grid()];
    let den = fields_norm(psi);
    let scaled_ratio = if den > 0.0 { (1.0 + lambda.norm()) * fields_norm(&fields) / den } else { 0.0 };
    Ok(FullResolve { fields, scaled_ratio, solutions })
}

/// `R(lambda1) R(lambda2) psi` for one species, composed exactly.
pub fn compose_species(
    lambda1: C64,
    lambda2: C64,
    coeffs: &SpeciesCoefficients,
    rhs: &SidePair<C64>,
    modes: usize,
    cfg: &SectorConfig,
) -> Result<SidePair<C64>> {
    let inner = solve_species(lambda2, coeffs, rhs, modes, cfg)?;
    Ok(solve_species_modal(lambda1, coeffs, inner.as_forcing()?, inner.ny, cfg)?.to_grid())
}

/// Relative defect of the resolvent identity
/// `R(l1) psi - R(l2) psi - (l1 - l2) R(l1) R(l2) psi` over all species.
pub fn resolvent_identity_defect(
    lambda1: C64,
    lambda2: C64,
    params: &ModelParameters,
    psi: &SpeciesFields,
    modes: usize,
    cfg: &SectorConfig,
) -> Result<f64> {
    let mut num = 0.0;
    for (s, rhs) in Species::ALL.iter().zip(psi) {
        let coeffs = species_coefficients(params, *s)?;
        let r1 = resolve_species(lambda1, &coeffs, rhs, modes, cfg)?;
        let r2 = resolve_species(lambda2, &coeffs, rhs, modes, cfg)?;
        let rr = compose_species(lambda1, lambda2, &coeffs, rhs, modes, cfg)?;
        let dl = lambda1 - lambda2;
        let d = r1.zip_with(&r2, |a, b| a - b)?.zip_with(&rr, |a, b| a - dl * b)?;
        num += d.l2() * d.l2();
    }
    Ok(num.sqrt() / fields_l2(psi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSample {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub estimate: f64,
    pub norm_product: f64,
}

pub const NORM_PROBES: usize = 32;
pub const POWER_STEPS: usize = 20;

fn weighted_l2(f: &SidePair<C64>, coeffs: &SpeciesCoefficients) -> f64 {
    let wi = coeffs.weight_minus / coeffs.d_minus;
    let ws = coeffs.weight_plus / coeffs.d_plus;
    (wi * f.infected.l2_squared() + ws * f.susceptible.l2_squared()).sqrt()
}

/// Largest observed `||R v|| / ||v||` for one species: the best of the
/// random probes, then power iteration on `R(conj lambda) R(lambda)`, which
/// is `R* R` in the inner product weighted by `weight / d` on each habitat.
pub fn species_norm_estimate(
    lambda: C64,
    coeffs: &SpeciesCoefficients,
    probes: &[SidePair<C64>],
    modes: usize,
    cfg: &SectorConfig,
) -> Result<f64> {
    let mut best = 0.0;
    let mut start = None;
    for v in probes {
        let r = resolve_species(lambda, coeffs, v, modes, cfg)?.l2() / v.l2();
        if r > best {
            best = r;
            start = Some(v.clone());
        }
    }
    let Some(mut v) = start else { return Ok(0.0) };
    for _ in 0..POWER_STEPS {
        let rv = resolve_species(lambda, coeffs, &v, modes, cfg)?;
        best = f64::max(best, rv.l2() / v.l2());
        let w = resolve_species(lambda.conj(), coeffs, &rv, modes, cfg)?;
        let n = weighted_l2(&w, coeffs);
        if n == 0.0 {
            break;
        }
        v = w.map(|z| z / n);
    }
    Ok(best)
}

/// Norm estimates of the three-species resolvent at each sample.
pub fn estimate_resolvent_norm(
    lambdas: &[C64],
    params: &ModelParameters,
    grid: &Grid,
    modes: usize,
    cfg: &SectorConfig,
    seed: u64,
) -> Result<Vec<NormSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<SidePair<C64>> = (0..NORM_PROBES).map(|_| smooth_random_field(grid, &mut rng)).collect();
    let coeffs: Vec<SpeciesCoefficients> =
        Species::ALL.iter().map(|s| species_coefficients(params, *s)).collect::<Result<_>>()?;
    lambdas
        .iter()
        .map(|&lambda| {
            let mut est: f64 = 0.0;
            for c in &coeffs {
                est = est.max(species_norm_estimate(lambda, c, &probes, modes, cfg)?);
            }
            Ok(NormSample {
                lambda_re: lambda.re,
                lambda_im: lambda.im,
                estimate: est,
                norm_product: (1.0 + lambda.norm()) * est,
            })
        })
        .collect()
}

/// `|lambda| = 10^j`, `j = 0..=4`, along each of the given arguments.
pub fn ray_samples(args: &[f64]) -> Vec<C64> {
    args.iter()
        .flat_map(|&a| (0..=4).map(move |j| C64::from_polar(10f64.powi(j), a)))
        .collect()
}

/// Least-squares slope of `log(product)` against `log|lambda|`.
pub fn log_slope(samples: &[NormSample]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (C64::new(s.lambda_re, s.lambda_im).norm().ln(), s.norm_product.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
