//! Time integration of the six-density system. Each density is expanded in
//! sine modes in `y`; every mode then evolves on the two-interval `x`-grid
//! with the same interface rows as the finite-difference oracle.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::banded::{BandedLu, BandedMatrix};
use crate::dst::SineTransform;
use crate::error::{Error, Result};
use crate::grid::{Grid, SidePair};
use crate::model::{
    check_hypothesis, interface_sources, species_coefficients, trace_fluxes, trace_matrix, InterfaceDerivatives,
    ModelParameters, Side, Species, SpeciesCoefficients, TraceFluxes,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Backward Euler for diffusion and diagonal reaction, couplings explicit.
    Imex,
    /// Trapezoidal rule for diffusion and diagonal reaction, couplings explicit.
    CrankNicolson,
    /// Backward Euler for the whole linear system, couplings included.
    FullyImplicitLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YDiscretization {
    /// Exact eigenvalues `k^2 pi^2` of the continuous `y`-operator.
    Spectral,
    /// Eigenvalues of the three-point Dirichlet Laplacian in `y`.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dt: f64,
    pub t_end: f64,
    pub nx_i: usize,
    pub nx_s: usize,
    pub ny: usize,
    pub scheme: Scheme,
    pub output_every: usize,
    pub seed: u64,
    pub y_discretization: YDiscretization,
    /// Number of sine modes kept; all `ny - 1` when absent.
    pub modes: Option<usize>,
    /// Largest tolerated growth of the discrete L2 norm in one step.
    pub growth_limit: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 0.1,
            nx_i: 64,
            nx_s: 64,
            ny: 64,
            scheme: Scheme::Imex,
            output_every: 10,
            seed: 0,
            y_discretization: YDiscretization::FiniteDifference,
            modes: None,
            growth_limit: 2.0,
        }
    }
}

pub const MIN_GRID: usize = 16;

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.nx_i < MIN_GRID || self.nx_s < MIN_GRID || self.ny < MIN_GRID {
            return Err(Error::Config(format!(
                "grid sizes ({}, {}, {}) must each be >= {MIN_GRID}",
                self.nx_i, self.nx_s, self.ny
            )));
        }
        if self.output_every == 0 {
            return Err(Error::Config("output_every must be >= 1".into()));
        }
        if !(self.growth_limit > 1.0) {
            return Err(Error::Config(format!("growth_limit must exceed 1, got {}", self.growth_limit)));
        }
        SineTransform::new(self.ny).check_modes(self.mode_count())
    }

    pub fn mode_count(&self) -> usize {
        self.modes.unwrap_or(self.ny.saturating_sub(1))
    }

    pub fn grid(&self, params: &ModelParameters) -> Grid {
        Grid::new(params, self.nx_i, self.nx_s, self.ny)
    }

    pub fn steps(&self) -> usize {
        if self.t_end == 0.0 {
            0
        } else {
            (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
        }
    }
}

/// The six densities at one time, indexed by [`Species::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub fields: [SidePair<f64>; 3],
}

impl FieldState {
    pub fn zeros(grid: &Grid) -> Self {
        Self { t: 0.0, fields: [grid.zeros(), grid.zeros(), grid.zeros()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Species, Side, f64, f64) -> f64) -> Self {
        let field = |s: Species| grid.from_fn(|side, x, y| f(s, side, x, y));
        Self { t: 0.0, fields: Species::ALL.map(field) }
    }

    pub fn field(&self, species: Species, side: Side) -> &crate::grid::GridFunction2D<f64> {
        self.fields[species.index()].side(side)
    }

    pub fn l2(&self) -> f64 {
        self.fields.iter().map(|f| f.l2().powi(2)).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        let mut acc = 0.0;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            acc += a.zip_with(b, |u, v| u - v)?.l2().powi(2);
        }
        Ok(acc.sqrt())
    }
}

/// Per-species constants of one mode's `x`-problem.
#[derive(Debug, Clone, Copy)]
struct Block {
    d_i: f64,
    d_s: f64,
    shift_i: f64,
    shift_s: f64,
    beta_i: f64,
    beta_s: f64,
}

impl Block {
    fn new(c: &SpeciesCoefficients, kappa: f64) -> Self {
        Self {
            d_i: c.d_minus,
            d_s: c.d_plus,
            shift_i: c.d_minus * kappa + c.c_minus,
            shift_s: c.d_plus * kappa + c.c_plus,
            beta_i: c.weight_minus,
            beta_s: c.weight_plus,
        }
    }
}

/// Unknowns per mode: infected nodes `1..=n` at `0..n`, then susceptible
/// nodes `0..m` at `n..n+m`. The outer boundary nodes are identically zero.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    m: usize,
    h_i: f64,
    h_s: f64,
}

impl Layout {
    fn dim(&self) -> usize {
        self.n + self.m
    }

    fn is_interior_i(&self, r: usize) -> bool {
        r + 1 < self.n
    }

    fn is_interior_s(&self, r: usize) -> bool {
        r > self.n && r < self.n + self.m
    }

    fn at(u: &[f64], r: isize, dim: usize) -> f64 {
        if r < 0 || r as usize >= dim {
            0.0
        } else {
            u[r as usize]
        }
    }

    /// `d u_xx - shift u` at an interior row.
    fn apply(&self, b: &Block, u: &[f64], r: usize) -> f64 {
        let dim = self.dim();
        let ri = r as isize;
        let lap = Self::at(u, ri - 1, dim) - 2.0 * u[r] + Self::at(u, ri + 1, dim);
        if r < self.n {
            b.d_i * lap / (self.h_i * self.h_i) - b.shift_i * u[r]
        } else {
            b.d_s * lap / (self.h_s * self.h_s) - b.shift_s * u[r]
        }
    }

    /// One-sided second-order derivatives at the interface, infected side first.
    fn derivatives(&self, u: &[f64]) -> (f64, f64) {
        let n = self.n;
        let di = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * self.h_i);
        let ds = (-3.0 * u[n] + 4.0 * u[n + 1] - u[n + 2]) / (2.0 * self.h_s);
        (di, ds)
    }

    fn derivative_stencils(&self) -> ([(usize, f64); 3], [(usize, f64); 3]) {
        let n = self.n;
        let ci = 1.0 / (2.0 * self.h_i);
        let cs = 1.0 / (2.0 * self.h_s);
        (
            [(n - 1, 3.0 * ci), (n - 2, -4.0 * ci), (n - 3, ci)],
            [(n, -3.0 * cs), (n + 1, 4.0 * cs), (n + 2, -cs)],
        )
    }

    /// Implicit rows for `blocks.len()` interleaved species: interior rows of
    /// `I - theta_dt (d D^2 - shift) - theta_dt * coupling`, continuity and
    /// weighted-flux rows at the interface.
    fn assemble(&self, theta_dt: f64, blocks: &[Block], coupling: &[(usize, usize, f64, f64)]) -> BandedMatrix<f64> {
        let s = blocks.len();
        let (n, m) = (self.n, self.m);
        let idx = |q: usize, r: usize| r * s + q;
        let mut a = BandedMatrix::new(self.dim() * s, 3 * s, 2 * s);
        for (q, b) in blocks.iter().enumerate() {
            let wi = theta_dt * b.d_i / (self.h_i * self.h_i);
            let ws = theta_dt * b.d_s / (self.h_s * self.h_s);
            for r in 0..n - 1 {
                if r > 0 {
                    a.add(idx(q, r), idx(q, r - 1), -wi);
                }
                a.add(idx(q, r), idx(q, r), 1.0 + theta_dt * b.shift_i + 2.0 * wi);
                a.add(idx(q, r), idx(q, r + 1), -wi);
            }
            for r in n + 1..n + m {
                a.add(idx(q, r), idx(q, r - 1), -ws);
                a.add(idx(q, r), idx(q, r), 1.0 + theta_dt * b.shift_s + 2.0 * ws);
                if r + 1 < n + m {
                    a.add(idx(q, r), idx(q, r + 1), -ws);
                }
            }
            let scale = wi.max(ws).max(1.0);
            a.add(idx(q, n - 1), idx(q, n - 1), scale);
            a.add(idx(q, n - 1), idx(q, n), -scale);
            let h = self.h_i.min(self.h_s);
            let norm = scale * h / (b.beta_i + b.beta_s);
            let (si, ss) = self.derivative_stencils();
            for (c, w) in si {
                a.add(idx(q, n), idx(q, c), norm * b.beta_i * w);
            }
            for (c, w) in ss {
                a.add(idx(q, n), idx(q, c), -norm * b.beta_s * w);
            }
        }
        for &(target, source, ci, cs) in coupling {
            for r in 0..n - 1 {
                a.add(idx(target, r), idx(source, r), -theta_dt * ci);
            }
            for r in n + 1..n + m {
                a.add(idx(target, r), idx(source, r), -theta_dt * cs);
            }
        }
        a
    }
}

/// Node-wise off-diagonal reaction terms `(target, source, infected, susceptible)`.
fn reaction_couplings(p: &ModelParameters) -> [(usize, usize, f64, f64); 2] {
    [
        (
            Species::Juvenile.index(),
            Species::Adult.index(),
            p.sigma_a_minus * p.fec_a_minus,
            p.fec_a_plus * p.sigma_a_plus,
        ),
        (
            Species::Adult.index(),
            Species::Juvenile.index(),
            p.tau_minus * p.sigma_j_minus,
            p.tau_plus * p.sigma_j_plus,
        ),
    ]
}

/// Where each trace-flux source lands: `(species, side)` per entry of
/// [`interface_sources`].
const SOURCE_TARGETS: [(Species, Side); 6] = [
    (Species::Juvenile, Side::Infected),
    (Species::Adult, Side::Infected),
    (Species::Host, Side::Infected),
    (Species::Juvenile, Side::Susceptible),
    (Species::Adult, Side::Susceptible),
    (Species::Host, Side::Susceptible),
];

enum ModeSolver {
    Split([BandedLu<f64>; 3]),
    Coupled {
        juv_adult: BandedLu<f64>,
        host: BandedLu<f64>,
        /// `M^{-1} U` columns, one per trace flux.
        correction: Vec<Vec<f64>>,
        capacitance: BandedLu<f64>,
        functionals: Vec<Vec<(usize, f64)>>,
    },
}

/// Modal state: `coeffs[species][mode]` is the unknown vector of that mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub t: f64,
    pub coeffs: [Vec<Vec<f64>>; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDefects {
    pub step: usize,
    pub t: f64,
    pub continuity: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassRecord {
    pub t: f64,
    /// `[J_I, A_I, H_I, J_S, A_S, H_S]`.
    pub masses: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeEvent {
    pub t: f64,
    pub field: String,
    pub nodes: usize,
    pub min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub modes: usize,
    pub hypothesis_holds: bool,
    pub max_continuity_defect: f64,
    pub max_flux_defect: f64,
    pub defects: Vec<StepDefects>,
    pub masses: Vec<MassRecord>,
    pub negative_events: Vec<NegativeEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub metadata: RunMetadata,
}

impl Trajectory {
    pub fn last(&self) -> &FieldState {
        self.snapshots.last().expect("a trajectory always holds the initial state")
    }
}

pub fn field_name(species: Species, side: Side) -> String {
    format!("{}_{}", species.letter(), side.suffix())
}

/// Prefactored stepper for one parameter set and configuration.
pub struct Simulator {
    params: ModelParameters,
    cfg: RunConfig,
    dt: f64,
    theta: f64,
    layout: Layout,
    blocks: Vec<[Block; 3]>,
    solvers: Vec<ModeSolver>,
    transform: SineTransform,
    mass_weights: Vec<f64>,
    grid: Grid,
}

impl Simulator {
    pub fn new(params: &ModelParameters, cfg: &RunConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let grid = cfg.grid(params);
        let layout = Layout {
            n: cfg.nx_i,
            m: cfg.nx_s,
            h_i: params.ell / cfg.nx_i as f64,
            h_s: params.width_s / cfg.nx_s as f64,
        };
        let steps = cfg.steps().max(1);
        let dt = if cfg.t_end > 0.0 { cfg.t_end / steps as f64 } else { cfg.dt };
        let theta = if cfg.scheme == Scheme::CrankNicolson { 0.5 } else { 1.0 };
        let coeffs: Vec<SpeciesCoefficients> =
            Species::ALL.iter().map(|s| species_coefficients(params, *s)).collect::<Result<_>>()?;
        let hy = 1.0 / cfg.ny as f64;
        let modes = cfg.mode_count();
        let blocks: Vec<[Block; 3]> = (1..=modes)
            .map(|k| {
                let kappa = match cfg.y_discretization {
                    YDiscretization::Spectral => (k * k) as f64 * PI * PI,
                    YDiscretization::FiniteDifference => {
                        let s = (k as f64 * PI * hy / 2.0).sin();
                        4.0 * s * s / (hy * hy)
                    }
                };
                [Block::new(&coeffs[0], kappa), Block::new(&coeffs[1], kappa), Block::new(&coeffs[2], kappa)]
            })
            .collect();
        let solvers = blocks
            .par_iter()
            .map(|b| build_solver(params, cfg.scheme, &layout, theta * dt, b))
            .collect::<Result<Vec<_>>>()?;
        let mass_weights = (1..=modes)
            .map(|k| hy * (1..cfg.ny).map(|j| (k as f64 * PI * j as f64 * hy).sin()).sum::<f64>())
            .collect();
        Ok(Self {
            params: *params,
            cfg: *cfg,
            dt,
            theta,
            layout,
            blocks,
            solvers,
            transform: SineTransform::new(cfg.ny),
            mass_weights,
            grid,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn modes(&self) -> usize {
        self.blocks.len()
    }

    pub fn to_modal(&self, state: &FieldState) -> Result<ModalState> {
        for f in &state.fields {
            if !self.grid.matches(f) {
                return Err(Error::GridMismatch("state does not match the configured grid".into()));
            }
        }
        let (n, m) = (self.layout.n, self.layout.m);
        let k = self.modes();
        let coeffs = state.fields.each_ref().map(|pair| {
            let rows_i: Vec<Vec<C64>> =
                (1..=n).map(|i| self.transform.forward(pair.infected.row(i), k)).collect();
            let rows_s: Vec<Vec<C64>> =
                (0..m).map(|j| self.transform.forward(pair.susceptible.row(j), k)).collect();
            (0..k)
                .map(|mode| rows_i.iter().chain(&rows_s).map(|r| r[mode].re).collect())
                .collect()
        });
        Ok(ModalState { t: state.t, coeffs })
    }

    pub fn to_physical(&self, modal: &ModalState) -> FieldState {
        let (n, m) = (self.layout.n, self.layout.m);
        let fields = modal.coeffs.each_ref().map(|species| {
            let mut pair: SidePair<f64> = self.grid.zeros();
            let column = |r: usize| -> Vec<f64> {
                let c: Vec<C64> = species.iter().map(|v| C64::new(v[r], 0.0)).collect();
                self.transform.inverse(&c).iter().map(|z| z.re).collect()
            };
            for i in 1..=n {
                pair.infected.row_mut(i).copy_from_slice(&column(i - 1));
            }
            for j in 0..m {
                pair.susceptible.row_mut(j).copy_from_slice(&column(n + j));
            }
            pair
        });
        FieldState { t: modal.t, fields }
    }

    /// Trace fluxes of one mode, from one-sided interface derivatives.
    fn mode_fluxes(&self, state: &[&Vec<f64>; 3]) -> TraceFluxes {
        let d: Vec<(f64, f64)> = state.iter().map(|u| self.layout.derivatives(u)).collect();
        trace_fluxes(
            &self.params,
            &InterfaceDerivatives::from_array([d[0].0, d[1].0, d[2].0, d[0].1, d[1].1, d[2].1]),
        )
    }

    fn step_mode(&self, k: usize, u: [&Vec<f64>; 3]) -> [Vec<f64>; 3] {
        let lay = &self.layout;
        let blocks = &self.blocks[k];
        let dim = lay.dim();
        let interior = |r: usize| lay.is_interior_i(r) || lay.is_interior_s(r);
        let mut rhs: [Vec<f64>; 3] = std::array::from_fn(|q| {
            let mut b = vec![0.0; dim];
            for r in (0..dim).filter(|&r| interior(r)) {
                b[r] = u[q][r];
                if self.theta < 1.0 {
                    b[r] += (1.0 - self.theta) * self.dt * lay.apply(&blocks[q], u[q], r);
                }
            }
            b
        });
        match &self.solvers[k] {
            ModeSolver::Split(lus) => {
                for (target, source, ci, cs) in reaction_couplings(&self.params) {
                    for r in (0..dim).filter(|&r| interior(r)) {
                        let c = if r < lay.n { ci } else { cs };
                        rhs[target][r] += self.dt * c * u[source][r];
                    }
                }
                let sources = interface_sources(&self.params, &self.mode_fluxes(&u));
                for (value, (species, side)) in sources.iter().zip(SOURCE_TARGETS) {
                    let q = species.index();
                    for r in 0..dim {
                        let hit = match side {
                            Side::Infected => lay.is_interior_i(r),
                            Side::Susceptible => lay.is_interior_s(r),
                        };
                        if hit {
                            rhs[q][r] += self.dt * value;
                        }
                    }
                }
                for (b, lu) in rhs.iter_mut().zip(lus) {
                    lu.solve_in_place(b);
                }
                rhs
            }
            ModeSolver::Coupled { juv_adult, host, correction, capacitance, functionals } => {
                let mut y = interleave(&rhs[0], &rhs[1]);
                juv_adult.solve_in_place(&mut y);
                let mut yh = std::mem::take(&mut rhs[2]);
                host.solve_in_place(&mut yh);
                y.extend_from_slice(&yh);
                let mut proj: Vec<f64> =
                    functionals.iter().map(|f| f.iter().map(|&(c, w)| w * y[c]).sum()).collect();
                capacitance.solve_in_place(&mut proj);
                for (col, coef) in correction.iter().zip(&proj) {
                    for (yi, ci) in y.iter_mut().zip(col) {
                        *yi -= coef * ci;
                    }
                }
                let h = y.split_off(2 * dim);
                let (j, a) = deinterleave(&y);
                [j, a, h]
            }
        }
    }

    /// Advance one step.
    pub fn step_modal(&self, state: &ModalState) -> Result<ModalState> {
        let k = self.modes();
        let results: Vec<[Vec<f64>; 3]> = (0..k)
            .into_par_iter()
            .map(|mode| self.step_mode(mode, [&state.coeffs[0][mode], &state.coeffs[1][mode], &state.coeffs[2][mode]]))
            .collect();
        let mut coeffs: [Vec<Vec<f64>>; 3] = [Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k)];
        for r in results {
            for (q, v) in r.into_iter().enumerate() {
                coeffs[q].push(v);
            }
        }
        Ok(ModalState { t: state.t + self.dt, coeffs })
    }

    /// Discrete L2 norm squared (trapezoid in `x`, Parseval in `y`).
    pub fn energy(&self, state: &ModalState) -> f64 {
        let mut acc = 0.0;
        for species in &state.coeffs {
            for u in species {
                acc += self.x_trapezoid(u, |v| v * v);
            }
        }
        0.5 * acc
    }

    fn x_trapezoid(&self, u: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        let lay = &self.layout;
        let n = lay.n;
        let si: f64 = (0..n - 1).map(|r| f(u[r])).sum::<f64>() + 0.5 * f(u[n - 1]);
        let ss: f64 = 0.5 * f(u[n]) + (n + 1..n + lay.m).map(|r| f(u[r])).sum::<f64>();
        lay.h_i * si + lay.h_s * ss
    }

    /// `[J_I, A_I, H_I, J_S, A_S, H_S]` integrals.
    pub fn masses(&self, state: &ModalState) -> [f64; 6] {
        let lay = &self.layout;
        let n = lay.n;
        let mut out = [0.0; 6];
        for (q, species) in state.coeffs.iter().enumerate() {
            for (u, w) in species.iter().zip(&self.mass_weights) {
                let si: f64 = u[..n - 1].iter().sum::<f64>() + 0.5 * u[n - 1];
                let ss: f64 = 0.5 * u[n] + u[n + 1..].iter().sum::<f64>();
                out[q] += w * lay.h_i * si;
                out[q + 3] += w * lay.h_s * ss;
            }
        }
        out
    }

    /// Largest continuity and weighted-flux defects over `y`, all species.
    pub fn interface_defects(&self, state: &ModalState) -> (f64, f64) {
        let lay = &self.layout;
        let mut cont: f64 = 0.0;
        let mut flux: f64 = 0.0;
        for (q, species) in state.coeffs.iter().enumerate() {
            let mut jump = Vec::with_capacity(species.len());
            let mut fl = Vec::with_capacity(species.len());
            for (u, b) in species.iter().zip(&self.blocks) {
                let (di, ds) = lay.derivatives(u);
                jump.push(C64::new(u[lay.n - 1] - u[lay.n], 0.0));
                fl.push(C64::new(b[q].beta_i * di - b[q].beta_s * ds, 0.0));
            }
            let max = |v: Vec<C64>| v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            cont = cont.max(max(self.transform.inverse(&jump)));
            flux = flux.max(max(self.transform.inverse(&fl)));
        }
        (cont, flux)
    }

    pub fn run(&self, initial: &FieldState) -> Result<Trajectory> {
        let hypothesis_holds = match self.params.default_r0() {
            Some(r0) => check_hypothesis(&self.params, r0)?.holds,
            None => false,
        };
        let mut modal = self.to_modal(initial)?;
        let steps = self.cfg.steps();
        let mut snapshots = vec![initial.clone()];
        let mut negative_events = Vec::new();
        record_negatives(initial, &mut negative_events);
        let (c0, f0) = self.interface_defects(&modal);
        let mut defects = vec![StepDefects { step: 0, t: modal.t, continuity: c0, flux: f0 }];
        let mut masses = vec![MassRecord { t: modal.t, masses: self.masses(&modal) }];
        let mut energy = self.energy(&modal);
        for step in 1..=steps {
            let next = self.step_modal(&modal)?;
            let e = self.energy(&next);
            let limit = self.cfg.growth_limit * self.cfg.growth_limit;
            if !e.is_finite() || (energy > 0.0 && e > limit * energy) || (energy == 0.0 && e > 0.0) {
                let factor = if energy > 0.0 { (e / energy).sqrt() } else { f64::INFINITY };
                return Err(Error::StepInstability { step, t: next.t, factor });
            }
            energy = e;
            modal = next;
            if step == steps {
                modal.t = initial.t + self.dt * steps as f64;
            }
            let (c, f) = self.interface_defects(&modal);
            defects.push(StepDefects { step, t: modal.t, continuity: c, flux: f });
            masses.push(MassRecord { t: modal.t, masses: self.masses(&modal) });
            if step % self.cfg.output_every == 0 || step == steps {
                let snap = self.to_physical(&modal);
                record_negatives(&snap, &mut negative_events);
                snapshots.push(snap);
            }
        }
        let max_continuity_defect = defects.iter().map(|d| d.continuity).fold(0.0, f64::max);
        let max_flux_defect = defects.iter().map(|d| d.flux).fold(0.0, f64::max);
        Ok(Trajectory {
            snapshots,
            metadata: RunMetadata {
                scheme: self.cfg.scheme,
                dt: self.dt,
                steps,
                modes: self.modes(),
                hypothesis_holds,
                max_continuity_defect,
                max_flux_defect,
                defects,
                masses,
                negative_events,
            },
        })
    }
}

fn record_negatives(state: &FieldState, out: &mut Vec<NegativeEvent>) {
    let scale = state.fields.iter().map(|f| f.linf()).fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    for s in Species::ALL {
        for side in [Side::Infected, Side::Susceptible] {
            let g = state.field(s, side);
            let neg: Vec<f64> = g.values.iter().copied().filter(|v| *v < -tol).collect();
            if !neg.is_empty() {
                out.push(NegativeEvent {
                    t: state.t,
                    field: field_name(s, side),
                    nodes: neg.len(),
                    min: neg.iter().copied().fold(f64::INFINITY, f64::min),
                });
            }
        }
    }
}

fn interleave(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).flat_map(|(x, y)| [*x, *y]).collect()
}

fn deinterleave(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().step_by(2).copied().collect(), v.iter().skip(1).step_by(2).copied().collect())
}

fn build_solver(
    params: &ModelParameters,
    scheme: Scheme,
    lay: &Layout,
    theta_dt: f64,
    blocks: &[Block; 3],
) -> Result<ModeSolver> {
    if scheme != Scheme::FullyImplicitLinear {
        let lus = [
            lay.assemble(theta_dt, &blocks[0..1], &[]).factor()?,
            lay.assemble(theta_dt, &blocks[1..2], &[]).factor()?,
            lay.assemble(theta_dt, &blocks[2..3], &[]).factor()?,
        ];
        return Ok(ModeSolver::Split(lus));
    }
    let dim = lay.dim();
    // Juvenile and adult interleaved as block 0/1, host appended.
    let juv_adult = lay.assemble(theta_dt, &blocks[0..2], &reaction_couplings(params)).factor()?;
    let host = lay.assemble(theta_dt, &blocks[2..3], &[]).factor()?;
    let position = |species: Species, r: usize| match species {
        Species::Host => 2 * dim + r,
        other => 2 * r + other.index(),
    };
    // Trace flux i as a functional of the stacked unknowns.
    let (si, ss) = lay.derivative_stencils();
    let matrix = trace_matrix(params);
    let functionals: Vec<Vec<(usize, f64)>> = matrix
        .iter()
        .map(|row| {
            let mut f = Vec::new();
            for (col, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let species = Species::ALL[col % 3];
                let stencil = if col < 3 { &si } else { &ss };
                f.extend(stencil.iter().map(|&(r, c)| (position(species, r), w * c)));
            }
            f
        })
        .collect();
    // Source weight of each trace flux on its target; interface_sources is
    // linear, so unit fluxes reveal it.
    let mut columns = Vec::with_capacity(5);
    for i in 0..5 {
        let mut unit = [0.0; 5];
        unit[i] = 1.0;
        let weights = interface_sources(params, &TraceFluxes(unit));
        let mut col = vec![0.0; 3 * dim];
        for (w, (species, side)) in weights.iter().zip(SOURCE_TARGETS) {
            if *w == 0.0 {
                continue;
            }
            for r in 0..dim {
                let hit = match side {
                    Side::Infected => lay.is_interior_i(r),
                    Side::Susceptible => lay.is_interior_s(r),
                };
                if hit {
                    col[position(species, r)] -= theta_dt * w;
                }
            }
        }
        let (mut ja, mut h) = (col[..2 * dim].to_vec(), col[2 * dim..].to_vec());
        juv_adult.solve_in_place(&mut ja);
        host.solve_in_place(&mut h);
        ja.extend_from_slice(&h);
        columns.push(ja);
    }
    let mut cap = BandedMatrix::new(5, 4, 4);
    for (i, f) in functionals.iter().enumerate() {
        cap.add(i, i, 1.0);
        for (j, col) in columns.iter().enumerate() {
            cap.add(i, j, f.iter().map(|&(c, w)| w * col[c]).sum());
        }
    }
    Ok(ModeSolver::Coupled { juv_adult, host, correction: columns, capacitance: cap.factor()?, functionals })
}

/// Advance a physical state by one step.
pub fn step(state: &FieldState, params: &ModelParameters, cfg: &RunConfig) -> Result<FieldState> {
    let sim = Simulator::new(params, &RunConfig { t_end: 0.0, ..*cfg })?;
    let next = sim.step_modal(&sim.to_modal(state)?)?;
    Ok(sim.to_physical(&next))
}

pub fn run(initial: &FieldState, params: &ModelParameters, cfg: &RunConfig) -> Result<Trajectory> {
    Simulator::new(params, cfg)?.run(initial)
}

/// `-ln(||u(T)|| / ||u(0)||) / T` between the first and last snapshot.
pub fn decay_rate(traj: &Trajectory) -> f64 {
    let first = &traj.snapshots[0];
    let last = traj.last();
    -(last.l2() / first.l2()).ln() / (last.t - first.t)
}

/// Exact decay rate of the lowest transparent-interface eigenfunction.
pub fn transparent_decay_rate(d: f64, ell: f64, width_s: f64) -> f64 {
    let w = ell + width_s;
    d * PI * PI * (1.0 + 1.0 / (w * w)) + 1.0
}

/// A problem for refinement studies in `dt`.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub params: ModelParameters,
    pub cfg: RunConfig,
    pub initial: FieldState,
}

/// Transparent single-species diffusion, host density only:
/// `sin(pi y) sin(pi (x + ell) / (ell + L))`.
pub fn transparent_fixture(d: f64, cfg: RunConfig) -> Fixture {
    let params = ModelParameters::pure_diffusion(d, 0.5);
    let grid = cfg.grid(&params);
    let w = params.ell + params.width_s;
    let ell = params.ell;
    let mut initial = FieldState::from_fn(&grid, |s, _, x, y| {
        if s == Species::Host {
            (PI * y).sin() * (PI * (x + ell) / w).sin()
        } else {
            0.0
        }
    });
    crate::initial::enforce_dirichlet(&mut initial);
    Fixture { params, cfg, initial }
}

/// All couplings active, smooth data in every density that vanishes with
/// its normal derivative on the interface.
pub fn coupled_fixture(cfg: RunConfig) -> Fixture {
    let params = ModelParameters::example();
    let grid = cfg.grid(&params);
    let (ell, ws) = (params.ell, params.width_s);
    let mut initial = FieldState::from_fn(&grid, |s, side, x, y| {
        let xi = match side {
            Side::Infected => -x / ell,
            Side::Susceptible => x / ws,
        };
        let bump = (PI * xi).sin().powi(2) * (1.0 - xi);
        (1.0 + 0.25 * s.index() as f64) * bump * (PI * y).sin() * (1.0 + 0.3 * (2.0 * PI * y).sin())
    });
    crate::initial::enforce_dirichlet(&mut initial);
    Fixture { params, cfg, initial }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// `||u(dt) - u(dt / r)||` against the next finer run.
    pub difference: Option<f64>,
    pub order: Option<f64>,
}

/// Self-convergence orders from runs at each `dt` (a geometric sequence of
/// at least three values).
pub fn temporal_convergence(fixture: &Fixture, dts: &[f64]) -> Result<Vec<ConvergenceRow>> {
    if dts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "self-convergence needs at least three time steps, got {}",
            dts.len()
        )));
    }
    let ratio = dts[0] / dts[1];
    if !(ratio > 1.0) || dts.windows(2).any(|w| ((w[0] / w[1]) / ratio - 1.0).abs() > 1e-9) {
        return Err(Error::Degenerate("time steps must decrease geometrically".into()));
    }
    let finals = dts
        .iter()
        .map(|&dt| {
            let cfg = RunConfig { dt, output_every: usize::MAX, ..fixture.cfg };
            Ok(run(&fixture.initial, &fixture.params, &cfg)?.last().clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = finals.windows(2).map(|w| w[0].distance(&w[1])).collect::<Result<_>>()?;
    Ok(dts
        .iter()
        .enumerate()
        .map(|(i, &dt)| ConvergenceRow {
            dt,
            difference: diffs.get(i).copied(),
            order: match (diffs.get(i), diffs.get(i + 1)) {
                (Some(a), Some(b)) => Some((a / b).ln() / ratio.ln()),
                _ => None,
            },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scheme: Scheme) -> RunConfig {
        RunConfig { dt: 1e-3, t_end: 0.02, nx_i: 16, nx_s: 20, ny: 16, scheme, output_every: 5, ..Default::default() }
    }

    #[test]
    fn zero_state_stays_zero() {
        for scheme in [Scheme::Imex, Scheme::CrankNicolson, Scheme::FullyImplicitLinear] {
            let p = ModelParameters::example();
            let cfg = small(scheme);
            let traj = run(&FieldState::zeros(&cfg.grid(&p)), &p, &cfg).unwrap();
            assert!(traj.snapshots.iter().all(|s| s.l2() == 0.0));
        }
    }

    #[test]
    fn zero_horizon_returns_the_initial_state() {
        let f = coupled_fixture(RunConfig { t_end: 0.0, ..small(Scheme::Imex) });
        let traj = run(&f.initial, &f.params, &f.cfg).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0], f.initial);
    }

    #[test]
    fn modal_round_trip_is_exact_for_full_mode_count() {
        let f = coupled_fixture(small(Scheme::Imex));
        let sim = Simulator::new(&f.params, &f.cfg).unwrap();
        let back = sim.to_physical(&sim.to_modal(&f.initial).unwrap());
        assert!(back.distance(&f.initial).unwrap() < 1e-14);
    }

    #[test]
    fn boundary_values_are_exactly_zero_and_interface_holds() {
        for scheme in [Scheme::Imex, Scheme::CrankNicolson, Scheme::FullyImplicitLinear] {
            let f = coupled_fixture(small(scheme));
            let traj = run(&f.initial, &f.params, &f.cfg).unwrap();
            for s in &traj.snapshots[1..] {
                for pair in &s.fields {
                    assert_eq!(pair.infected.dirichlet_defect(), 0.0);
                    assert_eq!(pair.susceptible.dirichlet_defect(), 0.0);
                }
            }
            // The initial data meets the discrete interface rows only to O(h^2);
            // every computed step meets them to rounding.
            for d in &traj.metadata.defects[1..] {
                assert!(d.continuity < 1e-13 && d.flux < 1e-12, "{scheme:?} {d:?}");
            }
        }
    }

    #[test]
    fn implicit_coupled_solve_matches_direct_residual() {
        // One fully implicit step must satisfy the discrete equations with
        // the trace sources evaluated at the new time.
        let f = coupled_fixture(small(Scheme::FullyImplicitLinear));
        let sim = Simulator::new(&f.params, &f.cfg).unwrap();
        let u0 = sim.to_modal(&f.initial).unwrap();
        let u1 = sim.step_modal(&u0).unwrap();
        let lay = sim.layout;
        let dt = sim.dt();
        for k in [0, 3] {
            let new = [&u1.coeffs[0][k], &u1.coeffs[1][k], &u1.coeffs[2][k]];
            let sources = interface_sources(&f.params, &sim.mode_fluxes(&new));
            for (q, s) in Species::ALL.iter().enumerate() {
                for r in (0..lay.dim()).filter(|&r| lay.is_interior_i(r) || lay.is_interior_s(r)) {
                    let side = if r < lay.n { 0 } else { 3 };
                    let mut rate = lay.apply(&sim.blocks[k][q], new[q], r) + sources[q + side];
                    for (t, src, ci, cs) in reaction_couplings(&f.params) {
                        if t == q {
                            rate += if r < lay.n { ci } else { cs } * new[src][r];
                        }
                    }
                    let resid = new[q][r] - u0.coeffs[q][k][r] - dt * rate;
                    assert!(resid.abs() < 1e-12, "{s:?} mode {k} row {r}: {resid:e}");
                }
            }
        }
    }

    #[test]
    fn trace_sources_enter_the_susceptible_juvenile_equation() {
        // Only A_I is nonzero: the explicit step must add dt * T1 to J_S
        // interior nodes, T1 taken from trace_fluxes.
        let p = ModelParameters::example();
        let cfg = small(Scheme::Imex);
        let sim = Simulator::new(&p, &cfg).unwrap();
        let grid = cfg.grid(&p);
        let state = FieldState::from_fn(&grid, |s, side, x, y| {
            if s == Species::Adult && side == Side::Infected {
                x * (1.0 + x) * (PI * y).sin()
            } else {
                0.0
            }
        });
        let u0 = sim.to_modal(&state).unwrap();
        let k = 0;
        let d = sim.layout.derivatives(&u0.coeffs[1][k]);
        let t = trace_fluxes(&p, &InterfaceDerivatives { adult_i: d.0, ..Default::default() });
        assert!(t.0[0] > 0.0);
        // Rebuild the right-hand side the step used for J_S and compare.
        let u1 = sim.step_modal(&u0).unwrap();
        let lay = sim.layout;
        let j = &u1.coeffs[0][k];
        let a = lay.assemble(dt_theta(&sim), &sim.blocks[k][0..1], &[]);
        let applied = a.matvec(j);
        for r in lay.n + 1..lay.dim() {
            assert!((applied[r] - sim.dt() * t.0[0]).abs() < 1e-13, "row {r}");
        }
    }

    fn dt_theta(sim: &Simulator) -> f64 {
        sim.theta * sim.dt()
    }

    #[test]
    fn decoupled_decay_is_monotone_in_mass() {
        let cfg = RunConfig { t_end: 0.05, ..small(Scheme::Imex) };
        let f = transparent_fixture(0.1, cfg);
        let traj = run(&f.initial, &f.params, &f.cfg).unwrap();
        let m: Vec<f64> = traj.metadata.masses.iter().map(|r| r.masses[2] + r.masses[5]).collect();
        assert!(m.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn single_dt_refuses_to_fit_an_order() {
        let f = transparent_fixture(0.1, small(Scheme::CrankNicolson));
        assert!(temporal_convergence(&f, &[1e-3]).is_err());
        assert!(temporal_convergence(&f, &[1e-3, 5e-4]).is_err());
    }

    #[test]
    fn instability_is_reported() {
        let cfg = RunConfig { growth_limit: 1.0 + 1e-6, ..small(Scheme::Imex) };
        let p = ModelParameters {
            sigma_h_minus: 1.0,
            nu: 1.0,
            fec_h_minus: 10.0,
            sigma_h_plus: 1.0,
            fec_h_plus: 10.0,
            ..ModelParameters::example()
        };
        let initial = FieldState::from_fn(&cfg.grid(&p), |s, _, x, y| {
            if s == Species::Host { (PI * y).sin() * (PI * (x + 1.0) / 2.0).sin() } else { 0.0 }
        });
        match run(&initial, &p, &cfg) {
            Err(Error::StepInstability { step, .. }) => assert_eq!(step, 1),
            other => panic!("{other:?}"),
        }
    }
}
