//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use skewdiff::error::Error;
use skewdiff::grid::Grid;
use skewdiff::lemmas::{cosine_sweep, exp_bounds_sweep, root_ratio_sweep, root_sweep, symbol_floor_sweep};
use skewdiff::model::{check_hypothesis, species_coefficients, ModelParameters, Species, PI_SQ};
use skewdiff::oracle::self_convergence_order;
use skewdiff::resolvent::{
    estimate_resolvent_norm, log_slope, ray_samples, resolve_species, resolvent_identity_defect, seeded_field,
    SpeciesFields,
};
use skewdiff::sector::SectorConfig;
use skewdiff::simulator::{
    coupled_fixture, decay_rate, run, temporal_convergence, transparent_decay_rate, transparent_fixture, RunConfig,
    Scheme, YDiscretization,
};
use skewdiff::verify::{oracle_suite, OracleComparison, RandomModeCase};

const SEED: u64 = 20240611;
const EPSILON0: f64 = PI / 16.0;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let mut v = f();
    let elapsed = start.elapsed();
    v.detail = format!("{} [{:.1} s]", v.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            v.passed = false;
            v.detail = format!("{} exceeds {} s", v.detail, limit.as_secs());
        }
    }
    v
}

fn sector_lemmas() -> Verdict {
    let n = 100_000;
    let mut outcomes = vec![cosine_sweep(SEED, n)];
    outcomes.extend(exp_bounds_sweep(SEED + 1, n));
    outcomes.extend(root_sweep(SEED + 2, n));
    outcomes.push(root_ratio_sweep(SEED + 3, n));
    let failed: Vec<String> =
        outcomes.iter().filter(|o| !o.passed()).map(|o| format!("{} ({})", o.name, o.violations)).collect();
    let worst = outcomes.iter().map(|o| o.worst_margin).fold(f64::INFINITY, f64::min);
    let samples = outcomes.iter().map(|o| o.samples).min().unwrap_or(0);
    verdict(
        failed.is_empty() && samples >= n,
        format!("{} statements, >= {samples} samples each, worst margin {worst:.3e}, failing {failed:?}", outcomes.len()),
    )
}

fn symbol_floor() -> Verdict {
    let (outcome, smallest) = symbol_floor_sweep(SEED + 4, 10_000, EPSILON0);
    let floor = (EPSILON0 / 2.0).sin();
    verdict(
        outcome.passed() && smallest >= floor,
        format!("min |f| = {smallest:.6e} vs floor {floor:.6e}, {} violations", outcome.violations),
    )
}

fn oracle_equivalence(rows: &[OracleComparison]) -> Verdict {
    let worst = rows.iter().map(|r| r.relative_l2).fold(0.0, f64::max);
    let modes: std::collections::BTreeSet<usize> = rows.iter().map(|r| r.k).collect();
    verdict(
        rows.len() == 50 && worst <= 1e-6,
        format!("{} cases, modes {modes:?}, worst relative L2 {worst:.3e}", rows.len()),
    )
}

fn transmission(rows: &[OracleComparison]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut ok = !rows.is_empty();
    for r in rows {
        let bound = 10.0 * r.oracle_h * r.oracle_h;
        worst = worst.max(r.continuity_defect.max(r.flux_defect) / bound);
        ok &= r.continuity_defect <= bound && r.flux_defect <= bound;
    }
    verdict(ok, format!("worst defect / (10 h^2) = {worst:.3e}"))
}

fn resolvent_setup() -> (ModelParameters, SectorConfig, Grid) {
    let p = ModelParameters::example();
    let cfg = SectorConfig::new(EPSILON0, p.default_r0().expect("example admits r0")).expect("valid sector");
    let grid = Grid::new(&p, 128, 128, 128);
    (p, cfg, grid)
}

fn resolvent_decay() -> Verdict {
    let (p, cfg, grid) = resolvent_setup();
    let edge = cfg.lambda_angle() - 0.01;
    let mut ok = true;
    let mut lines = Vec::new();
    for arg in [0.0, PI / 3.0, -edge] {
        let samples = match estimate_resolvent_norm(&ray_samples(&[arg]), &p, &grid, 32, &cfg, SEED) {
            Ok(s) => s,
            Err(e) => return verdict(false, format!("ray {arg:.4}: {e}")),
        };
        let max = samples.iter().map(|s| s.norm_product).fold(0.0, f64::max);
        let min = samples.iter().map(|s| s.norm_product).fold(f64::INFINITY, f64::min);
        let slope = log_slope(&samples);
        ok &= max / min < 10.0 && slope <= 0.05;
        lines.push(format!("arg {arg:+.4}: factor {:.3}, slope {slope:+.4}", max / min));
    }
    verdict(ok, lines.join("; "))
}

fn resolvent_identity() -> Verdict {
    let (p, cfg, grid) = resolvent_setup();
    let edge = cfg.lambda_angle() - 0.01;
    let pairs = [
        (C64::new(1.0, 0.0), C64::from_polar(10.0, PI / 4.0)),
        (C64::from_polar(50.0, -PI / 3.0), C64::from_polar(2.0, PI / 2.0)),
        (C64::from_polar(1e3, edge), C64::from_polar(1e2, -edge)),
    ];
    let mut worst: f64 = 0.0;
    for probe in 0..5u64 {
        let psi: SpeciesFields = std::array::from_fn(|s| seeded_field(&grid, SEED + 10 * probe + s as u64));
        for (l1, l2) in pairs {
            match resolvent_identity_defect(l1, l2, &p, &psi, 32, &cfg) {
                Ok(d) => worst = worst.max(d),
                Err(e) => return verdict(false, format!("({l1}, {l2}): {e}")),
            }
        }
    }
    verdict(worst <= 1e-8, format!("15 probe/pair combinations, worst relative defect {worst:.3e}"))
}

fn eigen_decay() -> Verdict {
    let d = 0.1;
    let cfg = RunConfig {
        dt: 1e-4,
        t_end: 0.1,
        nx_i: 128,
        nx_s: 128,
        ny: 256,
        scheme: Scheme::Imex,
        output_every: 1000,
        y_discretization: YDiscretization::FiniteDifference,
        ..Default::default()
    };
    let f = transparent_fixture(d, cfg);
    match run(&f.initial, &f.params, &f.cfg) {
        Ok(traj) => {
            let rate = decay_rate(&traj);
            let exact = transparent_decay_rate(d, f.params.ell, f.params.width_s);
            let rel = (rate - exact).abs() / exact;
            verdict(rel <= 0.01, format!("rate {rate:.6} vs exact {exact:.6}, relative error {rel:.3e}"))
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn convergence_orders() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut oracle_orders = Vec::new();
    for i in 0..4 {
        let case = RandomModeCase::generate(SEED, i);
        match self_convergence_order(&|a, b| case.bvp(a, b), 512) {
            Ok(o) => oracle_orders.push(o),
            Err(e) => return verdict(false, format!("oracle case {i}: {e}")),
        }
    }
    ok &= oracle_orders.iter().all(|o| (o - 2.0).abs() <= 0.1);
    parts.push(format!("oracle {:?}", oracle_orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()));

    let base = RunConfig { t_end: 0.1, nx_i: 32, nx_s: 32, ny: 32, output_every: usize::MAX, ..Default::default() };
    let dts = [0.01, 0.005, 0.0025, 0.00125];
    let finest = |f: &skewdiff::simulator::Fixture| -> Result<f64, Error> {
        let rows = temporal_convergence(f, &dts)?;
        Ok(rows.iter().filter_map(|r| r.order).next_back().unwrap_or(f64::NAN))
    };
    let cn = finest(&transparent_fixture(0.1, RunConfig { scheme: Scheme::CrankNicolson, ..base }));
    let imex = finest(&coupled_fixture(RunConfig { scheme: Scheme::Imex, ..base }));
    match (cn, imex) {
        (Ok(cn), Ok(imex)) => {
            ok &= (cn - 2.0).abs() <= 0.1 && (imex - 1.0).abs() <= 0.1;
            parts.push(format!("Crank-Nicolson {cn:.3}, IMEX {imex:.3}"));
        }
        (a, b) => return verdict(false, format!("{:?} {:?}", a.err(), b.err())),
    }
    verdict(ok, parts.join("; "))
}

fn hypothesis_gate() -> Verdict {
    let r0 = PI_SQ - 1e-6;
    let cfg = SectorConfig::with_r0(r0).expect("valid sector");
    let ex = ModelParameters::example();
    // (parameters, hand-computed minus operand, hand-computed plus operand)
    let fixtures = [
        (ex, -6.975, -1.25),
        (ModelParameters { sigma_h_plus: 1.0, fec_h_plus: 10.0, diff_h_plus: 1.0, ..ex }, -6.975, 10.0),
        (ModelParameters { sigma_h_plus: 0.9, fec_h_plus: 10.0, diff_h_plus: 1.0, ..ex }, -6.975, 8.9),
        (ModelParameters { sigma_h_minus: 0.5, nu: 1.0, fec_h_minus: 3.0, diff_h_minus: 0.1, ..ex }, 10.0, -1.25),
        (ModelParameters { sigma_h_minus: 0.96, nu: 0.5, fec_h_minus: 2.0, diff_h_minus: 0.1, ..ex }, 9.2, -1.25),
    ];
    let grid = Grid::new(&ex, 16, 16, 16);
    let lambda = C64::new(1.0, 0.0);
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, (p, minus, plus)) in fixtures.iter().enumerate() {
        let report = match check_hypothesis(p, r0) {
            Ok(r) => r,
            Err(e) => return verdict(false, format!("fixture {i}: {e}")),
        };
        let arithmetic = (report.minus_operand - minus).abs() <= 1e-12 && (report.plus_operand - plus).abs() <= 1e-12;
        let expected_hold = minus.max(*plus) <= r0;
        let coeffs = species_coefficients(p, Species::Host).expect("valid host coefficients");
        let outcome = resolve_species(lambda, &coeffs, &grid.zeros(), 8, &cfg);
        let gate = match outcome {
            Ok(_) => expected_hold,
            Err(Error::HypothesisViolation { .. }) => !expected_hold,
            Err(_) => false,
        };
        ok &= arithmetic && gate && report.holds == expected_hold;
        notes.push(format!("{}{}", if expected_hold { "accept" } else { "refuse" }, if arithmetic && gate { "" } else { "!" }));
    }
    ok &= check_hypothesis(&ex, r0).map(|r| r.holds).unwrap_or(false);
    verdict(ok, format!("5 fixtures: {}", notes.join(", ")))
}

const SMALL_CONFIG: &str = r#"
seed = 11

[grid]
nx_i = 16
nx_s = 16
ny = 16

[time]
dt = 1e-3
t_end = 0.01
output_every = 5

[resolve]
nx = 32
ny = 32
modes = 8
estimate_norm = true

[verify]
samples = 2000
symbol_samples = 500
oracle_cases = 3
oracle_n = 512
oracle_levels = 3
forcing_refine = 4

[sweep]
nx = 16
ny = 16
modes = 8
"#;

fn run_cli(config: &Path, out: &Path, args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let output = Command::new(env!("CARGO_BIN_EXE_skewdiff"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((output.status.code().unwrap_or(-1), output.stdout))
}

fn directory_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => return verdict(false, e.to_string()),
    };
    let config = tmp.path().join("small.toml");
    if let Err(e) = std::fs::write(&config, SMALL_CONFIG) {
        return verdict(false, e.to_string());
    }
    let runs: [&[&str]; 8] = [
        &["simulate"],
        &["--format", "csv", "simulate"],
        &["resolve"],
        &["--format", "json-lines", "verify-lemmas"],
        &["verify-oracle"],
        &["sweep"],
        &["--seed", "5", "resolve"],
        &["show-config"],
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let mut results = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("run{i}-{rep}"));
            match run_cli(&config, &out, args) {
                Ok((code, stdout)) => results.push((code, stdout, directory_bytes(&out))),
                Err(e) => return verdict(false, format!("{args:?}: {e}")),
            }
        }
        let same = results[0] == results[1];
        let succeeded = results[0].0 == 0;
        ok &= same && succeeded;
        if !same || !succeeded {
            notes.push(format!("{args:?} exit {} identical {same}", results[0].0));
        }
    }
    verdict(ok, format!("{} invocations repeated{}", runs.len(), if notes.is_empty() { String::new() } else { format!(": {}", notes.join("; ")) }))
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |n, name, v: Verdict| {
        println!("{} criterion {n} ({name}): {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };

    report(1, "sector lemmas", timed(secs(30), sector_lemmas));
    report(2, "symbol floor", timed(secs(10), symbol_floor));
    let start = Instant::now();
    let rows = oracle_suite(SEED, 50, 4096, 3, 4);
    let oracle_time = start.elapsed();
    match rows {
        Ok(rows) => {
            let mut v = oracle_equivalence(&rows);
            v.detail = format!("{} [{:.1} s]", v.detail, oracle_time.as_secs_f64());
            if oracle_time > Duration::from_secs(120) {
                v.passed = false;
                v.detail.push_str(" exceeds 120 s");
            }
            report(3, "oracle equivalence", v);
            report(4, "transmission fidelity", transmission(&rows));
        }
        Err(e) => {
            report(3, "oracle equivalence", verdict(false, e.to_string()));
            report(4, "transmission fidelity", verdict(false, e.to_string()));
        }
    }
    report(5, "resolvent decay", timed(secs(300), resolvent_decay));
    report(6, "resolvent identity", timed(None, resolvent_identity));
    report(7, "eigen-decay", timed(secs(180), eigen_decay));
    report(8, "convergence orders", timed(None, convergence_orders));
    report(9, "hypothesis gate", timed(None, hypothesis_gate));
    report(10, "determinism", timed(None, determinism));

    let failed = results.iter().filter(|r| !r.2.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
