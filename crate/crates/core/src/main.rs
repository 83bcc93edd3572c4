use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use skewdiff::config::{Config, RhsSource, SnapshotFormat, CONFIG_KEYS};
use skewdiff::error::{Error, Result};
use skewdiff::grid::Grid;
use skewdiff::initial::initial_state;
use skewdiff::lemmas::run_all;
use skewdiff::model::{species_coefficients, Species};
use skewdiff::report::{emit_report, lemma_table, norm_table, oracle_table, Field, ReportFormat, Table};
use skewdiff::resolvent::{
    estimate_resolvent_norm, fd_residual, log_slope, ray_samples, resolve_full, seeded_field, NormSample,
    SpeciesFields,
};
use skewdiff::simulator::{field_name, Simulator};
use skewdiff::snapshot::{read_fields_csv, write_binary, write_complex_csv, write_csv};
use skewdiff::verify::oracle_suite;

#[derive(Parser)]
#[command(
    name = "skewdiff",
    version,
    about = "Two-habitat reaction-diffusion model with skew interface conditions",
    after_long_help = CONFIG_KEYS
)]
struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding [output].dir.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Report format, overriding [output].report.
    #[arg(short, long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    JsonLines,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::JsonLines => ReportFormat::JsonLines,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the six-density system in time.
    Simulate,
    /// Solve the resolvent equation at one spectral parameter.
    Resolve,
    /// Check the sector and symbol inequalities on seeded random samples.
    VerifyLemmas,
    /// Compare closed-form mode solutions with the finite-difference oracle.
    VerifyOracle,
    /// Estimate the scaled resolvent norm along rays of the sector.
    Sweep,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Pass,
    Fail(String),
}

struct Context {
    cfg: Config,
    base: PathBuf,
    out: PathBuf,
    format: ReportFormat,
}

impl Context {
    fn extension(&self) -> &'static str {
        match self.format {
            ReportFormat::Text => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::JsonLines => "jsonl",
        }
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out)?;
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    /// Print to stdout and write `<name>.<ext>` in the output directory.
    fn report(&self, name: &str, table: &Table) -> Result<()> {
        let mut stdout = std::io::stdout().lock();
        emit_report(table, self.format, &mut stdout)?;
        let mut f = self.create(&format!("{name}.{}", self.extension()))?;
        emit_report(table, self.format, &mut f)?;
        f.flush()?;
        Ok(())
    }

    fn metadata(&self, value: &impl Serialize) -> Result<()> {
        let mut f = self.create("metadata.json")?;
        serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }
}

fn load(cli: &Cli) -> Result<Context> {
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let cfg = Config::parse(&text).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })?;
            (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (Config::default(), PathBuf::new()),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let format = cli.format.map(ReportFormat::from).unwrap_or(cfg.output.report);
    Ok(Context { cfg, base, out, format })
}

fn simulate(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.cfg;
    let run = cfg.run_config();
    let initial = initial_state(cfg, &ctx.base)?;
    let sim = Simulator::new(&cfg.model, &run)?;
    let traj = sim.run(&initial)?;
    match cfg.output.snapshots {
        SnapshotFormat::Csv => {
            let mut f = ctx.create("snapshots.csv")?;
            write_csv(&traj.snapshots, &mut f)?;
            f.flush()?;
        }
        SnapshotFormat::Binary => {
            let mut f = ctx.create("snapshots.skpd")?;
            write_binary(&sim.grid(), &traj.snapshots, &mut f)?;
            f.flush()?;
        }
    }
    ctx.metadata(&traj.metadata)?;
    let m = &traj.metadata;
    let last = m.masses.last().expect("masses include the initial state");
    let mut table = Table::new(&["quantity", "value"]);
    let mut row = |k: &str, v: Field| table.push(vec![k.into(), v]);
    row("scheme", serde_json::to_value(m.scheme).map_err(|e| Error::Io(e.to_string()))?.as_str().unwrap_or("").into());
    row("steps", m.steps.into());
    row("dt", m.dt.into());
    row("modes", m.modes.into());
    row("hypothesis_holds", m.hypothesis_holds.into());
    row("max_continuity_defect", m.max_continuity_defect.into());
    row("max_flux_defect", m.max_flux_defect.into());
    row("negative_events", m.negative_events.len().into());
    row("final_time", last.t.into());
    for (i, (s, side)) in skewdiff::snapshot::field_order().into_iter().enumerate() {
        row(&format!("mass_{}", field_name(s, side)), last.masses[i].into());
    }
    ctx.report("report", &table)?;
    if !m.hypothesis_holds {
        eprintln!("warning: host-growth hypothesis does not hold for these parameters");
    }
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct SpeciesMeta {
    species: Species,
    fd_residual: f64,
    continuity_defect: f64,
    flux_defect: f64,
}

#[derive(Serialize)]
struct ResolveMeta {
    lambda_re: f64,
    lambda_im: f64,
    modes: usize,
    grid: Grid,
    r0: f64,
    scaled_ratio: f64,
    species: Vec<SpeciesMeta>,
    norm_estimate: Option<NormSample>,
}

fn resolve(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.cfg;
    let r = &cfg.resolve;
    let sector = cfg.sector_config()?;
    let p = &cfg.model;
    let grid = Grid::new(
        p,
        ((r.nx as f64) * p.ell).round().max(16.0) as usize,
        ((r.nx as f64) * p.width_s).round().max(16.0) as usize,
        r.ny,
    );
    let psi: SpeciesFields = match r.rhs_source()? {
        RhsSource::Zero => [grid.zeros(), grid.zeros(), grid.zeros()],
        RhsSource::Random(seed) => std::array::from_fn(|i| seeded_field(&grid, seed.wrapping_add(i as u64))),
        RhsSource::File(path) => {
            let text = fs::read_to_string(ctx.base.join(path))?;
            read_fields_csv(&text, &grid)?.fields.map(|f| f.map(|v| C64::new(v, 0.0)))
        }
    };
    let lambda = C64::new(r.lambda_re, r.lambda_im);
    let full = resolve_full(lambda, p, &psi, r.modes, &sector)?;
    let mut species = Vec::new();
    for (i, s) in Species::ALL.into_iter().enumerate() {
        let c = species_coefficients(p, s)?;
        let (continuity_defect, flux_defect) = full.solutions[i].interface_defects();
        species.push(SpeciesMeta {
            species: s,
            fd_residual: fd_residual(lambda, &c, &full.fields[i], &psi[i]),
            continuity_defect,
            flux_defect,
        });
    }
    let norm_estimate = if r.estimate_norm {
        estimate_resolvent_norm(&[lambda], p, &grid, r.modes, &sector, cfg.seed)?.pop()
    } else {
        None
    };
    let mut f = ctx.create("solution.csv")?;
    write_complex_csv(&full.fields, &mut f)?;
    f.flush()?;
    let mut table = Table::new(&["species", "fd_residual", "continuity_defect", "flux_defect"]);
    for s in &species {
        table.push(vec![
            format!("{:?}", s.species).to_lowercase().into(),
            s.fd_residual.into(),
            s.continuity_defect.into(),
            s.flux_defect.into(),
        ]);
    }
    ctx.metadata(&ResolveMeta {
        lambda_re: lambda.re,
        lambda_im: lambda.im,
        modes: r.modes,
        grid,
        r0: sector.r0,
        scaled_ratio: full.scaled_ratio,
        species,
        norm_estimate,
    })?;
    ctx.report("report", &table)?;
    Ok(Outcome::Pass)
}

fn verify_lemmas(ctx: &Context) -> Result<Outcome> {
    let v = &ctx.cfg.verify;
    let seed = ctx.cfg.seed;
    let outcomes = run_all(seed, v.samples, v.symbol_samples, ctx.cfg.sector.epsilon0);
    ctx.report("report", &lemma_table(&outcomes))?;
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.name.as_str()).collect();
    Ok(if failed.is_empty() { Outcome::Pass } else { Outcome::Fail(format!("lemma failures: {}", failed.join(", "))) })
}

fn verify_oracle(ctx: &Context) -> Result<Outcome> {
    let v = &ctx.cfg.verify;
    let rows = oracle_suite(ctx.cfg.seed, v.oracle_cases, v.oracle_n, v.oracle_levels, v.forcing_refine)?;
    ctx.report("report", &oracle_table(&rows, v.oracle_tolerance))?;
    let bad = rows.iter().filter(|r| r.relative_l2 > v.oracle_tolerance).count();
    Ok(if bad == 0 { Outcome::Pass } else { Outcome::Fail(format!("{bad} oracle cases above tolerance")) })
}

fn sweep(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.cfg;
    let s = &cfg.sweep;
    let sector = cfg.sector_config()?;
    let p = &cfg.model;
    let grid = Grid::new(
        p,
        ((s.nx as f64) * p.ell).round().max(16.0) as usize,
        ((s.nx as f64) * p.width_s).round().max(16.0) as usize,
        s.ny,
    );
    let mut samples = Vec::new();
    let mut rays = Table::new(&["status", "argument", "min_product", "max_product", "factor", "slope"]);
    let mut failures = 0;
    for arg in s.rays(&sector) {
        let ray = estimate_resolvent_norm(&ray_samples(&[arg]), p, &grid, s.modes, &sector, cfg.seed)?;
        let lo = ray.iter().map(|r| r.norm_product).fold(f64::INFINITY, f64::min);
        let hi = ray.iter().map(|r| r.norm_product).fold(0.0, f64::max);
        let slope = log_slope(&ray);
        let ok = hi / lo < 10.0 && slope <= 0.05;
        failures += usize::from(!ok);
        rays.push(vec![
            if ok { "PASS" } else { "FAIL" }.into(),
            arg.into(),
            lo.into(),
            hi.into(),
            (hi / lo).into(),
            slope.into(),
        ]);
        samples.extend(ray);
    }
    ctx.report("report", &norm_table(&samples))?;
    let mut f = ctx.create(&format!("rays.{}", ctx.extension()))?;
    emit_report(&rays, ctx.format, &mut f)?;
    f.flush()?;
    Ok(if failures == 0 { Outcome::Pass } else { Outcome::Fail(format!("{failures} rays out of bounds")) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|ctx| match cli.command {
        Command::Simulate => simulate(&ctx),
        Command::Resolve => resolve(&ctx),
        Command::VerifyLemmas => verify_lemmas(&ctx),
        Command::VerifyOracle => verify_oracle(&ctx),
        Command::Sweep => sweep(&ctx),
        Command::ShowConfig => {
            print!("{}", ctx.cfg.to_toml());
            Ok(Outcome::Pass)
        }
    });
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
