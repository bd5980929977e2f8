//! Command-line front end: reproduces the arrival, sweep, Monte Carlo and
//! lattice results as CSV and JSON files and runs the acceptance suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qarrival::config::{RunConfig, SweepConfig, SweepMode};
use qarrival::output::{csv_with_preamble, fmt, write_atomic, VERSION};
use qarrival::{lattice, runs, studies, validation, Error};

#[derive(Parser)]
#[command(name = "qarrival", version, about = "Quantum time-of-arrival statistics under continuous monitoring")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration (TOML with dotted sections)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for stochastic commands; overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Arrival-time density of a point counter or counter array
    Arrival {
        /// Rescale the density to unit mass
        #[arg(long)]
        rescale: bool,
    },
    /// Efficiency studies over coupling and velocity
    Sweep {
        /// alpha-opt, surface or static-alpha (default: from config, else alpha-opt)
        #[arg(long, value_parser = parse_mode)]
        mode: Option<SweepMode>,
        /// Velocity grid, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        v: Option<Vec<f64>>,
        /// Coupling grid, comma separated
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
    },
    /// Monte Carlo first-event times checked against the analytic law
    Mc {
        /// Number of samples; overrides mc.samples
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Lattice simulation of a monitored packet and its shadow
    Shadow,
    /// Runs the acceptance suite and prints a PASS/FAIL table
    Validate {
        /// Criteria to run, comma separated (default: all)
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
}

fn parse_mode(s: &str) -> Result<SweepMode, String> {
    match s {
        "alpha-opt" => Ok(SweepMode::AlphaOpt),
        "surface" => Ok(SweepMode::Surface),
        "static-alpha" => Ok(SweepMode::StaticAlpha),
        _ => Err(format!("unknown sweep mode {s} (alpha-opt, surface, static-alpha)")),
    }
}

/// Exit status by failure class.
mod exit {
    pub const CONFIG: u8 = 2;
    pub const CONVERGENCE: u8 = 3;
    pub const STATISTICAL: u8 = 4;
    pub const DOMAIN: u8 = 5;
    pub const OTHER: u8 = 1;
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Domain(_) => exit::CONFIG,
        Error::DomainEscape(_) => exit::DOMAIN,
        Error::Io(_) => exit::OTHER,
        _ => exit::CONVERGENCE,
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { code: exit_code(&e), message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::from(exit::CONFIG);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(g: &Global) -> Result<RunConfig, Failure> {
    match &g.config {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: &Cli) -> CmdResult {
    let g = &cli.global;
    match &cli.command {
        Command::Arrival { rescale } => cmd_arrival(g, load_config(g)?, *rescale),
        Command::Sweep { mode, v, alpha } => {
            let mut cfg = load_config(g)?;
            let mut sweep = cfg.sweep.clone().unwrap_or_default();
            if let Some(m) = mode {
                sweep.mode = *m;
            }
            if let Some(v) = v {
                sweep.v = v.clone();
            }
            if let Some(a) = alpha {
                sweep.alpha = a.clone();
            }
            cfg.sweep = Some(sweep);
            cfg.validate()?;
            cmd_sweep(g, cfg)
        }
        Command::Mc { samples } => {
            let mut cfg = load_config(g)?;
            if let (Some(n), Some(mc)) = (samples, cfg.mc.as_mut()) {
                mc.samples = *n;
            }
            if g.seed.is_some() {
                cfg.seed = g.seed;
            }
            cmd_mc(g, cfg)
        }
        Command::Shadow => cmd_shadow(g, load_config(g)?),
        Command::Validate { only } => cmd_validate(only.as_deref()),
    }
}

fn preamble(cfg: &RunConfig, command: &str) -> String {
    format!("qarrival {VERSION}\ncommand: {command}\nconfig:\n{}", cfg.to_toml())
}

fn sidecar(out: &Path, name: &str, cfg: &RunConfig, command: &str, body: serde_json::Value) -> CmdResult {
    let mut doc = json!({ "version": VERSION, "command": command, "config": cfg });
    if let (Some(d), serde_json::Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure { code: exit::OTHER, message: e.to_string() })?;
    write_atomic(&out.join(name), text.as_bytes())?;
    Ok(())
}

fn write_csv(out: &Path, name: &str, pre: &str, header: &[&str], rows: Vec<Vec<String>>) -> CmdResult {
    write_atomic(&out.join(name), csv_with_preamble(pre, header, rows).as_bytes())?;
    Ok(())
}

fn cmd_arrival(g: &Global, cfg: RunConfig, rescale: bool) -> CmdResult {
    let run = runs::arrival(&cfg)?;
    let dist = if rescale { run.law.distribution.rescaled()? } else { run.law.distribution.clone() };
    if let Some(w) = &run.law.tail_warning {
        eprintln!("warning: {w}");
    }
    let pre = format!("{}rescaled: {rescale}", preamble(&cfg, "arrival"));
    let rows = dist
        .tau
        .iter()
        .zip(&dist.p)
        .zip(&dist.p_cum)
        .map(|((t, p), c)| vec![fmt(*t), fmt(*p), fmt(*c)])
        .collect();
    write_csv(&g.out, "arrival.csv", &pre, &["tau", "p", "P_cum"], rows)?;
    let mean = run.law.distribution.mean();
    sidecar(
        &g.out,
        "arrival.json",
        &cfg,
        "arrival",
        json!({
            "P_inf": run.p_inf_quadrature,
            "P_inf_parseval": run.p_inf_parseval,
            "P_integrated": run.p_integrated,
            "mean_arrival": mean,
            "rescaled": rescale,
            "grids": cfg.time_grids(),
            "tail_warning": run.law.tail_warning,
        }),
    )?;
    println!(
        "P(inf) = {:.6} (Parseval {:.6}, integrated {:.6}), mean arrival {}",
        run.p_inf_quadrature,
        run.p_inf_parseval,
        run.p_integrated,
        mean.map(|m| format!("{m:.4}")).unwrap_or_else(|| "undefined".into())
    );
    Ok(())
}

fn cmd_sweep(g: &Global, cfg: RunConfig) -> CmdResult {
    let sweep: SweepConfig = cfg.sweep.clone().unwrap_or_default();
    let pre = preamble(&cfg, "sweep");
    match sweep.mode {
        SweepMode::AlphaOpt => {
            if sweep.v.is_empty() {
                return Err(Error::Config("alpha-opt sweep needs sweep.v or --v".into()).into());
            }
            let curve = studies::alpha_opt_curve(cfg.packet.xi0, &sweep.v)?;
            let slopes = studies::alpha_opt_slopes(&curve);
            let rows = curve.iter().map(|p| vec![fmt(p.v), fmt(p.alpha), fmt(p.p_inf)]).collect();
            write_csv(&g.out, "sweep_alpha_opt.csv", &pre, &["v", "alpha_opt", "P_max"], rows)?;
            let linear = !slopes.is_empty() && slopes.iter().all(|s| (1.7..=2.3).contains(s));
            sidecar(&g.out, "sweep_alpha_opt.json", &cfg, "sweep", json!({ "points": curve, "slopes": slopes, "slopes_near_2": linear }))?;
            for p in &curve {
                println!("v = {:<6} alpha_opt = {:.5}  P_max = {:.6}", p.v, p.alpha, p.p_inf);
            }
            let s: Vec<String> = slopes.iter().map(|s| format!("{s:.4}")).collect();
            println!("finite-difference slopes of alpha_opt(v): [{}] (linear law predicts 2)", s.join(", "));
        }
        SweepMode::Surface => {
            if sweep.v.is_empty() || sweep.alpha.is_empty() {
                return Err(Error::Config("surface sweep needs velocity and coupling grids".into()).into());
            }
            let surface = studies::efficiency_surface(cfg.packet.xi0, &sweep.v, &sweep.alpha)?;
            let text = format!("{}{}", qarrival::output::comment_block(&pre), studies::surface_csv(&surface));
            write_atomic(&g.out.join("sweep_surface.csv"), text.as_bytes())?;
            let best = surface.iter().flatten().fold(None::<&studies::EfficiencyPoint>, |b, p| match b {
                Some(b) if b.p_inf >= p.p_inf => Some(b),
                _ => Some(p),
            });
            sidecar(&g.out, "sweep_surface.json", &cfg, "sweep", json!({ "rows": sweep.v.len(), "columns": sweep.alpha.len(), "max": best }))?;
            if let Some(b) = best {
                println!("{}x{} surface, max P(inf) = {:.6} at v = {}, alpha = {}", sweep.v.len(), sweep.alpha.len(), b.p_inf, b.v, b.alpha);
            }
        }
        SweepMode::StaticAlpha => {
            let packet = qarrival::dynamics::DimensionlessPacket::new(0.0, 0.0)?;
            let points = studies::efficiency_surface(0.0, &[0.0], &sweep.alpha)?.into_iter().flatten().collect::<Vec<_>>();
            let (a_opt, p_max) = studies::optimize_alpha(&packet, studies::default_bracket(0.0))?;
            let rows = points.iter().map(|p| vec![fmt(p.alpha), fmt(p.p_inf)]).collect();
            write_csv(&g.out, "sweep_static_alpha.csv", &pre, &["alpha", "P_inf"], rows)?;
            sidecar(&g.out, "sweep_static_alpha.json", &cfg, "sweep", json!({ "points": points, "alpha_opt": a_opt, "P_max": p_max }))?;
            println!("static packet: maximum P(inf) = {p_max:.6} at alpha = {a_opt:.5}");
        }
    }
    Ok(())
}

fn cmd_mc(g: &Global, cfg: RunConfig) -> CmdResult {
    let run = runs::monte_carlo(&cfg, None)?;
    let pre = format!("{}seed: {}", preamble(&cfg, "mc"), run.seed);
    let rows = run
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| match o.time() {
            Some(t) => vec![i.to_string(), "detected".into(), fmt(t)],
            None => vec![i.to_string(), "not_detected".into(), String::new()],
        })
        .collect();
    write_csv(&g.out, "mc_samples.csv", &pre, &["index", "outcome", "tau"], rows)?;
    let r = &run.report;
    let tested = r.n > 0;
    sidecar(&g.out, "mc_summary.json", &cfg, "mc", json!({ "seed": run.seed, "tested": tested, "passed": r.passed(), "report": r }))?;
    if !tested {
        println!("no samples requested; no test performed");
        return Ok(());
    }
    println!(
        "{}: {} samples, detected fraction {:.5} vs P(inf) {:.5} (3 sigma {:.5}), KS {} vs critical {}",
        if r.passed() { "PASS" } else { "FAIL" },
        r.n,
        r.detection_fraction,
        r.expected_fraction,
        3.0 * r.binomial_sigma,
        r.ks_distance.map(|d| format!("{d:.5}")).unwrap_or_else(|| "-".into()),
        r.ks_critical.map(|d| format!("{d:.5}")).unwrap_or_else(|| "-".into()),
    );
    if r.passed() {
        Ok(())
    } else {
        Err(Failure { code: exit::STATISTICAL, message: "sampled first events fail the statistical test".into() })
    }
}

fn cmd_shadow(g: &Global, cfg: RunConfig) -> CmdResult {
    let l = cfg.lattice()?.clone();
    let run = runs::shadow(&cfg)?;
    let pre = preamble(&cfg, "shadow");
    let snap_dir = g.out.join("snapshots");
    for (k, s) in run.monitored.snapshots.iter().enumerate() {
        lattice::write_snapshot(&snap_dir.join(format!("monitored_{k:04}.bin")), s)?;
    }
    lattice::write_snapshot(&snap_dir.join("free_final.bin"), &run.free_final)?;
    write_csv(&g.out, "shadow_axial.csv", &pre, &["x", "rho_monitored", "rho_free", "difference"], lattice::axial_rows(&run.report))?;
    let d = &run.monitored.distribution;
    let rows = d.tau.iter().zip(&d.p).zip(&d.p_cum).map(|((t, p), c)| vec![fmt(*t), fmt(*p), fmt(*c)]).collect();
    write_csv(&g.out, "shadow_arrival.csv", &pre, &["tau", "p", "P_cum"], rows)?;
    let bridge = if l.dims == 1 && l.detector.kind == qarrival::config::DetectorKind::Point {
        let b = runs::bridge(&cfg)?;
        let rows = (0..b.tau.len())
            .map(|k| vec![fmt(b.tau[k]), fmt(b.analytic[k]), fmt(b.lattice[k]), fmt(b.lattice_fine[k]), fmt(b.extrapolated[k])])
            .collect();
        write_csv(&g.out, "bridge.csv", &pre, &["tau", "p_analytic", "p_lattice", "p_lattice_fine", "p_extrapolated"], rows)?;
        println!(
            "lattice vs analytic: sup rel error {:.2e} (N={}), {:.2e} (N={}), {:.2e} extrapolated",
            b.sup_rel,
            b.n,
            b.sup_rel_fine,
            2 * b.n,
            b.sup_rel_extrapolated
        );
        Some(json!({ "sup_rel": b.sup_rel, "sup_rel_fine": b.sup_rel_fine, "sup_rel_extrapolated": b.sup_rel_extrapolated, "norm_loss_mismatch": b.norm_loss_mismatch }))
    } else {
        None
    };
    let r = &run.report;
    sidecar(
        &g.out,
        "shadow.json",
        &cfg,
        "shadow",
        json!({
            "P_inf": d.p_inf,
            "calibrated": l.calibrated,
            "shadow_depth": r.shadow_depth,
            "shadowed": r.shadowed,
            "axial_maximum": r.axial_maximum,
            "peak_x": r.peak_x,
            "max_abs_difference": r.max_abs_difference,
            "norm_loss_mismatch": run.monitored.norm_loss_mismatch,
            "max_norm_increase": run.monitored.max_norm_increase,
            "max_boundary_mass": run.monitored.max_boundary_mass,
            "escape_warning": run.monitored.escape_warning,
            "bridge": bridge,
        }),
    )?;
    let axial = if l.dims == 2 { format!(", axial maximum behind detector: {}", r.axial_maximum) } else { String::new() };
    println!(
        "P(inf) = {:.5}{}, shadow depth {:.4}{axial}",
        d.p_inf,
        if l.calibrated { " (calibrated config)" } else { "" },
        r.shadow_depth,
    );
    match &run.monitored.escape_warning {
        Some(w) => Err(Error::DomainEscape(w.clone()).into()),
        None => Ok(()),
    }
}

fn cmd_validate(only: Option<&[u8]>) -> CmdResult {
    let ids: Vec<u8> = only.map(|o| o.to_vec()).unwrap_or_else(|| (1..=9).collect());
    let mut failed = 0;
    for id in ids {
        let r = validation::run_criterion(id)?;
        println!("{}", r.line());
        failed += usize::from(!r.passed);
    }
    if failed == 0 {
        println!("all selected criteria passed");
        Ok(())
    } else {
        Err(Failure { code: exit::STATISTICAL, message: format!("{failed} criteria failed") })
    }
}
