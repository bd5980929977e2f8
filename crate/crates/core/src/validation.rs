//! The acceptance suite: nine checks with pinned tolerances, shared by the
//! `validate` command and the `acceptance` test target.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::arrival::{ultra_arrival, ultra_efficiency};
use crate::config::{shipped, SHIPPED};
use crate::dynamics::{DimensionlessPacket, TopHatPacket};
use crate::error::{Error, Result};
use crate::events::intensity_from_survival;
use crate::runs;
use crate::specfun::{boundary_sqrt_iz, boundary_sqrt_neg_iz, faddeeva_w};
use crate::studies::{alpha_opt_curve, alpha_opt_slopes, golden_section_max, optimize_alpha, shape_invariance};
use crate::Complex64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    /// Runtime target; exceeding it is reported but does not fail the check.
    pub budget_seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let over = if self.seconds > self.budget_seconds { " (over time budget)" } else { "" };
        format!(
            "[{}] {}. {}: {} [{:.1}s / {:.0}s{over}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

pub const TITLES: [&str; 9] = [
    "ultra-relativistic optimum",
    "static-packet optimum",
    "linear optimal-coupling law",
    "arrival timing",
    "Parseval identity",
    "Poisson-process equivalence",
    "lattice-analytic bridge",
    "shadowing",
    "special functions",
];

const BUDGETS: [f64; 9] = [1.0, 30.0, 120.0, 30.0, 60.0, 60.0, 120.0, 180.0, 5.0];

/// Runs criterion `id` (1 to 9). Numerical errors inside a check count as a
/// failure and are reported in the detail text.
pub fn run_criterion(id: u8) -> Result<CriterionResult> {
    let check: fn() -> Result<(bool, String)> = match id {
        1 => ultra_relativistic_optimum,
        2 => static_optimum,
        3 => linear_law,
        4 => arrival_timing,
        5 => parseval_identity,
        6 => poisson_equivalence,
        7 => lattice_bridge,
        8 => shadowing,
        9 => special_functions,
        _ => return Err(Error::InvalidArgument(format!("no acceptance criterion {id}"))),
    };
    let start = Instant::now();
    let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
    let k = id as usize - 1;
    Ok(CriterionResult {
        id,
        title: TITLES[k],
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
        budget_seconds: BUDGETS[k],
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=9).filter_map(|id| run_criterion(id).ok()).collect()
}

fn ultra_relativistic_optimum() -> Result<(bool, String)> {
    let c = 1.5;
    // packet supported entirely left of the counter at 0
    let state = Arc::new(TopHatPacket::new(-3.0, -1.0)?);
    let law = ultra_arrival(state, c, 2.0 * c, 0.0)?;
    let p = law.p_inf();
    let (k_opt, _) = golden_section_max(|k| Ok(ultra_efficiency(k, c)), 0.1, 20.0, 1e-9)?;
    let (e_p, e_k) = ((p - 0.5).abs(), (k_opt - 2.0 * c).abs());
    Ok((e_p < 1e-12 && e_k < 1e-6, format!("P(kappa=2c) - 1/2 = {e_p:.1e} (tol 1e-12), |kappa_opt - 2c| = {e_k:.1e} (tol 1e-6)")))
}

fn static_optimum() -> Result<(bool, String)> {
    let (a, p) = optimize_alpha(&DimensionlessPacket::new(0.0, 0.0)?, crate::studies::default_bracket(0.0))?;
    let ok = (p - 0.7254).abs() <= 1e-3 && (a - 1.322).abs() <= 5e-3;
    Ok((ok, format!("alpha_opt = {a:.5} (1.322 +- 5e-3), P_max = {p:.6} (0.7254 +- 1e-3)")))
}

fn linear_law() -> Result<(bool, String)> {
    let curve = alpha_opt_curve(-4.0, &[2.0, 4.0, 8.0])?;
    let slopes = alpha_opt_slopes(&curve);
    let p8 = curve.last().map(|c| c.p_inf).unwrap_or(f64::NAN);
    let ok = slopes.iter().all(|s| (1.7..=2.3).contains(s)) && (0.46..=0.54).contains(&p8);
    let alphas: Vec<String> = curve.iter().map(|c| format!("{:.3}", c.alpha)).collect();
    let slopes_s: Vec<String> = slopes.iter().map(|s| format!("{s:.3}")).collect();
    Ok((
        ok,
        format!(
            "alpha_opt(2,4,8) = [{}], slopes [{}] in [1.7, 2.3], P(v=8) = {p8:.4} in [0.46, 0.54]",
            alphas.join(", "),
            slopes_s.join(", ")
        ),
    ))
}

/// Largest pairwise L1 distance between the rescaled densities, fixed from
/// a reference run (observed 0.134).
pub const SHAPE_L1_BOUND: f64 = 0.15;

fn arrival_timing() -> Result<(bool, String)> {
    let cfg = shipped("fig2_alpha1.toml")?;
    let report = shape_invariance(&cfg.packet()?, &[0.01, 1.0, 100.0], &cfg.time_grids())?;
    let in_range = report.means.iter().all(|m| (0.9..=1.1).contains(m));
    let ok = in_range && report.means_decreasing && report.max_l1 < SHAPE_L1_BOUND;
    let means: Vec<String> = report.means.iter().map(|m| format!("{m:.4}")).collect();
    Ok((
        ok,
        format!(
            "means(alpha=0.01,1,100) = [{}] in [0.9, 1.1], strictly decreasing: {}, max L1 = {:.3} (< {SHAPE_L1_BOUND})",
            means.join(", "),
            report.means_decreasing,
            report.max_l1
        ),
    ))
}

fn parseval_identity() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (name, _) in SHIPPED {
        let cfg = shipped(name)?;
        if cfg.counter.is_none() && cfg.counters.is_none() {
            continue;
        }
        let law = crate::studies::counter_law(&cfg.packet()?, &cfg.counter_array()?, &cfg.time_grids())?;
        worst = worst.max((law.distribution.p_inf - law.distribution.grid_mass()).abs());
        count += 1;
    }
    Ok((worst < 1e-6, format!("max |P_Parseval - int p| = {worst:.2e} over {count} shipped arrival configs (tol 1e-6)")))
}

fn poisson_equivalence() -> Result<(bool, String)> {
    let cfg = shipped("mc_fig2.toml")?;
    let run = runs::monte_carlo(&cfg, None)?;
    let identity = intensity_from_survival(&run.law)?.survival_identity_error();
    let r = &run.report;
    let ok = identity < 1e-8 && r.passed() && r.n == 100_000;
    Ok((
        ok,
        format!(
            "survival identity {identity:.1e} (tol 1e-8); KS {:.4} < {:.4}; fraction {:.4} vs P = {:.4} (3 sigma = {:.4}); N = {}",
            r.ks_distance.unwrap_or(f64::NAN),
            r.ks_critical.unwrap_or(f64::NAN),
            r.detection_fraction,
            r.expected_fraction,
            3.0 * r.binomial_sigma,
            r.n
        ),
    ))
}

fn lattice_bridge() -> Result<(bool, String)> {
    let b = runs::bridge(&shipped("bridge_1d.toml")?)?;
    let ok = b.best_error() < 0.02 && b.norm_loss_mismatch < 1e-4;
    Ok((
        ok,
        format!(
            "sup rel error N={}: {:.1e}, N={}: {:.1e}, extrapolated: {:.1e} (tol 2e-2); norm-loss identity {:.1e} (tol 1e-4)",
            b.n,
            b.sup_rel,
            2 * b.n,
            b.sup_rel_fine,
            b.sup_rel_extrapolated,
            b.norm_loss_mismatch
        ),
    ))
}

fn shadowing() -> Result<(bool, String)> {
    let run = runs::shadow(&shipped("shadow_fig1.toml")?)?;
    let p = run.monitored.distribution.p_inf;
    let r = &run.report;
    let ok = (0.53..=0.57).contains(&p) && r.shadowed && r.axial_maximum && run.monitored.escape_warning.is_none();
    Ok((
        ok,
        format!(
            "P(inf) = {p:.4} in [0.53, 0.57], shadow depth {:.3} at x = {}, strict axial maximum: {}, boundary mass {:.1e} (calibrated config)",
            r.shadow_depth, r.peak_x, r.axial_maximum, run.monitored.max_boundary_mass
        ),
    ))
}

const FADDEEVA_TABLE: &str = include_str!("../data/faddeeva_reference.csv");

fn special_functions() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let mut overflow_ok = true;
    for line in FADDEEVA_TABLE.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad table row {line}")));
        let u = Complex64::new(parse(f[0])?, parse(f[1])?);
        points += 1;
        if f[2] == "overflow" {
            overflow_ok &= matches!(faddeeva_w(u), Err(Error::Overflow(_)));
            continue;
        }
        let want = Complex64::new(parse(f[2])?, parse(f[3])?);
        let err = match faddeeva_w(u) {
            Ok(got) => (got - want).norm() / want.norm(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    let mut tables_ok = true;
    for y in [0.25f64, 1.0, 4.0, 9.0, 100.0] {
        let r = y.sqrt();
        tables_ok &= boundary_sqrt_iz(y) == Complex64::new(0.0, r)
            && boundary_sqrt_neg_iz(y) == Complex64::new(r, 0.0)
            && boundary_sqrt_iz(-y) == Complex64::new(r, 0.0)
            && boundary_sqrt_neg_iz(-y) == Complex64::new(0.0, -r);
    }
    let ok = worst < 1e-10 && overflow_ok && tables_ok && points == 200;
    Ok((
        ok,
        format!("max rel error {worst:.1e} over {points} points, |u| <= 30 (tol 1e-10); overflow flagged: {overflow_ok}; branch tables exact: {tables_ok}"),
    ))
}
