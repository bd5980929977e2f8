//! End-to-end runs driven by a [`RunConfig`], shared by the command-line
//! tool and the validation suite.

use serde::Serialize;

use crate::arrival::CounterSystem;
use crate::config::{DetectorKind, RunConfig};
use crate::error::{Error, Result};
use crate::events::{intensity_from_survival, sample_first_events, validate_samples, EventOutcome, IntensityTrace, SampleReport};
use crate::inversion::{efficiency_quadrature, invert_to_time, sample_spectrum, ArrivalDistribution, EfficiencyQuadrature};
use crate::lattice::{richardson, run_detection, shadow_profile, DetectionRun, Grid, LatticeState, ShadowReport};
use crate::studies::{counter_law, CounterLaw};

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalRun {
    pub law: CounterLaw,
    /// `P(inf)` from the spectral grid (Parseval).
    pub p_inf_parseval: f64,
    /// `int p dtau` over the time grid.
    pub p_integrated: f64,
    /// `P(inf)` from the adaptive spectral quadrature.
    pub p_inf_quadrature: f64,
}

pub fn arrival(cfg: &RunConfig) -> Result<ArrivalRun> {
    let packet = cfg.packet()?;
    let array = cfg.counter_array()?;
    let law = counter_law(&packet, &array, &cfg.time_grids())?;
    let p_inf_quadrature = if array.counters.iter().all(|c| c.alpha == 0.0) {
        0.0
    } else {
        efficiency_quadrature(&CounterSystem::new(packet, array), EfficiencyQuadrature::default())?
    };
    Ok(ArrivalRun {
        p_inf_parseval: law.distribution.p_inf,
        p_integrated: law.distribution.grid_mass(),
        p_inf_quadrature,
        law,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub law: ArrivalDistribution,
    pub trace: IntensityTrace,
    pub outcomes: Vec<EventOutcome>,
    pub report: SampleReport,
    pub seed: u64,
}

/// Samples first events from the config's arrival law. `seed` overrides the
/// config seed; one of the two must be present.
pub fn monte_carlo(cfg: &RunConfig, seed: Option<u64>) -> Result<McRun> {
    let mc = cfg.mc.ok_or_else(|| Error::Config("mc runs need an [mc] section".into()))?;
    let seed = seed.or(cfg.seed).ok_or_else(|| Error::Config("mc runs need a seed".into()))?;
    let law = counter_law(&cfg.packet()?, &cfg.counter_array()?, &cfg.time_grids())?.distribution;
    let trace = intensity_from_survival(&law)?;
    let outcomes = sample_first_events(&trace, mc.samples, seed, mc.sampler);
    let report = validate_samples(&trace, &outcomes, mc.level)?;
    Ok(McRun { law, trace, outcomes, report, seed })
}

pub struct ShadowRun {
    pub monitored: DetectionRun,
    pub free_final: LatticeState,
    pub report: ShadowReport,
}

/// Runs the configured lattice with and without the detector and compares
/// the final densities.
pub fn shadow(cfg: &RunConfig) -> Result<ShadowRun> {
    let l = cfg.lattice()?;
    let state0 = l.initial_state(&cfg.packet()?)?;
    let stride = if l.record_stride == 0 { usize::MAX } else { l.record_stride };
    let monitored = run_detection(&state0, &l.profile()?, l.t_end, stride)?;
    let free = run_detection(&state0, &crate::lattice::DetectorProfile::none(), l.t_end, usize::MAX)?;
    let free_final = free.snapshots.last().cloned().ok_or_else(|| Error::InvalidArgument("empty run".into()))?;
    let last = monitored.snapshots.last().ok_or_else(|| Error::InvalidArgument("empty run".into()))?;
    let c = l.detector.center;
    let report = shadow_profile(last, &free_final, c[0], c[1])?;
    Ok(ShadowRun { monitored, free_final, report })
}

/// Lattice against analytic arrival law for a 1D point detector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub n: usize,
    pub tau: Vec<f64>,
    pub analytic: Vec<f64>,
    pub lattice: Vec<f64>,
    pub lattice_fine: Vec<f64>,
    pub extrapolated: Vec<f64>,
    /// Sup-norm errors relative to the analytic peak.
    pub sup_rel: f64,
    pub sup_rel_fine: f64,
    pub sup_rel_extrapolated: f64,
    pub norm_loss_mismatch: f64,
}

impl BridgeReport {
    /// Best of the plain and extrapolated errors at the finest grid.
    pub fn best_error(&self) -> f64 {
        self.sup_rel_fine.min(self.sup_rel_extrapolated)
    }
}

/// Number of comparison times in a [`BridgeReport`].
pub const BRIDGE_POINTS: usize = 400;

/// Runs the 1D lattice at `n` and `2n` cells, the fine run with a quarter
/// of the step so both keep `dt / dx^2`, samples `p` at common times and
/// compares both, and their Richardson combination, with the analytic law.
pub fn bridge(cfg: &RunConfig) -> Result<BridgeReport> {
    let l = cfg.lattice()?;
    if l.dims != 1 || l.detector.kind != DetectorKind::Point {
        return Err(Error::Config("the lattice bridge needs a 1D lattice with a point detector".into()));
    }
    let packet = cfg.packet()?;
    let c = l.detector.center;
    let counter = crate::arrival::DeltaCounter::new(c[0], l.detector.lambda0)?;
    let dt = l.dt()?;
    let run_at = |n: usize, dt: f64| -> Result<DetectionRun> {
        let g = Grid::new(1, n, l.length)?;
        let s = LatticeState::gaussian(g, dt, &packet, 0.0)?;
        let profile = crate::lattice::DetectorProfile::point(l.detector.lambda0, c, g.dx());
        run_detection(&s, &profile, l.t_end, usize::MAX)
    };
    let coarse = run_at(l.n, dt)?;
    let fine = run_at(2 * l.n, 0.25 * dt)?;
    let steps = coarse.distribution.tau.len() - 1;
    let stride = (steps / BRIDGE_POINTS).max(1);
    let idx: Vec<usize> = (0..=steps).step_by(stride).collect();
    let tau: Vec<f64> = idx.iter().map(|&k| coarse.distribution.tau[k]).collect();
    let lattice: Vec<f64> = idx.iter().map(|&k| coarse.distribution.p[k]).collect();
    let lattice_fine: Vec<f64> = idx
        .iter()
        .map(|&k| fine.distribution.p.get(4 * k).copied())
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidArgument("fine lattice run is shorter than the coarse one".into()))?;
    let extrapolated = richardson(&lattice, &lattice_fine);
    let sys = CounterSystem::new(packet, crate::arrival::CounterArray::single(counter));
    let grids = cfg.time_grids();
    let spectrum = sample_spectrum(&sys, grids.y_max, grids.n_y)?;
    let analytic = invert_to_time(&spectrum, &tau)?.p;
    let peak = analytic.iter().copied().fold(0.0, f64::max);
    let err = |v: &[f64]| {
        v.iter().zip(&analytic).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak.max(f64::MIN_POSITIVE)
    };
    Ok(BridgeReport {
        n: l.n,
        sup_rel: err(&lattice),
        sup_rel_fine: err(&lattice_fine),
        sup_rel_extrapolated: err(&extrapolated),
        norm_loss_mismatch: coarse.norm_loss_mismatch.max(fine.norm_loss_mismatch),
        tau,
        analytic,
        lattice,
        lattice_fine,
        extrapolated,
    })
}
