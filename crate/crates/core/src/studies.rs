//! Efficiency studies over coupling strength and packet velocity.
//!
//! All studies use a single counter at `xi = 0` and a Gaussian packet
//! starting at `xi0`, so `d = xi0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrival::{CounterArray, CounterSystem, DeltaCounter};
use crate::dynamics::DimensionlessPacket;
use crate::error::{invalid, Error, Result};
use crate::inversion::{
    efficiency_quadrature, invert_to_time, sample_spectrum, ArrivalDistribution, EfficiencyQuadrature,
    EFFICIENCY_SLACK,
};

/// Default golden-section tolerance on the maximizer.
pub const ALPHA_TOL: f64 = 1e-4;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    pub v: f64,
    pub alpha: f64,
    pub p_inf: f64,
}

/// `P(inf)` for a single counter of strength `alpha` at the origin.
pub fn efficiency(p: &DimensionlessPacket, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let sys = CounterSystem::new(*p, CounterArray::single(DeltaCounter::new(0.0, alpha)?));
    efficiency_quadrature(&sys, EfficiencyQuadrature::default())
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
///
/// Fails with [`Error::BracketFailure`] when an endpoint beats both initial
/// interior probes, i.e. when the maximum is not inside the bracket.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(hi > lo) || !(tol > 0.0) {
        return Err(invalid(format!("invalid bracket [{lo}, {hi}] or tolerance {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa > f1.max(f2) || fb > f1.max(f2) {
        return Err(Error::BracketFailure { lo, hi });
    }
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Bracket that encloses the optimal coupling for packets of speed `|v|`.
pub fn default_bracket(v: f64) -> (f64, f64) {
    let v = v.abs();
    ((0.5 * v).max(0.05), 8.0 * v + 4.0)
}

/// Coupling that maximizes the detection efficiency, and that efficiency.
pub fn optimize_alpha(p: &DimensionlessPacket, bracket: (f64, f64)) -> Result<(f64, f64)> {
    if bracket.0 < 0.0 {
        return Err(invalid("coupling bracket must be nonnegative"));
    }
    golden_section_max(|a| efficiency(p, a), bracket.0, bracket.1, ALPHA_TOL)
}

/// Optimal coupling for each velocity, the packet starting at `xi0`.
pub fn alpha_opt_curve(xi0: f64, v_grid: &[f64]) -> Result<Vec<EfficiencyPoint>> {
    if v_grid.iter().any(|v| !(*v > 0.0)) || v_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("velocity grid must be positive and increasing"));
    }
    v_grid
        .par_iter()
        .map(|&v| {
            let p = DimensionlessPacket::new(xi0, v)?;
            let (alpha, p_inf) = optimize_alpha(&p, default_bracket(v))?;
            Ok(EfficiencyPoint { v, alpha, p_inf })
        })
        .collect()
}

/// Finite-difference slopes `d alpha_opt / dv` between neighbouring points.
pub fn alpha_opt_slopes(curve: &[EfficiencyPoint]) -> Vec<f64> {
    curve.windows(2).map(|w| (w[1].alpha - w[0].alpha) / (w[1].v - w[0].v)).collect()
}

/// `P(inf)` on a velocity x coupling grid; rows follow `v_grid`.
pub fn efficiency_surface(xi0: f64, v_grid: &[f64], alpha_grid: &[f64]) -> Result<Vec<Vec<EfficiencyPoint>>> {
    if alpha_grid.iter().any(|a| *a < 0.0) {
        return Err(invalid("coupling grid must be nonnegative"));
    }
    let cells: Vec<(usize, usize)> =
        (0..v_grid.len()).flat_map(|i| (0..alpha_grid.len()).map(move |j| (i, j))).collect();
    let values: Vec<EfficiencyPoint> = cells
        .par_iter()
        .map(|&(i, j)| {
            let p = DimensionlessPacket::new(xi0, v_grid[i])?;
            let p_inf = efficiency(&p, alpha_grid[j])?;
            if p_inf > 1.0 + EFFICIENCY_SLACK {
                return Err(Error::EfficiencyExceedsUnity(p_inf));
            }
            Ok(EfficiencyPoint { v: v_grid[i], alpha: alpha_grid[j], p_inf })
        })
        .collect::<Result<_>>()?;
    Ok(values.chunks(alpha_grid.len().max(1)).map(|c| c.to_vec()).collect())
}

/// CSV with `v` rows and `alpha` columns; the first line names the grids.
pub fn surface_csv(surface: &[Vec<EfficiencyPoint>]) -> String {
    let mut out = String::from("v\\alpha");
    if let Some(row) = surface.first() {
        for pt in row {
            out.push_str(&format!(",{}", pt.alpha));
        }
    }
    out.push('\n');
    for row in surface {
        if let Some(first) = row.first() {
            out.push_str(&format!("{}", first.v));
        }
        for pt in row {
            out.push_str(&format!(",{:.12}", pt.p_inf));
        }
        out.push('\n');
    }
    out
}

/// Spectral and time grids for time-domain studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrids {
    pub y_max: f64,
    pub n_y: usize,
    pub tau_max: f64,
    pub n_tau: usize,
}

impl Default for TimeGrids {
    fn default() -> Self {
        Self { y_max: 400.0, n_y: 1 << 14, tau_max: 4.0, n_tau: 2048 }
    }
}

/// Time-domain law of a counter array, with the spectral tail diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterLaw {
    pub distribution: ArrivalDistribution,
    pub tail_warning: Option<String>,
}

pub fn counter_law(p: &DimensionlessPacket, array: &CounterArray, grids: &TimeGrids) -> Result<CounterLaw> {
    let sys = CounterSystem::new(*p, array.clone());
    let s = sample_spectrum(&sys, grids.y_max, grids.n_y)?;
    let distribution = invert_to_time(&s, &crate::inversion::uniform_tau_grid(grids.tau_max, grids.n_tau)?)?;
    Ok(CounterLaw { distribution, tail_warning: s.tail_warning() })
}

/// Time-domain law for a single counter at the origin.
pub fn single_counter_law(p: &DimensionlessPacket, alpha: f64, grids: &TimeGrids) -> Result<ArrivalDistribution> {
    let array = CounterArray::single(DeltaCounter::new(0.0, alpha)?);
    Ok(counter_law(p, &array, grids)?.distribution)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub alphas: Vec<f64>,
    pub p_inf: Vec<f64>,
    pub means: Vec<f64>,
    /// `(i, j, L1 distance)` between the unit-mass densities of `alphas[i]`
    /// and `alphas[j]`.
    pub pairwise_l1: Vec<(usize, usize, f64)>,
    pub max_l1: f64,
    pub means_decreasing: bool,
}

/// Compares the rescaled arrival densities for several couplings.
pub fn shape_invariance(p: &DimensionlessPacket, alphas: &[f64], grids: &TimeGrids) -> Result<ShapeReport> {
    let laws: Vec<ArrivalDistribution> = alphas
        .par_iter()
        .map(|&a| {
            let law = single_counter_law(p, a, grids)?;
            if law.p_inf <= 1e-6 {
                return Err(Error::DegenerateNormalization(law.p_inf));
            }
            Ok(law)
        })
        .collect::<Result<_>>()?;
    let unit: Vec<ArrivalDistribution> = laws.iter().map(|l| l.rescaled()).collect::<Result<_>>()?;
    let means: Vec<f64> = unit.iter().map(|l| l.mean().unwrap_or(f64::NAN)).collect();
    let mut pairwise_l1 = Vec::new();
    for i in 0..unit.len() {
        for j in i + 1..unit.len() {
            let diff: Vec<f64> = unit[i].p.iter().zip(&unit[j].p).map(|(a, b)| (a - b).abs()).collect();
            let l1 = ArrivalDistribution::from_density(unit[i].tau.clone(), diff, 0.0)?.grid_mass();
            pairwise_l1.push((i, j, l1));
        }
    }
    let max_l1 = pairwise_l1.iter().map(|x| x.2).fold(0.0, f64::max);
    Ok(ShapeReport {
        alphas: alphas.to_vec(),
        p_inf: laws.iter().map(|l| l.p_inf).collect(),
        means_decreasing: means.windows(2).all(|w| w[1] < w[0]),
        means,
        pairwise_l1,
        max_l1,
    })
}
