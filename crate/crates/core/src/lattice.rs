//! Split-step simulation of the monitored evolution `exp(-i H0 t - Lambda t / 2)`
//! on periodic 1D and 2D grids, in the dimensionless units where
//! `i d_tau psi = -(1/4) laplacian psi - (i/2) Lambda psi`.
//!
//! One Strang step is a half kinetic step in Fourier space, the absorptive
//! factor `exp(-Lambda dt / 2)` in position space, and another half kinetic
//! step. The event density is `p = <psi, Lambda psi>` and the norm loss
//! `1 - ||psi||^2` is the probability that the event has happened.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dynamics::DimensionlessPacket;
use crate::error::{invalid, Error, Result};
use crate::inversion::ArrivalDistribution;
use crate::output::write_atomic;

/// Fraction of the domain, per side and axis, watched for escaping mass.
pub const BOUNDARY_BAND: f64 = 1.0 / 16.0;

/// Probability in the boundary band that triggers a domain-escape warning.
pub const ESCAPE_THRESHOLD: f64 = 1e-3;

/// Periodic square grid, `x_k = -length/2 + k dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: usize,
    pub n: usize,
    pub length: f64,
}

impl Grid {
    pub fn new(dims: usize, n: usize, length: f64) -> Result<Self> {
        if dims != 1 && dims != 2 {
            return Err(invalid(format!("lattice supports 1 or 2 dimensions, got {dims}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(invalid(format!("grid size must be even and >= 8, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("grid length must be positive"));
        }
        Ok(Self { dims, n, length })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dims as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|k| -0.5 * self.length + k as f64 * dx).collect()
    }

    /// Angular wavenumbers in FFT order.
    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        (0..n)
            .map(|k| {
                let m = if k < n / 2 { k } else { k - n };
                2.0 * PI * m as f64 / self.length
            })
            .collect()
    }

    /// Position of flat index `idx`; the second component is 0 in 1D.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let dx = self.dx();
        let x0 = -0.5 * self.length;
        if self.dims == 1 {
            (x0 + idx as f64 * dx, 0.0)
        } else {
            let (i, j) = (idx / self.n, idx % self.n);
            (x0 + i as f64 * dx, x0 + j as f64 * dx)
        }
    }

    /// Index of the grid node nearest to `x` along one axis.
    pub fn nearest(&self, x: f64) -> usize {
        (((x + 0.5 * self.length) / self.dx()).round().max(0.0) as usize).min(self.n - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileShape {
    /// `exp(-|r - c|^2 / 2 sigma^2)`, peak value 1.
    Gaussian { center: [f64; 2], sigma: f64 },
    /// Cells within `width / 2` of `center` along every axis, scaled by
    /// `1 / width^dims` so the profile integrates to 1.
    PointApprox { center: [f64; 2], width: f64 },
    /// Values on the grid in flat (row-major) order.
    Tabulated { values: Vec<f64> },
}

/// `Lambda(r) = lambda0 * shape(r)`. For [`ProfileShape::PointApprox`],
/// `lambda0` is the integrated strength, i.e. the counter's `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorProfile {
    pub lambda0: f64,
    pub shape: ProfileShape,
}

impl DetectorProfile {
    pub fn none() -> Self {
        Self { lambda0: 0.0, shape: ProfileShape::Tabulated { values: Vec::new() } }
    }

    pub fn gaussian(lambda0: f64, center: [f64; 2], sigma: f64) -> Self {
        Self { lambda0, shape: ProfileShape::Gaussian { center, sigma } }
    }

    pub fn point(alpha: f64, center: [f64; 2], width: f64) -> Self {
        Self { lambda0: alpha, shape: ProfileShape::PointApprox { center, width } }
    }

    /// `Lambda` sampled on the grid.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(invalid(format!("detector strength must be >= 0, got {}", self.lambda0)));
        }
        let len = grid.len();
        if self.lambda0 == 0.0 {
            return Ok(vec![0.0; len]);
        }
        let values: Vec<f64> = match &self.shape {
            ProfileShape::Gaussian { center, sigma } => {
                if !(*sigma > 0.0) {
                    return Err(invalid("Gaussian detector width must be positive"));
                }
                (0..len)
                    .map(|k| {
                        let (x, y) = grid.point(k);
                        let r2 = (x - center[0]).powi(2) + if grid.dims == 2 { (y - center[1]).powi(2) } else { 0.0 };
                        self.lambda0 * (-r2 / (2.0 * sigma * sigma)).exp()
                    })
                    .collect()
            }
            ProfileShape::PointApprox { center, width } => {
                if !(*width > 0.0) {
                    return Err(invalid("point detector width must be positive"));
                }
                let half = 0.5 * width + 1e-9 * grid.dx();
                let inside = |x: f64, c: f64| (x - c).abs() < half;
                let mut v: Vec<f64> = (0..len)
                    .map(|k| {
                        let (x, y) = grid.point(k);
                        let hit = inside(x, center[0]) && (grid.dims == 1 || inside(y, center[1]));
                        if hit {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let cells: f64 = v.iter().sum();
                if cells == 0.0 {
                    return Err(invalid("point detector covers no grid cell; widen it or move it onto a node"));
                }
                // normalize on the grid so that sum Lambda dV = lambda0 exactly
                let scale = self.lambda0 / (cells * grid.cell_volume());
                v.iter_mut().for_each(|x| *x *= scale);
                v
            }
            ProfileShape::Tabulated { values } => {
                if values.len() != len {
                    return Err(invalid(format!("tabulated profile has {} values, grid has {len}", values.len())));
                }
                if values.iter().any(|v| !(*v >= 0.0)) {
                    return Err(invalid("tabulated profile values must be >= 0"));
                }
                values.iter().map(|v| self.lambda0 * v).collect()
            }
        };
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub grid: Grid,
    pub field: Vec<Complex64>,
    pub dt: f64,
    pub time: f64,
    pub norm_sq: f64,
}

impl LatticeState {
    pub fn from_fn(grid: Grid, dt: f64, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let field: Vec<Complex64> = (0..grid.len()).into_par_iter().map(|k| {
            let (x, y) = grid.point(k);
            f(x, y)
        }).collect();
        let norm_sq = norm_sq(&grid, &field);
        Ok(Self { grid, field, dt, time: 0.0, norm_sq })
    }

    /// Gaussian packet moving along `x`; in 2D it is at rest transversally,
    /// centred at `y0`.
    pub fn gaussian(grid: Grid, dt: f64, packet: &DimensionlessPacket, y0: f64) -> Result<Self> {
        let transverse = (2.0 / PI).powf(0.25);
        Self::from_fn(grid, dt, |x, y| {
            let along = packet.value(x);
            if grid.dims == 1 {
                along
            } else {
                along * transverse * (-(y - y0).powi(2)).exp()
            }
        })
    }

    /// Default step `0.25 dx^2`.
    pub fn default_dt(grid: &Grid) -> f64 {
        0.25 * grid.dx().powi(2)
    }

    pub fn density(&self) -> Vec<f64> {
        self.field.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Probability in the outer band of the periodic box.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.grid.n;
        let band = ((n as f64 * BOUNDARY_BAND).ceil() as usize).max(1);
        let edge = |k: usize| k < band || k >= n - band;
        let dv = self.grid.cell_volume();
        self.field
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                if self.grid.dims == 1 {
                    edge(*k)
                } else {
                    edge(k / n) || edge(k % n)
                }
            })
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            * dv
    }
}

/// Chunk size of the parallel reductions. Partial sums over fixed chunks are
/// added in order, so results do not depend on the thread count.
const REDUCE_CHUNK: usize = 4096;

fn ordered_sum(len: usize, term: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = (0..len.div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|c| (c * REDUCE_CHUNK..((c + 1) * REDUCE_CHUNK).min(len)).map(&term).sum())
        .collect();
    partial.iter().sum()
}

fn norm_sq(grid: &Grid, field: &[Complex64]) -> f64 {
    ordered_sum(field.len(), |k| field[k].norm_sqr()) * grid.cell_volume()
}

/// Precomputed split-step propagator for one grid, step and detector.
pub struct Propagator {
    grid: Grid,
    dt: f64,
    half_kinetic: Vec<Complex64>,
    absorb: Vec<f64>,
    lambda: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: Grid, dt: f64, profile: &DetectorProfile) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid("time step must be positive"));
        }
        let lambda = profile.sample(&grid)?;
        let k = grid.wavenumbers();
        // the inverse FFT normalization is folded into the phase
        let norm = 1.0 / grid.len() as f64;
        let phase = |k2: f64| Complex64::from_polar(norm, -0.25 * k2 * 0.5 * dt);
        let half_kinetic = if grid.dims == 1 {
            k.iter().map(|kx| phase(kx * kx)).collect()
        } else {
            let mut v = Vec::with_capacity(grid.len());
            for ka in &k {
                for kb in &k {
                    v.push(phase(ka * ka + kb * kb));
                }
            }
            v
        };
        let absorb = lambda.iter().map(|l| (-0.5 * l * dt).exp()).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            dt,
            half_kinetic,
            absorb,
            lambda,
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
            scratch: vec![Complex64::new(0.0, 0.0); grid.len()],
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    fn rows(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        let rows_per_task = (4096 / n).max(1);
        data.par_chunks_mut(n * rows_per_task).for_each(|chunk| fft.process(chunk));
    }

    fn transpose(n: usize, src: &[Complex64], dst: &mut [Complex64]) {
        dst.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = src[j * n + i];
            }
        });
    }

    /// Half kinetic step. In 2D the data pass through Fourier space in
    /// transposed layout, which the isotropic phase does not notice.
    fn kinetic(&mut self, field: &mut Vec<Complex64>) {
        let n = self.grid.n;
        if self.grid.dims == 1 {
            self.forward.process(field);
            field.iter_mut().zip(&self.half_kinetic).for_each(|(v, p)| *v *= p);
            self.inverse.process(field);
            return;
        }
        let forward = self.forward.clone();
        let inverse = self.inverse.clone();
        self.rows(field, &forward);
        Self::transpose(n, field, &mut self.scratch);
        std::mem::swap(field, &mut self.scratch);
        self.rows(field, &forward);
        field.par_iter_mut().zip(self.half_kinetic.par_iter()).for_each(|(v, p)| *v *= p);
        self.rows(field, &inverse);
        Self::transpose(n, field, &mut self.scratch);
        std::mem::swap(field, &mut self.scratch);
        self.rows(field, &inverse);
    }

    /// One Strang step in place.
    pub fn step(&mut self, state: &mut LatticeState) {
        let mut field = std::mem::take(&mut state.field);
        self.kinetic(&mut field);
        field.par_iter_mut().zip(self.absorb.par_iter()).for_each(|(v, a)| *v *= a);
        self.kinetic(&mut field);
        state.field = field;
        state.time += self.dt;
        state.norm_sq = norm_sq(&self.grid, &state.field);
    }

    /// `p = sum Lambda |psi|^2 dV`.
    pub fn event_rate(&self, state: &LatticeState) -> f64 {
        ordered_sum(state.field.len(), |k| self.lambda[k] * state.field[k].norm_sqr()) * self.grid.cell_volume()
    }
}

/// One Strang step of `state`; builds a propagator each call, so prefer
/// [`Propagator`] for repeated stepping.
pub fn step(state: &LatticeState, profile: &DetectorProfile) -> Result<LatticeState> {
    let mut prop = Propagator::new(state.grid, state.dt, profile)?;
    let mut next = state.clone();
    prop.step(&mut next);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRun {
    /// `p` from `<psi, Lambda psi>`, `p_cum` its running integral and `p_inf`
    /// the final norm loss.
    pub distribution: ArrivalDistribution,
    /// `1 - ||psi||^2` at every step.
    pub norm_loss: Vec<f64>,
    pub snapshots: Vec<LatticeState>,
    /// `max_t |(1 - ||psi_t||^2) - int_0^t p|`.
    pub norm_loss_mismatch: f64,
    /// Largest step-to-step norm increase (roundoff only when `Lambda >= 0`).
    pub max_norm_increase: f64,
    pub max_boundary_mass: f64,
    pub escape_warning: Option<String>,
}

/// Evolves `state0` to `t_end`, recording the event law at every step and a
/// snapshot every `record_stride` steps (plus the initial and final states).
/// `t_end` is rounded to a whole number of steps of `state0.dt`.
pub fn run_detection(
    state0: &LatticeState,
    profile: &DetectorProfile,
    t_end: f64,
    record_stride: usize,
) -> Result<DetectionRun> {
    if !(t_end > 0.0) || record_stride == 0 {
        return Err(invalid("run needs t_end > 0 and record_stride >= 1"));
    }
    let steps = ((t_end / state0.dt).round() as usize).max(1);
    let mut prop = Propagator::new(state0.grid, state0.dt, profile)?;
    let mut state = state0.clone();
    let n0 = state.norm_sq;
    let mut tau = vec![state.time];
    let mut p = vec![prop.event_rate(&state)];
    let mut norm_loss = vec![0.0];
    let mut snapshots = vec![state.clone()];
    let mut max_norm_increase: f64 = 0.0;
    let mut max_boundary_mass = state.boundary_mass();
    for s in 1..=steps {
        let before = state.norm_sq;
        prop.step(&mut state);
        max_norm_increase = max_norm_increase.max(state.norm_sq - before);
        tau.push(state.time);
        p.push(prop.event_rate(&state));
        norm_loss.push(n0 - state.norm_sq);
        if s % record_stride == 0 || s == steps {
            max_boundary_mass = max_boundary_mass.max(state.boundary_mass());
            snapshots.push(state.clone());
        }
    }
    // without a detector the norm loss is pure roundoff and may dip below 0
    let p_inf = norm_loss.last().copied().unwrap_or(0.0).max(0.0);
    let distribution = ArrivalDistribution::from_density(tau, p, p_inf)?;
    let norm_loss_mismatch = distribution
        .p_cum
        .iter()
        .zip(&norm_loss)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let escape_warning = (max_boundary_mass > ESCAPE_THRESHOLD).then(|| {
        format!(
            "{max_boundary_mass:.3e} of the probability reached the boundary band; enlarge the box or shorten the run"
        )
    });
    Ok(DetectionRun {
        distribution,
        norm_loss,
        snapshots,
        norm_loss_mismatch,
        max_norm_increase,
        max_boundary_mass,
        escape_warning,
    })
}

/// `2 fine - coarse`, removing the first-order error of the point-detector
/// approximation when `fine` used half the spacing of `coarse`.
pub fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().zip(fine).map(|(c, f)| 2.0 * f - c).collect()
}

/// Bisection in `lambda0` for a Gaussian detector so that the run's norm
/// loss hits `target`. `make_state` builds the initial state; `P(inf)` must
/// increase with `lambda0` across `bracket`.
pub fn calibrate_lambda0(
    make_state: impl Fn() -> Result<LatticeState>,
    center: [f64; 2],
    sigma: f64,
    t_end: f64,
    target: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<(f64, f64)> {
    let eval = |l: f64| -> Result<f64> {
        let run = run_detection(&make_state()?, &DetectorProfile::gaussian(l, center, sigma), t_end, usize::MAX)?;
        Ok(run.distribution.p_inf)
    };
    let (mut lo, mut hi) = bracket;
    let (flo, fhi) = (eval(lo)?, eval(hi)?);
    if !(flo < target && fhi > target) {
        return Err(Error::BracketFailure { lo, hi });
    }
    let mut best = (lo, flo);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let f = eval(mid)?;
        best = (mid, f);
        if (f - target).abs() <= tol {
            return Ok(best);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(format!("calibration stalled at lambda0 = {} (P = {})", best.0, best.1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    /// `x` along the beam axis (`y` = detector centre row).
    pub axis_x: Vec<f64>,
    pub axis_monitored: Vec<f64>,
    pub axis_free: Vec<f64>,
    /// Column of the free density peak on the axis, where the transverse
    /// profile is taken.
    pub peak_x: f64,
    pub transverse_y: Vec<f64>,
    pub transverse_monitored: Vec<f64>,
    pub transverse_free: Vec<f64>,
    /// `1 - rho_monitored / rho_free` on the axis at `peak_x`.
    pub shadow_depth: f64,
    /// Density behind the detector is below the free value.
    pub shadowed: bool,
    /// The transverse monitored profile has a strict local maximum on the
    /// axis, flanked on both sides by minima.
    pub axial_maximum: bool,
    pub max_abs_difference: f64,
}

/// Compares a monitored final state with the free one. The beam travels
/// along `+x`; `detector_x` and `detector_y` locate the detector centre.
pub fn shadow_profile(
    monitored: &LatticeState,
    free: &LatticeState,
    detector_x: f64,
    detector_y: f64,
) -> Result<ShadowReport> {
    if monitored.grid != free.grid {
        return Err(invalid("shadow comparison needs matching grids"));
    }
    if (monitored.time - free.time).abs() > 1e-9 * monitored.time.abs().max(1.0) {
        return Err(invalid("shadow comparison needs snapshots at the same time"));
    }
    let g = monitored.grid;
    let n = g.n;
    let xs = g.coords();
    let rho_m = monitored.density();
    let rho_f = free.density();
    let max_abs_difference = rho_m.iter().zip(&rho_f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if g.dims == 1 {
        let start = g.nearest(detector_x);
        let ip = (start..n).max_by(|&a, &b| rho_f[a].total_cmp(&rho_f[b])).unwrap_or(start);
        let depth = if rho_f[ip] > 0.0 { 1.0 - rho_m[ip] / rho_f[ip] } else { 0.0 };
        return Ok(ShadowReport {
            axis_x: xs.clone(),
            axis_monitored: rho_m,
            axis_free: rho_f,
            peak_x: xs[ip],
            transverse_y: Vec::new(),
            transverse_monitored: Vec::new(),
            transverse_free: Vec::new(),
            shadow_depth: depth,
            shadowed: depth > 0.0,
            axial_maximum: false,
            max_abs_difference,
        });
    }
    let j0 = g.nearest(detector_y);
    let axis_m: Vec<f64> = (0..n).map(|i| rho_m[i * n + j0]).collect();
    let axis_f: Vec<f64> = (0..n).map(|i| rho_f[i * n + j0]).collect();
    let start = g.nearest(detector_x);
    let ip = (start..n).max_by(|&a, &b| axis_f[a].total_cmp(&axis_f[b])).unwrap_or(start);
    let trans_m: Vec<f64> = rho_m[ip * n..(ip + 1) * n].to_vec();
    let trans_f: Vec<f64> = rho_f[ip * n..(ip + 1) * n].to_vec();
    let depth = if axis_f[ip] > 0.0 { 1.0 - axis_m[ip] / axis_f[ip] } else { 0.0 };
    Ok(ShadowReport {
        axis_x: xs.clone(),
        axis_monitored: axis_m,
        axis_free: axis_f,
        peak_x: xs[ip],
        transverse_y: xs,
        axial_maximum: flanked_maximum(&trans_m, j0),
        transverse_monitored: trans_m,
        transverse_free: trans_f,
        shadow_depth: depth,
        shadowed: depth > 0.0,
        max_abs_difference,
    })
}

/// Rise after a flanking minimum, relative to the central peak, below which
/// the minimum is treated as roundoff ripple.
pub const FLANK_RISE: f64 = 1e-3;

/// `v[j]` exceeds both neighbours, and walking outwards on each side the
/// values fall to a minimum and then rise again by more than
/// `FLANK_RISE * v[j]`.
fn flanked_maximum(v: &[f64], j: usize) -> bool {
    if j == 0 || j + 1 >= v.len() || !(v[j] > v[j - 1] && v[j] > v[j + 1]) {
        return false;
    }
    let flank = |side: &mut dyn Iterator<Item = f64>| {
        let mut prev = v[j];
        let mut min = None;
        for x in side {
            match min {
                None if x < prev => prev = x,
                None => min = Some(prev),
                Some(_) => {}
            }
            if let Some(m) = min {
                if x - m > FLANK_RISE * v[j] {
                    return true;
                }
            }
        }
        false
    };
    flank(&mut v[j + 1..].iter().copied()) && flank(&mut v[..j].iter().rev().copied())
}

const SNAPSHOT_MAGIC: &str = "qarrival-snapshot 1";

/// Text header followed by little-endian `f64` (re, im) pairs in row-major
/// order.
pub fn snapshot_bytes(state: &LatticeState) -> Vec<u8> {
    let mut out = Vec::with_capacity(state.field.len() * 16 + 256);
    let g = state.grid;
    let _ = write!(
        out,
        "{SNAPSHOT_MAGIC}\ndims {}\nn {}\nlength {:e}\ndx {:e}\ndt {:e}\ntime {:e}\nnorm_sq {:e}\nend\n",
        g.dims,
        g.n,
        g.length,
        g.dx(),
        state.dt,
        state.time,
        state.norm_sq
    );
    for v in &state.field {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn write_snapshot(path: &Path, state: &LatticeState) -> Result<()> {
    write_atomic(path, &snapshot_bytes(state))
}

pub fn read_snapshot(mut reader: impl BufRead) -> Result<LatticeState> {
    let bad = |m: &str| Error::InvalidArgument(format!("malformed snapshot: {m}"));
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim_end() != SNAPSHOT_MAGIC {
        return Err(bad("missing header"));
    }
    let (mut dims, mut n, mut length, mut dt, mut time, mut norm) = (0usize, 0usize, 0.0, 0.0, 0.0, 0.0);
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(bad("truncated header"));
        }
        let l = line.trim_end();
        if l == "end" {
            break;
        }
        let (key, val) = l.split_once(' ').ok_or_else(|| bad(l))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(l));
        match key {
            "dims" => dims = val.parse().map_err(|_| bad(l))?,
            "n" => n = val.parse().map_err(|_| bad(l))?,
            "length" => length = num(val)?,
            "dt" => dt = num(val)?,
            "time" => time = num(val)?,
            "norm_sq" => norm = num(val)?,
            _ => {}
        }
    }
    let grid = Grid::new(dims, n, length)?;
    let mut raw = vec![0u8; grid.len() * 16];
    reader.read_exact(&mut raw)?;
    let field = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap_or([0; 8]));
            let im = f64::from_le_bytes(c[8..].try_into().unwrap_or([0; 8]));
            Complex64::new(re, im)
        })
        .collect();
    Ok(LatticeState { grid, field, dt, time, norm_sq: norm })
}

/// CSV rows `x, rho_monitored, rho_free, difference` along the beam axis.
pub fn axial_rows(report: &ShadowReport) -> Vec<Vec<String>> {
    report
        .axis_x
        .iter()
        .zip(&report.axis_monitored)
        .zip(&report.axis_free)
        .map(|((x, m), f)| vec![format!("{x}"), format!("{m:e}"), format!("{f:e}"), format!("{:e}", m - f)])
        .collect()
}
