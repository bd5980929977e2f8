//! Run configurations: flat TOML documents with dotted sections such as
//! `packet.v`, `counter.alpha` or `grid.ymax`. One document fully specifies a
//! run of any command; each command reads the sections it needs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arrival::{Composition, CounterArray, DeltaCounter};
use crate::dynamics::DimensionlessPacket;
use crate::error::{Error, Result};
use crate::events::Sampler;
use crate::lattice::{DetectorProfile, Grid, LatticeState};
use crate::studies::TimeGrids;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub packet: PacketConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counter: Option<CounterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counters: Option<ArrayConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub xi0: f64,
    pub v: f64,
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self { xi0: -4.0, v: 4.0 }
    }
}

/// A single point counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterConfig {
    #[serde(default)]
    pub xi: f64,
    pub alpha: f64,
}

/// Several point counters; `xi` and `alpha` are parallel lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub xi: Vec<f64>,
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub mode: Composition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub ymax: f64,
    pub ny: usize,
    pub tau_max: f64,
    pub n_tau: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = TimeGrids::default();
        Self { ymax: g.y_max, ny: g.n_y, tau_max: g.tau_max, n_tau: g.n_tau }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Optimal coupling as a function of velocity.
    #[default]
    AlphaOpt,
    /// `P(inf)` over a velocity by coupling grid.
    Surface,
    /// `P(inf)` against coupling for the packet at rest over the counter.
    StaticAlpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub mode: SweepMode,
    #[serde(default)]
    pub v: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub sampler: Sampler,
}

fn default_level() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Gaussian,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    /// Peak rate for Gaussian detectors, integrated strength `alpha` for
    /// point detectors.
    pub lambda0: f64,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Point detector width; defaults to one grid spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub dims: usize,
    pub n: usize,
    pub length: f64,
    pub t_end: f64,
    /// Defaults to `0.25 dx^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Steps between recorded snapshots; 0 keeps only the initial and
    /// final states.
    #[serde(default)]
    pub record_stride: usize,
    /// Transverse centre of the packet in 2D.
    #[serde(default)]
    pub y0: f64,
    /// Parameters were fitted to a target rather than taken from a source.
    #[serde(default)]
    pub calibrated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_target: Option<f64>,
    pub detector: DetectorConfig,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical TOML form, used as the config echo in output files.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.packet.xi0.is_finite() && self.packet.v.is_finite()) {
            return Err(bad("packet.xi0 and packet.v must be finite"));
        }
        if self.counter.is_some() && self.counters.is_some() {
            return Err(bad("give either [counter] or [counters], not both"));
        }
        if let Some(c) = &self.counter {
            counter_check(c.xi, c.alpha)?;
        }
        if let Some(a) = &self.counters {
            if a.xi.is_empty() || a.xi.len() != a.alpha.len() {
                return Err(bad("counters.xi and counters.alpha must be non-empty lists of equal length"));
            }
            for (x, al) in a.xi.iter().zip(&a.alpha) {
                counter_check(*x, *al)?;
            }
        }
        let g = &self.grid;
        check_positive("grid.ymax", g.ymax)?;
        check_positive("grid.tau_max", g.tau_max)?;
        if g.ny < 2 || !g.ny.is_multiple_of(2) || g.n_tau < 2 {
            return Err(bad("grid.ny must be even and >= 2, grid.n_tau >= 2"));
        }
        if let Some(s) = &self.sweep {
            if s.v.iter().chain(&s.alpha).any(|x| !x.is_finite() || *x < 0.0) {
                return Err(bad("sweep grids must be finite and non-negative"));
            }
        }
        if let Some(m) = &self.mc {
            if !(m.level > 0.0 && m.level < 1.0) {
                return Err(bad(format!("mc.level must lie in (0, 1), got {}", m.level)));
            }
        }
        if let Some(l) = &self.lattice {
            l.grid()?;
            check_positive("lattice.t_end", l.t_end)?;
            if let Some(dt) = l.dt {
                check_positive("lattice.dt", dt)?;
            }
            if !(l.detector.lambda0 >= 0.0 && l.detector.lambda0.is_finite()) {
                return Err(bad("lattice.detector.lambda0 must be >= 0"));
            }
            if l.detector.kind == DetectorKind::Gaussian && l.detector.sigma.is_none() {
                return Err(bad("Gaussian lattice detector needs lattice.detector.sigma"));
            }
        }
        Ok(())
    }

    pub fn packet(&self) -> Result<DimensionlessPacket> {
        DimensionlessPacket::new(self.packet.xi0, self.packet.v)
    }

    pub fn time_grids(&self) -> TimeGrids {
        TimeGrids { y_max: self.grid.ymax, n_y: self.grid.ny, tau_max: self.grid.tau_max, n_tau: self.grid.n_tau }
    }

    /// The counter array of an arrival run.
    pub fn counter_array(&self) -> Result<CounterArray> {
        if let Some(c) = &self.counter {
            return Ok(CounterArray::single(DeltaCounter::new(c.xi, c.alpha)?));
        }
        if let Some(a) = &self.counters {
            let counters =
                a.xi.iter().zip(&a.alpha).map(|(x, al)| DeltaCounter::new(*x, *al)).collect::<Result<Vec<_>>>()?;
            return CounterArray::new(counters, a.mode);
        }
        Err(bad("arrival runs need a [counter] or [counters] section"))
    }

    pub fn lattice(&self) -> Result<&LatticeConfig> {
        self.lattice.as_ref().ok_or_else(|| bad("shadow runs need a [lattice] section"))
    }
}

fn counter_check(xi: f64, alpha: f64) -> Result<()> {
    if !xi.is_finite() || !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(bad(format!("counter needs finite xi and alpha >= 0, got xi = {xi}, alpha = {alpha}")));
    }
    Ok(())
}

impl LatticeConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dims, self.n, self.length).map_err(|e| bad(e.to_string()))
    }

    pub fn dt(&self) -> Result<f64> {
        Ok(self.dt.unwrap_or_else(|| self.grid().map(|g| LatticeState::default_dt(&g)).unwrap_or(0.0)))
    }

    pub fn profile(&self) -> Result<DetectorProfile> {
        let d = &self.detector;
        Ok(match d.kind {
            DetectorKind::Gaussian => {
                DetectorProfile::gaussian(d.lambda0, d.center, d.sigma.ok_or_else(|| bad("missing sigma"))?)
            }
            DetectorKind::Point => DetectorProfile::point(d.lambda0, d.center, d.width.unwrap_or(self.grid()?.dx())),
        })
    }

    pub fn initial_state(&self, packet: &DimensionlessPacket) -> Result<LatticeState> {
        LatticeState::gaussian(self.grid()?, self.dt()?, packet, self.y0)
    }
}

/// Configurations shipped with the crate, by file name.
pub const SHIPPED: &[(&str, &str)] = &[
    ("fig2_alpha0.01.toml", include_str!("../configs/fig2_alpha0.01.toml")),
    ("fig2_alpha1.toml", include_str!("../configs/fig2_alpha1.toml")),
    ("fig2_alpha100.toml", include_str!("../configs/fig2_alpha100.toml")),
    ("composite.toml", include_str!("../configs/composite.toml")),
    ("mc_fig2.toml", include_str!("../configs/mc_fig2.toml")),
    ("sweep_alpha_opt.toml", include_str!("../configs/sweep_alpha_opt.toml")),
    ("sweep_static_alpha.toml", include_str!("../configs/sweep_static_alpha.toml")),
    ("sweep_surface.toml", include_str!("../configs/sweep_surface.toml")),
    ("shadow_fig1.toml", include_str!("../configs/shadow_fig1.toml")),
    ("shadow_zero.toml", include_str!("../configs/shadow_zero.toml")),
    ("bridge_1d.toml", include_str!("../configs/bridge_1d.toml")),
];

pub fn shipped(name: &str) -> Result<RunConfig> {
    let text = SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| bad(format!("no shipped config named {name}")))?;
    RunConfig::from_toml(text)
}
