//! Laplace-domain arrival amplitudes for point counters.
//!
//! A counter array with incoherent coupling `Lambda = sum_i |a_i><a_i|`,
//! `|a_i> = sqrt(alpha_i) delta(x - a_i)`, turns the resolvent equation into
//! the linear system
//!
//! ```text
//! (2 I + G) phi~ = 2 b,   G_ij = <a_i|K~0(z)|a_j>,   b_i = <a_i|K~0(z) psi0>
//! ```
//!
//! for the transformed arrival amplitudes `phi~_i(z)`. Every quantity is
//! multiplied through by [`Dynamics::laplace_scale`] so that the Schrödinger
//! `(iz)^{-1/2}` singularity at `z = 0` never appears explicitly.
//!
//! Coherent coupling uses the rank-one `|s> = sum_i |a_i>` and yields a single
//! channel. Configurations beyond two counters and coherent sums of several
//! sites are a straightforward extension of the same resolvent equation
//! rather than cases worked out explicitly in the literature, and should be
//! read as such.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DimensionlessPacket, Dynamics, LineState};
use crate::error::{invalid, Error, Result};
use crate::specfun::LaplacePoint;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Threshold on the scaled determinant below which the system is treated
/// as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-14;

/// Point detector at `xi_a` with strength `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaCounter {
    pub xi_a: f64,
    pub alpha: f64,
}

impl DeltaCounter {
    pub fn new(xi_a: f64, alpha: f64) -> Result<Self> {
        if !xi_a.is_finite() {
            return Err(invalid("counter position must be finite"));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("counter strength must be >= 0, got {alpha}")));
        }
        Ok(Self { xi_a, alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// `Lambda = (sum_i g_i)^* (sum_i g_i)`, one event channel.
    Coherent,
    /// `Lambda = sum_i g_i^* g_i`, one channel per counter.
    #[default]
    Incoherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterArray {
    pub counters: Vec<DeltaCounter>,
    pub mode: Composition,
}

impl CounterArray {
    pub fn new(counters: Vec<DeltaCounter>, mode: Composition) -> Result<Self> {
        if counters.is_empty() {
            return Err(invalid("counter array must not be empty"));
        }
        Ok(Self { counters, mode })
    }

    pub fn single(counter: DeltaCounter) -> Self {
        Self { counters: vec![counter], mode: Composition::Incoherent }
    }

    /// Number of event channels in the density `p = sum_i |phi_i|^2`.
    pub fn channels(&self) -> usize {
        match self.mode {
            Composition::Coherent => 1,
            Composition::Incoherent => self.counters.len(),
        }
    }
}

/// Free evolution sampled at counter sites in the Laplace domain.
pub trait LaplaceSource: Send + Sync {
    fn dynamics(&self) -> Dynamics;

    /// `laplace_scale(z) * <x_a|K~0(z) psi0>`.
    fn scaled_source(&self, x_a: f64, z: LaplacePoint) -> Result<Complex64>;
}

impl LaplaceSource for DimensionlessPacket {
    fn dynamics(&self) -> Dynamics {
        Dynamics::FreeSchrodinger
    }

    fn scaled_source(&self, xi_a: f64, z: LaplacePoint) -> Result<Complex64> {
        self.laplace_at_scaled(xi_a, z)
    }
}

/// A line state transported at speed `c`, in physical units.
#[derive(Clone)]
pub struct TransportedState {
    pub state: Arc<dyn LineState>,
    pub c: f64,
}

impl TransportedState {
    pub fn new(state: Arc<dyn LineState>, c: f64) -> Result<Self> {
        Dynamics::ultra_relativistic(c)?;
        Ok(Self { state, c })
    }
}

impl LaplaceSource for TransportedState {
    fn dynamics(&self) -> Dynamics {
        Dynamics::UltraRelativistic { c: self.c }
    }

    fn scaled_source(&self, a: f64, z: LaplacePoint) -> Result<Complex64> {
        self.state.laplace_of_shift(a, self.c, z)
    }
}

/// Scaled Gram matrix `laplace_scale(z) * <a_i|K~0(z)|a_j>`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramLaplace {
    pub n: usize,
    pub entries: Vec<Complex64>,
}

impl GramLaplace {
    pub fn build(dynamics: &Dynamics, counters: &[DeltaCounter], z: LaplacePoint) -> Self {
        let n = counters.len();
        let mut entries = Vec::with_capacity(n * n);
        for ci in counters {
            for cj in counters {
                let k = dynamics.free_laplace_kernel_scaled(ci.xi_a, cj.xi_a, z);
                entries.push((ci.alpha * cj.alpha).sqrt() * k);
            }
        }
        Self { n, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }
}

/// Anything that yields per-channel transformed amplitudes `phi~_i(z)`.
pub trait AmplitudeProvider: Send + Sync {
    fn channels(&self) -> usize;
    fn amplitudes(&self, z: LaplacePoint) -> Result<Vec<Complex64>>;
}

/// Point counters watching a free evolution.
#[derive(Clone)]
pub struct CounterSystem<S> {
    pub source: S,
    pub array: CounterArray,
}

impl<S: LaplaceSource> CounterSystem<S> {
    pub fn new(source: S, array: CounterArray) -> Self {
        Self { source, array }
    }

    fn scaled_sources(&self, z: LaplacePoint) -> Result<Vec<Complex64>> {
        self.array
            .counters
            .iter()
            .map(|c| {
                if c.alpha == 0.0 {
                    Ok(ZERO)
                } else {
                    Ok(c.alpha.sqrt() * self.source.scaled_source(c.xi_a, z)?)
                }
            })
            .collect()
    }

    /// Solves the resolvent system at `z`.
    pub fn solve(&self, z: LaplacePoint) -> Result<Vec<Complex64>> {
        let dynamics = self.source.dynamics();
        let s = dynamics.laplace_scale(z);
        let gram = GramLaplace::build(&dynamics, &self.array.counters, z);
        let b = self.scaled_sources(z)?;
        match self.array.mode {
            Composition::Coherent => {
                let g: Complex64 = gram.entries.iter().sum();
                let src: Complex64 = b.iter().sum();
                Ok(vec![rank_one(s, g, src)?])
            }
            Composition::Incoherent => match gram.n {
                1 => Ok(vec![rank_one(s, gram.get(0, 0), b[0])?]),
                2 => solve_pair(s, &gram, &b),
                _ => solve_general(s, &gram, &b),
            },
        }
    }

    /// Residual `max_i |((2s I + G') phi~ - 2 b')_i|` of a returned solution.
    pub fn residual(&self, z: LaplacePoint, phi: &[Complex64]) -> Result<f64> {
        let dynamics = self.source.dynamics();
        let s = dynamics.laplace_scale(z);
        let gram = GramLaplace::build(&dynamics, &self.array.counters, z);
        let b = self.scaled_sources(z)?;
        let mut worst: f64 = 0.0;
        for i in 0..gram.n {
            let mut acc = 2.0 * s * phi[i] - 2.0 * b[i];
            for (j, p) in phi.iter().enumerate().take(gram.n) {
                acc += gram.get(i, j) * p;
            }
            worst = worst.max(acc.norm());
        }
        Ok(worst)
    }
}

impl<S: LaplaceSource> AmplitudeProvider for CounterSystem<S> {
    fn channels(&self) -> usize {
        self.array.channels()
    }

    fn amplitudes(&self, z: LaplacePoint) -> Result<Vec<Complex64>> {
        self.solve(z)
    }
}

fn rank_one(s: Complex64, g: Complex64, src: Complex64) -> Result<Complex64> {
    if src == ZERO {
        return Ok(ZERO);
    }
    let den = 2.0 * s + g;
    if den.norm() < SINGULAR_THRESHOLD {
        return Err(Error::SingularSystem(den.norm()));
    }
    Ok(2.0 * src / den)
}

/// Closed form for two counters; in unscaled form
/// `phi~_1 = (2/D)((2 + (22)) b_1 - (12) b_2)` with
/// `D = 4 + 2((11) + (22)) + (11)(22) - (12)(21)`.
fn solve_pair(s: Complex64, g: &GramLaplace, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let (g11, g12, g21, g22) = (g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1));
    let det = 4.0 * s * s + 2.0 * s * (g11 + g22) + g11 * g22 - g12 * g21;
    if det.norm() < SINGULAR_THRESHOLD {
        if b.iter().all(|x| *x == ZERO) {
            return Ok(vec![ZERO; 2]);
        }
        return Err(Error::SingularSystem(det.norm()));
    }
    let phi1 = 2.0 * ((2.0 * s + g22) * b[0] - g12 * b[1]) / det;
    let phi2 = 2.0 * ((2.0 * s + g11) * b[1] - g21 * b[0]) / det;
    Ok(vec![phi1, phi2])
}

/// Gaussian elimination with partial pivoting.
fn solve_general(s: Complex64, g: &GramLaplace, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = g.n;
    let mut m: Vec<Complex64> = g.entries.clone();
    for i in 0..n {
        m[i * n + i] += 2.0 * s;
    }
    let mut rhs: Vec<Complex64> = b.iter().map(|x| 2.0 * x).collect();
    if rhs.iter().all(|x| *x == ZERO) {
        return Ok(vec![ZERO; n]);
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a * n + col].norm().total_cmp(&m[b * n + col].norm()))
            .unwrap_or(col);
        let pv = m[pivot * n + col].norm();
        if pv < SINGULAR_THRESHOLD {
            return Err(Error::SingularSystem(pv));
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            if f == ZERO {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= f * v;
            }
            let r = rhs[col];
            rhs[row] -= f * r;
        }
    }
    let mut x = vec![ZERO; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    Ok(x)
}

/// `phi~(z)` for one Schrödinger delta counter,
/// `sqrt(alpha) (2 pi)^{1/4} e^{-d^2 - 2ivd} [w(u+) + w(u-)] / (2 sqrt(iz) + alpha)`.
pub fn single_counter_amplitude(p: &DimensionlessPacket, c: &DeltaCounter, z: LaplacePoint) -> Result<Complex64> {
    if c.alpha == 0.0 {
        return Ok(ZERO);
    }
    let src = c.alpha.sqrt() * p.laplace_at_scaled(c.xi_a, z)?;
    rank_one(z.sqrt_iz(), Complex64::new(c.alpha, 0.0), src)
}

/// Transformed amplitudes of a two-counter array; `(phi~_1, phi~_2)`.
pub fn composite_amplitudes(
    p: &DimensionlessPacket,
    arr: &CounterArray,
    z: LaplacePoint,
) -> Result<(Complex64, Complex64)> {
    if arr.counters.len() != 2 || arr.mode != Composition::Incoherent {
        return Err(invalid("composite_amplitudes needs exactly two incoherent counters"));
    }
    let v = CounterSystem::new(*p, arr.clone()).solve(z)?;
    Ok((v[0], v[1]))
}

/// Exact arrival law of an ultra-relativistic particle at a counter of
/// strength `kappa` placed at `a`:
/// `phi(t) = sqrt(kappa) / (1 + kappa / 2c) psi0(a - c t)`.
#[derive(Clone)]
pub struct UltraArrival {
    pub state: Arc<dyn LineState>,
    pub c: f64,
    pub kappa: f64,
    pub a: f64,
}

impl UltraArrival {
    pub fn amplitude_factor(&self) -> f64 {
        self.kappa.sqrt() / (1.0 + self.kappa / (2.0 * self.c))
    }

    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let f = self.amplitude_factor();
        f * f * self.state.amplitude(self.a - self.c * t).norm_sqr()
    }

    /// `(kappa/c) / (1 + kappa/2c)^2 * int_{-inf}^{a} |psi0|^2`.
    pub fn p_inf(&self) -> f64 {
        ultra_efficiency(self.kappa, self.c) * self.state.mass_below(self.a)
    }

    /// Transformed amplitude, for checking numerical inversion.
    pub fn laplace_amplitude(&self, z: LaplacePoint) -> Result<Complex64> {
        Ok(self.amplitude_factor() * self.state.laplace_of_shift(self.a, self.c, z)?)
    }
}

impl AmplitudeProvider for UltraArrival {
    fn channels(&self) -> usize {
        1
    }

    fn amplitudes(&self, z: LaplacePoint) -> Result<Vec<Complex64>> {
        Ok(vec![self.laplace_amplitude(z)?])
    }
}

/// Coupling-dependent factor `(kappa/c) / (1 + kappa/2c)^2` of the
/// ultra-relativistic efficiency; its maximum 1/2 sits at `kappa = 2c`.
pub fn ultra_efficiency(kappa: f64, c: f64) -> f64 {
    let r = kappa / c;
    r / (1.0 + 0.5 * r).powi(2)
}

/// Builds the exact ultra-relativistic law. Several counters stacked at the
/// same site `a` act as one counter of strength `sum kappa_i`.
pub fn ultra_arrival(state: Arc<dyn LineState>, c: f64, kappa: f64, a: f64) -> Result<UltraArrival> {
    Dynamics::ultra_relativistic(c)?;
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(invalid(format!("kappa must be >= 0, got {kappa}")));
    }
    Ok(UltraArrival { state, c, kappa, a })
}
