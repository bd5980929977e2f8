//! From Laplace-boundary amplitudes to time-domain arrival laws.
//!
//! On the imaginary axis `z = 0+ + iy` the transformed amplitude is a Fourier
//! transform, so `phi_i(tau) = (1/2pi) int e^{i tau y} phi~_i(iy) dy`, the
//! density is `p = sum_i |phi_i|^2`, and by Parseval the total efficiency is
//! `P(inf) = (1/2pi) sum_i int |phi~_i(iy)|^2 dy`.
//!
//! Spectra are sampled on the offset grid `y_j = (j - n/2 + 1/2) dy`, which
//! is symmetric and never touches `y = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::arrival::AmplitudeProvider;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{cumulative_cubic, cumulative_trapezoid, uniform_step, GaussLegendre};
use crate::specfun::LaplacePoint;

/// Relative tail mass above which a spectrum is flagged as truncated.
pub const TAIL_WARNING_RATIO: f64 = 1e-4;

/// Slack allowed above 1 before an efficiency is reported as unphysical.
pub const EFFICIENCY_SLACK: f64 = 1e-6;

/// Per-channel samples `phi~_i(0+ + i y_j)` on the offset grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    pub y: Vec<f64>,
    pub dy: f64,
    /// `values[i][j]` is channel `i` at `y[j]`.
    pub values: Vec<Vec<Complex64>>,
    /// Estimated `(1/2pi) int_{|y| > y_max} sum_i |phi~_i|^2 dy` from a
    /// `|y|^{-2}` tail model fitted at the grid ends.
    pub tail_mass: f64,
}

impl SpectralAmplitude {
    pub fn y_max(&self) -> f64 {
        0.5 * self.dy * self.y.len() as f64
    }

    /// Grid-sum part of the Parseval integral, without the tail model.
    pub fn grid_mass(&self) -> f64 {
        let s: f64 = self.values.iter().flat_map(|c| c.iter()).map(|v| v.norm_sqr()).sum();
        s * self.dy / (2.0 * PI)
    }

    /// Message when the tail estimate is large relative to the total.
    pub fn tail_warning(&self) -> Option<String> {
        let total = self.grid_mass() + self.tail_mass;
        (self.tail_mass > TAIL_WARNING_RATIO * total).then(|| {
            format!(
                "spectral tail beyond |y| = {} carries {:.3e} of P(inf) = {:.6}; increase y_max",
                self.y_max(),
                self.tail_mass,
                total
            )
        })
    }
}

/// `y_j = (j - n/2 + 1/2) * 2 y_max / n`.
pub fn offset_grid(y_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(y_max > 0.0 && y_max.is_finite()) {
        return Err(invalid(format!("y_max must be positive, got {y_max}")));
    }
    if n < 16 || !n.is_multiple_of(2) {
        return Err(invalid(format!("spectral grid size must be even and >= 16, got {n}")));
    }
    let dy = 2.0 * y_max / n as f64;
    Ok((0..n).map(|j| (j as f64 - n as f64 / 2.0 + 0.5) * dy).collect())
}

/// Evaluates every channel of `provider` on the offset grid.
pub fn sample_spectrum(provider: &dyn AmplitudeProvider, y_max: f64, n: usize) -> Result<SpectralAmplitude> {
    let y = offset_grid(y_max, n)?;
    let dy = 2.0 * y_max / n as f64;
    let rows: Vec<Vec<Complex64>> = y
        .par_iter()
        .map(|&yj| provider.amplitudes(LaplacePoint::Boundary(yj)))
        .collect::<Result<_>>()?;
    let channels = provider.channels();
    let mut values = vec![Vec::with_capacity(n); channels];
    for row in rows {
        if row.len() != channels {
            return Err(invalid("amplitude provider returned the wrong channel count"));
        }
        for (c, v) in row.into_iter().enumerate() {
            values[c].push(v);
        }
    }
    let (lo, hi) = (y[0].abs(), y[n - 1]);
    let tail_mass = values
        .iter()
        .map(|c| c[0].norm_sqr() * lo + c[n - 1].norm_sqr() * hi)
        .sum::<f64>()
        / (2.0 * PI);
    Ok(SpectralAmplitude { y, dy, values, tail_mass })
}

/// Density, running probability and total efficiency on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalDistribution {
    pub tau: Vec<f64>,
    pub p: Vec<f64>,
    pub p_cum: Vec<f64>,
    pub p_inf: f64,
}

impl ArrivalDistribution {
    /// Builds a law from a density, accumulating `P` with a fourth-order rule
    /// on uniform grids and the trapezoid rule otherwise.
    pub fn from_density(tau: Vec<f64>, p: Vec<f64>, p_inf: f64) -> Result<Self> {
        if tau.len() != p.len() || tau.len() < 2 {
            return Err(invalid("time grid and density must have equal length >= 2"));
        }
        if tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("time grid must be strictly increasing"));
        }
        let p_cum = match uniform_step(&tau) {
            Some(h) => cumulative_cubic(h, &p),
            None => cumulative_trapezoid(&tau, &p),
        };
        let p_cum = monotone(p_cum);
        Ok(Self { tau, p, p_cum, p_inf })
    }

    /// `int p dtau` over the grid.
    pub fn grid_mass(&self) -> f64 {
        *self.p_cum.last().unwrap_or(&0.0)
    }

    /// Mean arrival time conditioned on detection within the grid.
    pub fn mean(&self) -> Option<f64> {
        let mass = self.grid_mass();
        if mass <= 0.0 {
            return None;
        }
        let tp: Vec<f64> = self.tau.iter().zip(&self.p).map(|(t, p)| t * p).collect();
        let first = match uniform_step(&self.tau) {
            Some(h) => cumulative_cubic(h, &tp),
            None => cumulative_trapezoid(&self.tau, &tp),
        };
        Some(first.last().copied().unwrap_or(0.0) / mass)
    }

    /// Same law rescaled to unit mass on the grid.
    pub fn rescaled(&self) -> Result<Self> {
        let mass = self.grid_mass();
        if mass <= 1e-12 {
            return Err(Error::DegenerateNormalization(mass));
        }
        Ok(Self {
            tau: self.tau.clone(),
            p: self.p.iter().map(|v| v / mass).collect(),
            p_cum: self.p_cum.iter().map(|v| v / mass).collect(),
            p_inf: 1.0,
        })
    }
}

/// Removes roundoff-level decreases from a running integral of a
/// nonnegative density.
fn monotone(mut v: Vec<f64>) -> Vec<f64> {
    for k in 1..v.len() {
        if v[k] < v[k - 1] {
            v[k] = v[k - 1];
        }
    }
    v
}

fn check_nyquist(s: &SpectralAmplitude, tau_max_abs: f64) -> Result<()> {
    let product = tau_max_abs * s.dy;
    if product >= PI {
        return Err(Error::Aliasing { product });
    }
    Ok(())
}

/// `phi(tau) = (dy/2pi) sum_j e^{i tau y_j} phi~(y_j)`, with the phasor
/// advanced by multiplication and re-anchored every few hundred terms.
fn fourier_sum(y0: f64, dy: f64, values: &[Complex64], tau: f64) -> Complex64 {
    const BLOCK: usize = 256;
    let step = Complex64::from_polar(1.0, tau * dy);
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, chunk) in values.chunks(BLOCK).enumerate() {
        let mut ph = Complex64::from_polar(1.0, tau * (y0 + (b * BLOCK) as f64 * dy));
        for v in chunk {
            acc += ph * v;
            ph *= step;
        }
    }
    acc * dy / (2.0 * PI)
}

/// Time-domain law by direct oscillatory summation over the spectrum.
/// `P(inf)` is the Parseval value.
pub fn invert_to_time(s: &SpectralAmplitude, tau_grid: &[f64]) -> Result<ArrivalDistribution> {
    let tmax = tau_grid.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    check_nyquist(s, tmax)?;
    let y0 = s.y[0];
    let p: Vec<f64> = tau_grid
        .par_iter()
        .map(|&t| s.values.iter().map(|c| fourier_sum(y0, s.dy, c, t).norm_sqr()).sum())
        .collect();
    ArrivalDistribution::from_density(tau_grid.to_vec(), p, parseval_efficiency(s)?)
}

/// Time-domain law on `tau_k = k dtau`, `k < n_tau`, through one inverse FFT
/// per channel. Requires `2pi / (dtau dy)` to be an integer `M >= n`, which
/// is then the transform length.
pub fn invert_to_time_fft(s: &SpectralAmplitude, dtau: f64, n_tau: usize) -> Result<ArrivalDistribution> {
    if !(dtau > 0.0) || n_tau < 2 {
        return Err(invalid("FFT inversion needs dtau > 0 and at least two times"));
    }
    check_nyquist(s, dtau * (n_tau - 1) as f64)?;
    let ratio = 2.0 * PI / (dtau * s.dy);
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 * ratio || (m as usize) < s.y.len() {
        return Err(invalid(format!(
            "time and frequency grids are not commensurate (2pi/(dtau dy) = {ratio})"
        )));
    }
    let m = m as usize;
    let fft = FftPlanner::new().plan_fft_inverse(m);
    let y0 = s.y[0];
    let mut p = vec![0.0; n_tau];
    for chan in &s.values {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[..chan.len()].copy_from_slice(chan);
        fft.process(&mut buf);
        for (k, pk) in p.iter_mut().enumerate() {
            let tau = k as f64 * dtau;
            let phi = Complex64::from_polar(1.0, tau * y0) * buf[k] * s.dy / (2.0 * PI);
            *pk += phi.norm_sqr();
        }
    }
    let tau = (0..n_tau).map(|k| k as f64 * dtau).collect();
    ArrivalDistribution::from_density(tau, p, parseval_efficiency(s)?)
}

/// Parseval efficiency of a sampled spectrum, tail estimate included.
///
/// The midpoint rule on the offset grid has an `O(dy^{3/2})` error from the
/// `sqrt(|y|)` cusp of the spectrum at the origin. It is negligible for
/// fast packets but not for slow ones; [`efficiency_quadrature`] resolves
/// the cusp exactly and is the better tool when only `P(inf)` is needed.
pub fn parseval_efficiency(s: &SpectralAmplitude) -> Result<f64> {
    let total = s.grid_mass() + s.tail_mass;
    if total > 1.0 + EFFICIENCY_SLACK {
        return Err(Error::EfficiencyExceedsUnity(total));
    }
    Ok(total)
}

/// Options for [`efficiency_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyQuadrature {
    /// Split point between the `y = s^2` core and the `y = Y / r^2` tail.
    pub y_split: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
    pub rel_tol: f64,
}

impl Default for EfficiencyQuadrature {
    fn default() -> Self {
        Self { y_split: 400.0, initial_panels: 32, max_panels: 4096, rel_tol: 1e-11 }
    }
}

/// Parseval integral by adaptive-refinement Gauss–Legendre quadrature.
///
/// Each half-axis is mapped by `y = s^2` on the core, which removes the
/// `sqrt(|y|)` cusp at the origin, and by `y = Y / r^2` on the tail. The panel
/// count doubles until two successive values agree to `rel_tol`.
pub fn efficiency_quadrature(provider: &dyn AmplitudeProvider, opts: EfficiencyQuadrature) -> Result<f64> {
    let rule = GaussLegendre::new(16);
    let big = opts.y_split;
    let root = big.sqrt();
    let power = |y: f64| -> Result<f64> {
        Ok(provider.amplitudes(LaplacePoint::Boundary(y))?.iter().map(|v| v.norm_sqr()).sum())
    };
    let estimate = |panels: usize| -> Result<f64> {
        let parts: Vec<f64> = [1.0f64, -1.0]
            .par_iter()
            .flat_map_iter(|&sign| [(sign, false), (sign, true)])
            .map(|(sign, tail)| -> Result<f64> {
                let mut err = None;
                let v: f64 = if tail {
                    rule.integrate_composite(0.0, 1.0, panels, |r| {
                        let y = big / (r * r);
                        match power(sign * y) {
                            Ok(pw) => pw * 2.0 * big / (r * r * r),
                            Err(e) => {
                                err.get_or_insert(e);
                                0.0
                            }
                        }
                    })
                } else {
                    rule.integrate_composite(0.0, root, panels, |s| match power(sign * s * s) {
                        Ok(pw) => pw * 2.0 * s,
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    })
                };
                match err {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().sum::<f64>() / (2.0 * PI))
    };
    let mut panels = opts.initial_panels.max(1);
    let mut last = estimate(panels)?;
    while panels < opts.max_panels {
        panels *= 2;
        let next = estimate(panels)?;
        if (next - last).abs() <= opts.rel_tol * next.abs().max(1e-300) || next == 0.0 {
            if next > 1.0 + EFFICIENCY_SLACK {
                return Err(Error::EfficiencyExceedsUnity(next));
            }
            return Ok(next);
        }
        last = next;
    }
    Err(Error::NoConvergence(format!(
        "efficiency quadrature did not settle within {} panels (last value {last})",
        opts.max_panels
    )))
}

/// `n` equally spaced times on `[0, t_max]`.
pub fn uniform_tau_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || n < 2 {
        return Err(invalid("time grid needs t_max > 0 and n >= 2"));
    }
    Ok((0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::arrival::{ultra_arrival, CounterArray, CounterSystem, DeltaCounter};
    use crate::dynamics::{DimensionlessPacket, GaussianPacket, LineState};

    struct Silent;

    impl AmplitudeProvider for Silent {
        fn channels(&self) -> usize {
            1
        }
        fn amplitudes(&self, _z: LaplacePoint) -> Result<Vec<Complex64>> {
            Ok(vec![Complex64::new(0.0, 0.0)])
        }
    }

    fn single(xi0: f64, v: f64, alpha: f64) -> CounterSystem<DimensionlessPacket> {
        CounterSystem::new(
            DimensionlessPacket::new(xi0, v).unwrap(),
            CounterArray::single(DeltaCounter::new(0.0, alpha).unwrap()),
        )
    }

    #[test]
    fn offset_grid_is_symmetric_and_skips_zero() {
        let y = offset_grid(2.0, 16).unwrap();
        assert_eq!(y.len(), 16);
        for k in 0..8 {
            assert_eq!(y[k], -y[15 - k]);
        }
        assert!(y.iter().all(|v| *v != 0.0));
        assert!((y[8] - 0.125).abs() < 1e-15);
        assert!(offset_grid(2.0, 15).is_err());
        assert!(offset_grid(2.0, 8).is_err());
        assert!(offset_grid(-1.0, 16).is_err());
    }

    #[test]
    fn silent_provider_gives_zero_law() {
        let s = sample_spectrum(&Silent, 50.0, 64).unwrap();
        assert!(s.values[0].iter().all(|v| v.norm() == 0.0));
        assert_eq!(parseval_efficiency(&s).unwrap(), 0.0);
        let d = invert_to_time(&s, &uniform_tau_grid(1.0, 11).unwrap()).unwrap();
        assert!(d.p.iter().all(|v| *v == 0.0));
        assert_eq!(d.p_inf, 0.0);
        assert_eq!(d.mean(), None);
        assert!(matches!(d.rescaled(), Err(Error::DegenerateNormalization(_))));
    }

    #[test]
    fn nyquist_violation_is_an_error() {
        let s = sample_spectrum(&Silent, 8.0, 16).unwrap();
        // dy = 1, so tau = 4 crosses pi
        assert!(matches!(invert_to_time(&s, &[0.0, 4.0]), Err(Error::Aliasing { .. })));
        assert!(invert_to_time(&s, &[0.0, 3.0]).is_ok());
    }

    #[test]
    fn ultra_relativistic_inversion_matches_closed_form() {
        let state: Arc<dyn LineState> = Arc::new(GaussianPacket::new(-6.0, 1.0, 0.5, 1.0, 1.0).unwrap());
        let law = ultra_arrival(state, 1.0, 2.0, 0.0).unwrap();
        let s = sample_spectrum(&law, 60.0, 4096).unwrap();
        let tau = uniform_tau_grid(12.0, 241).unwrap();
        let d = invert_to_time(&s, &tau).unwrap();
        for (t, p) in tau.iter().zip(&d.p) {
            assert!((p - law.density(*t)).abs() < 1e-6, "t = {t}: {p} vs {}", law.density(*t));
        }
        assert!((d.p_inf - law.p_inf()).abs() < 1e-9);
    }

    #[test]
    fn fig2_mean_arrival_near_one() {
        let sys = single(-4.0, 4.0, 1.0);
        let s = sample_spectrum(&sys, 400.0, 1 << 14).unwrap();
        let d = invert_to_time(&s, &uniform_tau_grid(4.0, 2048).unwrap()).unwrap();
        let mean = d.mean().unwrap();
        assert!((mean - 1.0).abs() < 0.1, "{mean}");
        assert!((d.p_inf - d.grid_mass()).abs() < 1e-6);
        assert!(s.tail_warning().is_none());
        assert!(d.p_cum.windows(2).all(|w| w[1] >= w[0]));
        assert!(d.grid_mass() <= d.p_inf + 1e-9);
    }

    #[test]
    fn doubling_ymax_leaves_efficiency_unchanged() {
        let sys = single(-4.0, 4.0, 1.0);
        let a = parseval_efficiency(&sample_spectrum(&sys, 400.0, 1 << 14).unwrap()).unwrap();
        let b = parseval_efficiency(&sample_spectrum(&sys, 800.0, 1 << 15).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn riemann_sums_converge_under_refinement() {
        let sys = single(-4.0, 4.0, 1.0);
        let vals: Vec<f64> = [1usize << 10, 1 << 11, 1 << 12, 1 << 13]
            .iter()
            .map(|&n| sample_spectrum(&sys, 200.0, n).unwrap().grid_mass())
            .collect();
        let diffs: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(diffs.last().unwrap() < &1e-8, "{diffs:?}");
    }

    #[test]
    fn static_packet_efficiency() {
        // the midpoint rule on the offset grid carries an O(dy^{3/2}) error
        // from the sqrt(|y|) cusp at the origin, which is broad for a packet
        // at rest, hence the finer grid here
        let sys = single(0.0, 0.0, 1.3216);
        let s = sample_spectrum(&sys, 400.0, 1 << 16).unwrap();
        let p = parseval_efficiency(&s).unwrap();
        assert!((p - 0.7254).abs() < 1e-3, "{p}");
        let q = efficiency_quadrature(&sys, EfficiencyQuadrature::default()).unwrap();
        assert!((p - q).abs() < 1e-3, "{p} vs {q}");
        assert!((q - 0.725_448).abs() < 1e-6, "{q}");
    }

    #[test]
    fn quadrature_agrees_with_grid_sum() {
        let sys = single(-4.0, 4.0, 1.0);
        let q = efficiency_quadrature(&sys, EfficiencyQuadrature::default()).unwrap();
        let g = parseval_efficiency(&sample_spectrum(&sys, 400.0, 1 << 14).unwrap()).unwrap();
        assert!((q - g).abs() < 1e-8, "{q} vs {g}");
    }

    #[test]
    fn late_packet_respects_flight_time() {
        let sys = single(-10.0, 4.0, 1.0);
        let s = sample_spectrum(&sys, 400.0, 1 << 14).unwrap();
        let d = invert_to_time(&s, &uniform_tau_grid(4.0, 801).unwrap()).unwrap();
        let early = d.tau.iter().position(|t| *t >= 0.5).unwrap();
        assert!(d.p_cum[early] < 1e-3, "{}", d.p_cum[early]);
    }

    #[test]
    fn density_converges_under_grid_refinement() {
        let sys = single(-4.0, 4.0, 1.0);
        let tau = uniform_tau_grid(4.0, 401).unwrap();
        let a = invert_to_time(&sample_spectrum(&sys, 400.0, 1 << 14).unwrap(), &tau).unwrap();
        let b = invert_to_time(&sample_spectrum(&sys, 800.0, 1 << 16).unwrap(), &tau).unwrap();
        let sup = a.p.iter().zip(&b.p).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-5, "{sup}");
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let sys = single(-4.0, 4.0, 1.0);
        let s = sample_spectrum(&sys, 400.0, 1 << 12).unwrap();
        // M = 2^14 >= n
        let dtau = 2.0 * PI / (s.dy * (1 << 14) as f64);
        let n_tau = 200;
        let f = invert_to_time_fft(&s, dtau, n_tau).unwrap();
        let d = invert_to_time(&s, &f.tau).unwrap();
        for (a, b) in f.p.iter().zip(&d.p) {
            assert!((a - b).abs() < 1e-10 * d.p.iter().fold(0.0f64, |m, v| m.max(*v)));
        }
        assert!(invert_to_time_fft(&s, 0.0123, 10).is_err());
    }

    #[test]
    fn rescaled_law_has_unit_mass() {
        let sys = single(-4.0, 4.0, 3.0);
        let s = sample_spectrum(&sys, 400.0, 1 << 13).unwrap();
        let d = invert_to_time(&s, &uniform_tau_grid(4.0, 512).unwrap()).unwrap();
        let r = d.rescaled().unwrap();
        assert!((r.grid_mass() - 1.0).abs() < 1e-12);
        assert!((r.mean().unwrap() - d.mean().unwrap()).abs() < 1e-13);
    }

    #[test]
    fn nonuniform_grid_uses_trapezoid() {
        let tau = vec![0.0, 0.5, 1.5, 2.0];
        let d = ArrivalDistribution::from_density(tau, vec![1.0; 4], 1.0).unwrap();
        assert_eq!(d.p_cum, vec![0.0, 0.5, 1.5, 2.0]);
        assert!(ArrivalDistribution::from_density(vec![0.0, 0.0], vec![0.0; 2], 0.0).is_err());
    }
}
