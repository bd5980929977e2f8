//! The first event as an inhomogeneous Poisson process.
//!
//! With `P(t)` the probability that the event has happened by `t`, the rate
//! `lambda = p / (1 - P)` satisfies `d/dt (1 - P) = -lambda (1 - P)`, so the
//! first jump of a Poisson process with that rate has exactly the law `P`.
//! Two samplers realize it: inversion of the tabulated `P`, and thinning with
//! a constant dominating rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::inversion::ArrivalDistribution;
use crate::quadrature::{cumulative_cubic, cumulative_trapezoid, uniform_step};

/// `1 - P` below this value makes `lambda` meaningless.
pub const SATURATION_FLOOR: f64 = 1e-12;

/// Samples per RNG stream in batch sampling; fixes the output independently
/// of the number of worker threads.
pub const STREAM_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityTrace {
    pub tau: Vec<f64>,
    pub lambda: Vec<f64>,
    pub survival: Vec<f64>,
}

impl IntensityTrace {
    /// `int_0^tau lambda`, on the same rule used for the cumulative law.
    pub fn integrated(&self) -> Vec<f64> {
        match uniform_step(&self.tau) {
            Some(h) => cumulative_cubic(h, &self.lambda),
            None => cumulative_trapezoid(&self.tau, &self.lambda),
        }
    }

    /// `max |exp(-int lambda) - survival|` over the grid.
    pub fn survival_identity_error(&self) -> f64 {
        self.integrated()
            .iter()
            .zip(&self.survival)
            .map(|(l, s)| ((-l).exp() - s).abs())
            .fold(0.0, f64::max)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    /// Probability that the event happens within the grid.
    pub fn detection_probability(&self) -> f64 {
        1.0 - self.survival.last().copied().unwrap_or(1.0)
    }

    fn lambda_at(&self, t: f64) -> f64 {
        interp(&self.tau, &self.lambda, t)
    }
}

/// `lambda = p / (1 - P)` and `survival = 1 - P` on the law's grid.
pub fn intensity_from_survival(dist: &ArrivalDistribution) -> Result<IntensityTrace> {
    let mut lambda = Vec::with_capacity(dist.tau.len());
    let mut survival = Vec::with_capacity(dist.tau.len());
    for ((t, p), pc) in dist.tau.iter().zip(&dist.p).zip(&dist.p_cum) {
        let s = 1.0 - pc;
        if s < SATURATION_FLOOR {
            return Err(Error::Saturated { tau: *t, value: s });
        }
        lambda.push(p.max(0.0) / s);
        survival.push(s);
    }
    Ok(IntensityTrace { tau: dist.tau.clone(), lambda, survival })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "tau", rename_all = "snake_case")]
pub enum EventOutcome {
    Detected(f64),
    NotDetected,
}

impl EventOutcome {
    pub fn time(&self) -> Option<f64> {
        match *self {
            Self::Detected(t) => Some(t),
            Self::NotDetected => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSample {
    pub outcome: EventOutcome,
    pub seed: u64,
}

/// Inverse-CDF draw from a uniform variate `u` in `(0, 1)`.
pub fn first_event_from_uniform(trace: &IntensityTrace, u: f64) -> EventOutcome {
    let n = trace.tau.len();
    let last = trace.survival[n - 1];
    if u < last {
        return EventOutcome::NotDetected;
    }
    // survival is nonincreasing; find the first node at or below u
    let k = trace.survival.partition_point(|s| *s > u);
    if k == 0 {
        return EventOutcome::Detected(trace.tau[0]);
    }
    let (s0, s1) = (trace.survival[k - 1], trace.survival[k]);
    let (t0, t1) = (trace.tau[k - 1], trace.tau[k]);
    let frac = if s0 > s1 { (s0 - u) / (s0 - s1) } else { 0.0 };
    EventOutcome::Detected(t0 + frac * (t1 - t0))
}

/// Inverse-CDF sampler seeded deterministically.
pub fn sample_first_event(trace: &IntensityTrace, seed: u64) -> EventSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EventSample { outcome: draw_inverse(trace, &mut rng), seed }
}

fn draw_inverse(trace: &IntensityTrace, rng: &mut ChaCha8Rng) -> EventOutcome {
    // open interval (0, 1)
    let u = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    first_event_from_uniform(trace, u)
}

/// Thinning sampler: candidates from a rate-`lambda_max` process are kept
/// with probability `lambda(t) / lambda_max`.
pub fn sample_first_event_thinning(trace: &IntensityTrace, rng: &mut ChaCha8Rng) -> EventOutcome {
    let lmax = trace.lambda_max();
    let t_end = *trace.tau.last().unwrap_or(&0.0);
    if lmax <= 0.0 {
        return EventOutcome::NotDetected;
    }
    let mut t = trace.tau[0];
    loop {
        let e: f64 = rng.random();
        t += -(1.0 - e).ln() / lmax;
        if t > t_end {
            return EventOutcome::NotDetected;
        }
        if rng.random::<f64>() * lmax < trace.lambda_at(t) {
            return EventOutcome::Detected(t);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    InverseCdf,
    Thinning,
}

/// `n` draws split into fixed chunks, chunk `c` using stream `c` of the
/// seeded generator, so results do not depend on the thread count.
pub fn sample_first_events(trace: &IntensityTrace, n: usize, seed: u64, sampler: Sampler) -> Vec<EventOutcome> {
    let chunks = n.div_ceil(STREAM_CHUNK);
    let parts: Vec<Vec<EventOutcome>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = STREAM_CHUNK.min(n - c * STREAM_CHUNK);
            (0..len)
                .map(|_| match sampler {
                    Sampler::InverseCdf => draw_inverse(trace, &mut rng),
                    Sampler::Thinning => sample_first_event_thinning(trace, &mut rng),
                })
                .collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

fn interp(x: &[f64], y: &[f64], t: f64) -> f64 {
    let k = x.partition_point(|v| *v <= t);
    if k == 0 {
        return y[0];
    }
    if k >= x.len() {
        return y[x.len() - 1];
    }
    let w = (t - x[k - 1]) / (x[k] - x[k - 1]);
    y[k - 1] + w * (y[k] - y[k - 1])
}

/// Kolmogorov–Smirnov distance of a sample against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic coefficient `c(alpha) = sqrt(-ln(alpha/2) / 2)`; 1.6276 at 1%.
pub fn ks_coefficient(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("significance level must lie in (0, 1), got {level}")));
    }
    Ok((-(level / 2.0).ln() / 2.0).sqrt())
}

/// One-sample critical distance `c(alpha) / sqrt(n)`.
pub fn ks_critical(level: f64, n: usize) -> Result<f64> {
    Ok(ks_coefficient(level)? / (n as f64).sqrt())
}

/// Two-sample critical distance `c(alpha) sqrt((n + m) / (n m))`.
pub fn ks_critical_two(level: f64, n: usize, m: usize) -> Result<f64> {
    let (n, m) = (n as f64, m as f64);
    Ok(ks_coefficient(level)? * ((n + m) / (n * m)).sqrt())
}

/// Outcome of comparing a batch of first events with the law they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub n: usize,
    pub detected: usize,
    pub detection_fraction: f64,
    pub expected_fraction: f64,
    pub binomial_sigma: f64,
    pub fraction_ok: bool,
    pub ks_distance: Option<f64>,
    pub ks_critical: Option<f64>,
    pub ks_ok: bool,
}

impl SampleReport {
    pub fn passed(&self) -> bool {
        self.fraction_ok && self.ks_ok
    }
}

/// KS test of detected times against `P(tau) / P(tau_end)` and a 3-sigma
/// binomial check of the detection fraction.
pub fn validate_samples(trace: &IntensityTrace, outcomes: &[EventOutcome], level: f64) -> Result<SampleReport> {
    let n = outcomes.len();
    let times: Vec<f64> = outcomes.iter().filter_map(EventOutcome::time).collect();
    let expected = trace.detection_probability();
    let fraction = if n == 0 { 0.0 } else { times.len() as f64 / n as f64 };
    let sigma = if n == 0 { 0.0 } else { (expected * (1.0 - expected) / n as f64).sqrt() };
    let fraction_ok = n == 0 || (fraction - expected).abs() <= 3.0 * sigma.max(f64::EPSILON);
    let (ks_distance, ks_crit) = if times.is_empty() || expected <= 0.0 {
        (None, None)
    } else {
        let cdf = |t: f64| (1.0 - interp(&trace.tau, &trace.survival, t)) / expected;
        (Some(ks_one_sample(&times, cdf)), Some(ks_critical(level, times.len())?))
    };
    let ks_ok = match (ks_distance, ks_crit) {
        (Some(d), Some(c)) => d < c,
        _ => true,
    };
    Ok(SampleReport {
        n,
        detected: times.len(),
        detection_fraction: fraction,
        expected_fraction: expected,
        binomial_sigma: sigma,
        fraction_ok,
        ks_distance,
        ks_critical: ks_crit,
        ks_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::uniform_tau_grid;

    fn exponential_law(rate: f64, t_max: f64, n: usize) -> ArrivalDistribution {
        let tau = uniform_tau_grid(t_max, n).unwrap();
        let p = tau.iter().map(|t| rate * (-rate * t).exp()).collect();
        ArrivalDistribution::from_density(tau, p, 1.0).unwrap()
    }

    #[test]
    fn zero_density_never_fires() {
        let tau = uniform_tau_grid(2.0, 50).unwrap();
        let d = ArrivalDistribution::from_density(tau, vec![0.0; 50], 0.0).unwrap();
        let tr = intensity_from_survival(&d).unwrap();
        assert!(tr.lambda.iter().all(|l| *l == 0.0));
        assert!(tr.survival.iter().all(|s| *s == 1.0));
        for seed in 0..50 {
            assert_eq!(sample_first_event(&tr, seed).outcome, EventOutcome::NotDetected);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_first_event_thinning(&tr, &mut rng), EventOutcome::NotDetected);
    }

    #[test]
    fn constant_rate_is_recovered() {
        let d = exponential_law(0.7, 5.0, 2001);
        let tr = intensity_from_survival(&d).unwrap();
        for l in &tr.lambda {
            assert!((l - 0.7).abs() < 1e-10, "{l}");
        }
        assert!(tr.survival_identity_error() < 1e-10);
    }

    #[test]
    fn saturation_is_reported() {
        // uniform density on [0, 1] exhausts the probability at tau = 1
        let tau = uniform_tau_grid(1.0, 101).unwrap();
        let d = ArrivalDistribution::from_density(tau, vec![1.0; 101], 1.0).unwrap();
        assert!(matches!(intensity_from_survival(&d), Err(Error::Saturated { .. })));
    }

    #[test]
    fn inverse_cdf_endpoints() {
        let d = exponential_law(1.0, 3.0, 301);
        let tr = intensity_from_survival(&d).unwrap();
        assert_eq!(first_event_from_uniform(&tr, 0.01), EventOutcome::NotDetected);
        let t = first_event_from_uniform(&tr, 1.0 - 1e-12).time().unwrap();
        assert!(t < 1e-9);
        // 1 - u = P(t) with u = e^{-1} lands at t = 1
        let t = first_event_from_uniform(&tr, (-1.0f64).exp()).time().unwrap();
        assert!((t - 1.0).abs() < 1e-4);
    }

    #[test]
    fn identical_seeds_give_identical_draws() {
        let tr = intensity_from_survival(&exponential_law(1.0, 3.0, 301)).unwrap();
        assert_eq!(sample_first_event(&tr, 42), sample_first_event(&tr, 42));
        let a = sample_first_events(&tr, 10_000, 9, Sampler::InverseCdf);
        let b = sample_first_events(&tr, 10_000, 9, Sampler::InverseCdf);
        assert_eq!(a, b);
        let c = sample_first_events(&tr, 10_000, 10, Sampler::InverseCdf);
        assert_ne!(a, c);
    }

    #[test]
    fn batch_is_independent_of_thread_count() {
        let tr = intensity_from_survival(&exponential_law(1.0, 3.0, 301)).unwrap();
        let many = sample_first_events(&tr, 9000, 5, Sampler::Thinning);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_first_events(&tr, 9000, 5, Sampler::Thinning));
        assert_eq!(many, one);
    }

    #[test]
    fn samplers_agree_in_distribution() {
        let tr = intensity_from_survival(&exponential_law(0.8, 3.0, 3001)).unwrap();
        let n = 40_000;
        let a: Vec<f64> = sample_first_events(&tr, n, 1, Sampler::InverseCdf)
            .iter()
            .filter_map(EventOutcome::time)
            .collect();
        let b: Vec<f64> = sample_first_events(&tr, n, 2, Sampler::Thinning)
            .iter()
            .filter_map(EventOutcome::time)
            .collect();
        let d = ks_two_sample(&a, &b);
        assert!(d < ks_critical_two(0.01, a.len(), b.len()).unwrap(), "{d}");
        let report = validate_samples(&tr, &sample_first_events(&tr, n, 3, Sampler::Thinning), 0.01).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn ks_statistics_on_known_samples() {
        // uniform samples at the midpoints of n bins have D = 1/(2n)
        let s: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let d = ks_one_sample(&s, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.05).abs() < 1e-15);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_coefficient(0.01).unwrap() - 1.627_6).abs() < 1e-4);
        assert!(ks_coefficient(0.0).is_err());
    }

    #[test]
    fn empty_batch_reports_nothing() {
        let tr = intensity_from_survival(&exponential_law(1.0, 3.0, 301)).unwrap();
        let r = validate_samples(&tr, &[], 0.01).unwrap();
        assert_eq!(r.n, 0);
        assert!(r.ks_distance.is_none());
        assert!(r.passed());
        assert!(sample_first_events(&tr, 0, 1, Sampler::InverseCdf).is_empty());
    }
}
