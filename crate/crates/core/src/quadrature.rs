//! Gauss–Legendre rules and a few cumulative integration helpers.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` with this rule.
    pub fn integrate<T, F>(&self, a: f64, b: f64, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = T::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * (w * half);
        }
        acc
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn integrate_composite<T, F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        let h = (b - a) / panels as f64;
        let mut acc = T::default();
        for k in 0..panels {
            let lo = a + k as f64 * h;
            acc = acc + self.integrate(lo, lo + h, &mut f);
        }
        acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Trapezoidal running integral on an arbitrary (monotone) grid.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for k in 0..y.len() {
        if k > 0 {
            acc += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// Fourth-order running integral on a uniform grid.
///
/// Each interval uses the cubic through its four nearest samples; the first
/// and last intervals use the one-sided variant. Falls back to the trapezoid
/// rule below four points.
pub fn cumulative_cubic(h: f64, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 4 {
        let x: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        return cumulative_trapezoid(&x, y);
    }
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let piece = if k == 0 {
            h / 24.0 * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3])
        } else if k == n - 2 {
            h / 24.0 * (9.0 * y[n - 1] + 19.0 * y[n - 2] - 5.0 * y[n - 3] + y[n - 4])
        } else {
            h / 24.0 * (-y[k - 1] + 13.0 * y[k] + 13.0 * y[k + 1] - y[k + 2])
        };
        acc += piece;
        out.push(acc);
    }
    out
}

/// Checks whether `x` is uniform to a relative tolerance, returning the step.
pub fn uniform_step(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let tol = 1e-9 * h.abs().max(f64::MIN_POSITIVE);
    x.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= tol)
        .then_some(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        // degree 15 is the exactness limit of an 8-point rule
        let v: f64 = rule.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-10);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn high_order_nodes_are_sorted_and_interior() {
        let rule = GaussLegendre::new(64);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes.iter().all(|x| x.abs() < 1.0));
        let v: f64 = rule.integrate(0.0, PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_cumulative_beats_trapezoid() {
        let n = 101;
        let h = 0.05;
        let x: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        let y: Vec<f64> = x.iter().map(|t| t.cos()).collect();
        let exact: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let cub = cumulative_cubic(h, &y);
        let trap = cumulative_trapezoid(&x, &y);
        let err_c = cub.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let err_t = trap.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err_c < 2e-7, "{err_c}");
        assert!(err_t > 10.0 * err_c);
    }

    #[test]
    fn uniform_step_detects_nonuniform() {
        assert_eq!(uniform_step(&[0.0, 0.5, 1.0]), Some(0.5));
        assert_eq!(uniform_step(&[0.0, 0.4, 1.0]), None);
        assert_eq!(uniform_step(&[1.0]), None);
    }
}
