//! Initial wave packets, free dynamics and the free propagators in time and
//! Laplace domains.
//!
//! Analytic Schrödinger computations run in the dimensionless variables
//! `xi = x / 2 eta`, `tau = hbar t / (2 m eta^2)`, `alpha = m eta kappa / hbar`,
//! in which the free equation reads `i d_tau psi = -(1/4) d_xi^2 psi`.
//! Physical units appear only in [`GaussianPacket`] and [`UnitMap`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::specfun::{faddeeva_w_scaled, gaussian_integral, LaplacePoint};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Gaussian initial state
/// `psi0(x) = (2 pi)^{-1/4} eta^{-1/2} exp(-(x - x0)^2 / 4 eta^2 + 2 i k (x - x0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub x0: f64,
    pub k: f64,
    pub eta: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl GaussianPacket {
    pub fn new(x0: f64, k: f64, eta: f64, mass: f64, hbar: f64) -> Result<Self> {
        let p = Self { x0, k, eta, mass, hbar };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("packet width must be positive, got {}", self.eta)));
        }
        if !(self.mass > 0.0 && self.hbar > 0.0) {
            return Err(invalid("mass and hbar must be positive"));
        }
        if !(self.x0.is_finite() && self.k.is_finite()) {
            return Err(invalid("packet center and wavenumber must be finite"));
        }
        Ok(())
    }

    /// Amplitude in physical units.
    pub fn amplitude(&self, x: f64) -> Complex64 {
        let s = x - self.x0;
        let norm = (2.0 * PI).powf(-0.25) / self.eta.sqrt();
        norm * Complex64::new(-s * s / (4.0 * self.eta * self.eta), 2.0 * self.k * s).exp()
    }

    pub fn units(&self) -> UnitMap {
        UnitMap { eta: self.eta, mass: self.mass, hbar: self.hbar }
    }

    pub fn to_dimensionless(&self) -> DimensionlessPacket {
        DimensionlessPacket { xi0: self.x0 / (2.0 * self.eta), v: 2.0 * self.eta * self.k }
    }

    pub fn from_dimensionless(p: &DimensionlessPacket, eta: f64, mass: f64, hbar: f64) -> Result<Self> {
        Self::new(2.0 * eta * p.xi0, p.v / (2.0 * eta), eta, mass, hbar)
    }
}

/// Maps between physical and dimensionless coordinates for a given width,
/// mass and `hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitMap {
    pub eta: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl UnitMap {
    pub fn xi(&self, x: f64) -> f64 {
        x / (2.0 * self.eta)
    }
    pub fn x(&self, xi: f64) -> f64 {
        2.0 * self.eta * xi
    }
    pub fn tau(&self, t: f64) -> f64 {
        self.hbar * t / (2.0 * self.mass * self.eta * self.eta)
    }
    pub fn t(&self, tau: f64) -> f64 {
        tau * 2.0 * self.mass * self.eta * self.eta / self.hbar
    }
    pub fn alpha(&self, kappa: f64) -> f64 {
        self.mass * self.eta * kappa / self.hbar
    }
    pub fn kappa(&self, alpha: f64) -> f64 {
        alpha * self.hbar / (self.mass * self.eta)
    }
}

/// Free function form of [`GaussianPacket::to_dimensionless`].
pub fn to_dimensionless(p: &GaussianPacket) -> DimensionlessPacket {
    p.to_dimensionless()
}

/// Gaussian packet in dimensionless form, `(2/pi)^{1/4} exp(-(xi - xi0)^2 + 2 i v (xi - xi0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessPacket {
    pub xi0: f64,
    pub v: f64,
}

impl DimensionlessPacket {
    pub fn new(xi0: f64, v: f64) -> Result<Self> {
        if !(xi0.is_finite() && v.is_finite()) {
            return Err(invalid("dimensionless packet parameters must be finite"));
        }
        Ok(Self { xi0, v })
    }

    pub fn value(&self, xi: f64) -> Complex64 {
        let s = xi - self.xi0;
        (2.0 / PI).powf(0.25) * Complex64::new(-s * s, 2.0 * self.v * s).exp()
    }

    /// Freely evolved amplitude `(K0(tau) psi0)(xi)` in closed form.
    pub fn evolved(&self, xi: f64, tau: f64) -> Complex64 {
        let s = xi - self.xi0;
        let spread = Complex64::new(1.0, tau);
        let drift = s - self.v * tau;
        let phase = Complex64::new(0.0, 2.0 * self.v * s - self.v * self.v * tau);
        (2.0 / PI).powf(0.25) / spread.sqrt() * (-(drift * drift) / spread + phase).exp()
    }

    /// Laplace transform of the free evolution at a detector site,
    /// `psi~0(xi_a; z)`.
    pub fn laplace_at(&self, xi_a: f64, z: LaplacePoint) -> Result<Complex64> {
        if z.is_origin() {
            return Err(Error::SingularKernel);
        }
        Ok(self.laplace_at_scaled(xi_a, z)? / z.sqrt_iz())
    }

    /// `sqrt(iz) psi~0(xi_a; z) = (1/2)(2 pi)^{1/4} e^{-d^2 - 2ivd} [w(u+) + w(u-)]`
    /// with `u+- = i sqrt(-iz) +- (v - i d)`, `d = xi0 - xi_a`. Finite at `z = 0`.
    pub fn laplace_at_scaled(&self, xi_a: f64, z: LaplacePoint) -> Result<Complex64> {
        let d = self.xi0 - xi_a;
        let shift = Complex64::new(self.v, -d);
        let base = I * z.sqrt_neg_iz();
        let log_scale = Complex64::new(-d * d, -2.0 * self.v * d);
        let w_plus = faddeeva_w_scaled(base + shift, log_scale)?;
        let w_minus = faddeeva_w_scaled(base - shift, log_scale)?;
        Ok(0.5 * (2.0 * PI).powf(0.25) * (w_plus + w_minus))
    }
}

/// Free function form of [`DimensionlessPacket::value`].
pub fn packet_value(p: &DimensionlessPacket, xi: f64) -> Complex64 {
    p.value(xi)
}

/// Free function form of [`DimensionlessPacket::laplace_at`].
pub fn psi0_laplace_at(p: &DimensionlessPacket, xi_a: f64, z: LaplacePoint) -> Result<Complex64> {
    p.laplace_at(xi_a, z)
}

/// Free Hamiltonian `H0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dynamics {
    /// `H0 = -i c d/dx`, physical units.
    UltraRelativistic { c: f64 },
    /// `H0 = -(1/4) d^2/dxi^2`, dimensionless units.
    FreeSchrodinger,
}

impl Dynamics {
    pub fn ultra_relativistic(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("speed c must be positive, got {c}")));
        }
        Ok(Self::UltraRelativistic { c })
    }

    /// `K~0(x1, x2; z)`.
    pub fn free_laplace_kernel(&self, x1: f64, x2: f64, z: LaplacePoint) -> Result<Complex64> {
        match *self {
            Self::FreeSchrodinger => {
                if z.is_origin() {
                    return Err(Error::SingularKernel);
                }
                Ok(self.free_laplace_kernel_scaled(x1, x2, z) / z.sqrt_iz())
            }
            Self::UltraRelativistic { .. } => Ok(self.free_laplace_kernel_scaled(x1, x2, z)),
        }
    }

    /// Kernel multiplied by [`Dynamics::laplace_scale`]; finite at `z = 0`.
    pub fn free_laplace_kernel_scaled(&self, x1: f64, x2: f64, z: LaplacePoint) -> Complex64 {
        match *self {
            Self::FreeSchrodinger => (-2.0 * z.sqrt_neg_iz() * (x1 - x2).abs()).exp(),
            Self::UltraRelativistic { c } => {
                // K0(x, x'; t) = delta(x' - x + c t) only reaches x from the left
                if x1 >= x2 {
                    (-(x1 - x2) * z.z() / c).exp() / c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    /// Common factor applied to kernels and sources in the resolvent system:
    /// `sqrt(iz)` for the Schrödinger kernel, 1 otherwise.
    pub fn laplace_scale(&self, z: LaplacePoint) -> Complex64 {
        match *self {
            Self::FreeSchrodinger => z.sqrt_iz(),
            Self::UltraRelativistic { .. } => Complex64::new(1.0, 0.0),
        }
    }

    /// Time-domain Schrödinger kernel `(1/(pi i tau))^{1/2} exp(i (xi1 - xi2)^2 / tau)`.
    /// Returns `None` for the ultra-relativistic case, whose kernel is a shift.
    pub fn free_time_kernel(&self, xi1: f64, xi2: f64, tau: f64) -> Option<Complex64> {
        match *self {
            Self::FreeSchrodinger => {
                let d = xi1 - xi2;
                let pref = (Complex64::new(0.0, PI * tau)).sqrt().inv();
                Some(pref * Complex64::new(0.0, d * d / tau).exp())
            }
            Self::UltraRelativistic { .. } => None,
        }
    }
}

/// Free function form of [`Dynamics::free_laplace_kernel`].
pub fn free_laplace_kernel(d: &Dynamics, x1: f64, x2: f64, z: LaplacePoint) -> Result<Complex64> {
    d.free_laplace_kernel(x1, x2, z)
}

/// A one-dimensional state that can be transported by the ultra-relativistic
/// free flow `psi(x, t) = psi0(x - c t)`.
pub trait LineState: Send + Sync {
    fn amplitude(&self, x: f64) -> Complex64;
    /// `int_{-inf}^{a} |psi0|^2 dx`.
    fn mass_below(&self, a: f64) -> f64;
    /// `int_0^inf e^{-z t} psi0(a - c t) dt`.
    fn laplace_of_shift(&self, a: f64, c: f64, z: LaplacePoint) -> Result<Complex64>;
}

impl LineState for GaussianPacket {
    fn amplitude(&self, x: f64) -> Complex64 {
        GaussianPacket::amplitude(self, x)
    }

    fn mass_below(&self, a: f64) -> f64 {
        // |psi0|^2 is a normal density with standard deviation eta
        0.5 * crate::specfun::erfc_real((self.x0 - a) / (self.eta * std::f64::consts::SQRT_2))
    }

    fn laplace_of_shift(&self, a: f64, c: f64, z: LaplacePoint) -> Result<Complex64> {
        let e2 = 4.0 * self.eta * self.eta;
        let dist = a - self.x0;
        let qa = Complex64::new(c * c / e2, 0.0);
        let qb = Complex64::new(-dist * c / e2, self.k * c) + 0.5 * z.z();
        let qc = Complex64::new(dist * dist / e2, -2.0 * self.k * dist);
        let norm = (2.0 * PI).powf(-0.25) / self.eta.sqrt();
        Ok(norm * gaussian_integral(qa, qb, qc)?)
    }
}

/// Flat-top state, uniform on `[left, right]`, for exact compact support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopHatPacket {
    pub left: f64,
    pub right: f64,
}

impl TopHatPacket {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(right > left) {
            return Err(invalid("top-hat packet needs right > left"));
        }
        Ok(Self { left, right })
    }

    fn height(&self) -> f64 {
        (self.right - self.left).sqrt().recip()
    }
}

impl LineState for TopHatPacket {
    fn amplitude(&self, x: f64) -> Complex64 {
        if (self.left..=self.right).contains(&x) {
            Complex64::new(self.height(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn mass_below(&self, a: f64) -> f64 {
        ((a - self.left) / (self.right - self.left)).clamp(0.0, 1.0)
    }

    fn laplace_of_shift(&self, a: f64, c: f64, z: LaplacePoint) -> Result<Complex64> {
        let t1 = ((a - self.right) / c).max(0.0);
        let t2 = ((a - self.left) / c).max(0.0);
        let zz = z.z();
        let h = self.height();
        if zz.norm() < 1e-12 {
            return Ok(Complex64::new(h * (t2 - t1), 0.0));
        }
        Ok(h * ((-zz * t1).exp() - (-zz * t2).exp()) / zz)
    }
}
