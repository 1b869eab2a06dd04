//! Frequency shells and exponentially weighted norms.
//!
//! Radial data on `R^n` is represented as a finite list of shells, each an
//! atom of quadrature mass at radius `|xi|` carrying complex position and
//! velocity amplitudes. Every norm used by the toolkit then reduces to
//!
//! ```text
//! sum_j mass_j * exp(eta * radius_j^{1/s}) * radius_j^{2 beta} * |amp_j|^2
//! ```
//!
//! which is exact up to f64 rounding. Shells are kept in canonical order
//! (ascending radius, stable under insertion order); equal-radius terms are
//! accumulated in value order, so no norm depends on how duplicate radii
//! were inserted.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which amplitude a weighted norm reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormComponent {
    Position,
    Velocity,
}

/// One spectral shell: quadrature mass `mass` at radius `radius > 0` with
/// position amplitude `pos_amp` and velocity amplitude `vel_amp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyShell {
    pub radius: f64,
    pub pos_amp: Complex64,
    pub vel_amp: Complex64,
    pub mass: f64,
}

impl FrequencyShell {
    pub fn new(radius: f64, pos_amp: Complex64, vel_amp: Complex64, mass: f64) -> Result<Self> {
        let shell = Self {
            radius,
            pos_amp,
            vel_amp,
            mass,
        };
        shell.validate()?;
        Ok(shell)
    }

    fn validate(&self) -> Result<()> {
        if !self.radius.is_finite() || self.radius <= 0.0 {
            return Err(Error::InvalidProfile(format!(
                "shell radius must be finite and strictly positive, got {}",
                self.radius
            )));
        }
        if !self.mass.is_finite() || self.mass < 0.0 {
            return Err(Error::InvalidProfile(format!(
                "shell mass must be finite and nonnegative, got {}",
                self.mass
            )));
        }
        if !self.pos_amp.re.is_finite()
            || !self.pos_amp.im.is_finite()
            || !self.vel_amp.re.is_finite()
            || !self.vel_amp.im.is_finite()
        {
            return Err(Error::InvalidProfile(
                "shell amplitudes must be finite".to_string(),
            ));
        }
        Ok(())
    }

    /// True if the shell contributes to some norm: positive mass and a
    /// nonzero amplitude.
    fn is_active(&self) -> bool {
        self.mass > 0.0 && (self.pos_amp.norm_sqr() > 0.0 || self.vel_amp.norm_sqr() > 0.0)
    }
}

/// Gevrey weight parameters: order `s > 1` and exponential weight `eta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevreyParams {
    s: f64,
    eta: f64,
}

impl GevreyParams {
    pub fn new(s: f64, eta: f64) -> Result<Self> {
        if !s.is_finite() || s <= 1.0 {
            return Err(Error::InvalidParams(format!(
                "Gevrey order s must be finite and > 1, got {s}"
            )));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "Gevrey weight eta must be finite and > 0, got {eta}"
            )));
        }
        Ok(Self { s, eta })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Derived decay exponent `q = (s + 1)/s`, always in (1, 2).
    pub fn q(&self) -> f64 {
        (self.s + 1.0) / self.s
    }
}

/// A finite spectral profile: shells in canonical order plus the ambient
/// dimension (metadata; it only enters through [`SpectralProfile::from_radial_samples`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    shells: Vec<FrequencyShell>,
    dimension: usize,
}

impl SpectralProfile {
    /// Builds a profile and checks the nontriviality hypothesis: at least
    /// one shell must carry positive mass and a nonzero amplitude.
    pub fn new(shells: Vec<FrequencyShell>, dimension: usize) -> Result<Self> {
        let profile = Self::new_allow_trivial(shells, dimension)?;
        profile.require_nontrivial()?;
        Ok(profile)
    }

    /// Builds a profile without the nontriviality check. Evolving solver
    /// states and plumbing tests go through here.
    pub fn new_allow_trivial(shells: Vec<FrequencyShell>, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidProfile(
                "dimension must be at least 1".to_string(),
            ));
        }
        if shells.is_empty() {
            return Err(Error::InvalidProfile(
                "profile needs at least one shell".to_string(),
            ));
        }
        for shell in &shells {
            shell.validate()?;
        }
        let mut shells = shells;
        // Stable sort: equal radii keep insertion order.
        shells.sort_by(|a, b| a.radius.total_cmp(&b.radius));
        Ok(Self { shells, dimension })
    }

    /// Single-shell convenience constructor (mass defaults make most test
    /// instances one-liners).
    pub fn single_shell(radius: f64, pos_amp: Complex64, vel_amp: Complex64, mass: f64) -> Result<Self> {
        Self::new(vec![FrequencyShell::new(radius, pos_amp, vel_amp, mass)?], 1)
    }

    /// Quadrature discretization of radially symmetric data sampled at
    /// strictly ascending radii. Shell masses are
    /// `omega_n * radius^{n-1} * delta` where `omega_n` is the unit-sphere
    /// surface measure and `delta` the trapezoid cell width (half-sum of
    /// the adjacent gaps; a single-point grid uses `delta = 1` by
    /// convention).
    pub fn from_radial_samples(
        radii: &[f64],
        u0_values: &[Complex64],
        u1_values: &[Complex64],
        dimension: usize,
    ) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidRadialGrid("empty radial grid".to_string()));
        }
        if u0_values.len() != radii.len() || u1_values.len() != radii.len() {
            return Err(Error::InvalidRadialGrid(format!(
                "value lists must match the grid: {} radii, {} u0 values, {} u1 values",
                radii.len(),
                u0_values.len(),
                u1_values.len()
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidRadialGrid(
                "dimension must be at least 1".to_string(),
            ));
        }
        for pair in radii.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidRadialGrid(format!(
                    "radii must be strictly ascending, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if !(radii[0] > 0.0) || !radii.iter().all(|r| r.is_finite()) {
            return Err(Error::InvalidRadialGrid(
                "radii must be finite and strictly positive".to_string(),
            ));
        }

        let area = unit_sphere_area(dimension);
        let n = radii.len();
        let mut shells = Vec::with_capacity(n);
        for j in 0..n {
            let left = if j > 0 { radii[j] - radii[j - 1] } else { 0.0 };
            let right = if j + 1 < n { radii[j + 1] - radii[j] } else { 0.0 };
            let delta = if n == 1 { 1.0 } else { 0.5 * (left + right) };
            let mass = area * radii[j].powi(dimension as i32 - 1) * delta;
            shells.push(FrequencyShell::new(radii[j], u0_values[j], u1_values[j], mass)?);
        }
        Self::new_allow_trivial(shells, dimension)
    }

    pub fn shells(&self) -> &[FrequencyShell] {
        &self.shells
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_nontrivial(&self) -> bool {
        self.shells.iter().any(FrequencyShell::is_active)
    }

    pub fn require_nontrivial(&self) -> Result<()> {
        if self.is_nontrivial() {
            Ok(())
        } else {
            Err(Error::TrivialData)
        }
    }

    pub fn max_radius(&self) -> f64 {
        // Shells are sorted ascending and nonempty.
        self.shells.last().map(|s| s.radius).unwrap_or(0.0)
    }

    /// Same shell geometry with replaced amplitudes; used to evaluate
    /// energies along evolving states.
    pub fn with_state(&self, w: &[Complex64], w_dot: &[Complex64]) -> Result<Self> {
        if w.len() != self.shells.len() || w_dot.len() != self.shells.len() {
            return Err(Error::InvalidProfile(format!(
                "state length {} / {} does not match {} shells",
                w.len(),
                w_dot.len(),
                self.shells.len()
            )));
        }
        let shells = self
            .shells
            .iter()
            .zip(w.iter().zip(w_dot.iter()))
            .map(|(shell, (&pos, &vel))| FrequencyShell {
                radius: shell.radius,
                pos_amp: pos,
                vel_amp: vel,
                mass: shell.mass,
            })
            .collect();
        Ok(Self {
            shells,
            dimension: self.dimension,
        })
    }

    /// The discrete weighted norm
    /// `sum_j mass_j e^{eta r_j^{1/s}} r_j^{2 beta} |amp_j|^2`.
    ///
    /// `eta = 0` gives the plain homogeneous norm of order `beta` and makes
    /// `s` irrelevant; for `eta > 0` the Gevrey order must satisfy `s > 1`.
    /// An exponential weight that leaves the finite range is reported as an
    /// error with the offending shell index, never returned as infinity.
    pub fn weighted_norm_sq(
        &self,
        eta: f64,
        s: f64,
        beta: f64,
        component: NormComponent,
    ) -> Result<f64> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "eta must be finite and nonnegative, got {eta}"
            )));
        }
        if eta > 0.0 && !(s > 1.0) {
            return Err(Error::InvalidParams(format!(
                "Gevrey order s must be > 1 when eta > 0, got s = {s}"
            )));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }

        let mut total = 0.0;
        let mut group = Vec::new();
        let mut i = 0;
        while i < self.shells.len() {
            let radius = self.shells[i].radius;
            let exponent = if eta > 0.0 { eta * radius.powf(1.0 / s) } else { 0.0 };
            let weight = exponent.exp() * radius.powf(2.0 * beta);
            if !weight.is_finite() {
                return Err(Error::WeightOverflow { shell: i, exponent });
            }

            // Terms at the same radius are summed in value order so the
            // result does not depend on insertion order of duplicates.
            group.clear();
            let group_start = i;
            while i < self.shells.len() && self.shells[i].radius == radius {
                let shell = &self.shells[i];
                let amp = match component {
                    NormComponent::Position => shell.pos_amp,
                    NormComponent::Velocity => shell.vel_amp,
                };
                group.push(shell.mass * amp.norm_sqr());
                i += 1;
            }
            group.sort_by(f64::total_cmp);
            let mut local = 0.0;
            for term in &group {
                local += term;
            }

            let contribution = weight * local;
            if !contribution.is_finite() {
                return Err(Error::WeightOverflow {
                    shell: group_start,
                    exponent,
                });
            }
            total += contribution;
        }
        if !total.is_finite() {
            return Err(Error::WeightOverflow {
                shell: 0,
                exponent: f64::INFINITY,
            });
        }
        Ok(total)
    }

    /// Weighted norm of the data pair `((-Δ)^{3/4} u0, (-Δ)^{1/4} u1)`:
    /// position part at `beta = 3/2` plus velocity part at `beta = 1/2`,
    /// both at the given Gevrey weight.
    pub fn pair_gevrey_norm_sq(&self, g: &GevreyParams) -> Result<f64> {
        let pos = self.weighted_norm_sq(g.eta(), g.s(), 1.5, NormComponent::Position)?;
        let vel = self.weighted_norm_sq(g.eta(), g.s(), 0.5, NormComponent::Velocity)?;
        Ok(pos + vel)
    }
}

/// Surface measure of the unit sphere in `R^n`: `2 pi^{n/2} / Gamma(n/2)`.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n)
}

/// `Gamma(n/2)` for integer `n >= 1`, by the recursion
/// `Gamma(x + 1) = x Gamma(x)` down to `Gamma(1) = 1` or `Gamma(1/2) = sqrt(pi)`.
fn gamma_half_integer(n: usize) -> f64 {
    let mut x = n as f64 / 2.0;
    let mut acc = 1.0;
    while x > 1.0 {
        x -= 1.0;
        acc *= x;
    }
    if x < 1.0 {
        // x == 1/2
        acc * PI.sqrt()
    } else {
        acc
    }
}
