//! Per-mode linear Cauchy problems `w'' + c(t) |xi|^2 w = 0` for
//! piecewise-linear coefficients, the admissible coefficient class
//! (values pinched between `nu0` and `M`, derivative below a
//! `K/(T - t)^q` envelope), and the weighted-energy decay certificate.
//!
//! The certificate freezes the coefficient near the horizon at a
//! frequency-dependent switch instant, integrates the resulting decay rate
//! `alpha = |c_frozen - c| |xi| / nu0 + |d_t c_frozen| / c_frozen` by the
//! trapezoid rule, and tracks the weighted energy
//! `E = (|w'|^2 + c_frozen |xi|^2 |w|^2) |xi|^{4 sigma} k` with
//! `k = exp(-int alpha + eta |xi|^{1/s})`. The certificate grid is the
//! union of the uniform step grid and the path's nodes, so every kink of
//! the integrand sits on a grid node: inside each interval `alpha` is
//! convex, the trapezoid rule over-estimates its integral, and the
//! discrete energy inherits the monotone decay.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::GevreyParams;

/// Default tolerance for class-membership checks performed inside other
/// operations.
pub const CLASS_MEMBERSHIP_TOL: f64 = 1e-9;

/// Per-step relative tolerance for the certificate's energy decay and the
/// interval-bound ratio.
pub const CERTIFICATE_STEP_TOL: f64 = 1e-6;

/// Piecewise-linear coefficient on `[0, horizon]`: node times start at 0,
/// strictly ascend, and carry strictly positive values.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl CoefficientPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "coefficient path needs matching node lists with at least two nodes, got {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParams(format!(
                "coefficient path must start at t = 0, got {}",
                times[0]
            )));
        }
        for pair in times.windows(2) {
            if !(pair[1] > pair[0]) || !pair[1].is_finite() {
                return Err(Error::InvalidParams(format!(
                    "coefficient path times must be finite and strictly ascending, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        for &v in &values {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "coefficient values must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Self { times, values })
    }

    /// Constant coefficient on `[0, horizon]`.
    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Self::new(vec![0.0, horizon], vec![value, value])
    }

    /// Oscillation family saturating a derivative envelope: values swing
    /// between `nu0` and `big_m` with instantaneous derivative bounded by
    /// `amplitude_fraction * (big_m - nu0)/2 / (horizon - t)^q`, sampled on
    /// a grid geometrically refined toward the horizon (`refined_grid`)
    /// and extended to the horizon itself by a constant final segment.
    #[allow(clippy::too_many_arguments)]
    pub fn oscillating(
        nu0: f64,
        big_m: f64,
        q: f64,
        horizon: f64,
        amplitude_fraction: f64,
        phase: f64,
        eps_frac: f64,
        ratio: f64,
    ) -> Result<Self> {
        if !(big_m > nu0) || nu0 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "need 0 < nu0 < big_m, got nu0 = {nu0}, big_m = {big_m}"
            )));
        }
        if !(q > 1.0 && q < 2.0) {
            return Err(Error::InvalidParams(format!("q must lie in (1, 2), got {q}")));
        }
        if !(amplitude_fraction > 0.0 && amplitude_fraction <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "amplitude fraction must lie in (0, 1], got {amplitude_fraction}"
            )));
        }
        let grid = refined_grid(horizon, eps_frac, ratio)?;
        let half = 0.5 * (big_m - nu0);
        let mut values: Vec<f64> = grid
            .iter()
            .map(|&t| {
                let arg = amplitude_fraction / (q - 1.0) * (horizon - t).powf(1.0 - q) + phase;
                nu0 + half * (1.0 + arg.sin())
            })
            .collect();
        let mut times = grid;
        // The family has no limit at the horizon; extend with the last
        // sampled value so the path is defined on all of [0, horizon].
        values.push(*values.last().expect("refined grid is nonempty"));
        times.push(horizon);
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("paths have at least two nodes")
    }

    /// Largest node value; for a piecewise-linear path this is the global
    /// maximum.
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the segment containing `t` (right-open; the last segment
    /// is closed).
    pub fn segment_index(&self, t: f64) -> usize {
        if t <= self.times[0] {
            return 0;
        }
        let last_seg = self.times.len() - 2;
        if t >= self.times[last_seg + 1] {
            return last_seg;
        }
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(last_seg),
            Err(i) => i - 1,
        }
    }

    pub fn segment_slope(&self, segment: usize) -> f64 {
        (self.values[segment + 1] - self.values[segment])
            / (self.times[segment + 1] - self.times[segment])
    }

    /// Linear interpolation, clamped to the node range.
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.horizon() {
            return *self.values.last().expect("nonempty");
        }
        let seg = self.segment_index(t);
        self.values[seg] + self.segment_slope(seg) * (t - self.times[seg])
    }

    /// Supremum node gap against a path on the same node grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(other.times.iter())
                .any(|(a, b)| (a - b).abs() > 1e-12 * self.horizon().max(1.0))
        {
            return Err(Error::InvalidParams(
                "sup distance needs paths on the same node grid".to_string(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Node times on `[0, t_singular - eps]` with spacing proportional to the
/// remaining time, `eps = eps_frac * t_singular`. Resolves derivative
/// envelopes of the form `K/(t_singular - t)^q`.
pub fn refined_grid(t_singular: f64, eps_frac: f64, ratio: f64) -> Result<Vec<f64>> {
    if !t_singular.is_finite() || t_singular <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "singular time must be positive, got {t_singular}"
        )));
    }
    if !(eps_frac > 0.0 && eps_frac < 0.5) {
        return Err(Error::InvalidParams(format!(
            "eps fraction must lie in (0, 0.5), got {eps_frac}"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParams(format!(
            "refinement ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let eps = eps_frac * t_singular;
    let mut times = vec![0.0];
    let mut t = 0.0;
    loop {
        let next = t + ratio * (t_singular - t);
        if t_singular - next <= 1.5 * eps {
            break;
        }
        times.push(next);
        t = next;
    }
    times.push(t_singular - eps);
    Ok(times)
}

/// Parameters of the admissible coefficient class on `[0, horizon]`:
/// values in `[nu0, big_m]`, derivative magnitude below
/// `k_const / (horizon - t)^q` almost everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassKParams {
    pub nu0: f64,
    pub big_m: f64,
    pub k_const: f64,
    pub horizon: f64,
    pub q: f64,
}

impl ClassKParams {
    pub fn new(nu0: f64, big_m: f64, k_const: f64, horizon: f64, q: f64) -> Result<Self> {
        if !nu0.is_finite() || nu0 <= 0.0 {
            return Err(Error::InvalidParams(format!("nu0 must be positive, got {nu0}")));
        }
        if !big_m.is_finite() || big_m < nu0 {
            return Err(Error::InvalidParams(format!(
                "big_m must be at least nu0, got {big_m} < {nu0}"
            )));
        }
        if !k_const.is_finite() || k_const < 0.0 {
            return Err(Error::InvalidParams(format!(
                "k_const must be nonnegative, got {k_const}"
            )));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(q > 1.0 && q < 2.0) {
            return Err(Error::InvalidParams(format!("q must lie in (1, 2), got {q}")));
        }
        Ok(Self {
            nu0,
            big_m,
            k_const,
            horizon,
            q,
        })
    }

    /// Envelope `k_const / (horizon - t)^q`; `+inf` at and beyond the
    /// horizon.
    pub fn derivative_envelope(&self, t: f64) -> f64 {
        let remaining = self.horizon - t;
        if remaining <= 0.0 {
            f64::INFINITY
        } else {
            self.k_const / remaining.powf(self.q)
        }
    }
}

/// Result of a class-membership check. `worst_violation` is the largest
/// excess over the class constraints (negative values mean margin);
/// `location` is the time at which it occurs.
#[derive(Debug, Clone, Copy)]
pub struct MembershipReport {
    pub ok: bool,
    pub worst_violation: f64,
    pub location: f64,
}

/// Checks node values against `[nu0 - tol, big_m + tol]` and each segment's
/// slope magnitude against the envelope evaluated at the segment's right
/// endpoint — the harshest point of the segment, since the envelope
/// increases toward the horizon.
pub fn check_class_membership(
    path: &CoefficientPath,
    params: &ClassKParams,
    tol: f64,
) -> Result<MembershipReport> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let horizon = params.horizon;
    if (path.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::HorizonMismatch {
            path_horizon: path.horizon(),
            expected: horizon,
        });
    }

    let mut worst = f64::NEG_INFINITY;
    let mut location = 0.0;
    for (&t, &v) in path.times().iter().zip(path.values().iter()) {
        let violation = (params.nu0 - v).max(v - params.big_m);
        if violation > worst {
            worst = violation;
            location = t;
        }
    }
    for segment in 0..path.times().len() - 1 {
        let t_right = path.times()[segment + 1];
        let envelope = params.derivative_envelope(t_right);
        if !envelope.is_finite() {
            continue;
        }
        let violation = path.segment_slope(segment).abs() - envelope;
        if violation > worst {
            worst = violation;
            location = t_right;
        }
    }
    Ok(MembershipReport {
        ok: worst <= tol,
        worst_violation: worst,
        location,
    })
}

/// Largest step for which the explicit integrator resolves the mode's
/// oscillation: `0.5 / (radius * sqrt(max c))`.
pub fn max_stable_step(path: &CoefficientPath, radius: f64) -> f64 {
    0.5 / (radius * path.max_value().sqrt())
}

/// One mode's trajectory: `w(t)` and `w'(t)` at the sample instants.
#[derive(Debug, Clone)]
pub struct ModeTrajectory {
    pub radius: f64,
    pub times: Vec<f64>,
    pub w: Vec<Complex64>,
    pub w_dot: Vec<Complex64>,
}

fn validate_mode_inputs(path: &CoefficientPath, radius: f64, step: f64) -> Result<()> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "mode radius must be positive, got {radius}"
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidParams(format!("step must be positive, got {step}")));
    }
    let max_step = max_stable_step(path, radius);
    if step > max_step {
        return Err(Error::StepTooLarge { step, max_step });
    }
    Ok(())
}

#[inline]
fn rk4_mode_step(
    path: &CoefficientPath,
    r_sq: f64,
    t: f64,
    h: f64,
    w: Complex64,
    v: Complex64,
) -> (Complex64, Complex64) {
    let accel = |t: f64, w: Complex64| -> Complex64 { w * (-path.value_at(t) * r_sq) };
    let half = 0.5 * h;
    let k1w = v;
    let k1v = accel(t, w);
    let k2w = v + k1v * half;
    let k2v = accel(t + half, w + k1w * half);
    let k3w = v + k2v * half;
    let k3v = accel(t + half, w + k2w * half);
    let k4w = v + k3v * h;
    let k4v = accel(t + h, w + k3w * h);
    let sixth = h / 6.0;
    (
        w + (k1w + (k2w + k3w) * 2.0 + k4w) * sixth,
        v + (k1v + (k2v + k3v) * 2.0 + k4v) * sixth,
    )
}

/// Uniform grid `0, step, 2 step, ...` ending exactly at `horizon` (the
/// last step is shortened).
pub(crate) fn uniform_grid(horizon: f64, step: f64) -> Vec<f64> {
    let mut times = Vec::with_capacity((horizon / step).ceil() as usize + 1);
    let mut k = 0u64;
    loop {
        let t = k as f64 * step;
        if t >= horizon - 1e-9 * step {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(horizon);
    times
}

fn integrate_on_grid(
    path: &CoefficientPath,
    radius: f64,
    a: Complex64,
    b: Complex64,
    grid: &[f64],
) -> ModeTrajectory {
    let r_sq = radius * radius;
    let mut w = Vec::with_capacity(grid.len());
    let mut w_dot = Vec::with_capacity(grid.len());
    let (mut cur_w, mut cur_v) = (a, b);
    w.push(cur_w);
    w_dot.push(cur_v);
    for i in 0..grid.len() - 1 {
        let t = grid[i];
        let h = grid[i + 1] - grid[i];
        let (nw, nv) = rk4_mode_step(path, r_sq, t, h, cur_w, cur_v);
        cur_w = nw;
        cur_v = nv;
        w.push(cur_w);
        w_dot.push(cur_v);
    }
    ModeTrajectory {
        radius,
        times: grid.to_vec(),
        w,
        w_dot,
    }
}

/// Integrates one mode on the uniform step grid over the path's horizon.
pub fn solve_mode(
    path: &CoefficientPath,
    radius: f64,
    a: Complex64,
    b: Complex64,
    step: f64,
) -> Result<ModeTrajectory> {
    validate_mode_inputs(path, radius, step)?;
    let grid = uniform_grid(path.horizon(), step);
    Ok(integrate_on_grid(path, radius, a, b, &grid))
}

/// Integrates one mode landing exactly on each requested sample instant;
/// between samples the integrator substeps uniformly at widths at most
/// `step`. Sample instants that coincide with the path's nodes keep every
/// integration interval inside a single linear segment of the coefficient.
pub fn solve_mode_at(
    path: &CoefficientPath,
    radius: f64,
    a: Complex64,
    b: Complex64,
    step: f64,
    samples: &[f64],
) -> Result<ModeTrajectory> {
    validate_mode_inputs(path, radius, step)?;
    if samples.len() < 2 || samples[0] != 0.0 {
        return Err(Error::InvalidParams(
            "sample instants must start at 0 and contain at least two points".to_string(),
        ));
    }
    for pair in samples.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidParams(
                "sample instants must be strictly ascending".to_string(),
            ));
        }
    }
    let horizon = path.horizon();
    if *samples.last().unwrap() > horizon * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!(
            "sample instants exceed the path horizon {horizon}"
        )));
    }

    let r_sq = radius * radius;
    let mut w = Vec::with_capacity(samples.len());
    let mut w_dot = Vec::with_capacity(samples.len());
    let (mut cur_w, mut cur_v) = (a, b);
    w.push(cur_w);
    w_dot.push(cur_v);
    for i in 0..samples.len() - 1 {
        let width = samples[i + 1] - samples[i];
        let substeps = (width / step).ceil().max(1.0) as usize;
        let h = width / substeps as f64;
        for j in 0..substeps {
            let t = samples[i] + j as f64 * h;
            let (nw, nv) = rk4_mode_step(path, r_sq, t, h, cur_w, cur_v);
            cur_w = nw;
            cur_v = nv;
        }
        w.push(cur_w);
        w_dot.push(cur_v);
    }
    Ok(ModeTrajectory {
        radius,
        times: samples.to_vec(),
        w,
        w_dot,
    })
}

/// Full per-mode certificate: trajectory, frozen coefficient, decay-rate
/// integral, weights, weighted energy, and the two verdicts (monotone
/// decay, interval bound).
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub trajectory: ModeTrajectory,
    /// `c(t)` sampled on the certificate grid.
    pub coefficient: Vec<f64>,
    /// `c_frozen(t, xi)` on the certificate grid.
    pub frozen_coefficient: Vec<f64>,
    /// Running trapezoid integral of the decay rate; nondecreasing.
    pub rate_integral: Vec<f64>,
    /// `k(t, xi) = exp(-rate_integral + eta |xi|^{1/s})`; strictly positive.
    pub weights: Vec<f64>,
    /// Weighted energy `E(t, xi)`.
    pub energies: Vec<f64>,
    /// Largest positive step-to-step relative increase of the energy
    /// (0 when the energy is monotone nonincreasing).
    pub max_energy_increase: f64,
    pub interval_bound_ok: bool,
    /// Worst-instant LHS/RHS ratio of the interval bound.
    pub interval_bound_ratio: f64,
}

impl CertificateReport {
    pub fn radius(&self) -> f64 {
        self.trajectory.radius
    }
}

/// Lower floor for the certificate weight `k(t, xi)`:
/// `exp(-2 M/nu0 max(1, T^{1-s(q-1)})) * exp((eta - K/((q-1) nu0) - 2M/nu0) |xi|^{1/s})`.
pub fn certificate_weight_floor(params: &ClassKParams, g: &GevreyParams, radius: f64) -> f64 {
    let qs_minus_s = g.s() * (params.q - 1.0);
    let horizon_pow = params.horizon.powf(1.0 - qs_minus_s).max(1.0);
    let base = (-2.0 * params.big_m / params.nu0 * horizon_pow).exp();
    let eta_rest =
        g.eta() - params.k_const / ((params.q - 1.0) * params.nu0) - 2.0 * params.big_m / params.nu0;
    base * (eta_rest * radius.powf(1.0 / g.s())).exp()
}

/// Weight admissibility requirement for the certificate:
/// `eta` must exceed `(K/(q-1) + 2M)/nu0`.
pub fn required_eta(params: &ClassKParams) -> f64 {
    (params.k_const / (params.q - 1.0) + 2.0 * params.big_m) / params.nu0
}

/// Runs the weighted-energy certificate for a single mode.
///
/// Preconditions: the Gevrey order is compatible with the envelope
/// exponent (`1 <= s(q-1) < q`), the weight is admissible, the path passes
/// the class-membership check, and the step resolves the oscillation.
#[allow(clippy::too_many_arguments)]
pub fn energy_certificate(
    path: &CoefficientPath,
    params: &ClassKParams,
    radius: f64,
    a: Complex64,
    b: Complex64,
    g: &GevreyParams,
    sigma: f64,
    step: f64,
) -> Result<CertificateReport> {
    let s = g.s();
    let qs_minus_s = s * (params.q - 1.0);
    if !(qs_minus_s >= 1.0 && qs_minus_s < params.q) {
        return Err(Error::InvalidParams(format!(
            "Gevrey order s = {s} incompatible with envelope exponent q = {}: need 1/(q-1) <= s < q/(q-1)",
            params.q
        )));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParams(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    let required = required_eta(params);
    if !(g.eta() > required) {
        return Err(Error::EtaInadmissible {
            eta: g.eta(),
            required,
        });
    }
    let membership = check_class_membership(path, params, CLASS_MEMBERSHIP_TOL)?;
    if !membership.ok {
        return Err(Error::NotInClassK {
            worst_violation: membership.worst_violation,
            location: membership.location,
        });
    }
    validate_mode_inputs(path, radius, step)?;

    let horizon = path.horizon();
    let nu0 = params.nu0;

    // Certificate grid: uniform base refined by the path's nodes, so the
    // decay-rate kinks land on grid nodes.
    let grid = {
        let mut grid = uniform_grid(horizon, step);
        grid.extend_from_slice(path.times());
        grid.sort_by(f64::total_cmp);
        let merge_tol = 1e-12 * horizon.max(1.0);
        let mut merged: Vec<f64> = Vec::with_capacity(grid.len());
        for t in grid {
            if merged.last().is_none_or(|&last| t - last > merge_tol) {
                merged.push(t);
            }
        }
        let last = merged.len() - 1;
        merged[0] = 0.0;
        merged[last] = horizon;
        merged
    };

    // Frequency-dependent freezing: below the threshold frequency the
    // coefficient is frozen at its horizon value everywhere; above it, at
    // the switch instant (snapped to the nearest grid node).
    let freeze_everywhere = horizon * radius.powf(1.0 / qs_minus_s) <= 1.0;
    let switch_index = if freeze_everywhere {
        None
    } else {
        let t_switch = horizon - radius.powf(-1.0 / qs_minus_s);
        Some(nearest_index(&grid, t_switch))
    };

    let trajectory = integrate_on_grid(path, radius, a, b, &grid);
    let coefficient: Vec<f64> = grid.iter().map(|&t| path.value_at(t)).collect();
    let c_horizon = *path.values().last().expect("nonempty");
    let frozen_coefficient: Vec<f64> = match switch_index {
        None => vec![c_horizon; grid.len()],
        Some(sw) => {
            let frozen_value = coefficient[sw];
            coefficient
                .iter()
                .enumerate()
                .map(|(i, &c)| if i <= sw { c } else { frozen_value })
                .collect()
        }
    };

    // Decay rate at an interval endpoint, one-sided from inside the
    // interval; `frozen` is the frozen value on that interval (None while
    // the certificate still follows the path).
    let rate_at = |t: f64, seg: usize, frozen: Option<f64>| -> f64 {
        match frozen {
            None => path.segment_slope(seg).abs() / path.value_at(t),
            Some(cf) => (cf - path.value_at(t)).abs() * radius / nu0,
        }
    };

    let n = grid.len();
    let mut rate_integral = Vec::with_capacity(n);
    rate_integral.push(0.0);
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let (t0, t1) = (grid[i], grid[i + 1]);
        let mid = 0.5 * (t0 + t1);
        let seg = path.segment_index(mid);
        let frozen = match switch_index {
            None => Some(c_horizon),
            Some(sw) if i >= sw => Some(coefficient[sw]),
            Some(_) => None,
        };
        let r0 = rate_at(t0, seg, frozen);
        let r1 = rate_at(t1, seg, frozen);
        acc += 0.5 * (r0 + r1) * (t1 - t0);
        rate_integral.push(acc);
    }

    let radius_pow_sigma = radius.powf(4.0 * sigma);
    let gevrey_exponent = g.eta() * radius.powf(1.0 / s);
    let mut weights = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    for i in 0..n {
        let k = (gevrey_exponent - rate_integral[i]).exp();
        let quad = trajectory.w_dot[i].norm_sqr()
            + frozen_coefficient[i] * radius * radius * trajectory.w[i].norm_sqr();
        let e = quad * radius_pow_sigma * k;
        if !k.is_finite() || !e.is_finite() {
            return Err(Error::Internal(format!(
                "non-finite certificate weight or energy at t = {}",
                grid[i]
            )));
        }
        weights.push(k);
        energies.push(e);
    }

    let mut max_energy_increase: f64 = 0.0;
    for i in 0..n - 1 {
        if energies[i] > 0.0 {
            max_energy_increase =
                max_energy_increase.max((energies[i + 1] - energies[i]) / energies[i]);
        }
    }

    // Interval bound, specialized to this mode. The ratio is evaluated in
    // a form where the initial-weight exponentials cancel, so it stays
    // finite even when e^{eta |xi|^{1/s}} would not.
    let initial_quad = radius * radius * a.norm_sqr() + b.norm_sqr();
    let horizon_pow = horizon.powf(1.0 - qs_minus_s).max(1.0);
    let bound_scale = params.big_m.max(1.0) * (2.0 * params.big_m / nu0 * horizon_pow).exp();
    let mut interval_bound_ratio: f64 = 0.0;
    if initial_quad > 0.0 {
        let eta_deficit = (-required * radius.powf(1.0 / s)).exp();
        for i in 0..n {
            let lhs_quad = nu0 * radius * radius * trajectory.w[i].norm_sqr()
                + trajectory.w_dot[i].norm_sqr();
            let ratio = lhs_quad * eta_deficit / (bound_scale * initial_quad);
            interval_bound_ratio = interval_bound_ratio.max(ratio);
        }
    }
    let interval_bound_ok = interval_bound_ratio <= 1.0 + CERTIFICATE_STEP_TOL;

    Ok(CertificateReport {
        trajectory,
        coefficient,
        frozen_coefficient,
        rate_integral,
        weights,
        energies,
        max_energy_increase,
        interval_bound_ok,
        interval_bound_ratio,
    })
}

fn nearest_index(grid: &[f64], t: f64) -> usize {
    match grid.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => i,
        Err(i) => {
            if i == 0 {
                0
            } else if i >= grid.len() {
                grid.len() - 1
            } else if (t - grid[i - 1]) <= (grid[i] - t) {
                i - 1
            } else {
                i
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_family(amplitude_fraction: f64) -> CoefficientPath {
        CoefficientPath::oscillating(1.0, 2.0, 1.5, 1.0, amplitude_fraction, 0.0, 1e-6, 0.01)
            .unwrap()
    }

    #[test]
    fn constant_member_is_accepted() {
        let path = CoefficientPath::constant(1.0, 1.0).unwrap();
        let params = ClassKParams::new(1.0, 2.0, 0.0, 1.0, 1.5).unwrap();
        let report = check_class_membership(&path, &params, 1e-9).unwrap();
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn oscillating_family_membership_threshold() {
        // |c'| = 0.5 / (1 - t)^{3/2}: member iff K >= 0.5.
        let path = test_family(1.0);
        let accept = ClassKParams::new(1.0, 2.0, 0.5 * 1.01, 1.0, 1.5).unwrap();
        assert!(check_class_membership(&path, &accept, 1e-9).unwrap().ok);
        let reject = ClassKParams::new(1.0, 2.0, 0.5 * 0.9, 1.0, 1.5).unwrap();
        let report = check_class_membership(&path, &reject, 1e-9).unwrap();
        assert!(!report.ok);
        assert!(report.worst_violation > 0.0);
        assert!(report.location > 0.0 && report.location < 1.0);
    }

    #[test]
    fn value_violation_is_located() {
        let path = CoefficientPath::new(vec![0.0, 0.5, 1.0], vec![1.0, 3.0, 1.0]).unwrap();
        let params = ClassKParams::new(1.0, 2.0, 100.0, 1.0, 1.5).unwrap();
        let report = check_class_membership(&path, &params, 1e-9).unwrap();
        assert!(!report.ok);
        assert_eq!(report.location, 0.5);
        assert!((report.worst_violation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn horizon_mismatch_is_an_error() {
        let path = CoefficientPath::constant(1.0, 0.5).unwrap();
        let params = ClassKParams::new(1.0, 2.0, 0.0, 1.0, 1.5).unwrap();
        assert!(matches!(
            check_class_membership(&path, &params, 1e-9),
            Err(Error::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn cosine_mode() {
        let path = CoefficientPath::constant(1.0, std::f64::consts::PI).unwrap();
        let traj = solve_mode(&path, 1.0, c64(1.0, 0.0), c64(0.0, 0.0), 1e-3).unwrap();
        let w_end = traj.w.last().unwrap();
        assert!((w_end.re + 1.0).abs() < 1e-8, "{w_end}");
        assert!(w_end.im.abs() < 1e-12);
    }

    #[test]
    fn sine_mode_with_speed_four() {
        let path = CoefficientPath::constant(4.0, std::f64::consts::FRAC_PI_4).unwrap();
        let traj = solve_mode(&path, 1.0, c64(0.0, 0.0), c64(2.0, 0.0), 1e-3).unwrap();
        let w_end = traj.w.last().unwrap();
        assert!((w_end.re - 1.0).abs() < 1e-8, "{w_end}");
    }

    #[test]
    fn oversized_step_is_refused() {
        let path = CoefficientPath::constant(4.0, 1.0).unwrap();
        let err = solve_mode(&path, 10.0, c64(1.0, 0.0), c64(0.0, 0.0), 0.1).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn constant_coefficient_mode_conserves_energy() {
        let c_bar = 2.0;
        let radius = 1.5;
        let path = CoefficientPath::constant(c_bar, 5.0).unwrap();
        let traj = solve_mode(&path, radius, c64(0.8, 0.3), c64(-0.2, 0.5), 1e-3).unwrap();
        let energy = |i: usize| {
            traj.w_dot[i].norm_sqr() + c_bar * radius * radius * traj.w[i].norm_sqr()
        };
        let e0 = energy(0);
        for (i, &t) in traj.times.iter().enumerate() {
            let drift = (energy(i) - e0).abs() / e0;
            assert!(drift <= 1e-8 * (1.0 + t), "drift {drift:e} at t = {t}");
        }
    }

    #[test]
    fn half_step_self_consistency_on_the_family() {
        // Shallow refinement keeps the path structure resolvable at the
        // test step; see the envelope family's construction.
        let path =
            CoefficientPath::oscillating(1.0, 2.0, 1.5, 1.0, 1.0, 0.0, 0.05, 0.05).unwrap();
        let coarse = solve_mode(&path, 1.0, c64(1.0, 0.0), c64(0.0, 0.0), 5e-4).unwrap();
        let fine = solve_mode(&path, 1.0, c64(1.0, 0.0), c64(0.0, 0.0), 2.5e-4).unwrap();
        let w_coarse = coarse.w.last().unwrap();
        let w_fine = fine.w.last().unwrap();
        assert!((w_coarse - w_fine).norm() < 1e-6, "{w_coarse} vs {w_fine}");
    }

    #[test]
    fn fourth_order_convergence_constant_coefficient() {
        let t_end = 2.0 * std::f64::consts::PI;
        let path = CoefficientPath::constant(1.0, t_end).unwrap();
        let mut errors = Vec::new();
        for k in [10u32, 11] {
            let step = t_end / 2f64.powi(k as i32);
            let traj = solve_mode(&path, 1.0, c64(1.0, 0.0), c64(0.0, 0.0), step).unwrap();
            let mut err: f64 = 0.0;
            for (t, w) in traj.times.iter().zip(traj.w.iter()) {
                err = err.max((w.re - t.cos()).abs().max(w.im.abs()));
            }
            errors.push(err);
        }
        let order = (errors[0] / errors[1]).log2();
        assert!(order >= 3.5, "observed order {order}, errors {errors:?}");
    }

    #[test]
    fn sampled_instants_match_uniform_solve() {
        let path = CoefficientPath::new(vec![0.0, 0.4, 1.0], vec![1.0, 1.5, 1.2]).unwrap();
        let samples: Vec<f64> = vec![0.0, 0.25, 0.4, 0.7, 1.0];
        let traj = solve_mode_at(&path, 2.0, c64(0.3, -0.1), c64(0.0, 1.0), 1e-3, &samples).unwrap();
        let reference = solve_mode(&path, 2.0, c64(0.3, -0.1), c64(0.0, 1.0), 1e-4).unwrap();
        for (i, &t) in samples.iter().enumerate() {
            let j = reference
                .times
                .iter()
                .position(|&x| (x - t).abs() < 1e-12)
                .unwrap_or_else(|| panic!("sample {t} not on the reference grid"));
            assert!(
                (traj.w[i] - reference.w[j]).norm() < 1e-8,
                "t = {t}: {} vs {}",
                traj.w[i],
                reference.w[j]
            );
        }
    }

    #[test]
    fn constant_coefficient_certificate_collapses() {
        let path = CoefficientPath::constant(1.3, 2.0).unwrap();
        let params = ClassKParams::new(1.0, 2.0, 0.0, 2.0, 1.5).unwrap();
        let g = GevreyParams::new(2.0, 4.1).unwrap();
        let report =
            energy_certificate(&path, &params, 2.0, c64(1.0, 0.0), c64(0.0, 0.5), &g, 0.0, 1e-3)
                .unwrap();
        assert!(report.max_energy_increase <= 1e-8, "{}", report.max_energy_increase);
        // alpha vanishes identically for a constant coefficient.
        assert!(report.rate_integral.last().unwrap().abs() < 1e-14);
        let expected_weight = (4.1 * 2.0f64.powf(0.5)).exp();
        for k in &report.weights {
            assert!((k - expected_weight).abs() / expected_weight < 1e-12);
        }
        assert!(report.interval_bound_ok);
    }

    #[test]
    fn small_frequency_mode_freezes_everywhere() {
        let path = test_family(1.0);
        let params = ClassKParams::new(1.0, 2.0, 0.5, 1.0, 1.5).unwrap();
        let g = GevreyParams::new(2.0, 6.0).unwrap();
        let radius = 0.5; // horizon * radius^{1/(qs-s)} = 0.5 <= 1
        let report =
            energy_certificate(&path, &params, radius, c64(1.0, 0.0), c64(0.0, 0.0), &g, 0.0, 1e-3)
                .unwrap();
        // Frozen at the horizon value on the whole interval.
        let last = *report.coefficient.last().unwrap();
        assert!(report.frozen_coefficient.iter().all(|&v| v == last));
        // Certificate weight floor holds at every sample.
        let floor = certificate_weight_floor(&params, &g, radius);
        for (k, t) in report.weights.iter().zip(report.trajectory.times.iter()) {
            assert!(*k >= floor * (1.0 - 1e-12), "k = {k} < floor {floor} at t = {t}");
        }
        assert!(report.max_energy_increase <= 1e-6);
        assert!(report.interval_bound_ok);
    }

    #[test]
    fn inadmissible_eta_is_refused() {
        let path = test_family(1.0);
        let params = ClassKParams::new(1.0, 2.0, 0.5, 1.0, 1.5).unwrap();
        // required eta = (0.5/0.5 + 4)/1 = 5
        let g = GevreyParams::new(2.0, 5.0).unwrap();
        let err =
            energy_certificate(&path, &params, 1.0, c64(1.0, 0.0), c64(0.0, 0.0), &g, 0.0, 1e-3)
                .unwrap_err();
        assert!(matches!(err, Error::EtaInadmissible { .. }));
    }

    #[test]
    fn non_member_path_is_refused() {
        let path = test_family(1.0);
        let params = ClassKParams::new(1.0, 2.0, 0.25, 1.0, 1.5).unwrap();
        let g = GevreyParams::new(2.0, 10.0).unwrap();
        let err =
            energy_certificate(&path, &params, 1.0, c64(1.0, 0.0), c64(0.0, 0.0), &g, 0.0, 1e-3)
                .unwrap_err();
        assert!(matches!(err, Error::NotInClassK { .. }));
    }

    #[test]
    fn rate_integral_is_nondecreasing_and_weights_positive() {
        let path = test_family(0.8);
        let params = ClassKParams::new(1.0, 2.0, 0.5, 1.0, 1.5).unwrap();
        let g = GevreyParams::new(2.0, 6.0).unwrap();
        let report =
            energy_certificate(&path, &params, 10.0, c64(0.7, 0.2), c64(0.1, 0.0), &g, 0.0, 1e-3)
                .unwrap();
        for pair in report.rate_integral.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        assert!(report.weights.iter().all(|&k| k > 0.0));
    }

    #[test]
    fn refined_grid_shape() {
        let grid = refined_grid(1.0, 1e-6, 0.1).unwrap();
        assert_eq!(grid[0], 0.0);
        let last = *grid.last().unwrap();
        assert!((last - (1.0 - 1e-6)).abs() < 1e-15);
        for pair in grid.windows(2) {
            assert!(pair[1] > pair[0]);
        }
        // Spacing shrinks toward the singular time.
        let first_gap = grid[1] - grid[0];
        let last_gap = last - grid[grid.len() - 2];
        assert!(last_gap < first_gap);
    }
}
