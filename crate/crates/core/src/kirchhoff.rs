//! The nonlinear Kirchhoff system in frequency space.
//!
//! Each shell obeys `w_j'' + phi(sum_k mass_k r_k^2 |w_k|^2) r_j^2 w_j = 0`;
//! the shells couple only through the scalar coefficient. Two solution
//! routes are provided: a direct method-of-lines integration with the
//! coefficient re-evaluated at every integrator substage, and the
//! coefficient fixed-point iteration (solve linearly under a trial
//! coefficient, read back the induced coefficient, repeat).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linear::{refined_grid, solve_mode, solve_mode_at, CoefficientPath};
use crate::nonlinearity::{DataConstants, NonlinearityModel};
use crate::spectral::{FrequencyShell, NormComponent, SpectralProfile};

/// Default blow-up threshold factor: the flag trips when the 3/2-energy
/// exceeds this multiple of its initial value.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e6;

/// Node spacing parameters of the fixed-point coefficient grid. The grid
/// is geometrically refined toward the horizon and truncated at
/// `(1 - FIXED_POINT_EPS_FRAC) * horizon` because admissible coefficients
/// may have unbounded derivative at the horizon itself.
pub const FIXED_POINT_EPS_FRAC: f64 = 1e-6;
pub const FIXED_POINT_GRID_RATIO: f64 = 0.05;

/// One shell's state at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellState {
    pub w: Complex64,
    pub w_dot: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveStatus {
    Completed,
    BlowupFlagged { t: f64 },
}

/// Trajectory of the coupled system plus the recorded scalar traces.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    /// `shell_states[instant][shell]` in canonical shell order.
    pub shell_states: Vec<Vec<ShellState>>,
    pub c_trace: Vec<f64>,
    pub grad_sq_trace: Vec<f64>,
    pub hamiltonian_trace: Vec<f64>,
    pub e32_trace: Vec<f64>,
    pub status: SolveStatus,
}

impl SimulationResult {
    pub fn max_grad_sq(&self) -> f64 {
        self.grad_sq_trace.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_e32(&self) -> f64 {
        self.e32_trace.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest `|H(t) - H(0)| / (H(0) (1 + t))` over the recorded instants.
    pub fn hamiltonian_drift_coefficient(&self) -> f64 {
        let h0 = self.hamiltonian_trace[0];
        self.hamiltonian_trace
            .iter()
            .zip(self.times.iter())
            .map(|(&h, &t)| (h - h0).abs() / (h0 * (1.0 + t)))
            .fold(0.0, f64::max)
    }
}

/// First integral `H = |u_t|_{L^2}^2 + int_0^{|grad u|^2} phi`; conserved
/// along exact solutions.
pub fn hamiltonian(model: &NonlinearityModel, state: &SpectralProfile) -> Result<f64> {
    let vel_l2 = state.weighted_norm_sq(0.0, 1.0, 0.0, NormComponent::Velocity)?;
    let grad_sq = state.weighted_norm_sq(0.0, 1.0, 1.0, NormComponent::Position)?;
    Ok(vel_l2 + model.integral(grad_sq)?)
}

/// Energy of order 3/2:
/// `phi(|grad u|^2) |u|_{H^{3/2}}^2 + |u_t|_{H^{1/2}}^2`. Its blow-up
/// characterizes a finite life span.
pub fn energy_32(model: &NonlinearityModel, state: &SpectralProfile) -> Result<f64> {
    let grad_sq = state.weighted_norm_sq(0.0, 1.0, 1.0, NormComponent::Position)?;
    let pos = state.weighted_norm_sq(0.0, 1.0, 1.5, NormComponent::Position)?;
    let vel = state.weighted_norm_sq(0.0, 1.0, 0.5, NormComponent::Velocity)?;
    Ok(model.eval(grad_sq)? * pos + vel)
}

fn grad_sq_of(shells: &[FrequencyShell], w: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for (shell, wi) in shells.iter().zip(w.iter()) {
        acc += shell.mass * shell.radius * shell.radius * wi.norm_sqr();
    }
    acc
}

/// Derivative of the packed state `[w..., w_dot...]` with the coefficient
/// evaluated at the stage state itself (fully coupled).
fn system_deriv(
    model: &NonlinearityModel,
    shells: &[FrequencyShell],
    state: &[Complex64],
    out: &mut [Complex64],
) {
    let j = shells.len();
    let (w, v) = state.split_at(j);
    let phi = model.eval_nonneg(grad_sq_of(shells, w));
    for i in 0..j {
        out[i] = v[i];
        out[j + i] = w[i] * (-phi * shells[i].radius * shells[i].radius);
    }
}

fn axpy(out: &mut [Complex64], base: &[Complex64], k: &[Complex64], h: f64) {
    for ((o, b), ki) in out.iter_mut().zip(base.iter()).zip(k.iter()) {
        *o = b + ki * h;
    }
}

/// Runs the coupled solver up to `horizon` with the default blow-up
/// threshold (`DEFAULT_BLOWUP_FACTOR` times the initial 3/2-energy).
pub fn direct_solve(
    model: &NonlinearityModel,
    profile: &SpectralProfile,
    horizon: f64,
    step: f64,
) -> Result<SimulationResult> {
    let e32_zero = energy_32(model, profile)?;
    direct_solve_with_threshold(model, profile, horizon, step, DEFAULT_BLOWUP_FACTOR * e32_zero)
}

/// Runs the coupled solver with an explicit blow-up threshold on the
/// 3/2-energy. Integration stops early (with `BlowupFlagged`) when the
/// threshold is exceeded, and fails with a divergence error when the
/// state leaves the finite range.
pub fn direct_solve_with_threshold(
    model: &NonlinearityModel,
    profile: &SpectralProfile,
    horizon: f64,
    step: f64,
    blowup_threshold: f64,
) -> Result<SimulationResult> {
    profile.require_nontrivial()?;
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidParams(format!("step must be positive, got {step}")));
    }
    // The conserved energy pins the coefficient below M, so the fastest
    // oscillation is max_radius * sqrt(M).
    let constants = DataConstants::from_data(model, profile)?;
    let max_step = 0.5 / (profile.max_radius() * constants.big_m.sqrt());
    if step > max_step {
        return Err(Error::StepTooLarge { step, max_step });
    }

    let shells = profile.shells();
    let j = shells.len();
    let times = crate::linear::uniform_grid(horizon, step);

    let mut state: Vec<Complex64> = Vec::with_capacity(2 * j);
    state.extend(shells.iter().map(|s| s.pos_amp));
    state.extend(shells.iter().map(|s| s.vel_amp));

    let mut k1 = vec![Complex64::default(); 2 * j];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();

    let mut result = SimulationResult {
        times: Vec::with_capacity(times.len()),
        shell_states: Vec::with_capacity(times.len()),
        c_trace: Vec::with_capacity(times.len()),
        grad_sq_trace: Vec::with_capacity(times.len()),
        hamiltonian_trace: Vec::with_capacity(times.len()),
        e32_trace: Vec::with_capacity(times.len()),
        status: SolveStatus::Completed,
    };

    for i in 0..times.len() {
        let t = times[i];
        if state.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalDivergence { t });
        }
        let (w, v) = state.split_at(j);
        let state_profile = profile.with_state(w, v)?;
        let grad = state_profile.weighted_norm_sq(0.0, 1.0, 1.0, NormComponent::Position)?;
        let h_val = hamiltonian(model, &state_profile)?;
        let e32 = energy_32(model, &state_profile)?;
        if !h_val.is_finite() || !e32.is_finite() {
            return Err(Error::NumericalDivergence { t });
        }
        result.times.push(t);
        result
            .shell_states
            .push(w.iter().zip(v.iter()).map(|(&w, &w_dot)| ShellState { w, w_dot }).collect());
        result.grad_sq_trace.push(grad);
        result.c_trace.push(model.eval_nonneg(grad));
        result.hamiltonian_trace.push(h_val);
        result.e32_trace.push(e32);

        if e32 > blowup_threshold {
            result.status = SolveStatus::BlowupFlagged { t };
            break;
        }
        if i + 1 == times.len() {
            break;
        }

        let h = times[i + 1] - t;
        system_deriv(model, shells, &state, &mut k1);
        axpy(&mut stage, &state, &k1, 0.5 * h);
        system_deriv(model, shells, &stage, &mut k2);
        axpy(&mut stage, &state, &k2, 0.5 * h);
        system_deriv(model, shells, &stage, &mut k3);
        axpy(&mut stage, &state, &k3, h);
        system_deriv(model, shells, &stage, &mut k4);
        let sixth = h / 6.0;
        for idx in 0..2 * j {
            state[idx] += (k1[idx] + (k2[idx] + k3[idx]) * 2.0 + k4[idx]) * sixth;
        }
    }

    Ok(result)
}

/// One step of the coefficient self-consistency map: solve every shell
/// linearly under `path`, read `|grad v|^2` at the path's own node times,
/// and return the truncated coefficient `phi*(|grad v(t_i)|^2)` on the
/// same node grid.
pub fn coefficient_update(
    model: &NonlinearityModel,
    lambda: f64,
    profile: &SpectralProfile,
    path: &CoefficientPath,
    step: f64,
) -> Result<CoefficientPath> {
    let shells = profile.shells();
    let nodes = path.times();
    let mut grads = vec![0.0; nodes.len()];
    for shell in shells {
        let traj = solve_mode_at(path, shell.radius, shell.pos_amp, shell.vel_amp, step, nodes)?;
        let factor = shell.mass * shell.radius * shell.radius;
        for (g, w) in grads.iter_mut().zip(traj.w.iter()) {
            *g += factor * w.norm_sqr();
        }
    }
    let values = grads
        .iter()
        .map(|&g| model.eval_truncated(lambda, g))
        .collect::<Result<Vec<f64>>>()?;
    CoefficientPath::new(nodes.to_vec(), values)
}

/// Result of the coefficient fixed-point iteration.
#[derive(Debug, Clone)]
pub struct FixedPointResult {
    /// The iterate sequence, starting from the constant initial guess.
    pub iterates: Vec<CoefficientPath>,
    /// Residual sup-norm gaps `sup_i |update(c_m)(t_i) - c_m(t_i)|`, one
    /// per iteration.
    pub distances: Vec<f64>,
    pub converged: bool,
    pub fixed_point: CoefficientPath,
    /// Linear solve of every shell under `fixed_point`.
    pub solution: SimulationResult,
    /// On converged runs: sup-node gap between the fixed-point coefficient
    /// and the direct solver's coefficient trace.
    pub direct_gap: Option<f64>,
}

/// Iterates the coefficient map from the constant initial guess
/// `c = phi(|grad u0|^2)` until the residual drops below `tol`. If the
/// residuals stall (non-monotone over five iterations), the iteration
/// switches to averaged relaxation with weight 1/2 — a numerical device,
/// not part of the underlying construction.
pub fn fixed_point_solve(
    model: &NonlinearityModel,
    profile: &SpectralProfile,
    horizon: f64,
    tol: f64,
    max_iter: usize,
    step: f64,
) -> Result<FixedPointResult> {
    profile.require_nontrivial()?;
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParams(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParams("max_iter must be at least 1".to_string()));
    }

    let constants = DataConstants::from_data(model, profile)?;
    let grad0 = profile.weighted_norm_sq(0.0, 1.0, 1.0, NormComponent::Position)?;
    let c0 = model.eval(grad0)?;
    let grid = refined_grid(horizon, FIXED_POINT_EPS_FRAC, FIXED_POINT_GRID_RATIO)?;
    let mut path = CoefficientPath::new(grid.clone(), vec![c0; grid.len()])?;

    let mut iterates = vec![path.clone()];
    let mut distances = Vec::new();
    let mut converged = false;
    let mut relaxed = false;
    let mut fixed_point = path.clone();

    for _ in 0..max_iter {
        let updated = coefficient_update(model, constants.lambda, profile, &path, step)?;
        let residual = updated.sup_distance(&path)?;
        distances.push(residual);
        if residual <= tol {
            // The pre-image is the verified fixed point: its residual is
            // exactly the gap that just converged.
            fixed_point = path.clone();
            iterates.push(updated);
            converged = true;
            break;
        }
        if !relaxed && distances.len() >= 5 {
            let tail = &distances[distances.len() - 5..];
            if tail.windows(2).any(|p| p[1] >= p[0]) {
                relaxed = true;
            }
        }
        path = if relaxed {
            let blended: Vec<f64> = path
                .values()
                .iter()
                .zip(updated.values().iter())
                .map(|(old, new)| 0.5 * old + 0.5 * new)
                .collect();
            CoefficientPath::new(grid.clone(), blended)?
        } else {
            updated
        };
        iterates.push(path.clone());
        fixed_point = path.clone();
    }

    let solution = linear_solution(model, profile, &fixed_point, step)?;
    let direct_gap = if converged {
        let direct = direct_solve(model, profile, fixed_point.horizon(), step)?;
        let mut gap: f64 = 0.0;
        for (&t, &v) in fixed_point.times().iter().zip(fixed_point.values().iter()) {
            let direct_c = interp(&direct.times, &direct.c_trace, t);
            gap = gap.max((v - direct_c).abs());
        }
        Some(gap)
    } else {
        None
    };

    Ok(FixedPointResult {
        iterates,
        distances,
        converged,
        fixed_point,
        solution,
        direct_gap,
    })
}

/// Assembles a `SimulationResult` by solving every shell linearly under a
/// fixed coefficient path on the uniform step grid.
fn linear_solution(
    model: &NonlinearityModel,
    profile: &SpectralProfile,
    path: &CoefficientPath,
    step: f64,
) -> Result<SimulationResult> {
    let shells = profile.shells();
    let trajectories: Vec<_> = shells
        .iter()
        .map(|s| solve_mode(path, s.radius, s.pos_amp, s.vel_amp, step))
        .collect::<Result<Vec<_>>>()?;
    let times = trajectories
        .first()
        .map(|t| t.times.clone())
        .unwrap_or_else(|| vec![0.0]);

    let mut result = SimulationResult {
        times: times.clone(),
        shell_states: Vec::with_capacity(times.len()),
        c_trace: Vec::with_capacity(times.len()),
        grad_sq_trace: Vec::with_capacity(times.len()),
        hamiltonian_trace: Vec::with_capacity(times.len()),
        e32_trace: Vec::with_capacity(times.len()),
        status: SolveStatus::Completed,
    };
    for (i, &t) in times.iter().enumerate() {
        let w: Vec<Complex64> = trajectories.iter().map(|tr| tr.w[i]).collect();
        let v: Vec<Complex64> = trajectories.iter().map(|tr| tr.w_dot[i]).collect();
        let state_profile = profile.with_state(&w, &v)?;
        let grad = state_profile.weighted_norm_sq(0.0, 1.0, 1.0, NormComponent::Position)?;
        result
            .shell_states
            .push(w.iter().zip(v.iter()).map(|(&w, &w_dot)| ShellState { w, w_dot }).collect());
        result.grad_sq_trace.push(grad);
        result.c_trace.push(path.value_at(t));
        result.hamiltonian_trace.push(hamiltonian(model, &state_profile)?);
        result.e32_trace.push(energy_32(model, &state_profile)?);
    }
    Ok(result)
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return values[0];
    }
    if t >= *times.last().unwrap() {
        return *values.last().unwrap();
    }
    let idx = match times.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => return values[i],
        Err(i) => i,
    };
    let (t0, t1) = (times[idx - 1], times[idx]);
    let (v0, v1) = (values[idx - 1], values[idx]);
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Life-span probe outcome.
#[derive(Debug, Clone, Copy)]
pub struct ProbeReport {
    pub reached: bool,
    pub flagged_at: Option<f64>,
    pub max_e32: f64,
}

/// Runs the direct solver to `t_target` and reports whether the state
/// stayed finite with the 3/2-energy below the blow-up threshold.
pub fn lifespan_probe(
    model: &NonlinearityModel,
    profile: &SpectralProfile,
    t_target: f64,
    blowup_threshold: f64,
    step: f64,
) -> Result<ProbeReport> {
    if !t_target.is_finite() || t_target <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "probe target must be positive, got {t_target}"
        )));
    }
    match direct_solve_with_threshold(model, profile, t_target, step, blowup_threshold) {
        Ok(result) => {
            let max_e32 = result.max_e32();
            Ok(match result.status {
                SolveStatus::Completed => ProbeReport {
                    reached: true,
                    flagged_at: None,
                    max_e32,
                },
                SolveStatus::BlowupFlagged { t } => ProbeReport {
                    reached: false,
                    flagged_at: Some(t),
                    max_e32,
                },
            })
        }
        Err(Error::NumericalDivergence { t }) => Ok(ProbeReport {
            reached: false,
            flagged_at: Some(t),
            max_e32: f64::INFINITY,
        }),
        Err(other) => Err(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn canonical_model() -> NonlinearityModel {
        NonlinearityModel::affine(1.0, 1.0, 1.0).unwrap()
    }

    fn canonical_profile() -> SpectralProfile {
        SpectralProfile::single_shell(1.0, c64(1.0, 0.0), c64(0.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let model = canonical_model();
        assert!((hamiltonian(&model, &canonical_profile()).unwrap() - 1.5).abs() < 1e-15);

        let trivial = SpectralProfile::new_allow_trivial(
            vec![FrequencyShell::new(1.0, c64(0.0, 0.0), c64(0.0, 0.0), 1.0).unwrap()],
            1,
        )
        .unwrap();
        assert_eq!(hamiltonian(&model, &trivial).unwrap(), 0.0);

        let vel_only = SpectralProfile::single_shell(1.0, c64(0.0, 0.0), c64(1.0, 0.0), 1.0).unwrap();
        assert_eq!(hamiltonian(&model, &vel_only).unwrap(), 1.0);
    }

    #[test]
    fn energy_32_examples() {
        let model = canonical_model();
        assert!((energy_32(&model, &canonical_profile()).unwrap() - 2.0).abs() < 1e-15);

        let vel_only = SpectralProfile::single_shell(1.0, c64(0.0, 0.0), c64(1.0, 0.0), 1.0).unwrap();
        assert_eq!(energy_32(&model, &vel_only).unwrap(), 1.0);

        let linear = NonlinearityModel::affine(1.0, 0.0, 1.0).unwrap();
        let doubled = SpectralProfile::single_shell(1.0, c64(2.0, 0.0), c64(0.0, 0.0), 1.0).unwrap();
        assert_eq!(energy_32(&linear, &doubled).unwrap(), 4.0);
    }

    #[test]
    fn direct_solve_conserves_the_first_integral() {
        let result = direct_solve(&canonical_model(), &canonical_profile(), 2.0, 1e-3).unwrap();
        assert!(matches!(result.status, SolveStatus::Completed));
        assert!((result.hamiltonian_trace[0] - 1.5).abs() < 1e-12);
        assert!(result.hamiltonian_drift_coefficient() < 1e-8);
        // Domain bound from conservation.
        assert!(result.max_grad_sq() <= 1.5 + 1e-8);
    }

    #[test]
    fn linear_system_modes_match_closed_forms() {
        let model = NonlinearityModel::affine(1.0, 0.0, 1.0).unwrap();
        let shells = vec![
            FrequencyShell::new(1.0, c64(1.0, 0.0), c64(0.0, 0.0), 1.0).unwrap(),
            FrequencyShell::new(2.0, c64(0.0, 0.0), c64(1.0, 0.0), 0.5).unwrap(),
        ];
        let profile = SpectralProfile::new(shells, 1).unwrap();
        let result = direct_solve(&model, &profile, 3.0, 1e-3).unwrap();
        for (i, &t) in result.times.iter().enumerate() {
            let exact0 = t.cos();
            let exact1 = (2.0 * t).sin() / 2.0;
            assert!((result.shell_states[i][0].w.re - exact0).abs() < 1e-8);
            assert!((result.shell_states[i][1].w.re - exact1).abs() < 1e-8);
        }
    }

    #[test]
    fn oversized_step_is_refused() {
        let err = direct_solve(&canonical_model(), &canonical_profile(), 1.0, 0.4).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn canonical_run_matches_independent_scalar_reference() {
        // Unit shell with phi = 1 + rho reduces to the real scalar problem
        // y'' + (1 + y^2) y = 0, y(0) = 1, y'(0) = 0. The reference below
        // is a standalone integrator at a ten-times finer step.
        let horizon = 20.0;
        let step = 1e-3;
        let result = direct_solve(&canonical_model(), &canonical_profile(), horizon, step).unwrap();

        let accel = |y: f64| -(1.0 + y * y) * y;
        let rk4 = |y: f64, v: f64, h: f64| {
            let (k1y, k1v) = (v, accel(y));
            let (k2y, k2v) = (v + 0.5 * h * k1v, accel(y + 0.5 * h * k1y));
            let (k3y, k3v) = (v + 0.5 * h * k2v, accel(y + 0.5 * h * k2y));
            let (k4y, k4v) = (v + h * k3v, accel(y + h * k3y));
            (
                y + h / 6.0 * (k1y + 2.0 * (k2y + k3y) + k4y),
                v + h / 6.0 * (k1v + 2.0 * (k2v + k3v) + k4v),
            )
        };
        let (mut y, mut v) = (1.0, 0.0);
        let mut worst = 0.0f64;
        for i in 0..result.times.len() {
            let state = result.shell_states[i][0];
            worst = worst.max((state.w.re - y).abs().max(state.w.im.abs()));
            if i + 1 == result.times.len() {
                break;
            }
            let width = result.times[i + 1] - result.times[i];
            let h = width / 10.0;
            for _ in 0..10 {
                let (ny, nv) = rk4(y, v, h);
                y = ny;
                v = nv;
            }
        }
        assert!(worst <= 1e-6, "deviation from reference: {worst:e}");
    }

    #[test]
    fn update_matches_closed_form_for_unit_coefficient() {
        // v(t) = cos t, so the induced coefficient is 1 + cos^2 t
        // (truncation inactive: cos^2 <= 1 < lambda).
        let model = canonical_model();
        let profile = canonical_profile();
        let path = CoefficientPath::constant(1.0, 1.0).unwrap();
        let updated = coefficient_update(&model, 1.5, &profile, &path, 1e-3).unwrap();
        for (&t, &v) in updated.times().iter().zip(updated.values().iter()) {
            let expected = 1.0 + t.cos().powi(2);
            assert!((v - expected).abs() < 1e-6, "t = {t}: {v} vs {expected}");
        }
    }

    #[test]
    fn update_of_massless_profile_is_constant() {
        let model = canonical_model();
        let profile = SpectralProfile::new_allow_trivial(
            vec![FrequencyShell::new(1.0, c64(1.0, 0.0), c64(0.0, 0.0), 0.0).unwrap()],
            1,
        )
        .unwrap();
        let path = CoefficientPath::constant(2.0, 1.0).unwrap();
        let updated = coefficient_update(&model, 1.5, &profile, &path, 1e-3).unwrap();
        for &v in updated.values() {
            assert_eq!(v, 1.0); // phi(0)
        }
    }

    #[test]
    fn update_matches_velocity_only_closed_form() {
        // c = phi(0) = 1, data (a, b) = (0, 1): v(t) = sin(r t)/r with r = 1.
        let model = canonical_model();
        let profile = SpectralProfile::single_shell(1.0, c64(0.0, 0.0), c64(1.0, 0.0), 1.0).unwrap();
        let path = CoefficientPath::constant(1.0, 1.0).unwrap();
        // lambda for this data: h0 = 1, lambda = 1.
        let updated = coefficient_update(&model, 1.0, &profile, &path, 1e-3).unwrap();
        for (&t, &v) in updated.times().iter().zip(updated.values().iter()) {
            let expected = 1.0 + t.sin().powi(2).min(1.0);
            assert!((v - expected).abs() < 1e-6, "t = {t}: {v} vs {expected}");
        }
    }

    #[test]
    fn fixed_point_on_linear_model_converges_immediately() {
        let model = NonlinearityModel::affine(1.0, 0.0, 1.0).unwrap();
        let result =
            fixed_point_solve(&model, &canonical_profile(), 1.0, 1e-10, 10, 1e-3).unwrap();
        assert!(result.converged);
        assert_eq!(result.distances.len(), 1);
        assert_eq!(result.distances[0], 0.0);
        assert_eq!(result.iterates.len(), 2);
    }

    #[test]
    fn fixed_point_small_amplitude_matches_direct_solve() {
        let model = canonical_model();
        let profile = SpectralProfile::single_shell(1.0, c64(0.1, 0.0), c64(0.0, 0.0), 1.0).unwrap();
        let result = fixed_point_solve(&model, &profile, 1.0, 1e-8, 50, 5e-4).unwrap();
        assert!(result.converged, "distances: {:?}", result.distances);
        assert!(result.distances.len() <= 50);
        let gap = result.direct_gap.unwrap();
        assert!(gap <= 1e-6, "gap {gap}");
    }

    #[test]
    fn probe_on_linear_model_reaches_far_targets() {
        let model = NonlinearityModel::affine(1.0, 0.0, 1.0).unwrap();
        let profile = canonical_profile();
        let e0 = energy_32(&model, &profile).unwrap();
        let report = lifespan_probe(&model, &profile, 100.0, 1e6 * e0, 0.05).unwrap();
        assert!(report.reached);
        assert!((report.max_e32 - e0).abs() / e0 <= 1e-6);
    }

    #[test]
    fn probe_flags_when_threshold_is_tiny() {
        let model = canonical_model();
        let profile = canonical_profile();
        let report = lifespan_probe(&model, &profile, 1.0, 1e-3, 1e-3).unwrap();
        assert!(!report.reached);
        assert!(report.flagged_at.is_some());
    }
}
