//! The five subcommands: bound comparison, direct simulation, coefficient
//! fixed-point iteration, per-mode certification, and life-span probing.

use std::path::PathBuf;

use kirchhoff_gevrey::bounds::{classical_bound, compare_bounds, gevrey_bound};
use kirchhoff_gevrey::kirchhoff::{
    direct_solve_with_threshold, energy_32, fixed_point_solve, lifespan_probe, SimulationResult,
    SolveStatus,
};
use kirchhoff_gevrey::linear::{
    energy_certificate, ClassKParams, CoefficientPath, CERTIFICATE_STEP_TOL,
};
use kirchhoff_gevrey::nonlinearity::{DataConstants, NonlinearityModel};
use kirchhoff_gevrey::spectral::{GevreyParams, NormComponent, SpectralProfile};
use num_complex::Complex64;

use crate::config::{self, CertifyPathSpec, ConfigFile, OutputFormat, TargetSpec};
use crate::fmt;
use crate::CmdError;

/// Tolerance on the first-integral drift coefficient checked by
/// `simulate`: `|H(t) - H(0)|/H(0) <= FIRST_INTEGRAL_TOL * (1 + t)`.
const FIRST_INTEGRAL_TOL: f64 = 1e-8;
/// Slack on the domain bound `|grad u|^2 <= lambda`.
const DOMAIN_BOUND_TOL: f64 = 1e-8;
/// Tolerance for the per-mode closed-form comparison on constant models.
const LINEAR_MODE_TOL: f64 = 1e-8;

pub struct Ctx {
    pub config: ConfigFile,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Ctx {
    fn wants(&self, format: OutputFormat) -> bool {
        self.config.outputs.formats.contains(&format)
    }

    fn write(&self, name: &str, content: &str) -> Result<(), CmdError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CmdError::Config(format!("cannot write {}: {e}", path.display())))
    }

    fn say(&self, message: &str) {
        if !self.quiet {
            println!("{message}");
        }
    }

    fn report_header(&self, command: &str) -> String {
        let mut lines = format!("version = 1\ncommand = {command}\n");
        if let Some(seed) = self.seed {
            lines.push_str(&format!("seed = {seed}\n"));
        }
        lines
    }
}

/// Numerical preconditions and overflow refusals exit with code 3; an
/// internal consistency failure is a check failure (code 1).
fn numerical(e: kirchhoff_gevrey::Error) -> CmdError {
    use kirchhoff_gevrey::Error as E;
    match e {
        E::StepTooLarge { .. }
        | E::EtaInadmissible { .. }
        | E::EtaBelowThreshold { .. }
        | E::NumericalDivergence { .. }
        | E::WeightOverflow { .. }
        | E::HorizonMismatch { .. }
        | E::NotInClassK { .. } => CmdError::Refusal(e.to_string()),
        E::Internal(_) => CmdError::CheckFailed(e.to_string()),
        other => CmdError::Config(other.to_string()),
    }
}

fn gevrey_params(s: f64, eta: f64) -> Result<GevreyParams, CmdError> {
    GevreyParams::new(s, eta).map_err(|e| CmdError::Config(format!("gevrey: {e}")))
}

fn setup(ctx: &Ctx) -> Result<(NonlinearityModel, SpectralProfile, DataConstants), CmdError> {
    let model = config::build_model(&ctx.config.model)?;
    let profile = config::build_profile(&ctx.config.profile)?;
    let constants = DataConstants::from_data(&model, &profile)
        .map_err(|e| CmdError::Config(format!("profile: {e}")))?;
    Ok((model, profile, constants))
}

pub fn bounds(ctx: &Ctx) -> Result<(), CmdError> {
    let (model, profile, constants) = setup(ctx)?;
    let s = ctx.config.gevrey.s;
    let etas = config::eta_values(&ctx.config.gevrey);

    let mut rows = Vec::with_capacity(etas.len());
    let mut reports = Vec::with_capacity(etas.len());
    for &eta in &etas {
        let g = gevrey_params(s, eta)?;
        let report = compare_bounds(&model, &profile, &g).map_err(numerical)?;
        rows.push(format!(
            "{},{},{},{},{},{}",
            fmt::real(eta),
            fmt::ext(&report.classical),
            fmt::opt_ext(&report.gevrey),
            report.verdict,
            fmt::real(report.k_const),
            fmt::opt(report.eta_surplus),
        ));
        reports.push(report);
    }

    if ctx.wants(OutputFormat::Csv) {
        let mut csv = String::from("eta,classical,gevrey,verdict,K,eta_prime\n");
        for row in &rows {
            csv.push_str(row);
            csv.push('\n');
        }
        ctx.write("bounds.csv", &csv)?;
    }
    if ctx.wants(OutputFormat::Report) {
        let first = &reports[0];
        let mut text = ctx.report_header("bounds");
        text.push_str(&format!(
            "s = {}\nnu0 = {}\nh0 = {}\nlambda = {}\nbig_m = {}\nlip_l = {}\ne32_zero = {}\n",
            fmt::real(s),
            fmt::real(model.nu0()),
            fmt::real(constants.h0),
            fmt::real(constants.lambda),
            fmt::real(constants.big_m),
            fmt::real(constants.lip_l),
            fmt::real(first.e32_zero),
        ));
        if reports.len() == 1 {
            text.push_str(&format!(
                "eta = {}\npair_norm_sq = {}\nclassical = {}\ngevrey = {}\nK = {}\neta_prime = {}\nc_s = {}\nverdict = {}\n",
                fmt::real(first.eta),
                fmt::real(first.pair_norm_sq),
                fmt::ext(&first.classical),
                fmt::opt_ext(&first.gevrey),
                fmt::real(first.k_const),
                fmt::opt(first.eta_surplus),
                fmt::real(first.c_s),
                first.verdict,
            ));
        } else {
            let changes = reports
                .windows(2)
                .filter(|pair| pair[0].verdict != pair[1].verdict)
                .count();
            text.push_str(&format!(
                "eta_from = {}\neta_to = {}\neta_count = {}\nfirst_verdict = {}\nlast_verdict = {}\nverdict_changes = {changes}\n",
                fmt::real(etas[0]),
                fmt::real(*etas.last().unwrap()),
                etas.len(),
                reports[0].verdict,
                reports.last().unwrap().verdict,
            ));
        }
        ctx.write("bounds_report.txt", &text)?;
    }
    ctx.say(&format!(
        "bounds: {} eta value(s), last verdict {}",
        etas.len(),
        reports.last().unwrap().verdict
    ));
    Ok(())
}

fn simulation_csv(result: &SimulationResult) -> String {
    let shells = result.shell_states.first().map_or(0, |s| s.len());
    let mut csv = String::from("t,c,hamiltonian,e32");
    for j in 0..shells {
        csv.push_str(&format!(",w_re_{j},w_im_{j},wdot_re_{j},wdot_im_{j}"));
    }
    csv.push('\n');
    for i in 0..result.times.len() {
        csv.push_str(&format!(
            "{},{},{},{}",
            fmt::real(result.times[i]),
            fmt::real(result.c_trace[i]),
            fmt::real(result.hamiltonian_trace[i]),
            fmt::real(result.e32_trace[i]),
        ));
        for state in &result.shell_states[i] {
            csv.push_str(&format!(
                ",{},{},{},{}",
                fmt::real(state.w.re),
                fmt::real(state.w.im),
                fmt::real(state.w_dot.re),
                fmt::real(state.w_dot.im),
            ));
        }
        csv.push('\n');
    }
    csv
}

/// Max deviation of every mode from its constant-coefficient closed form
/// `a cos(w t) + b sin(w t)/w`, `w = sqrt(c) r`. Only meaningful when the
/// model is constant over the reachable domain.
fn linear_mode_error(
    profile: &SpectralProfile,
    result: &SimulationResult,
    c_value: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for (j, shell) in profile.shells().iter().enumerate() {
        let omega = c_value.sqrt() * shell.radius;
        for (i, &t) in result.times.iter().enumerate() {
            let expected =
                shell.pos_amp * (omega * t).cos() + shell.vel_amp * ((omega * t).sin() / omega);
            worst = worst.max((result.shell_states[i][j].w - expected).norm());
        }
    }
    worst
}

pub fn simulate(ctx: &Ctx) -> Result<(), CmdError> {
    let (model, profile, constants) = setup(ctx)?;
    let run = &ctx.config.run;
    let e32_zero = energy_32(&model, &profile).map_err(numerical)?;
    let threshold = run.blowup_factor * e32_zero;
    let result =
        direct_solve_with_threshold(&model, &profile, run.horizon, run.step, threshold)
            .map_err(numerical)?;

    let drift = result.hamiltonian_drift_coefficient();
    let first_integral_ok = drift <= FIRST_INTEGRAL_TOL;
    let max_grad = result.max_grad_sq();
    let domain_ok = max_grad <= constants.lambda + DOMAIN_BOUND_TOL;
    let linear_error = if constants.lip_l == 0.0 {
        Some(linear_mode_error(&profile, &result, result.c_trace[0]))
    } else {
        None
    };
    let linear_ok = linear_error.is_none_or(|e| e <= LINEAR_MODE_TOL);
    let ok = first_integral_ok && domain_ok && linear_ok;

    if ctx.wants(OutputFormat::Csv) {
        ctx.write("simulate.csv", &simulation_csv(&result))?;
    }
    if ctx.wants(OutputFormat::Report) {
        let mut text = ctx.report_header("simulate");
        let (status, flagged) = match result.status {
            SolveStatus::Completed => ("completed".to_string(), "nan".to_string()),
            SolveStatus::BlowupFlagged { t } => ("blowup_flagged".to_string(), fmt::real(t)),
        };
        text.push_str(&format!(
            "status = {status}\nflagged_at = {flagged}\nt_end = {}\nhamiltonian_drift_coefficient = {}\nfirst_integral_ok = {first_integral_ok}\nmax_grad_sq = {}\nlambda = {}\ndomain_bound_ok = {domain_ok}\nmax_e32 = {}\n",
            fmt::real(*result.times.last().unwrap()),
            fmt::real(drift),
            fmt::real(max_grad),
            fmt::real(constants.lambda),
            fmt::real(result.max_e32()),
        ));
        if let Some(err) = linear_error {
            text.push_str(&format!(
                "linear_mode_max_error = {}\nlinear_mode_ok = {linear_ok}\n",
                fmt::real(err)
            ));
        }
        text.push_str(&format!("all_checks_ok = {ok}\n"));
        ctx.write("simulate_report.txt", &text)?;
    }
    ctx.say(&format!(
        "simulate: drift coefficient {:.3e}, max |grad u|^2 {:.6}, checks {}",
        drift,
        max_grad,
        if ok { "passed" } else { "FAILED" }
    ));
    if ok {
        Ok(())
    } else {
        Err(CmdError::CheckFailed(format!(
            "simulation invariants violated: first_integral_ok = {first_integral_ok}, domain_bound_ok = {domain_ok}, linear_mode_ok = {linear_ok}"
        )))
    }
}

pub fn theta(ctx: &Ctx) -> Result<(), CmdError> {
    let (model, profile, _) = setup(ctx)?;
    let run = &ctx.config.run;
    let result = fixed_point_solve(&model, &profile, run.horizon, run.tol, run.max_iter, run.step)
        .map_err(numerical)?;

    if ctx.wants(OutputFormat::Csv) {
        let mut distances = String::from("iteration,distance\n");
        for (i, d) in result.distances.iter().enumerate() {
            distances.push_str(&format!("{},{}\n", i + 1, fmt::real(*d)));
        }
        ctx.write("theta_distances.csv", &distances)?;

        let mut coefficient = String::from("t,c\n");
        for (&t, &v) in result
            .fixed_point
            .times()
            .iter()
            .zip(result.fixed_point.values().iter())
        {
            coefficient.push_str(&format!("{},{}\n", fmt::real(t), fmt::real(v)));
        }
        ctx.write("theta_coefficient.csv", &coefficient)?;
        ctx.write("theta_solution.csv", &simulation_csv(&result.solution))?;
    }

    let gap_ok = match result.direct_gap {
        Some(gap) => gap <= 10.0 * run.tol,
        None => true, // non-convergence is diagnostic, not a failure
    };
    if ctx.wants(OutputFormat::Report) {
        let mut text = ctx.report_header("theta");
        text.push_str(&format!(
            "converged = {}\niterations = {}\nfinal_distance = {}\ndirect_gap = {}\ndirect_gap_ok = {gap_ok}\n",
            result.converged,
            result.distances.len(),
            fmt::opt(result.distances.last().copied()),
            fmt::opt(result.direct_gap),
        ));
        ctx.write("theta_report.txt", &text)?;
    }
    ctx.say(&format!(
        "theta: converged = {} in {} iterations, direct gap {}",
        result.converged,
        result.distances.len(),
        fmt::opt(result.direct_gap)
    ));
    if gap_ok {
        Ok(())
    } else {
        Err(CmdError::CheckFailed(format!(
            "fixed-point coefficient deviates from the direct solve: gap {} > 10 tol",
            fmt::opt(result.direct_gap)
        )))
    }
}

pub fn certify(ctx: &Ctx) -> Result<(), CmdError> {
    let certify = ctx
        .config
        .certify
        .as_ref()
        .ok_or_else(|| CmdError::Config("certify: section required for this command".to_string()))?;
    if certify.radii.is_empty() {
        return Err(CmdError::Config("certify.radii: need at least one radius".to_string()));
    }
    let (model, profile, constants) = setup(ctx)?;
    let s = ctx.config.gevrey.s;
    let eta = config::single_eta(&ctx.config.gevrey)?;
    let g = gevrey_params(s, eta)?;
    let q = (s + 1.0) / s;
    let nu0 = model.nu0();
    let horizon = ctx.config.run.horizon;

    let grad0 = profile
        .weighted_norm_sq(0.0, 1.0, 1.0, NormComponent::Position)
        .map_err(numerical)?;
    let (path, big_m_eff, default_k) = match &certify.path {
        CertifyPathSpec::Constant { value } => {
            let v = match value {
                Some(v) => *v,
                None => model.eval(grad0).map_err(numerical)?,
            };
            let path = CoefficientPath::constant(v, horizon)
                .map_err(|e| CmdError::Config(format!("certify.path: {e}")))?;
            (path, constants.big_m.max(v), 0.0)
        }
        CertifyPathSpec::Oscillating {
            amplitude_fraction,
            big_m,
            eps_frac,
            ratio,
        } => {
            let m = big_m.unwrap_or(constants.big_m);
            let path = CoefficientPath::oscillating(
                nu0,
                m,
                q,
                horizon,
                *amplitude_fraction,
                0.0,
                *eps_frac,
                *ratio,
            )
            .map_err(|e| CmdError::Config(format!("certify.path: {e}")))?;
            (path, m, amplitude_fraction * 0.5 * (m - nu0))
        }
    };
    let k_const = certify.k_const.unwrap_or(default_k);
    let params = ClassKParams::new(nu0, big_m_eff, k_const, horizon, q)
        .map_err(|e| CmdError::Config(format!("certify: {e}")))?;

    let mut report_text = ctx.report_header("certify");
    report_text.push_str(&format!(
        "nu0 = {}\nbig_m = {}\nk_const = {}\nq = {}\neta = {}\nsigma = {}\nradii = {}\n",
        fmt::real(nu0),
        fmt::real(big_m_eff),
        fmt::real(k_const),
        fmt::real(q),
        fmt::real(eta),
        fmt::real(certify.sigma),
        certify.radii.len(),
    ));
    let mut all_ok = true;
    for (i, &radius) in certify.radii.iter().enumerate() {
        let cert = energy_certificate(
            &path,
            &params,
            radius,
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            &g,
            certify.sigma,
            ctx.config.run.step,
        )
        .map_err(numerical)?;
        let decay_ok = cert.max_energy_increase <= CERTIFICATE_STEP_TOL;
        let ok = decay_ok && cert.interval_bound_ok;
        all_ok &= ok;

        if ctx.wants(OutputFormat::Csv) {
            let mut csv = String::from("t,w_re,w_im,wdot_re,wdot_im,c,c_star,alpha_int,k,E\n");
            for n in 0..cert.trajectory.times.len() {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    fmt::real(cert.trajectory.times[n]),
                    fmt::real(cert.trajectory.w[n].re),
                    fmt::real(cert.trajectory.w[n].im),
                    fmt::real(cert.trajectory.w_dot[n].re),
                    fmt::real(cert.trajectory.w_dot[n].im),
                    fmt::real(cert.coefficient[n]),
                    fmt::real(cert.frozen_coefficient[n]),
                    fmt::real(cert.rate_integral[n]),
                    fmt::real(cert.weights[n]),
                    fmt::real(cert.energies[n]),
                ));
            }
            ctx.write(&format!("certificate_{i}.csv"), &csv)?;
        }
        report_text.push_str(&format!(
            "radius_{i} = {}\nmax_energy_increase_{i} = {}\ninterval_bound_ratio_{i} = {}\ndecay_ok_{i} = {decay_ok}\ninterval_bound_ok_{i} = {}\n",
            fmt::real(radius),
            fmt::real(cert.max_energy_increase),
            fmt::real(cert.interval_bound_ratio),
            cert.interval_bound_ok,
        ));
        ctx.say(&format!(
            "certify: radius {radius}: max energy increase {:.3e}, interval ratio {:.3e}, {}",
            cert.max_energy_increase,
            cert.interval_bound_ratio,
            if ok { "ok" } else { "FAILED" }
        ));
    }
    report_text.push_str(&format!("all_radii_ok = {all_ok}\n"));
    if ctx.wants(OutputFormat::Report) {
        ctx.write("certify_report.txt", &report_text)?;
    }
    if all_ok {
        Ok(())
    } else {
        Err(CmdError::CheckFailed(
            "certificate failed for at least one radius".to_string(),
        ))
    }
}

pub fn probe(ctx: &Ctx) -> Result<(), CmdError> {
    let (model, profile, constants) = setup(ctx)?;
    let run = &ctx.config.run;
    let e32_zero = energy_32(&model, &profile).map_err(numerical)?;

    let default_target = TargetSpec::Classical;
    let target_spec = ctx
        .config
        .probe
        .as_ref()
        .map_or(&default_target, |p| &p.target);
    let (target_name, target) = match target_spec {
        TargetSpec::Time { value } => ("time", *value),
        TargetSpec::Classical => {
            let bound = classical_bound(model.nu0(), constants.lip_l, e32_zero)
                .map_err(numerical)?;
            match bound.finite() {
                Some(t) => ("classical", t),
                None => {
                    return Err(CmdError::Config(
                        "probe: classical bound is infinite; give an explicit time target"
                            .to_string(),
                    ))
                }
            }
        }
        TargetSpec::Gevrey => {
            let eta = config::single_eta(&ctx.config.gevrey)?;
            let g = gevrey_params(ctx.config.gevrey.s, eta)?;
            let pair = profile.pair_gevrey_norm_sq(&g).map_err(numerical)?;
            let bound = gevrey_bound(
                model.nu0(),
                constants.big_m,
                constants.lip_l,
                g.s(),
                g.eta(),
                pair,
            )
            .map_err(numerical)?;
            match bound.finite() {
                Some(t) => ("gevrey", t),
                None => {
                    return Err(CmdError::Config(
                        "probe: Gevrey bound is infinite; give an explicit time target".to_string(),
                    ))
                }
            }
        }
    };

    let threshold = run.blowup_factor * e32_zero;
    let report = lifespan_probe(&model, &profile, target, threshold, run.step).map_err(numerical)?;

    if ctx.wants(OutputFormat::Report) {
        let mut text = ctx.report_header("probe");
        text.push_str(&format!(
            "target_kind = {target_name}\ntarget = {}\nblowup_threshold = {}\nreached = {}\nflagged_at = {}\nmax_e32 = {}\n",
            fmt::real(target),
            fmt::real(threshold),
            report.reached,
            fmt::opt(report.flagged_at),
            fmt::real(report.max_e32),
        ));
        ctx.write("probe_report.txt", &text)?;
    }
    ctx.say(&format!(
        "probe: target {target_name} t = {:.6}, reached = {}, max E_3/2 = {:.6e}",
        target, report.reached, report.max_e32
    ));
    if report.reached {
        Ok(())
    } else {
        Err(CmdError::CheckFailed(format!(
            "probe did not reach t = {target}: flagged at {}",
            fmt::opt(report.flagged_at)
        )))
    }
}
