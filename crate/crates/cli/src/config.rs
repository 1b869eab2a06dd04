//! Experiment configuration: a versioned JSON document describing the
//! nonlinearity, the spectral profile, the Gevrey weight (single value or
//! sweep), run parameters, and output selection.

use std::path::Path;

use kirchhoff_gevrey::nonlinearity::NonlinearityModel;
use kirchhoff_gevrey::spectral::{FrequencyShell, SpectralProfile};
use num_complex::Complex64;
use serde::Deserialize;

use crate::CmdError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub model: ModelSpec,
    pub profile: ProfileSpec,
    pub gevrey: GevreySpec,
    pub run: RunSpec,
    pub outputs: OutputsSpec,
    #[serde(default)]
    pub certify: Option<CertifySpec>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Affine { base: f64, slope: f64, nu0: f64 },
    Sampled { nodes: Vec<f64>, values: Vec<f64>, nu0: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub dimension: usize,
    #[serde(default)]
    pub shells: Option<Vec<ShellSpec>>,
    #[serde(default)]
    pub radial: Option<RadialSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub radius: f64,
    pub pos_re: f64,
    pub pos_im: f64,
    pub vel_re: f64,
    pub vel_im: f64,
    pub mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSpec {
    pub radii: Vec<f64>,
    pub u0_re: Vec<f64>,
    #[serde(default)]
    pub u0_im: Option<Vec<f64>>,
    #[serde(default)]
    pub u1_re: Option<Vec<f64>>,
    #[serde(default)]
    pub u1_im: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GevreySpec {
    pub s: f64,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub eta_sweep: Option<SweepSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub horizon: f64,
    pub step: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_blowup_factor")]
    pub blowup_factor: f64,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    50
}

fn default_blowup_factor() -> f64 {
    1e6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSpec {
    pub directory: String,
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Report,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    pub radii: Vec<f64>,
    pub path: CertifyPathSpec,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub k_const: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertifyPathSpec {
    Constant {
        #[serde(default)]
        value: Option<f64>,
    },
    Oscillating {
        #[serde(default = "default_amplitude_fraction")]
        amplitude_fraction: f64,
        #[serde(default)]
        big_m: Option<f64>,
        #[serde(default = "default_eps_frac")]
        eps_frac: f64,
        #[serde(default = "default_grid_ratio")]
        ratio: f64,
    },
}

fn default_amplitude_fraction() -> f64 {
    1.0
}

fn default_eps_frac() -> f64 {
    1e-6
}

fn default_grid_ratio() -> f64 {
    0.01
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub target: TargetSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Time { value: f64 },
    Classical,
    Gevrey,
}

pub fn load(path: &Path) -> Result<ConfigFile, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let config: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CmdError::Config(format!("config {}: {e}", path.display())))?;
    if config.version != 1 {
        return Err(CmdError::Config(format!(
            "version: unsupported config version {} (expected 1)",
            config.version
        )));
    }
    if config.outputs.formats.is_empty() {
        return Err(CmdError::Config(
            "outputs.formats: at least one of \"csv\", \"report\" is required".to_string(),
        ));
    }
    match (&config.gevrey.eta, &config.gevrey.eta_sweep) {
        (Some(_), None) | (None, Some(_)) => {}
        _ => {
            return Err(CmdError::Config(
                "gevrey: exactly one of eta / eta_sweep is required".to_string(),
            ))
        }
    }
    if let Some(sweep) = &config.gevrey.eta_sweep {
        if sweep.count < 2 || !(sweep.to > sweep.from) {
            return Err(CmdError::Config(
                "gevrey.eta_sweep: need count >= 2 and to > from".to_string(),
            ));
        }
    }
    match (&config.profile.shells, &config.profile.radial) {
        (Some(_), None) | (None, Some(_)) => {}
        _ => {
            return Err(CmdError::Config(
                "profile: exactly one of shells / radial is required".to_string(),
            ))
        }
    }
    Ok(config)
}

pub fn build_model(spec: &ModelSpec) -> Result<NonlinearityModel, CmdError> {
    let model = match spec {
        ModelSpec::Affine { base, slope, nu0 } => NonlinearityModel::affine(*base, *slope, *nu0),
        ModelSpec::Sampled { nodes, values, nu0 } => {
            NonlinearityModel::sampled(nodes.clone(), values.clone(), *nu0)
        }
    };
    model.map_err(|e| CmdError::Config(format!("model: {e}")))
}

pub fn build_profile(spec: &ProfileSpec) -> Result<SpectralProfile, CmdError> {
    if let Some(shells) = &spec.shells {
        let shells = shells
            .iter()
            .map(|s| {
                FrequencyShell::new(
                    s.radius,
                    Complex64::new(s.pos_re, s.pos_im),
                    Complex64::new(s.vel_re, s.vel_im),
                    s.mass,
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CmdError::Config(format!("profile.shells: {e}")))?;
        return SpectralProfile::new(shells, spec.dimension)
            .map_err(|e| CmdError::Config(format!("profile: {e}")));
    }
    let radial = spec.radial.as_ref().expect("validated by load");
    let n = radial.radii.len();
    let zeros = vec![0.0; n];
    let u0_im = radial.u0_im.as_deref().unwrap_or(&zeros);
    let u1_re = radial.u1_re.as_deref().unwrap_or(&zeros);
    let u1_im = radial.u1_im.as_deref().unwrap_or(&zeros);
    if radial.u0_re.len() != n || u0_im.len() != n || u1_re.len() != n || u1_im.len() != n {
        return Err(CmdError::Config(
            "profile.radial: all value lists must match the radii length".to_string(),
        ));
    }
    let u0: Vec<Complex64> = radial
        .u0_re
        .iter()
        .zip(u0_im.iter())
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    let u1: Vec<Complex64> = u1_re
        .iter()
        .zip(u1_im.iter())
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    SpectralProfile::from_radial_samples(&radial.radii, &u0, &u1, spec.dimension)
        .map_err(|e| CmdError::Config(format!("profile.radial: {e}")))
}

/// The eta values a command operates over: a single value or an inclusive
/// linear sweep.
pub fn eta_values(spec: &GevreySpec) -> Vec<f64> {
    if let Some(eta) = spec.eta {
        return vec![eta];
    }
    let sweep = spec.eta_sweep.as_ref().expect("validated by load");
    let n = sweep.count;
    (0..n)
        .map(|i| sweep.from + (sweep.to - sweep.from) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Commands other than `bounds` need one fixed eta.
pub fn single_eta(spec: &GevreySpec) -> Result<f64, CmdError> {
    spec.eta.ok_or_else(|| {
        CmdError::Config("gevrey: this command needs a single eta, not eta_sweep".to_string())
    })
}
