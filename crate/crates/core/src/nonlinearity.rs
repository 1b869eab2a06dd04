//! The propagation-speed function `phi` and its data-dependent constants.
//!
//! Models are restricted to affine and piecewise-linear families so that
//! the integral, supremum and Lipschitz constant over any interval are
//! exact closed forms — none of the downstream bound formulas picks up
//! quadrature or estimation error from here.

use crate::error::{Error, Result};
use crate::spectral::{NormComponent, SpectralProfile};

#[derive(Debug, Clone, PartialEq)]
enum PhiKind {
    Affine { base: f64, slope: f64 },
    /// Piecewise-linear interpolation through `(nodes, values)`, constant
    /// outside the node range.
    Sampled { nodes: Vec<f64>, values: Vec<f64> },
}

/// Locally Lipschitz propagation speed with `phi(rho) >= nu0 > 0` for all
/// `rho >= 0`, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityModel {
    kind: PhiKind,
    nu0: f64,
}

impl NonlinearityModel {
    /// `phi(rho) = base + slope * rho`. Requires `base >= nu0` and
    /// `slope >= 0` (a negative slope eventually drops below any positive
    /// floor).
    pub fn affine(base: f64, slope: f64, nu0: f64) -> Result<Self> {
        if !nu0.is_finite() || nu0 <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "nu0 must be finite and positive, got {nu0}"
            )));
        }
        if !base.is_finite() || !slope.is_finite() {
            return Err(Error::InvalidModel("affine coefficients must be finite".into()));
        }
        if slope < 0.0 {
            return Err(Error::InvalidModel(format!(
                "affine slope must be nonnegative to keep phi >= nu0 on [0, inf), got {slope}"
            )));
        }
        if base < nu0 {
            return Err(Error::InvalidModel(format!(
                "phi(0) = {base} violates the lower bound nu0 = {nu0}"
            )));
        }
        Ok(Self {
            kind: PhiKind::Affine { base, slope },
            nu0,
        })
    }

    /// Piecewise-linear model through `(nodes, values)`; constant beyond
    /// the last node (and, when `nodes[0] > 0`, constant below the first).
    pub fn sampled(nodes: Vec<f64>, values: Vec<f64>, nu0: f64) -> Result<Self> {
        if !nu0.is_finite() || nu0 <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "nu0 must be finite and positive, got {nu0}"
            )));
        }
        if nodes.is_empty() || nodes.len() != values.len() {
            return Err(Error::InvalidModel(format!(
                "need matching nonempty node/value lists, got {} nodes and {} values",
                nodes.len(),
                values.len()
            )));
        }
        if !nodes.iter().all(|x| x.is_finite() && *x >= 0.0) {
            return Err(Error::InvalidModel(
                "nodes must be finite and nonnegative".into(),
            ));
        }
        for pair in nodes.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidModel(format!(
                    "nodes must be strictly ascending, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        for &v in &values {
            if !v.is_finite() || v < nu0 {
                return Err(Error::InvalidModel(format!(
                    "sampled value {v} violates the lower bound nu0 = {nu0}"
                )));
            }
        }
        Ok(Self {
            kind: PhiKind::Sampled { nodes, values },
            nu0,
        })
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    /// Evaluates `phi(rho)` for `rho >= 0`.
    pub fn eval(&self, rho: f64) -> Result<f64> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::DomainError(format!(
                "phi is defined on [0, inf), got rho = {rho}"
            )));
        }
        Ok(self.eval_nonneg(rho))
    }

    /// Evaluation without the domain check; callers guarantee `rho >= 0`
    /// (sums of squares in the integrators).
    pub(crate) fn eval_nonneg(&self, rho: f64) -> f64 {
        match &self.kind {
            PhiKind::Affine { base, slope } => base + slope * rho,
            PhiKind::Sampled { nodes, values } => {
                if rho <= nodes[0] {
                    return values[0];
                }
                let last = nodes.len() - 1;
                if rho >= nodes[last] {
                    return values[last];
                }
                // rho strictly inside (nodes[0], nodes[last])
                let idx = match nodes.binary_search_by(|x| x.total_cmp(&rho)) {
                    Ok(i) => return values[i],
                    Err(i) => i, // first node greater than rho
                };
                let (x0, x1) = (nodes[idx - 1], nodes[idx]);
                let (y0, y1) = (values[idx - 1], values[idx]);
                y0 + (y1 - y0) * (rho - x0) / (x1 - x0)
            }
        }
    }

    /// The truncation `phi*`: equals `phi` on `[0, lambda]` and stays at
    /// `phi(lambda)` beyond. Continuous at the junction by construction.
    pub fn eval_truncated(&self, lambda: f64, rho: f64) -> Result<f64> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::DomainError(format!(
                "truncation level must be nonnegative, got {lambda}"
            )));
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::DomainError(format!(
                "phi* is defined on [0, inf), got rho = {rho}"
            )));
        }
        Ok(self.eval_nonneg(rho.min(lambda)))
    }

    /// Exact value of `int_0^upper phi(rho) drho` (closed form per segment).
    pub fn integral(&self, upper: f64) -> Result<f64> {
        if !upper.is_finite() || upper < 0.0 {
            return Err(Error::DomainError(format!(
                "integral upper limit must be nonnegative, got {upper}"
            )));
        }
        Ok(match &self.kind {
            PhiKind::Affine { base, slope } => base * upper + 0.5 * slope * upper * upper,
            PhiKind::Sampled { nodes, values } => {
                let mut acc = 0.0;
                // Constant head below the first node.
                let head_end = upper.min(nodes[0]);
                acc += values[0] * head_end;
                for i in 0..nodes.len() - 1 {
                    let (a, b) = (nodes[i], nodes[i + 1]);
                    let lo = a.max(0.0);
                    let hi = b.min(upper);
                    if hi > lo {
                        let fa = self.eval_nonneg(lo);
                        let fb = self.eval_nonneg(hi);
                        acc += 0.5 * (fa + fb) * (hi - lo);
                    }
                }
                let last = nodes[nodes.len() - 1];
                if upper > last {
                    acc += values[values.len() - 1] * (upper - last);
                }
                acc
            }
        })
    }

    /// Exact supremum of `phi` over `[0, upper]`.
    pub fn sup_on(&self, upper: f64) -> f64 {
        match &self.kind {
            PhiKind::Affine { base, slope } => base + slope * upper.max(0.0),
            PhiKind::Sampled { nodes, values } => {
                let mut sup = self.eval_nonneg(0.0).max(self.eval_nonneg(upper.max(0.0)));
                for (x, v) in nodes.iter().zip(values.iter()) {
                    if *x > 0.0 && *x < upper {
                        sup = sup.max(*v);
                    }
                }
                sup
            }
        }
    }

    /// Exact Lipschitz constant of `phi` over `[0, upper]`: the largest
    /// absolute segment slope with positive overlap.
    pub fn lipschitz_on(&self, upper: f64) -> f64 {
        if upper <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            PhiKind::Affine { slope, .. } => slope.abs(),
            PhiKind::Sampled { nodes, values } => {
                let mut lip: f64 = 0.0;
                for i in 0..nodes.len() - 1 {
                    let (a, b) = (nodes[i], nodes[i + 1]);
                    if a < upper && b > 0.0 {
                        lip = lip.max(((values[i + 1] - values[i]) / (b - a)).abs());
                    }
                }
                lip
            }
        }
    }
}

/// The constants the life-span bounds are built from: the conserved energy
/// at time zero, the induced domain bound `lambda = h0 / nu0`, and the
/// exact supremum / Lipschitz constant of `phi` on `[0, lambda]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataConstants {
    pub h0: f64,
    pub lambda: f64,
    pub big_m: f64,
    pub lip_l: f64,
}

impl DataConstants {
    pub fn from_data(model: &NonlinearityModel, profile: &SpectralProfile) -> Result<Self> {
        profile.require_nontrivial()?;
        let grad0_sq = profile.weighted_norm_sq(0.0, 1.0, 1.0, NormComponent::Position)?;
        let vel_l2_sq = profile.weighted_norm_sq(0.0, 1.0, 0.0, NormComponent::Velocity)?;
        let h0 = vel_l2_sq + model.integral(grad0_sq)?;
        let lambda = h0 / model.nu0();
        Ok(Self {
            h0,
            lambda,
            big_m: model.sup_on(lambda),
            lip_l: model.lipschitz_on(lambda),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn affine_evaluation() {
        let m = NonlinearityModel::affine(1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.eval(0.0).unwrap(), 1.0);
        assert_eq!(m.eval(1.0).unwrap(), 2.0);
        assert!(m.eval(-1.0).is_err());
    }

    #[test]
    fn sampled_interpolation() {
        let m = NonlinearityModel::sampled(vec![0.0, 1.0], vec![2.0, 3.0], 1.0).unwrap();
        assert_eq!(m.eval(0.5).unwrap(), 2.5);
        assert_eq!(m.eval(5.0).unwrap(), 3.0); // constant tail
    }

    #[test]
    fn construction_guards() {
        assert!(NonlinearityModel::affine(0.5, 1.0, 1.0).is_err()); // base below nu0
        assert!(NonlinearityModel::affine(1.0, -0.1, 1.0).is_err()); // negative slope
        assert!(NonlinearityModel::sampled(vec![0.0, 1.0], vec![2.0, 0.5], 1.0).is_err());
        assert!(NonlinearityModel::sampled(vec![1.0, 0.5], vec![2.0, 2.0], 1.0).is_err());
        assert!(NonlinearityModel::affine(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn canonical_data_constants() {
        // phi = 1 + rho, unit shell: |grad u0|^2 = 1, h0 = 3/2, M = 5/2, L = 1.
        let model = NonlinearityModel::affine(1.0, 1.0, 1.0).unwrap();
        let profile = SpectralProfile::single_shell(1.0, c(1.0, 0.0), c(0.0, 0.0), 1.0).unwrap();
        let k = DataConstants::from_data(&model, &profile).unwrap();
        assert!((k.h0 - 1.5).abs() < 1e-15);
        assert!((k.lambda - 1.5).abs() < 1e-15);
        assert!((k.big_m - 2.5).abs() < 1e-15);
        assert!((k.lip_l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_phi_with_velocity_mass() {
        // phi = 2 (constant), |u1|^2 = 3: h0 = 2 + 3 = 5, lambda = 5/2, M = 2, L = 0.
        let model = NonlinearityModel::affine(2.0, 0.0, 2.0).unwrap();
        let profile =
            SpectralProfile::single_shell(1.0, c(1.0, 0.0), c(3.0f64.sqrt(), 0.0), 1.0).unwrap();
        let k = DataConstants::from_data(&model, &profile).unwrap();
        assert!((k.h0 - 5.0).abs() < 1e-15);
        assert!((k.lambda - 2.5).abs() < 1e-15);
        assert_eq!(k.big_m, 2.0);
        assert_eq!(k.lip_l, 0.0);
    }

    #[test]
    fn velocity_only_minimal_shell() {
        let model = NonlinearityModel::affine(1.0, 0.0, 1.0).unwrap();
        let profile = SpectralProfile::single_shell(1.0, c(0.0, 0.0), c(1.0, 0.0), 1.0).unwrap();
        let k = DataConstants::from_data(&model, &profile).unwrap();
        assert_eq!(k.h0, 1.0);
        assert_eq!(k.lambda, 1.0);
        assert_eq!(k.big_m, 1.0);
        assert_eq!(k.lip_l, 0.0);
    }

    #[test]
    fn truncation_examples() {
        let m = NonlinearityModel::affine(1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.eval_truncated(1.5, 1.0).unwrap(), 2.0);
        assert_eq!(m.eval_truncated(1.5, 10.0).unwrap(), 2.5);
        // Continuity at the junction.
        assert_eq!(m.eval_truncated(1.5, 1.5).unwrap(), m.eval(1.5).unwrap());
    }

    #[test]
    fn sampled_integral_is_exact() {
        let m = NonlinearityModel::sampled(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 1.0], 1.0).unwrap();
        // int_0^1 (1 + 2rho) = 2; int_1^2 falls back to 1: trapezoid 2; tail const 1.
        assert!((m.integral(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((m.integral(2.0).unwrap() - 4.0).abs() < 1e-15);
        assert!((m.integral(3.5).unwrap() - 5.5).abs() < 1e-15);
        // Partial segment: int_0^0.5 (1 + 2rho) = 0.75.
        assert!((m.integral(0.5).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sampled_head_clamp() {
        let m = NonlinearityModel::sampled(vec![1.0, 2.0], vec![2.0, 4.0], 1.0).unwrap();
        assert_eq!(m.eval(0.5).unwrap(), 2.0);
        assert!((m.integral(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.lipschitz_on(0.5), 0.0);
    }

    #[test]
    fn sup_and_lipschitz_track_the_window() {
        let m = NonlinearityModel::sampled(vec![0.0, 1.0, 2.0], vec![1.0, 5.0, 1.0], 1.0).unwrap();
        assert_eq!(m.sup_on(0.5), 3.0);
        assert_eq!(m.sup_on(1.5), 5.0);
        assert_eq!(m.lipschitz_on(0.5), 4.0);
        assert_eq!(m.lipschitz_on(2.0), 4.0);
        assert_eq!(m.lipschitz_on(10.0), 4.0);
    }
}
