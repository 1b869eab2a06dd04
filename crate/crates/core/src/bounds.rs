//! Life-span lower bounds and their comparison.
//!
//! Two bounds are computed from the same data constants: the classical
//! bound `nu0^{3/2} / (4 L E_{3/2}(0))` and the Gevrey-weighted bound
//! `[ min(nu0,1)/max(M,1) * e^{-2M/nu0}/(2sL) * (nu0 eta - 2M) / P ]^{s/(s+1)}`
//! where `P` is the weighted norm of the data pair. Both degenerate to
//! `+inf` when `L = 0` (constant coefficient, globally solvable), which is
//! carried as an explicit extended value rather than a sentinel float.

use std::fmt;

use crate::error::{Error, Result};
use crate::nonlinearity::{DataConstants, NonlinearityModel};
use crate::spectral::{GevreyParams, NormComponent, SpectralProfile};

/// Extended nonnegative real: a bound value that may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            ExtReal::Infinite => None,
        }
    }

    /// Collapses to f64, mapping `Infinite` to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Finite(v) => *v,
            ExtReal::Infinite => f64::INFINITY,
        }
    }

    /// Strict order with `Finite(_) < Infinite` and `Infinite == Infinite`.
    pub fn strictly_greater(&self, other: &ExtReal) -> bool {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a > b,
            (ExtReal::Infinite, ExtReal::Finite(_)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

/// Outcome of comparing the two bounds. Ties count as `ClassicalGeq`
/// ("strictly larger" fails on equality, including the double-infinite
/// degenerate case).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    GevreyStrictlyLarger,
    ClassicalGeq,
    IncomparableEtaTooSmall,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::GevreyStrictlyLarger => "gevrey_strictly_larger",
            Verdict::ClassicalGeq => "classical_geq",
            Verdict::IncomparableEtaTooSmall => "incomparable_eta_too_small",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classical life-span lower bound `nu0^{3/2} / (4 L E_{3/2}(0))`;
/// `+inf` when `L = 0`.
pub fn classical_bound(nu0: f64, lip_l: f64, e32_at_zero: f64) -> Result<ExtReal> {
    if !nu0.is_finite() || nu0 <= 0.0 {
        return Err(Error::InvalidParams(format!("nu0 must be positive, got {nu0}")));
    }
    if !lip_l.is_finite() || lip_l < 0.0 {
        return Err(Error::InvalidParams(format!(
            "Lipschitz constant must be nonnegative, got {lip_l}"
        )));
    }
    if !e32_at_zero.is_finite() || e32_at_zero <= 0.0 {
        return Err(Error::TrivialData);
    }
    if lip_l == 0.0 {
        return Ok(ExtReal::Infinite);
    }
    Ok(ExtReal::Finite(nu0.powf(1.5) / (4.0 * lip_l * e32_at_zero)))
}

/// Gevrey-weighted life-span lower bound. Requires `eta > 2M/nu0`
/// (strictly; the boundary is excluded) and returns `+inf` when `L = 0`.
pub fn gevrey_bound(
    nu0: f64,
    big_m: f64,
    lip_l: f64,
    s: f64,
    eta: f64,
    pair_norm_sq: f64,
) -> Result<ExtReal> {
    check_bound_params(nu0, big_m, lip_l, s)?;
    if !pair_norm_sq.is_finite() || pair_norm_sq <= 0.0 {
        return Err(Error::TrivialData);
    }
    let threshold = 2.0 * big_m / nu0;
    if !(eta > threshold) {
        return Err(Error::EtaBelowThreshold { eta, threshold });
    }
    if lip_l == 0.0 {
        return Ok(ExtReal::Infinite);
    }
    let inner = (nu0.min(1.0) / big_m.max(1.0))
        * ((-2.0 * big_m / nu0).exp() / (2.0 * s * lip_l))
        * ((nu0 * eta - 2.0 * big_m) / pair_norm_sq);
    Ok(ExtReal::Finite(inner.powf(s / (s + 1.0))))
}

/// The admissible-class derivative constant
/// `K = 2 L max(M,1)/min(nu0,1) * e^{2M/nu0} * t_m^{(s+1)/s} * pair_norm_sq`.
pub fn class_k_constant(
    nu0: f64,
    big_m: f64,
    lip_l: f64,
    s: f64,
    t_m: f64,
    pair_norm_sq: f64,
) -> Result<f64> {
    check_bound_params(nu0, big_m, lip_l, s)?;
    if !t_m.is_finite() || t_m <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "t_m must be finite and positive, got {t_m}"
        )));
    }
    if lip_l == 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * lip_l * big_m.max(1.0) / nu0.min(1.0))
        * (2.0 * big_m / nu0).exp()
        * t_m.powf((s + 1.0) / s)
        * pair_norm_sq)
}

/// Remaining exponential weight after the certificate costs:
/// `eta - (K/(q-1) + 2M)/nu0`. Positive iff the weight admissibility
/// condition holds; the sign is the caller's admissibility flag.
pub fn eta_surplus(eta: f64, k_const: f64, q: f64, big_m: f64, nu0: f64) -> f64 {
    eta - (k_const / (q - 1.0) + 2.0 * big_m) / nu0
}

/// The comparison constant
/// `C_s = max(M,1)/min(nu0,1) * 2sL * e^{2M/nu0} * (nu0^{3/2}/(4L))^{(s+1)/s}`.
/// Diverges as `L -> 0` (returned as `+inf` for `L = 0`).
pub fn comparison_constant(nu0: f64, big_m: f64, lip_l: f64, s: f64) -> f64 {
    if lip_l == 0.0 {
        return f64::INFINITY;
    }
    (big_m.max(1.0) / nu0.min(1.0))
        * 2.0
        * s
        * lip_l
        * (2.0 * big_m / nu0).exp()
        * (nu0.powf(1.5) / (4.0 * lip_l)).powf((s + 1.0) / s)
}

/// The eta threshold above which the Gevrey bound strictly exceeds the
/// classical one: `2M/nu0 + C_s/nu0 * pair_norm_sq / e32^{(s+1)/s}`.
///
/// This is the exact algebraic rearrangement of "Gevrey value > classical
/// value"; the direct comparison of the two values is the authoritative
/// route and the two must agree.
pub fn comparison_threshold(
    nu0: f64,
    big_m: f64,
    lip_l: f64,
    s: f64,
    pair_norm_sq: f64,
    e32_at_zero: f64,
) -> f64 {
    2.0 * big_m / nu0
        + comparison_constant(nu0, big_m, lip_l, s) / nu0 * pair_norm_sq
            / e32_at_zero.powf((s + 1.0) / s)
}

fn check_bound_params(nu0: f64, big_m: f64, lip_l: f64, s: f64) -> Result<()> {
    if !nu0.is_finite() || nu0 <= 0.0 {
        return Err(Error::InvalidParams(format!("nu0 must be positive, got {nu0}")));
    }
    if !big_m.is_finite() || big_m < nu0 {
        return Err(Error::InvalidParams(format!(
            "M must be finite and at least nu0, got M = {big_m}, nu0 = {nu0}"
        )));
    }
    if !lip_l.is_finite() || lip_l < 0.0 {
        return Err(Error::InvalidParams(format!(
            "Lipschitz constant must be nonnegative, got {lip_l}"
        )));
    }
    if !s.is_finite() || s <= 1.0 {
        return Err(Error::InvalidParams(format!("s must be > 1, got {s}")));
    }
    Ok(())
}

/// Full bound comparison for one `(model, profile, gevrey)` instance.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub eta: f64,
    pub s: f64,
    pub constants: DataConstants,
    pub e32_zero: f64,
    pub pair_norm_sq: f64,
    pub classical: ExtReal,
    /// Absent when `eta <= 2M/nu0` (the Gevrey bound does not apply).
    pub gevrey: Option<ExtReal>,
    /// Admissible-class constant evaluated at `t_m` = the classical bound
    /// (0 when both bounds are infinite). With this choice the sign of
    /// `eta_surplus` matches the verdict exactly.
    pub k_const: f64,
    /// Absent when `eta <= 2M/nu0`.
    pub eta_surplus: Option<f64>,
    pub c_s: f64,
    pub verdict: Verdict,
}

/// Evaluates both bounds, derives the verdict along two independent routes
/// (threshold inequality and direct value comparison) and checks that the
/// routes agree before reporting.
pub fn compare_bounds(
    model: &NonlinearityModel,
    profile: &SpectralProfile,
    g: &GevreyParams,
) -> Result<BoundReport> {
    profile.require_nontrivial()?;
    let constants = DataConstants::from_data(model, profile)?;
    let nu0 = model.nu0();
    let (big_m, lip_l) = (constants.big_m, constants.lip_l);
    let s = g.s();
    let eta = g.eta();

    let grad0_sq = profile.weighted_norm_sq(0.0, 1.0, 1.0, NormComponent::Position)?;
    let e32_zero = model.eval(grad0_sq)?
        * profile.weighted_norm_sq(0.0, 1.0, 1.5, NormComponent::Position)?
        + profile.weighted_norm_sq(0.0, 1.0, 0.5, NormComponent::Velocity)?;
    let pair_norm_sq = profile.pair_gevrey_norm_sq(g)?;

    let classical = classical_bound(nu0, lip_l, e32_zero)?;
    let c_s = comparison_constant(nu0, big_m, lip_l, s);

    if !(eta > 2.0 * big_m / nu0) {
        return Ok(BoundReport {
            eta,
            s,
            constants,
            e32_zero,
            pair_norm_sq,
            classical,
            gevrey: None,
            k_const: 0.0,
            eta_surplus: None,
            c_s,
            verdict: Verdict::IncomparableEtaTooSmall,
        });
    }

    let gevrey = gevrey_bound(nu0, big_m, lip_l, s, eta, pair_norm_sq)?;
    let direct = if gevrey.strictly_greater(&classical) {
        Verdict::GevreyStrictlyLarger
    } else {
        Verdict::ClassicalGeq
    };
    let by_threshold = if lip_l == 0.0 {
        // Both bounds infinite; "strictly larger" fails by convention.
        Verdict::ClassicalGeq
    } else if eta > comparison_threshold(nu0, big_m, lip_l, s, pair_norm_sq, e32_zero) {
        Verdict::GevreyStrictlyLarger
    } else {
        Verdict::ClassicalGeq
    };
    if direct != by_threshold {
        return Err(Error::Internal(format!(
            "bound comparison routes disagree: direct = {direct}, threshold = {by_threshold}"
        )));
    }

    let (k_const, surplus) = match classical {
        ExtReal::Finite(t_c) => {
            let k = class_k_constant(nu0, big_m, lip_l, s, t_c, pair_norm_sq)?;
            (k, eta_surplus(eta, k, (s + 1.0) / s, big_m, nu0))
        }
        // L = 0: the derivative constant vanishes regardless of t_m.
        ExtReal::Infinite => (0.0, eta - 2.0 * big_m / nu0),
    };

    Ok(BoundReport {
        eta,
        s,
        constants,
        e32_zero,
        pair_norm_sq,
        classical,
        gevrey: Some(gevrey),
        k_const,
        eta_surplus: Some(surplus),
        c_s,
        verdict: direct,
    })
}
