//! Logistic acceptance model and the closed-form pricing kernel built on the
//! principal branch of the Lambert W function.
//!
//! For a driver with utility `u(C) = α + B·X + D·Y + γC`, the offer value
//! `P(C)·(C̄ − C)` is maximized at
//!
//! ```text
//! C* = C̄ − (W(e^z) + 1) / γ,     z = α + B·X + D·Y + γC̄ − 1,
//! ```
//!
//! and the maximum itself collapses to `W(e^z) / γ`. Both go through
//! [`lambert_w_of_exp`], which never forms `e^z` once `z ≥ 1`.

use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Logistic coefficients of one driver.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BehaviorCoefficients {
    pub intercept: f64,
    /// Must be `≤ 0`.
    pub detour_coeff: f64,
    /// Must be `≤ 0`.
    pub size_coeff: f64,
    /// Must be `> 0`.
    pub compensation_coeff: f64,
    /// Coefficients of additional bundle predictors, paired with
    /// [`PredictorVector::extras`].
    pub extra_bundle_coeffs: Vec<f64>,
    pub driver_coeffs: Vec<f64>,
    pub driver_values: Vec<f64>,
}

impl BehaviorCoefficients {
    pub fn new(intercept: f64, detour_coeff: f64, size_coeff: f64, compensation_coeff: f64) -> Self {
        BehaviorCoefficients {
            intercept,
            detour_coeff,
            size_coeff,
            compensation_coeff,
            extra_bundle_coeffs: Vec::new(),
            driver_coeffs: Vec::new(),
            driver_values: Vec::new(),
        }
    }

    /// The three benchmark behavioral classes (1 = effort averse and
    /// compensation driven, 3 = effort tolerant and least compensation
    /// sensitive).
    pub fn class(class: u8) -> Option<Self> {
        match class {
            1 => Some(Self::new(-5.0, -3.0, -4.0, 2.5)),
            2 => Some(Self::new(-4.5, -2.5, -3.5, 2.0)),
            3 => Some(Self::new(-4.0, -2.0, -3.0, 1.5)),
            _ => None,
        }
    }

    pub fn check(&self) -> Result<(), &'static str> {
        let finite = [self.intercept, self.detour_coeff, self.size_coeff, self.compensation_coeff]
            .iter()
            .chain(&self.extra_bundle_coeffs)
            .chain(&self.driver_coeffs)
            .chain(&self.driver_values)
            .all(|v| v.is_finite());
        if !finite {
            return Err("behavior coefficients must be finite");
        }
        if !(self.compensation_coeff > 0.0) {
            return Err("compensation coefficient must be > 0");
        }
        if self.detour_coeff > 0.0 {
            return Err("detour coefficient must be <= 0");
        }
        if self.size_coeff > 0.0 {
            return Err("size coefficient must be <= 0");
        }
        if self.driver_coeffs.len() != self.driver_values.len() {
            return Err("driver coefficients and driver values differ in length");
        }
        Ok(())
    }

    /// `D·Y`.
    pub fn driver_term(&self) -> f64 {
        self.driver_coeffs.iter().zip(&self.driver_values).map(|(d, y)| d * y).sum()
    }

    /// `B·X`.
    pub fn bundle_term(&self, x: &PredictorVector) -> f64 {
        self.detour_coeff * x.detour
            + self.size_coeff * x.bundle_size
            + self.extra_bundle_coeffs.iter().zip(&x.extras).map(|(b, v)| b * v).sum::<f64>()
    }

    /// `α + B·X + D·Y + γC`.
    pub fn utility(&self, x: &PredictorVector, compensation: f64) -> f64 {
        self.intercept + self.bundle_term(x) + self.driver_term() + self.compensation_coeff * compensation
    }

    /// The exponent `z` with `max_C P(C)(C̄ − C) = W(e^z)/γ`.
    pub fn pricing_exponent(&self, x: &PredictorVector, outsource_total: f64) -> f64 {
        self.utility(x, outsource_total) - 1.0
    }
}

/// Bundle-dependent predictor values `X`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictorVector {
    pub detour: f64,
    pub bundle_size: f64,
    pub extras: Vec<f64>,
}

impl PredictorVector {
    pub fn new(detour: f64, bundle_size: f64) -> Self {
        PredictorVector { detour, bundle_size, extras: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainError {
    NegativeArgument(f64),
    NonPositiveOutsourceCost(f64),
    NotFinite,
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainError::NegativeArgument(x) => write!(f, "Lambert W0 argument {x} is negative"),
            DomainError::NonPositiveOutsourceCost(c) => {
                write!(f, "outsourcing total {c} must be positive")
            }
            DomainError::NotFinite => f.write_str("argument is not finite"),
        }
    }
}

const MAX_ITER: usize = 100;

/// Principal branch `W0(x)` for `x ≥ 0` by Halley iteration.
pub fn lambert_w0(x: f64) -> Result<f64, DomainError> {
    if x.is_nan() {
        return Err(DomainError::NotFinite);
    }
    if x < 0.0 {
        return Err(DomainError::NegativeArgument(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let e = core::f64::consts::E;
    let mut w = if x < e { math::ln(1.0 + x) } else { math::ln(x) - math::ln(math::ln(x)) };
    for _ in 0..MAX_ITER {
        let ew = math::exp(w);
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if math::abs(step) <= 4.0 * f64::EPSILON * (1.0 + math::abs(w)) {
            break;
        }
    }
    Ok(w)
}

/// `W0(e^z)` without overflow. For `z ≥ 1` this solves `w + ln w = z` by
/// Newton iteration; below that it defers to [`lambert_w0`].
pub fn lambert_w_of_exp(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 1.0 {
        // e^z < e, no overflow; e^z underflows to 0 only where W ≈ e^z anyway.
        return lambert_w0(math::exp(z)).unwrap_or(0.0);
    }
    if z == f64::INFINITY {
        return f64::INFINITY;
    }
    let zz = if z > 1.0 { z } else { 1.0 };
    let mut w = (z - math::ln(zz)).max(1e-9);
    for _ in 0..MAX_ITER {
        let g = w + math::ln(w) - z;
        let step = g / (1.0 + 1.0 / w);
        let next = w - step;
        w = if next > 0.0 { next } else { w * 0.5 };
        if math::abs(step) <= 2.0 * f64::EPSILON * w {
            break;
        }
    }
    w
}

/// Logistic acceptance probability `P(C)`.
pub fn acceptance_probability(coeffs: &BehaviorCoefficients, x: &PredictorVector, compensation: f64) -> f64 {
    logistic(coeffs.utility(x, compensation))
}

pub(crate) fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + math::exp(-u))
    } else {
        let e = math::exp(u);
        e / (1.0 + e)
    }
}

/// Unconstrained maximizer of `P(C)·(C̄ − C)`. May be negative for tiny `C̄`;
/// see [`price_offer`] for how that case is treated.
pub fn optimal_compensation(
    coeffs: &BehaviorCoefficients,
    x: &PredictorVector,
    outsource_total: f64,
) -> Result<f64, DomainError> {
    if !(outsource_total > 0.0) {
        return Err(DomainError::NonPositiveOutsourceCost(outsource_total));
    }
    let w = lambert_w_of_exp(coeffs.pricing_exponent(x, outsource_total));
    Ok(outsource_total - (w + 1.0) / coeffs.compensation_coeff)
}

/// `P·(C̄ − C)`.
pub fn expected_savings(probability: f64, outsource_total: f64, compensation: f64) -> f64 {
    probability * (outsource_total - compensation)
}

/// Closed-form reduced cost `W(e^z)/γ − Σπ − μ`.
pub fn reduced_cost(
    coeffs: &BehaviorCoefficients,
    x: &PredictorVector,
    outsource_total: f64,
    dual_task_sum: f64,
    dual_driver: f64,
) -> f64 {
    savings_bound(coeffs, x, outsource_total) - dual_task_sum - dual_driver
}

/// `W(e^z)/γ`: the maximal expected savings when the optimal compensation is
/// positive, and an upper bound on any `P(C)(C̄ − C)` with `C ≥ 0` otherwise.
pub fn savings_bound(coeffs: &BehaviorCoefficients, x: &PredictorVector, outsource_total: f64) -> f64 {
    lambert_w_of_exp(coeffs.pricing_exponent(x, outsource_total)) / coeffs.compensation_coeff
}

/// A fully priced offer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OfferValue {
    pub compensation: f64,
    pub acceptance_probability: f64,
    pub expected_savings: f64,
}

/// Prices an offer at its optimal compensation. Returns `None` when the
/// optimum is not strictly positive: a driver never accepts an unpaid
/// bundle, so such an offer is worthless and is never made.
pub fn price_offer(coeffs: &BehaviorCoefficients, x: &PredictorVector, outsource_total: f64) -> Option<OfferValue> {
    let compensation = optimal_compensation(coeffs, x, outsource_total).ok()?;
    if !(compensation > 0.0) {
        return None;
    }
    let p = acceptance_probability(coeffs, x, compensation);
    Some(OfferValue {
        compensation,
        acceptance_probability: p,
        expected_savings: expected_savings(p, outsource_total, compensation),
    })
}
