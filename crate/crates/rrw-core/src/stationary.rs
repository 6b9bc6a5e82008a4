//! Closed-form stationary distribution and its verification.
//!
//! On a structure-reversible walk the stationary distribution is geometric
//! away from the origin: `pi(n,0) = k_h a1^n pi00`, `pi(0,n) = k_v a2^n
//! pi00`, `pi(n1,n2) = k_int eta1^n1 eta2^n2 pi00`, where the axis rates
//! coincide with (eta1, eta2) except in the singular regime. The prefactors
//! come from the reversibility constants; when both origin constants are
//! positive the two prefactor branches agree by the compatibility product.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::GeometricSolution;
use crate::model::ReflectingWalkModel;
use crate::reversibility::ReversibilityConstants;

/// Closed-form stationary distribution with geometric interior decay.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StationaryDistribution {
    pub pi00: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// `pi(n,0) = k_h * axis1_rate^n * pi00` for n >= 1.
    pub k_h: f64,
    /// `pi(0,n) = k_v * axis2_rate^n * pi00` for n >= 1.
    pub k_v: f64,
    /// `pi(n1,n2) = k_int * eta1^n1 * eta2^n2 * pi00` in the open interior.
    pub k_int: f64,
    /// Decay rate along the horizontal axis; equals `eta1` except for
    /// singular walks.
    pub axis1_rate: f64,
    /// Decay rate along the vertical axis; equals `eta2` except for
    /// (transposed) singular walks.
    pub axis2_rate: f64,
}

#[derive(Debug, Error)]
pub enum StationaryError {
    #[error("both origin constants are zero; no prefactor branch applies")]
    BothConstantsZero,
    #[error("rate {0} outside (0,1)")]
    RateOutOfRange(f64),
}

/// Neumaier-compensated sum; the normalization loses digits when a rate sits
/// close to one.
fn compensated_sum(terms: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

impl StationaryDistribution {
    /// Normalizes the four closed-form blocks (origin, two axes, interior).
    pub fn from_parts(
        eta1: f64,
        eta2: f64,
        k_h: f64,
        k_v: f64,
        k_int: f64,
        axis1_rate: f64,
        axis2_rate: f64,
    ) -> Result<Self, StationaryError> {
        for rate in [eta1, eta2, axis1_rate, axis2_rate] {
            if !(0.0 < rate && rate < 1.0) {
                return Err(StationaryError::RateOutOfRange(rate));
            }
        }
        let total = compensated_sum(&[
            1.0,
            k_h * axis1_rate / (1.0 - axis1_rate),
            k_v * axis2_rate / (1.0 - axis2_rate),
            k_int * eta1 * eta2 / ((1.0 - eta1) * (1.0 - eta2)),
        ]);
        Ok(StationaryDistribution {
            pi00: 1.0 / total,
            eta1,
            eta2,
            k_h,
            k_v,
            k_int,
            axis1_rate,
            axis2_rate,
        })
    }

    /// Product-form distribution with boundary prefactors `k_h`, `k_v` (the
    /// interior prefactor factorizes as their product).
    pub fn product_form(eta1: f64, eta2: f64, k_h: f64, k_v: f64) -> Result<Self, StationaryError> {
        Self::from_parts(eta1, eta2, k_h, k_v, k_h * k_v, eta1, eta2)
    }

    /// Point evaluation.
    pub fn pi_at(&self, n1: u64, n2: u64) -> f64 {
        match (n1, n2) {
            (0, 0) => self.pi00,
            (n, 0) => self.k_h * self.axis1_rate.powi(n as i32) * self.pi00,
            (0, n) => self.k_v * self.axis2_rate.powi(n as i32) * self.pi00,
            (n1, n2) => {
                self.k_int * self.eta1.powi(n1 as i32) * self.eta2.powi(n2 as i32) * self.pi00
            }
        }
    }
}

/// Builds the distribution of a structure-reversible walk from its constants
/// and solved decay rates.
///
/// If `c10 > 0` the prefactors are `(c10, c10 c1plus / c2plus, c10 c1plus)`;
/// if instead `c20 > 0` they are `(c20 c2plus / c1plus, c20, c20 c2plus)`.
/// When both are positive the compatibility product makes the two branches
/// identical.
pub fn build_stationary(
    constants: &ReversibilityConstants,
    sol: &GeometricSolution,
) -> Result<StationaryDistribution, StationaryError> {
    let (k_h, k_v, k_int) = prefactors(constants)?;
    StationaryDistribution::from_parts(sol.eta1, sol.eta2, k_h, k_v, k_int, sol.eta1, sol.eta2)
}

fn prefactors(c: &ReversibilityConstants) -> Result<(f64, f64, f64), StationaryError> {
    if c.c10 > 0.0 {
        Ok((c.c10, c.c10 * c.c1plus / c.c2plus, c.c10 * c.c1plus))
    } else if c.c20 > 0.0 {
        Ok((c.c20 * c.c2plus / c.c1plus, c.c20, c.c20 * c.c2plus))
    } else {
        Err(StationaryError::BothConstantsZero)
    }
}

/// Product-form classifier: a structure-reversible walk has a product-form
/// stationary distribution iff `c1plus = c20` (when `c20 > 0`) and
/// `c2plus = c10` (when `c10 > 0`).
pub fn product_form_test(constants: &ReversibilityConstants, tol: f64) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs());
    (constants.c20 == 0.0 || close(constants.c1plus, constants.c20))
        && (constants.c10 == 0.0 || close(constants.c2plus, constants.c10))
}

/// Global-balance residuals at the representative states.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    pub max_residual: f64,
    pub worst_state: (u64, u64),
    pub residuals: Vec<((u64, u64), f64)>,
}

/// The state families whose balance equations pin the whole distribution:
/// the four corner-adjacent states, both axes, both boundary-adjacent
/// interior rows, and a block of deep interior states.
pub fn representative_states() -> Vec<(u64, u64)> {
    let mut states = vec![(0, 0), (1, 0), (0, 1), (1, 1)];
    for n in 2..=5u64 {
        states.push((n, 0));
        states.push((0, n));
        states.push((n, 1));
        states.push((1, n));
    }
    for n1 in 2..=5u64 {
        for n2 in 2..=5u64 {
            states.push((n1, n2));
        }
    }
    states
}

/// Evaluates `sum_{n'} pi(n') P(n' -> n) - pi(n)` at every representative
/// state. Residuals are data; nothing fails here.
pub fn verify_stationary_equations(
    model: &ReflectingWalkModel,
    dist: &StationaryDistribution,
) -> BalanceReport {
    let mut residuals = Vec::new();
    let mut max_residual = 0.0f64;
    let mut worst_state = (0, 0);
    for (n1, n2) in representative_states() {
        let mut terms = Vec::with_capacity(10);
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let m1 = n1 as i64 + di;
                let m2 = n2 as i64 + dj;
                if m1 < 0 || m2 < 0 {
                    continue;
                }
                let (m1, m2) = (m1 as u64, m2 as u64);
                let p = model.transition((m1, m2), (n1, n2));
                if p > 0.0 {
                    terms.push(dist.pi_at(m1, m2) * p);
                }
            }
        }
        terms.push(-dist.pi_at(n1, n2));
        let residual = compensated_sum(&terms).abs();
        residuals.push(((n1, n2), residual));
        if residual > max_residual {
            max_residual = residual;
            worst_state = (n1, n2);
        }
    }
    BalanceReport {
        max_residual,
        worst_state,
        residuals,
    }
}
