//! Closed-form stability model for the burst protocol.
//!
//! The two-port asymmetric load is summarized by the split `f` (fraction of
//! port 1's load going to output 1) and the port-1 offered load `l1`. With a
//! unit cell service time the per-VOQ Erlang utilizations are just the rates,
//! `rho11 = f * l1` and `rho12 = (1 - f) * l1`.
//!
//! The minimum stabilizing burst decomposes into two additive terms:
//!
//! ```text
//! b_hat(f, l1) = b1 + b2
//! b2 = f*l1 / (1 - f*l1)              cross-port blocking term
//! b1 = (2/5) * l1^2/(1 - l1) * (f - 1/2)   asymmetric waiting-line term
//! ```
//!
//! `b2` is the equilibrium queue of a server that takes a one-slot vacation
//! after each service; `b1` is the extra backlog accumulated because the
//! light VOQ can burst too, which lengthens the effective vacation. `b1` is
//! exactly the first term of the exhaustive-polling queue-length formula
//! ([`mg1_polling_queue_length`]) with the load-dependent service variation
//! [`cs2`]. The practical minimum burst setting is `ceil(b_hat)`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("offered load {lambda} >= service rate {mu}: burst bound is unbounded")]
    Oversubscribed { lambda: f64, mu: f64 },
    #[error("f*l1 = {0} >= 1: VOQ(1,1) saturated, arrivals are deterministic (D/D/1), model invalid")]
    VoqSaturated(f64),
    #[error("l1 = 1 saturates port 1: arrivals are deterministic (D/D/1), model invalid")]
    PortSaturated,
    #[error("traffic split f={0} outside [0.5, 1)")]
    SplitOutOfRange(f64),
    #[error("port-1 offered load {0} outside (0, 1]")]
    LoadOutOfRange(f64),
    #[error("utilization {0} outside [0, 1]")]
    UtilizationOutOfRange(f64),
}

/// A point of the asymmetric two-port load in (f, l1) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    pub f: f64,
    pub lambda1: f64,
}

impl LoadPoint {
    pub fn new(f: f64, lambda1: f64) -> Result<Self, AnalyticError> {
        if !(0.5..1.0).contains(&f) {
            return Err(AnalyticError::SplitOutOfRange(f));
        }
        if !(lambda1 > 0.0 && lambda1 <= 1.0) {
            return Err(AnalyticError::LoadOutOfRange(lambda1));
        }
        Ok(Self { f, lambda1 })
    }

    /// Utilization of VOQ(1,1).
    pub fn rho11(&self) -> f64 {
        self.f * self.lambda1
    }

    /// Utilization of VOQ(1,2); exact complement of `rho11` within `lambda1`.
    pub fn rho12(&self) -> f64 {
        self.lambda1 - self.rho11()
    }
}

/// Complete burst prediction for one load point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstPrediction {
    pub b1: f64,
    pub b2: f64,
    /// `b1 + b2`.
    pub b_hat: f64,
    /// `ceil(b_hat)`: the usable integer burst setting.
    pub b_min: u32,
    /// Squared coefficient of variation used in `b1`.
    pub cs2: f64,
}

/// Minimum burst that keeps a vacating server stable: a server that idles one
/// slot after each service must burst at least `lambda / (mu - lambda)` cells
/// to match the arrival rate in the long run.
pub fn vacating_burst_bound(lambda: f64, mu: f64) -> Result<f64, AnalyticError> {
    if lambda < 0.0 || mu <= 0.0 || lambda >= mu {
        return Err(AnalyticError::Oversubscribed { lambda, mu });
    }
    Ok(lambda / (mu - lambda))
}

/// Cross-port blocking term of the burst bound.
pub fn b2(f: f64, lambda1: f64) -> Result<f64, AnalyticError> {
    let rho11 = f * lambda1;
    if rho11 >= 1.0 {
        return Err(AnalyticError::VoqSaturated(rho11));
    }
    Ok(rho11 / (1.0 - rho11))
}

/// Load-dependent squared coefficient of variation of the effective service
/// time: grows linearly from 1 at the symmetric split to 1.4 toward f = 1.
pub fn cs2(f: f64) -> Result<f64, AnalyticError> {
    if !(0.5..1.0).contains(&f) {
        return Err(AnalyticError::SplitOutOfRange(f));
    }
    Ok(1.0 + 0.8 * (f - 0.5))
}

/// Asymmetric waiting-line term of the burst bound.
pub fn b1(f: f64, lambda1: f64) -> Result<f64, AnalyticError> {
    if !(0.5..1.0).contains(&f) {
        return Err(AnalyticError::SplitOutOfRange(f));
    }
    if lambda1 >= 1.0 {
        return Err(AnalyticError::PortSaturated);
    }
    if lambda1 <= 0.0 {
        return Err(AnalyticError::LoadOutOfRange(lambda1));
    }
    Ok(0.4 * (lambda1 * lambda1 / (1.0 - lambda1)) * (f - 0.5))
}

/// Full burst prediction: both terms, their sum, and its ceiling.
pub fn predict_min_burst(f: f64, lambda1: f64) -> Result<BurstPrediction, AnalyticError> {
    let point = LoadPoint::new(f, lambda1)?;
    let b1 = b1(point.f, point.lambda1)?;
    let b2 = b2(point.f, point.lambda1)?;
    let b_hat = b1 + b2;
    Ok(BurstPrediction { b1, b2, b_hat, b_min: b_hat.ceil() as u32, cs2: cs2(point.f)? })
}

/// Equilibrium queue length of an exhaustive polling system with Poisson
/// arrivals and general service times:
/// `(lambda^2/(mu-lambda)) * (cs2-1)/(2 mu) + lambda/(mu-lambda)`.
pub fn mg1_polling_queue_length(lambda: f64, mu: f64, cs2: f64) -> Result<f64, AnalyticError> {
    if lambda < 0.0 || mu <= 0.0 || lambda >= mu {
        return Err(AnalyticError::Oversubscribed { lambda, mu });
    }
    let busy = lambda / (mu - lambda);
    Ok(lambda * busy * (cs2 - 1.0) / (2.0 * mu) + busy)
}

/// Parabolic stability boundary in the (rho12, rho11) utilization plane:
/// round-robin polling of the asymmetric pair is unstable at or above it.
/// Valid for `0 <= rho12 <= 1/2`; vertex at (1/2, 1/2).
pub fn boundary_rho11(rho12: f64) -> f64 {
    1.0 - 2.0 * rho12 + 2.0 * rho12 * rho12
}

/// Linear capacity boundary `rho11 = 1 - rho12`, the trivial conservation
/// solution bounding the same region from above.
pub fn linear_boundary(rho12: f64) -> f64 {
    1.0 - rho12
}

/// Position of a utilization point relative to the parabolic boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    BelowBoundary,
    AtOrAboveBoundary,
}

impl std::fmt::Display for BoundaryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryClass::BelowBoundary => "below_boundary",
            BoundaryClass::AtOrAboveBoundary => "at_or_above_boundary",
        })
    }
}

/// Classify a utilization point against [`boundary_rho11`]. This is the
/// analytic prediction only; whether a run is actually unstable is decided by
/// simulation.
pub fn classify_erlang_point(rho11: f64, rho12: f64) -> Result<BoundaryClass, AnalyticError> {
    for rho in [rho11, rho12] {
        if !(0.0..=1.0).contains(&rho) {
            return Err(AnalyticError::UtilizationOutOfRange(rho));
        }
    }
    if rho11 >= boundary_rho11(rho12) {
        Ok(BoundaryClass::AtOrAboveBoundary)
    } else {
        Ok(BoundaryClass::BelowBoundary)
    }
}
