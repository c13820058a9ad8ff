//! Closed-form and quadrature evaluation of outage probabilities and rates.

pub mod outage;
pub mod quadrature;
pub mod rate;
pub mod special;

use thiserror::Error;

use crate::model::SystemParams;
use crate::montecarlo::Metric;
use crate::selection::Scheme;

pub use outage::{
    outage_floor, outage_u1_s1, outage_u1_s2, outage_u1_s3, outage_u2_s1, outage_u2_s2, outage_u2_s3,
    outage_u2_s3_random_stage2, QosSubProbabilities, User,
};
pub use rate::{rate_u1_s1, rate_u1_s2, rate_u1_s3, rate_u2_s1, rate_u2_s2};
pub use special::exp_integral_ei;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("argument {x} outside the domain of the special function")]
    Domain { x: f64 },
    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("no {what} for scheme {scheme}")]
    Unsupported { scheme: Scheme, what: &'static str },
}

/// Binomial coefficient as a float; exact for every count used here.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Neumaier-compensated running sum for alternating series.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Analytic value of `metric` under `scheme`, or `None` where no formula exists.
///
/// Random selection reuses the single-antenna specializations, which are
/// exact for it because uniformly chosen gains keep their marginal law.
pub fn evaluate(scheme: Scheme, metric: Metric, p: &SystemParams) -> Result<Option<f64>, AnalyticError> {
    let single = || p.clone().with_antennas(1, 1, 1);
    let c1 = p.rho_r / p.rho_s;
    let v = match (scheme, metric) {
        (Scheme::MaxU1, Metric::OutageU1) => outage_u1_s1(p),
        (Scheme::MaxU1, Metric::OutageU2) => outage_u2_s1(p),
        (Scheme::MaxU1, Metric::RateU1) => rate_u1_s1(p)?,
        (Scheme::MaxU1, Metric::RateU2) => rate_u2_s1(p)?,
        (Scheme::MaxU1, Metric::RateSum) => rate_u1_s1(p)? + rate_u2_s1(p)?,
        (Scheme::MaxU2, Metric::OutageU1) => outage_u1_s2(p),
        (Scheme::MaxU2, Metric::OutageU2) => outage_u2_s2(p),
        (Scheme::MaxU2, Metric::RateU1) => rate_u1_s2(p)?,
        (Scheme::MaxU2, Metric::RateU2) => rate_u2_s2(p)?,
        (Scheme::MaxU2, Metric::RateSum) => rate_u1_s2(p)? + rate_u2_s2(p)?,
        (Scheme::MaxU1 | Scheme::MaxU2, Metric::FloorU1) => outage_floor(scheme, User::U1, p, c1)?,
        (Scheme::MaxU1 | Scheme::MaxU2, Metric::FloorU2) => outage_floor(scheme, User::U2, p, c1)?,
        (Scheme::QosStatic, Metric::OutageU1) => outage_u1_s3(p),
        (Scheme::QosStatic, Metric::OutageU2) => outage_u2_s3(p),
        (Scheme::QosStatic, Metric::RateU1) => rate_u1_s3(p)?,
        (Scheme::Random, Metric::OutageU1) => outage_u1_s2(p),
        (Scheme::Random, Metric::OutageU2) => outage_u2_s1(&single()),
        (Scheme::Random, Metric::RateU1) => rate_u1_s2(p)?,
        (Scheme::Random, Metric::RateU2) => rate_u2_s2(&single())?,
        (Scheme::Random, Metric::RateSum) => rate_u1_s2(p)? + rate_u2_s2(&single())?,
        _ => return Ok(None),
    };
    Ok(Some(v))
}
