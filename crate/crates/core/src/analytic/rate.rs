//! Ergodic rates in bit/s/Hz.
//!
//! For a non-negative SINR `X`, `E[log2(1+X)] = (1/ln 2) ∫ Pr(X > x)/(1+x) dx`.
//! The far user's SINR is bounded by `a2/a1`, so its integrals are finite.

use std::f64::consts::LN_2;

use super::outage::{qos_pair_count, ratio_ccdf, QosSubProbabilities};
use super::quadrature::{integrate, integrate_semi_infinite, Tolerance};
use super::special::exp_integral_e1_scaled;
use super::{binomial, AnalyticError, CompensatedSum};
use crate::model::{psi, SystemParams};

/// Closeness to the removable pole at which the limit form is used instead.
const POLE_GUARD: f64 = 1e-7;

/// `(1 − μ·e^μE1(μ))`, the value of `(e^μE1(μ) − e^νE1(ν))/(1 − μ/ν)` as `ν → μ`.
fn pole_limit(mu: f64) -> Result<f64, AnalyticError> {
    Ok(1.0 - mu * exp_integral_e1_scaled(mu)?)
}

/// `E[log2(1 + a1·A/(B+1))]` with `A` the max of `t` Exp(γ̄_SU1) and `B` the
/// min of `s` Exp(γ̄_RU1), in closed form through `E1`.
pub fn ratio_rate(t: usize, s: usize, a1: f64, gbar_su1: f64, gbar_ru1: f64) -> Result<f64, AnalyticError> {
    if !(gbar_su1 > 0.0) {
        return Ok(0.0);
    }
    let nu = s as f64 / gbar_ru1;
    let e_nu = exp_integral_e1_scaled(nu)?;
    let mut acc = CompensatedSum::default();
    for p in 0..t {
        let q = (p + 1) as f64;
        let mu = q / (a1 * gbar_su1);
        let beta = mu / nu;
        let bracket = if (1.0 - beta).abs() < POLE_GUARD {
            pole_limit(mu)?
        } else {
            (exp_integral_e1_scaled(mu)? - e_nu) / (1.0 - beta)
        };
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign * binomial(t - 1, p) / q * bracket);
    }
    Ok((t as f64 * acc.value() / LN_2).max(0.0))
}

/// U1 rate under max-U1.
pub fn rate_u1_s1(p: &SystemParams) -> Result<f64, AnalyticError> {
    let d = p.derived();
    ratio_rate(p.n_t, p.m_t, p.a1, d.gbar_su1, d.gbar_ru1)
}

/// U1 rate under max-U2 (identical to random selection from U1's viewpoint).
pub fn rate_u1_s2(p: &SystemParams) -> Result<f64, AnalyticError> {
    let d = p.derived();
    ratio_rate(1, 1, p.a1, d.gbar_su1, d.gbar_ru1)
}

fn ceiling_integral(p: &SystemParams, ccdf: impl Fn(f64, f64) -> f64, tol: Tolerance) -> Result<f64, AnalyticError> {
    let top = p.a2 / p.a1;
    let q = integrate(
        |x| {
            let psi_x = psi(x, p).unwrap_or(f64::INFINITY);
            ccdf(x, psi_x) / (1.0 + x)
        },
        0.0,
        top,
        tol,
    )?;
    Ok(q.value / LN_2)
}

/// U2 rate under max-U1.
pub fn rate_u2_s1(p: &SystemParams) -> Result<f64, AnalyticError> {
    rate_u2_s1_with(p, Tolerance::default())
}

pub fn rate_u2_s1_with(p: &SystemParams, tol: Tolerance) -> Result<f64, AnalyticError> {
    let d = p.derived();
    ceiling_integral(
        p,
        |x, psi_x| {
            (-x / d.gbar_ru2).exp()
                * ratio_ccdf(p.n_t, p.m_t, psi_x, d.gbar_su1, d.gbar_ru1)
                * ratio_ccdf(p.m_r, 1, psi_x, d.gbar_sr, d.gbar_si)
        },
        tol,
    )
}

/// U2 rate under max-U2.
pub fn rate_u2_s2(p: &SystemParams) -> Result<f64, AnalyticError> {
    rate_u2_s2_with(p, Tolerance::default())
}

pub fn rate_u2_s2_with(p: &SystemParams, tol: Tolerance) -> Result<f64, AnalyticError> {
    let d = p.derived();
    ceiling_integral(
        p,
        |x, psi_x| {
            ratio_ccdf(1, 1, psi_x, d.gbar_su1, d.gbar_ru1)
                * ratio_ccdf(p.n_t, p.m_r, psi_x, d.gbar_sr, d.gbar_si)
                * ratio_ccdf(p.m_t, 1, x, d.gbar_ru2, 0.0)
        },
        tol,
    )
}

/// U1 rate under static QoS provisioning, integrating `log2(1+x)` against
/// the density of the mixture CDF over `|𝒜|`.
pub fn rate_u1_s3(p: &SystemParams) -> Result<f64, AnalyticError> {
    rate_u1_s3_with(p, Tolerance::default())
}

/// `(weight, i, k)` of every max-of-`i`/min-of-`k` component in the U1 mixture.
pub(crate) fn qos_mixture(p: &SystemParams) -> Vec<(f64, usize, usize)> {
    let q = QosSubProbabilities::new(p);
    let k1 = qos_pair_count(p);
    let mut out = Vec::new();
    for r in 1..=k1 {
        let w = binomial(k1, r) * q.p_l.powi(r as i32) * (1.0 - q.p_l).powi((k1 - r) as i32);
        for i in 1..=p.n_t {
            for k in 1..=p.m_t {
                if i * k == r || (i == k && k == r) {
                    out.push((w, i, k));
                }
            }
        }
    }
    out
}

pub fn rate_u1_s3_with(p: &SystemParams, tol: Tolerance) -> Result<f64, AnalyticError> {
    let d = p.derived();
    let scale = p.a1 * d.gbar_su1;
    let mixture = qos_mixture(p);
    let density = |x: f64| {
        let mut acc = CompensatedSum::default();
        for &(w, i, k) in &mixture {
            for q in 0..i {
                let qf = (q + 1) as f64;
                let beta = qf * d.gbar_ru1 / (k as f64 * scale);
                let lin = 1.0 + beta * x;
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                let shape = 1.0 / lin + d.gbar_ru1 / (k as f64 * lin * lin);
                acc.add(w * i as f64 * sign * binomial(i - 1, q) * shape * (-qf * x / scale).exp());
            }
        }
        acc.value() / scale
    };
    let q = integrate_semi_infinite(|x| density(x) * x.ln_1p(), tol)?;
    Ok(q.value / LN_2)
}
