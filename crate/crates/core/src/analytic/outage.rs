//! Closed-form outage probabilities.
//!
//! Every formula that involves a max-of-exponentials CDF is expressed through
//! [`ratio_ccdf`], the survival function of `max_t(X)/(min_s(Y)+1)`.

use super::{binomial, AnalyticError, CompensatedSum};
use crate::model::SystemParams;
use crate::selection::Scheme;

/// `Pr(max of t Exp(x̄) / (min of s Exp(ȳ) + 1) > z)`.
///
/// `ȳ = 0` drops the interference term, leaving `1 − (1 − e^{−z/x̄})^t`.
pub fn ratio_ccdf(t: usize, s: usize, z: f64, xbar: f64, ybar: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if !z.is_finite() {
        return 0.0;
    }
    let mut acc = CompensatedSum::default();
    for p in 0..t {
        let q = (p + 1) as f64;
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let interference = 1.0 + ybar / xbar * q * z / s as f64;
        acc.add(sign * binomial(t - 1, p) * (-q * z / xbar).exp() / (q * interference));
    }
    (t as f64 * acc.value()).clamp(0.0, 1.0)
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// U1 outage under max-U1.
pub fn outage_u1_s1(p: &SystemParams) -> f64 {
    let d = p.derived();
    if !d.feasible {
        return 1.0;
    }
    clamp01(1.0 - ratio_ccdf(p.n_t, p.m_t, d.zeta, d.gbar_su1, d.gbar_ru1))
}

/// U1 outage under max-U2. The same for every antenna count.
pub fn outage_u1_s2(p: &SystemParams) -> f64 {
    let d = p.derived();
    if !d.feasible {
        return 1.0;
    }
    let ratio = d.gbar_ru1 / d.gbar_su1 * d.zeta;
    clamp01(1.0 - (-d.zeta / d.gbar_su1).exp() / (1.0 + ratio))
}

/// U2 outage under max-U1.
///
/// Derived as if the receive antenna maximized the BS→relay gain alone, so
/// it is an approximation of the scheme's actual SINR-based receive choice.
pub fn outage_u2_s1(p: &SystemParams) -> f64 {
    let d = p.derived();
    if !d.feasible {
        return 1.0;
    }
    let psi2 = d.psi2(p);
    let hop = (-d.theta2 / d.gbar_ru2).exp();
    clamp01(1.0 - hop * ratio_ccdf(p.m_r, 1, psi2, d.gbar_sr, d.gbar_si))
}

/// U2 outage under max-U2.
pub fn outage_u2_s2(p: &SystemParams) -> f64 {
    let d = p.derived();
    if !d.feasible {
        return 1.0;
    }
    let psi2 = d.psi2(p);
    let hop = ratio_ccdf(p.m_t, 1, d.theta2, d.gbar_ru2, 0.0);
    clamp01(1.0 - hop * ratio_ccdf(p.n_t, p.m_r, psi2, d.gbar_sr, d.gbar_si))
}

/// Which user an asymptotic floor refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum User {
    U1,
    U2,
}

fn factorial(n: usize) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// High-SNR outage floor of max-U1 or max-U2 with `ρ_R/ρ_S = c1` held fixed.
/// No SNR enters, so the value is identical at every SNR.
pub fn outage_floor(scheme: Scheme, user: User, p: &SystemParams, c1: f64) -> Result<f64, AnalyticError> {
    let d = p.derived();
    if !d.feasible {
        return Ok(1.0);
    }
    let psi2 = d.psi2(p);
    let iui = c1 * p.k1 * p.var_ru1 / p.var_su1;
    let si = c1 * p.var_si / p.var_sr;
    let floor = match (scheme, user) {
        (Scheme::MaxU1, User::U1) => {
            factorial(p.n_t) / (p.m_t as f64).powi(p.n_t as i32) * (iui * d.zeta).powi(p.n_t as i32)
        }
        (Scheme::MaxU2, User::U1) => d.zeta / (1.0 / iui + d.zeta),
        (Scheme::MaxU1, User::U2) => factorial(p.m_r) * (psi2 * si).powi(p.m_r as i32),
        (Scheme::MaxU2, User::U2) => factorial(p.n_t) * (psi2 / p.m_r as f64 * si).powi(p.n_t as i32),
        _ => {
            return Err(AnalyticError::Unsupported {
                scheme,
                what: "asymptotic outage floor",
            })
        }
    };
    Ok(floor)
}

/// Per-link probabilities that the QoS-scheme outage expressions combine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosSubProbabilities {
    /// Receive stage fails: `Pr(γ_R < θ2)` for one `(i, j, k)`.
    pub p_j: f64,
    /// Relay→U2 link fails: `Pr(γ_RU2 < θ2)`.
    pub p_k: f64,
    /// One `(i, j, k)` passes all three stages.
    pub p_l: f64,
    psi2: f64,
    zeta: f64,
    gbar_su1: f64,
    gbar_ru1: f64,
}

impl QosSubProbabilities {
    pub fn new(p: &SystemParams) -> Self {
        let d = p.derived();
        let psi2 = d.psi2(p);
        let pass_u1 = (-psi2 / d.gbar_su1).exp() / (psi2 * d.gbar_ru1 / d.gbar_su1 + 1.0);
        let pass_relay = (-psi2 / d.gbar_sr).exp() / (psi2 * d.gbar_si / d.gbar_sr + 1.0);
        let pass_hop = (-d.theta2 / d.gbar_ru2).exp();
        Self {
            p_j: 1.0 - pass_relay,
            p_k: 1.0 - pass_hop,
            p_l: pass_u1 * pass_relay * pass_hop,
            psi2,
            zeta: d.zeta,
            gbar_su1: d.gbar_su1,
            gbar_ru1: d.gbar_ru1,
        }
    }

    /// Near-user SIC stage fails when the weakest of `r` relay→U1 interferers is used.
    pub fn p_i(&self, r: usize) -> f64 {
        1.0 - (-self.psi2 / self.gbar_su1).exp() / (self.psi2 * self.gbar_ru1 / (r as f64 * self.gbar_su1) + 1.0)
    }

    /// U1 outage given `t` candidate BS antennas and `s` candidate relay antennas.
    pub fn p_m(&self, t: usize, s: usize) -> f64 {
        1.0 - ratio_ccdf(t, s, self.zeta, self.gbar_su1, self.gbar_ru1)
    }
}

/// Number of `(i, k)` antenna pairs the U1 stage of the QoS scheme ranks.
pub fn qos_pair_count(p: &SystemParams) -> usize {
    p.n_t * p.m_t
}

/// U2 outage under static QoS provisioning (set 𝒜 empty).
pub fn outage_u2_s3(p: &SystemParams) -> f64 {
    if !p.derived().feasible {
        return 1.0;
    }
    let q = QosSubProbabilities::new(p);
    clamp01(qos_empty_set(p, &q).value())
}

fn qos_empty_set(p: &SystemParams, q: &QosSubProbabilities) -> CompensatedSum {
    let (n_t, m_r, m_t) = (p.n_t, p.m_r, p.m_t);
    let mut acc = CompensatedSum::default();
    acc.add(q.p_k.powi(m_t as i32));
    for r in 1..=m_t {
        let w = binomial(m_t, r) * q.p_k.powi((m_t - r) as i32) * (1.0 - q.p_k).powi(r as i32);
        let pi = q.p_i(r);
        acc.add(w * pi.powi(n_t as i32));
        for t in 1..=n_t {
            let v = binomial(n_t, t) * pi.powi((n_t - t) as i32) * (1.0 - pi).powi(t as i32);
            acc.add(w * v * q.p_j.powi((t * m_r) as i32));
        }
    }
    acc
}

/// U1 outage under static QoS provisioning.
pub fn outage_u1_s3(p: &SystemParams) -> f64 {
    if !p.derived().feasible {
        return 1.0;
    }
    let q = QosSubProbabilities::new(p);
    let mut acc = qos_empty_set(p, &q);
    let k1 = qos_pair_count(p);
    for r in 1..=k1 {
        let w = binomial(k1, r) * q.p_l.powi(r as i32) * (1.0 - q.p_l).powi((k1 - r) as i32);
        for t in 1..=p.n_t {
            for s in 1..=p.m_t {
                if s * t == r || (s == t && t == r) {
                    acc.add(w * q.p_m(t, s));
                }
            }
        }
    }
    clamp01(acc.value())
}

/// U2 outage when the QoS scheme's second stage picks at random among 𝒜.
pub fn outage_u2_s3_random_stage2(p: &SystemParams) -> f64 {
    if !p.derived().feasible {
        return 1.0;
    }
    let q = QosSubProbabilities::new(p);
    let a = q.p_k.powi(p.m_t as i32);
    let b = q.p_i(1).powi(p.n_t as i32);
    clamp01(a + (1.0 - a) * b + (1.0 - a) * (1.0 - b) * q.p_j.powi((p.m_r * p.n_t) as i32))
}
