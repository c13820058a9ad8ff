//! Exponential integrals.

use super::AnalyticError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(x) = ∫_x^∞ e^{−t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64, AnalyticError> {
    if !(x > 0.0) {
        return Err(AnalyticError::Domain { x });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x < 1.0 {
        e1_series(x)
    } else {
        (-x).exp() * e1_cf_scaled(x)
    })
}

/// `e^x E1(x)` for `x > 0`, finite even where `e^x` alone overflows.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64, AnalyticError> {
    if !(x > 0.0) {
        return Err(AnalyticError::Domain { x });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x < 1.0 {
        x.exp() * e1_series(x)
    } else {
        e1_cf_scaled(x)
    })
}

/// `Ei(x) = ∫_{−∞}^x e^t/t dt` on the negative axis, where `Ei(x) = −E1(−x)`.
pub fn exp_integral_ei(x: f64) -> Result<f64, AnalyticError> {
    if !(x < 0.0) {
        return Err(AnalyticError::Domain { x });
    }
    Ok(-exp_integral_e1(-x)?)
}

fn e1_series(x: f64) -> f64 {
    // −γ − ln x − Σ (−x)^n / (n·n!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..200 {
        let nf = n as f64;
        term *= -x / nf;
        let add = term / nf;
        sum += add;
        if add.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Modified Lentz evaluation of the continued fraction for `e^x E1(x)`, `x ≥ 1`.
fn e1_cf_scaled(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}
