//! Underlay channel model: transmission-time distribution, outage
//! probability, expected service time and an inverse-CDF sampler.
//!
//! With `x = b_bar / t` and `c = Q/N0`, the transmission time has CDF
//! `F(t) = c / (e^x + c - 1)` and density
//! `f(t) = (b_bar c / t^2) e^x / (c - 1 + e^x)^2`. Both are evaluated in
//! the `e^{-x}` form so large `x` cannot overflow.

use crate::quad::{self, QuadError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("{name} must be positive, got {value}")]
    Nonpositive { name: &'static str, value: f64 },
    #[error("uniform variate must lie in (0,1), got {0}")]
    BadVariate(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Distribution of the channel-determined transmission time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceTimeLaw {
    pub b_bar: f64,
    pub q_over_n0: f64,
}

impl ServiceTimeLaw {
    pub fn new(b_bar: f64, q_over_n0: f64) -> Result<Self, ChannelError> {
        if !b_bar.is_finite() || b_bar <= 0.0 {
            return Err(ChannelError::Nonpositive { name: "b_bar", value: b_bar });
        }
        if !q_over_n0.is_finite() || q_over_n0 <= 0.0 {
            return Err(ChannelError::Nonpositive { name: "q_over_n0", value: q_over_n0 });
        }
        Ok(Self { b_bar, q_over_n0 })
    }
}

/// Largest transmit power satisfying the interference constraint at the
/// primary receiver: `Q / g_sp`.
pub fn max_transmit_power(q_lin: f64, g_sp: f64) -> Result<f64, ChannelError> {
    if !g_sp.is_finite() || g_sp <= 0.0 {
        return Err(ChannelError::Nonpositive { name: "g_sp", value: g_sp });
    }
    if !q_lin.is_finite() || q_lin <= 0.0 {
        return Err(ChannelError::Nonpositive { name: "q_lin", value: q_lin });
    }
    Ok(q_lin / g_sp)
}

/// Deterministic transmission time at full allowed power:
/// `b_bar / ln(1 + (g_ss/g_sp) * Q/N0)`.
pub fn transmission_time(law: &ServiceTimeLaw, g_ss: f64, g_sp: f64) -> Result<f64, ChannelError> {
    if !g_ss.is_finite() || g_ss <= 0.0 {
        return Err(ChannelError::Nonpositive { name: "g_ss", value: g_ss });
    }
    if !g_sp.is_finite() || g_sp <= 0.0 {
        return Err(ChannelError::Nonpositive { name: "g_sp", value: g_sp });
    }
    let snr = (g_ss / g_sp) * law.q_over_n0;
    Ok(law.b_bar / snr.ln_1p())
}

/// CDF of the transmission time, `F(t) = c e^{-x} / (1 + (c-1) e^{-x})`.
pub fn service_time_cdf(law: &ServiceTimeLaw, t: f64) -> Result<f64, ChannelError> {
    if !t.is_finite() || t <= 0.0 {
        return Err(ChannelError::Nonpositive { name: "t", value: t });
    }
    let c = law.q_over_n0;
    let em = (-law.b_bar / t).exp();
    Ok(c * em / (1.0 + (c - 1.0) * em))
}

/// Density of the transmission time.
pub fn service_time_pdf(law: &ServiceTimeLaw, t: f64) -> Result<f64, ChannelError> {
    if !t.is_finite() || t <= 0.0 {
        return Err(ChannelError::Nonpositive { name: "t", value: t });
    }
    let c = law.q_over_n0;
    let em = (-law.b_bar / t).exp();
    let denom = 1.0 + (c - 1.0) * em;
    Ok(law.b_bar * c / (t * t) * em / (denom * denom))
}

/// Probability the transmission exceeds the deadline:
/// `P_out = 1 - F(t_out)`.
pub fn outage_probability(law: &ServiceTimeLaw, t_out: f64) -> Result<f64, ChannelError> {
    Ok(1.0 - service_time_cdf(law, t_out)?)
}

/// Inverse-CDF sampler: `t = b_bar / ln(1 + c (1-u)/u)` for `u` in (0,1).
pub fn sample_service_time(law: &ServiceTimeLaw, u: f64) -> Result<f64, ChannelError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(ChannelError::BadVariate(u));
    }
    let c = law.q_over_n0;
    Ok(law.b_bar / (c * (1.0 - u) / u).ln_1p())
}

/// Expected transmission time under the deadline, both routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedTxTime {
    /// The closed-form expression evaluated exactly as printed:
    /// `c * Int_{e^{x_out}}^inf b_bar/((c-1+u)^2 ln u) du
    ///  + c * t_out * (1/c - 1/(1 - e^{x_out}))`.
    pub as_printed: f64,
    /// Truncated-mean oracle `E[min(T, t_out)]
    ///  = Int_0^{t_out} t f(t) dt + t_out * P_out`.
    pub truncated_mean: f64,
    /// `|as_printed - truncated_mean| / truncated_mean`.
    pub rel_gap: f64,
}

const QUAD_TOL: f64 = 1e-10;

/// Evaluates the expected transmission time of deadline-limited packets.
///
/// The printed closed form and the truncated-mean oracle are both
/// returned; the two differ in their boundary term (see `rel_gap`), so
/// downstream users pick explicitly. Service-rate calibration uses the
/// truncated mean.
pub fn expected_transmission_time(law: &ServiceTimeLaw, t_out: f64) -> Result<ExpectedTxTime, ChannelError> {
    if !t_out.is_finite() || t_out <= 0.0 {
        return Err(ChannelError::Nonpositive { name: "t_out", value: t_out });
    }
    let c = law.q_over_n0;
    let b = law.b_bar;
    let x_out = b / t_out;

    // integral term in u-space, as printed
    let u0 = x_out.exp();
    let (tail, _) = quad::integrate_to_inf(
        |u| {
            let lnu = u.ln();
            if lnu <= 0.0 {
                return 0.0;
            }
            let d = c - 1.0 + u;
            b / (d * d * lnu)
        },
        u0,
        QUAD_TOL,
    )?;
    let boundary_printed = t_out * (1.0 / c - 1.0 / (1.0 - u0));
    let as_printed = c * (tail + boundary_printed);

    // independent oracle in t-space
    let (head, _) = quad::integrate(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let em = (-b / t).exp();
            let denom = 1.0 + (c - 1.0) * em;
            b * c / t * em / (denom * denom)
        },
        0.0,
        t_out,
        QUAD_TOL,
    )?;
    let p_out = outage_probability(law, t_out)?;
    let truncated_mean = head + t_out * p_out;

    let rel_gap = (as_printed - truncated_mean).abs() / truncated_mean;
    Ok(ExpectedTxTime { as_printed, truncated_mean, rel_gap })
}

/// Mean of the unbounded transmission time, if it exists.
///
/// Integrates `t f(t)` over doubling horizons and accepts only when the
/// increments become Cauchy. The law is heavy-tailed
/// (`1 - F(t) ~ b_bar/(c t)`), so the increments settle at
/// `(b_bar/c) ln 2` instead and the divergence is reported as `None`.
pub fn unbounded_mean(law: &ServiceTimeLaw) -> Option<f64> {
    let l = *law;
    let piece = |a: f64, b: f64| {
        quad::integrate(
            |t| if t <= 0.0 { 0.0 } else { t * service_time_pdf(&l, t).unwrap_or(0.0) },
            a,
            b,
            1e-12,
        )
        .map(|(v, _)| v)
        .unwrap_or(f64::NAN)
    };
    let mut horizon = 10.0 * l.b_bar;
    let mut total = piece(0.0, horizon);
    for _ in 0..48 {
        let inc = piece(horizon, 2.0 * horizon);
        if !inc.is_finite() || !total.is_finite() {
            return None;
        }
        total += inc;
        horizon *= 2.0;
        if inc < 1e-10 * total.abs().max(1e-300) {
            return Some(total);
        }
    }
    None
}
