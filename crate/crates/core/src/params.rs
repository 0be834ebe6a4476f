//! Shared parameter containers, unit conversion and validation.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{name} must be finite and non-negative, got {value}")]
    NonNegative { name: &'static str, value: f64 },
    #[error("{name} must be finite and positive, got {value}")]
    Positive { name: &'static str, value: f64 },
    #[error("n1_cap must be at least 1")]
    CapacityTooSmall,
    #[error("uniform patience needs 0 < lo <= hi, got [{lo}, {hi}]")]
    BadUniformRange { lo: f64, hi: f64 },
}

/// Arrival/service/patience rates and queue limits shared by all engines.
///
/// Rates are in packets per second, times in seconds. `gamma` is the
/// per-waiting-packet patience rate of the high-priority class; `epsilon`
/// bounds the low-priority mean queueing delay; `omega` is the maximal
/// high-priority waiting time used by the low-priority approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma: f64,
    pub n1_cap: usize,
    pub epsilon: f64,
    pub omega: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let nonneg = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("omega", self.omega),
        ];
        for (name, value) in nonneg {
            if !value.is_finite() || value < 0.0 {
                return Err(ParamError::NonNegative { name, value });
            }
        }
        for (name, value) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ParamError::Positive { name, value });
            }
        }
        if self.n1_cap < 1 {
            return Err(ParamError::CapacityTooSmall);
        }
        Ok(())
    }

    /// Submitted load of the high-priority class.
    pub fn rho1(&self) -> f64 {
        self.lambda1 / self.mu1
    }

    /// Submitted load of the low-priority class.
    pub fn rho2(&self) -> f64 {
        self.lambda2 / self.mu2
    }
}

/// Underlay channel constants: interference threshold, noise, bandwidth,
/// packet size and the transmission deadline.
///
/// `q_lin` and `n0` share a linear power scale; only the ratio `Q/N0`
/// enters the transmission-time law. `g_ss`/`g_sp` are the secondary-link
/// and secondary-to-primary power gains, used when deterministic
/// transmission times are wanted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub q_lin: f64,
    pub n0: f64,
    pub bandwidth: f64,
    pub packet_size: f64,
    pub t_out: f64,
    pub g_ss: Option<f64>,
    pub g_sp: Option<f64>,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("q_lin", self.q_lin),
            ("n0", self.n0),
            ("bandwidth", self.bandwidth),
            ("packet_size", self.packet_size),
            ("t_out", self.t_out),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ParamError::Positive { name, value });
            }
        }
        for (name, value) in [("g_ss", self.g_ss), ("g_sp", self.g_sp)] {
            if let Some(v) = value {
                if !v.is_finite() || v <= 0.0 {
                    return Err(ParamError::Positive { name, value: v });
                }
            }
        }
        Ok(())
    }

    /// Seconds-scale constant `packet_size * ln 2 / bandwidth`.
    pub fn b_bar(&self) -> f64 {
        self.packet_size * std::f64::consts::LN_2 / self.bandwidth
    }

    /// Interference-to-noise ratio `Q/N0`, the only combination of the two
    /// powers the transmission-time law depends on.
    pub fn q_over_n0(&self) -> f64 {
        self.q_lin / self.n0
    }
}

/// Impatience-time distribution of waiting high-priority packets.
///
/// The analytic chain assumes the exponential case; the simulator accepts
/// any of the three.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatienceSpec {
    Exponential { rate: f64 },
    Deterministic { deadline: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl PatienceSpec {
    pub fn validate(&self) -> Result<(), ParamError> {
        match *self {
            PatienceSpec::Exponential { rate } => {
                if !rate.is_finite() || rate <= 0.0 {
                    return Err(ParamError::Positive { name: "patience rate", value: rate });
                }
            }
            PatienceSpec::Deterministic { deadline } => {
                if !deadline.is_finite() || deadline <= 0.0 {
                    return Err(ParamError::Positive { name: "patience deadline", value: deadline });
                }
            }
            PatienceSpec::Uniform { lo, hi } => {
                if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return Err(ParamError::BadUniformRange { lo, hi });
                }
            }
        }
        Ok(())
    }
}

/// Outcome of the nominal-load stability check.
///
/// A violation is a warning, not an error: the finite-capacity reneging
/// chain has a stationary distribution regardless of load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    pub rho1: f64,
    pub rho2: f64,
}

/// Checks `lambda1 + lambda2 < mu1` (the common-rate condition) and reports
/// the per-class loads.
pub fn validate_stability(p: &SystemParams) -> StabilityReport {
    StabilityReport {
        stable: p.lambda1 + p.lambda2 < p.mu1,
        rho1: p.rho1(),
        rho2: p.rho2(),
    }
}

/// Converts a decibel value to a linear power ratio.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// True iff the low-priority mean queueing delay meets its QoS bound
/// (strict inequality).
pub fn check_qos(mean_wait2: f64, p: &SystemParams) -> bool {
    mean_wait2 < p.epsilon
}
