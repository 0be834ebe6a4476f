//! Scenario files, experiment sweeps, and CSV emission.
//!
//! A scenario is a flat `key = value` text file with `#` comments. A
//! single sweep variable is declared as `sweep = <key>` plus
//! `values = a:b:step` (inclusive range) or `values = v1,v2,...`. The key
//! `mu1 = auto_channel` recalibrates the class-1 service rate per sweep
//! point from the channel law, `mu1 = 1 / E[min(T, t_out)]`.

use crate::analytic;
use crate::channel::{expected_transmission_time, outage_probability, ServiceTimeLaw};
use crate::ctmc;
use crate::params::{db_to_linear, ChannelParams, PatienceSpec, SystemParams};
use crate::sim::{run_sim, wilson_ci, Estimate, PreemptionMode, ServiceMode, SimConfig};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseIssue {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("{}", format_issues(.0))]
    Parse(Vec<ParseIssue>),
    #[error("cross-validation needs at least two engines, scenario has {0}")]
    TooFewEngines(usize),
    #[error("invalid parameters: {0}")]
    BadParams(#[from] crate::params::ParamError),
}

fn format_issues(issues: &[ParseIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("line {}: {}", i.line, i.message))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Analytic,
    Ctmc,
    Sim,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Analytic => "analytic",
            EngineKind::Ctmc => "ctmc",
            EngineKind::Sim => "sim",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub engines: Vec<EngineKind>,
    pub params: SystemParams,
    pub channel: Option<ChannelParams>,
    pub patience: PatienceSpec,
    /// patience defaults to exponential(gamma) and then tracks gamma sweeps
    pub patience_follows_gamma: bool,
    pub mu1_auto: bool,
    pub service_mode: ServiceMode,
    pub sweep_key: Option<String>,
    pub sweep_values: Vec<f64>,
    pub reps: u32,
    pub seed: u64,
    pub events: u64,
}

const SWEEPABLE: &[&str] = &[
    "lambda1", "lambda2", "mu1", "mu2", "gamma", "n1", "epsilon", "omega", "q_over_n0_db", "t_out",
    "packet_size",
];

fn parse_values(spec: &str, line: usize, issues: &mut Vec<ParseIssue>) -> Vec<f64> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            issues.push(ParseIssue { line, message: format!("range must be a:b:step, got `{spec}`") });
            return Vec::new();
        }
        let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse::<f64>().ok()).collect();
        let Some(nums) = nums else {
            issues.push(ParseIssue { line, message: format!("non-numeric range bound in `{spec}`") });
            return Vec::new();
        };
        let (a, b, step) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || b < a {
            issues.push(ParseIssue { line, message: format!("range `{spec}` must have b >= a and step > 0") });
            return Vec::new();
        }
        let n = ((b - a) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| a + k as f64 * step).collect()
    } else {
        let mut out = Vec::new();
        for piece in spec.split(',') {
            match piece.trim().parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) => issues.push(ParseIssue { line, message: format!("non-numeric value `{}`", piece.trim()) }),
            }
        }
        out
    }
}

/// Parses scenario text, reporting every problem with its line number.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut issues = Vec::new();
    let mut name = String::from("unnamed");
    let mut engines = vec![EngineKind::Analytic];
    // section-V defaults: B = 1 MHz, gamma = 100, n1 = 100
    let mut lambda1: Option<f64> = None;
    let mut lambda2 = 0.0;
    let mut mu1: Option<f64> = None;
    let mut mu1_auto = false;
    let mut mu2 = 100.0;
    let mut gamma = 100.0;
    let mut n1_cap = 100usize;
    let mut epsilon = 0.1;
    let mut omega = 0.01;
    let mut bandwidth = 1e6;
    let mut q_db: Option<f64> = None;
    let mut packet_size: Option<f64> = None;
    let mut t_out: Option<f64> = None;
    let mut g_ss: Option<f64> = None;
    let mut g_sp: Option<f64> = None;
    let mut patience: Option<PatienceSpec> = None;
    let mut service_mode = ServiceMode::Markovian;
    let mut sweep_key: Option<(String, usize)> = None;
    let mut sweep_values: Vec<f64> = Vec::new();
    let mut reps = 1u32;
    let mut seed = 1u64;
    let mut events = 1_000_000u64;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            issues.push(ParseIssue { line, message: format!("expected `key = value`, got `{content}`") });
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let num = |issues: &mut Vec<ParseIssue>| -> Option<f64> {
            match value.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ => {
                    issues.push(ParseIssue { line, message: format!("key `{key}` needs a finite number, got `{value}`") });
                    None
                }
            }
        };
        match key {
            "name" => name = value.to_string(),
            "engines" => {
                let mut parsed = Vec::new();
                for e in value.split(',') {
                    match e.trim() {
                        "analytic" => parsed.push(EngineKind::Analytic),
                        "ctmc" => parsed.push(EngineKind::Ctmc),
                        "sim" => parsed.push(EngineKind::Sim),
                        other => issues.push(ParseIssue { line, message: format!("unknown engine `{other}`") }),
                    }
                }
                if !parsed.is_empty() {
                    engines = parsed;
                }
            }
            "lambda1" => lambda1 = num(&mut issues),
            "lambda2" => {
                if let Some(v) = num(&mut issues) {
                    lambda2 = v;
                }
            }
            "mu1" => {
                if value == "auto_channel" {
                    mu1_auto = true;
                } else {
                    mu1 = num(&mut issues);
                }
            }
            "mu2" => {
                if let Some(v) = num(&mut issues) {
                    mu2 = v;
                }
            }
            "gamma" => {
                if let Some(v) = num(&mut issues) {
                    gamma = v;
                }
            }
            "n1" => match value.parse::<usize>() {
                Ok(v) => n1_cap = v,
                Err(_) => issues.push(ParseIssue { line, message: format!("key `n1` needs an integer, got `{value}`") }),
            },
            "epsilon" => {
                if let Some(v) = num(&mut issues) {
                    epsilon = v;
                }
            }
            "omega" => {
                if let Some(v) = num(&mut issues) {
                    omega = v;
                }
            }
            "bandwidth" => {
                if let Some(v) = num(&mut issues) {
                    bandwidth = v;
                }
            }
            "q_over_n0_db" => q_db = num(&mut issues),
            "packet_size" => packet_size = num(&mut issues),
            "t_out" => t_out = num(&mut issues),
            "g_ss" => g_ss = num(&mut issues),
            "g_sp" => g_sp = num(&mut issues),
            "patience" => {
                let parsed = parse_patience(value);
                match parsed {
                    Some(p) => patience = Some(p),
                    None => issues.push(ParseIssue { line, message: format!("unrecognized patience spec `{value}`") }),
                }
            }
            "service_mode" => match value {
                "markovian" => service_mode = ServiceMode::Markovian,
                "channel" => service_mode = ServiceMode::Channel,
                other => issues.push(ParseIssue { line, message: format!("unknown service_mode `{other}`") }),
            },
            "sweep" => {
                if SWEEPABLE.contains(&value) {
                    sweep_key = Some((value.to_string(), line));
                } else {
                    issues.push(ParseIssue { line, message: format!("`{value}` is not a sweepable key") });
                }
            }
            "values" => sweep_values = parse_values(value, line, &mut issues),
            "reps" => match value.parse::<u32>() {
                Ok(v) if v >= 1 => reps = v,
                _ => issues.push(ParseIssue { line, message: format!("key `reps` needs a positive integer, got `{value}`") }),
            },
            "seed" => match value.parse::<u64>() {
                Ok(v) => seed = v,
                Err(_) => issues.push(ParseIssue { line, message: format!("key `seed` needs an integer, got `{value}`") }),
            },
            "events" => match value.parse::<u64>() {
                Ok(v) if v > 0 => events = v,
                _ => issues.push(ParseIssue { line, message: format!("key `events` needs a positive integer, got `{value}`") }),
            },
            other => issues.push(ParseIssue { line, message: format!("unknown key `{other}`") }),
        }
    }

    if lambda1.is_none() {
        issues.push(ParseIssue { line: 0, message: "missing required key `lambda1`".into() });
    }
    if mu1.is_none() && !mu1_auto {
        issues.push(ParseIssue { line: 0, message: "missing required key `mu1`".into() });
    }
    let channel = match (q_db, packet_size, t_out) {
        (Some(db), Some(s), Some(t)) => Some(ChannelParams {
            q_lin: db_to_linear(db),
            n0: 1.0,
            bandwidth,
            packet_size: s,
            t_out: t,
            g_ss,
            g_sp,
        }),
        (None, None, None) => None,
        _ => {
            issues.push(ParseIssue {
                line: 0,
                message: "channel setup needs all of q_over_n0_db, packet_size, t_out".into(),
            });
            None
        }
    };
    if mu1_auto && channel.is_none() {
        issues.push(ParseIssue { line: 0, message: "`mu1 = auto_channel` requires channel keys".into() });
    }
    if service_mode == ServiceMode::Channel && channel.is_none() {
        issues.push(ParseIssue { line: 0, message: "`service_mode = channel` requires channel keys".into() });
    }
    match (&sweep_key, sweep_values.is_empty()) {
        (Some((_, line)), true) => {
            issues.push(ParseIssue { line: *line, message: "`sweep` declared without nonempty `values`".into() })
        }
        (None, false) => issues.push(ParseIssue { line: 0, message: "`values` given without `sweep`".into() }),
        _ => {}
    }

    if !issues.is_empty() {
        return Err(ScenarioError::Parse(issues));
    }
    let params = SystemParams {
        lambda1: lambda1.unwrap(),
        lambda2,
        mu1: mu1.unwrap_or(1.0), // placeholder until per-point calibration
        mu2,
        gamma,
        n1_cap,
        epsilon,
        omega,
    };
    let patience_follows_gamma = patience.is_none();
    Ok(Scenario {
        name,
        engines,
        params,
        channel,
        patience: patience.unwrap_or(PatienceSpec::Exponential { rate: gamma }),
        patience_follows_gamma,
        mu1_auto,
        service_mode,
        sweep_key: sweep_key.map(|(k, _)| k),
        sweep_values,
        reps,
        seed,
        events,
    })
}

fn parse_patience(value: &str) -> Option<PatienceSpec> {
    let (kind, args) = value.split_once(':').unwrap_or((value, ""));
    match kind.trim() {
        "exponential" => args.trim().parse().ok().map(|rate| PatienceSpec::Exponential { rate }),
        "deterministic" => args.trim().parse().ok().map(|deadline| PatienceSpec::Deterministic { deadline }),
        "uniform" => {
            let (lo, hi) = args.split_once(',')?;
            Some(PatienceSpec::Uniform { lo: lo.trim().parse().ok()?, hi: hi.trim().parse().ok()? })
        }
        _ => None,
    }
}

/// One CSV row: a single engine at a single sweep point. Absent metrics
/// stay `None` and serialize as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub engine: &'static str,
    pub sweep_key: String,
    pub sweep_value: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma: f64,
    pub n1: usize,
    pub p_empty: Option<f64>,
    pub e_n1: Option<f64>,
    pub e_n1_waiting: Option<f64>,
    /// queue-only class-1 wait `E[(n1-1)+] / lambda1`
    pub e_tq1: Option<f64>,
    /// class-1 system functional `E[n1] / lambda1`
    pub e_t1: Option<f64>,
    pub p_overflow: Option<f64>,
    pub p_block: Option<f64>,
    pub p_renege: Option<f64>,
    pub e_n2: Option<f64>,
    pub e_tq2: Option<f64>,
    pub d_factor: Option<f64>,
    pub feasible: Option<bool>,
    pub p_empty_hw: Option<f64>,
    pub e_n1_hw: Option<f64>,
    pub e_tq1_hw: Option<f64>,
    pub e_n2_hw: Option<f64>,
    pub e_tq2_hw: Option<f64>,
    pub renege_lo: Option<f64>,
    pub renege_hi: Option<f64>,
    pub overflow_lo: Option<f64>,
    pub overflow_hi: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn blank(s: &Scenario, engine: &'static str, key: &str, value: f64, p: &SystemParams) -> ResultRow {
        ResultRow {
            scenario: s.name.clone(),
            engine,
            sweep_key: key.to_string(),
            sweep_value: value,
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            mu1: p.mu1,
            mu2: p.mu2,
            gamma: p.gamma,
            n1: p.n1_cap,
            p_empty: None,
            e_n1: None,
            e_n1_waiting: None,
            e_tq1: None,
            e_t1: None,
            p_overflow: None,
            p_block: None,
            p_renege: None,
            e_n2: None,
            e_tq2: None,
            d_factor: None,
            feasible: None,
            p_empty_hw: None,
            e_n1_hw: None,
            e_tq1_hw: None,
            e_n2_hw: None,
            e_tq2_hw: None,
            renege_lo: None,
            renege_hi: None,
            overflow_lo: None,
            overflow_hi: None,
            error: None,
        }
    }
}

pub const CSV_HEADER: &str = "scenario,engine,sweep_key,sweep_value,lambda1,lambda2,mu1,mu2,gamma,n1,\
p_empty,e_n1,e_n1_waiting,e_tq1,e_t1,p_overflow,p_block,p_renege,e_n2,e_tq2,d_factor,feasible,\
p_empty_hw,e_n1_hw,e_tq1_hw,e_n2_hw,e_tq2_hw,renege_lo,renege_hi,overflow_lo,overflow_hi,error";

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// 12 significant digits, locale-independent.
fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{:.11e}", v)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_escape(&r.scenario),
            r.engine,
            csv_escape(&r.sweep_key),
            fmt_num(r.sweep_value),
            fmt_num(r.lambda1),
            fmt_num(r.lambda2),
            fmt_num(r.mu1),
            fmt_num(r.mu2),
            fmt_num(r.gamma),
            r.n1,
            fmt_opt(r.p_empty),
            fmt_opt(r.e_n1),
            fmt_opt(r.e_n1_waiting),
            fmt_opt(r.e_tq1),
            fmt_opt(r.e_t1),
            fmt_opt(r.p_overflow),
            fmt_opt(r.p_block),
            fmt_opt(r.p_renege),
            fmt_opt(r.e_n2),
            fmt_opt(r.e_tq2),
            fmt_opt(r.d_factor),
            r.feasible.map(|f| if f { "1" } else { "0" }).unwrap_or(""),
            fmt_opt(r.p_empty_hw),
            fmt_opt(r.e_n1_hw),
            fmt_opt(r.e_tq1_hw),
            fmt_opt(r.e_n2_hw),
            fmt_opt(r.e_tq2_hw),
            fmt_opt(r.renege_lo),
            fmt_opt(r.renege_hi),
            fmt_opt(r.overflow_lo),
            fmt_opt(r.overflow_hi),
            r.error.as_deref().map(csv_escape).unwrap_or_default(),
        );
    }
    out
}

/// Parameters and channel state at one sweep point.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub value: f64,
    pub params: SystemParams,
    pub channel: Option<ChannelParams>,
    pub patience: PatienceSpec,
    /// E[min(T, t_out)] and P_out from the channel law, when present
    pub e_t: f64,
    pub p_out: f64,
}

/// Expands the sweep and applies per-point mu1 calibration.
pub fn sweep_points(s: &Scenario) -> Result<Vec<SweepPoint>, ScenarioError> {
    let values: Vec<f64> = if s.sweep_values.is_empty() { vec![f64::NAN] } else { s.sweep_values.clone() };
    let key = s.sweep_key.as_deref().unwrap_or("");
    let mut out = Vec::with_capacity(values.len());
    for &v in &values {
        let mut p = s.params;
        let mut ch = s.channel;
        let mut patience = s.patience;
        if !v.is_nan() {
            match key {
                "lambda1" => p.lambda1 = v,
                "lambda2" => p.lambda2 = v,
                "mu1" => p.mu1 = v,
                "mu2" => p.mu2 = v,
                "gamma" => {
                    p.gamma = v;
                    if s.patience_follows_gamma {
                        patience = PatienceSpec::Exponential { rate: v };
                    }
                }
                "n1" => p.n1_cap = v.round() as usize,
                "epsilon" => p.epsilon = v,
                "omega" => p.omega = v,
                "q_over_n0_db" => {
                    if let Some(c) = ch.as_mut() {
                        c.q_lin = db_to_linear(v) * c.n0;
                    }
                }
                "t_out" => {
                    if let Some(c) = ch.as_mut() {
                        c.t_out = v;
                    }
                }
                "packet_size" => {
                    if let Some(c) = ch.as_mut() {
                        c.packet_size = v;
                    }
                }
                _ => unreachable!("sweep key validated at parse time"),
            }
        }
        let (mut e_t, mut p_out) = (0.0, 0.0);
        if let Some(c) = ch {
            let law = ServiceTimeLaw::new(c.b_bar(), c.q_over_n0()).map_err(|e| {
                ScenarioError::Parse(vec![ParseIssue { line: 0, message: e.to_string() }])
            })?;
            let ex = expected_transmission_time(&law, c.t_out)
                .map_err(|e| ScenarioError::Parse(vec![ParseIssue { line: 0, message: e.to_string() }]))?;
            e_t = ex.truncated_mean;
            p_out = outage_probability(&law, c.t_out).unwrap_or(0.0);
            if s.mu1_auto {
                p.mu1 = 1.0 / e_t;
            }
        }
        out.push(SweepPoint { value: v, params: p, channel: ch, patience, e_t, p_out });
    }
    Ok(out)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-replication seed derived from `(master_seed, run_index)`.
pub fn rep_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

fn analytic_row(s: &Scenario, key: &str, pt: &SweepPoint) -> ResultRow {
    let mut row = ResultRow::blank(s, "analytic", key, pt.value, &pt.params);
    match analytic::class1_steady_state(&pt.params) {
        Ok(ss) => {
            let m = analytic::class1_metrics(&pt.params, &ss, pt.e_t, pt.p_out);
            row.p_empty = Some(m.empty_prob);
            row.e_n1 = Some(m.mean_len);
            row.e_n1_waiting = Some(m.mean_len_waiting);
            row.e_tq1 = Some(m.mean_wait_queue_only);
            row.e_t1 = Some(m.mean_wait);
            row.p_overflow = Some(m.overflow_prob);
            row.p_block = Some(m.blocking_prob);
            row.p_renege = Some(m.reneging_prob);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    // the class-2 approximation is meaningless without class-2 traffic
    if row.error.is_none() && pt.params.lambda2 > 0.0 {
        match analytic::class2_approx(&pt.params) {
            Ok(m2) => {
                row.e_n2 = Some(m2.mean_num);
                row.e_tq2 = Some(m2.mean_wait);
                row.d_factor = Some(m2.d);
                row.feasible = Some(m2.feasible);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

fn ctmc_row(s: &Scenario, key: &str, pt: &SweepPoint) -> ResultRow {
    let mut row = ResultRow::blank(s, "ctmc", key, pt.value, &pt.params);
    match ctmc::solve_auto(&pt.params, 1e-9) {
        Ok((_, d)) => {
            let m = ctmc::ctmc_metrics(&d, &pt.params, 1e-9);
            row.p_empty = Some(m.p_empty1);
            row.e_n1 = Some(m.e_n1);
            row.e_n1_waiting = Some(m.e_n1_waiting);
            row.e_tq1 = Some(m.wait1_queue_little);
            row.e_t1 = Some(m.wait1_little);
            row.p_block = Some(m.blocking_prob);
            row.p_renege = Some(m.renege_frac);
            row.e_n2 = Some(m.e_n2);
            row.e_tq2 = Some(m.wait2_eff);
            row.feasible = Some(m.trusted);
            if !m.trusted {
                row.error = Some("truncation boundary mass above tolerance".into());
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Pools per-replication batch means; independent replications make the
/// pooled vector a valid batch-means sample.
#[derive(Default)]
struct Pooled {
    empty1: Vec<f64>,
    n1: Vec<f64>,
    n1_waiting: Vec<f64>,
    n2: Vec<f64>,
    wait1: Vec<f64>,
    wait2: Vec<f64>,
    renege_succ: u64,
    over_succ: u64,
    trials: u64,
}

fn sim_row(s: &Scenario, key: &str, pt: &SweepPoint, point_index: u64) -> ResultRow {
    let mut row = ResultRow::blank(s, "sim", key, pt.value, &pt.params);
    let mut pool = Pooled::default();
    for rep in 0..s.reps {
        let cfg = SimConfig {
            params: pt.params,
            channel: pt.channel,
            patience: pt.patience,
            service_mode: s.service_mode,
            preemption_mode: PreemptionMode::Resume,
            horizon_events: s.events,
            warmup_fraction: 0.2,
            batches: 32,
            seed: rep_seed(s.seed, point_index * 10_000 + rep as u64),
            record_trace: false,
        };
        match run_sim(&cfg) {
            Ok(r) => {
                pool.empty1.extend(&r.batch_means.empty1);
                pool.n1.extend(&r.batch_means.n1);
                pool.n1_waiting.extend(&r.batch_means.n1_waiting);
                pool.n2.extend(&r.batch_means.n2);
                pool.wait1.extend(&r.batch_means.wait1);
                pool.wait2.extend(&r.batch_means.wait2);
                pool.renege_succ += r.reneged_frac.successes;
                pool.over_succ += r.overflow_frac.successes;
                pool.trials += r.reneged_frac.trials;
            }
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        }
    }
    let put = |dst_m: &mut Option<f64>, dst_h: &mut Option<f64>, e: Option<Estimate>| {
        if let Some(e) = e {
            *dst_m = Some(e.mean);
            *dst_h = Some(e.half_width);
        }
    };
    put(&mut row.p_empty, &mut row.p_empty_hw, crate::sim::summarize(&pool.empty1).ok());
    let n1_est = crate::sim::summarize(&pool.n1).ok();
    put(&mut row.e_n1, &mut row.e_n1_hw, n1_est);
    row.e_n1_waiting = crate::sim::summarize(&pool.n1_waiting).ok().map(|e| e.mean);
    if pt.params.lambda1 > 0.0 {
        let inv = 1.0 / pt.params.lambda1;
        put(
            &mut row.e_tq1,
            &mut row.e_tq1_hw,
            crate::sim::summarize(&pool.n1_waiting).ok().map(|e| e.scaled(inv)),
        );
        row.e_t1 = n1_est.map(|e| e.mean * inv);
    }
    put(&mut row.e_n2, &mut row.e_n2_hw, crate::sim::summarize(&pool.n2).ok());
    put(&mut row.e_tq2, &mut row.e_tq2_hw, crate::sim::summarize(&pool.wait2).ok());
    let renege = wilson_ci(pool.renege_succ, pool.trials);
    row.p_renege = Some(renege.value);
    row.renege_lo = Some(renege.lo);
    row.renege_hi = Some(renege.hi);
    let over = wilson_ci(pool.over_succ, pool.trials);
    row.p_overflow = Some(over.value);
    row.overflow_lo = Some(over.lo);
    row.overflow_hi = Some(over.hi);
    row
}

/// Executes every requested engine at every sweep point, in sweep order.
/// Engine failures at a point produce an error-marker row, never an
/// aborted sweep. Deterministic given the scenario's master seed.
pub fn run_scenario(s: &Scenario) -> Result<Vec<ResultRow>, ScenarioError> {
    let key = s.sweep_key.clone().unwrap_or_default();
    let points = sweep_points(s)?;
    let mut rows = Vec::new();
    for (pi, pt) in points.iter().enumerate() {
        for eng in &s.engines {
            rows.push(match eng {
                EngineKind::Analytic => analytic_row(s, &key, pt),
                EngineKind::Ctmc => ctmc_row(s, &key, pt),
                EngineKind::Sim => sim_row(s, &key, pt, pi as u64),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct CrossTolerances {
    /// absolute tolerance for analytic vs ctmc class-1 marginal metrics
    pub abs_analytic_ctmc: f64,
    /// minimum fraction of sweep points whose sim CI covers the exact value
    pub min_coverage: f64,
}

impl Default for CrossTolerances {
    fn default() -> Self {
        CrossTolerances { abs_analytic_ctmc: 1e-8, min_coverage: 0.9 }
    }
}

#[derive(Debug, Clone)]
pub struct PointCheck {
    pub sweep_value: f64,
    /// |analytic - ctmc| over {p_empty, e_n1}, when both engines ran
    pub delta_p_empty: Option<f64>,
    pub delta_e_n1: Option<f64>,
    /// sim CI covered the exact p_empty / e_n1
    pub covered_p_empty: Option<bool>,
    pub covered_e_n1: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub points: Vec<PointCheck>,
    pub max_delta: f64,
    pub coverage: f64,
    pub pass: bool,
}

/// Pairwise engine comparison per sweep point: analytic vs ctmc by
/// absolute delta, sim vs the exact engines by CI coverage.
pub fn cross_validate(s: &Scenario, tol: CrossTolerances) -> Result<ValidationReport, ScenarioError> {
    if s.engines.len() < 2 {
        return Err(ScenarioError::TooFewEngines(s.engines.len()));
    }
    let key = s.sweep_key.clone().unwrap_or_default();
    let points = sweep_points(s)?;
    let has = |e: EngineKind| s.engines.contains(&e);
    let mut checks = Vec::new();
    let mut max_delta: f64 = 0.0;
    let mut cover_num = 0usize;
    let mut cover_den = 0usize;
    for (pi, pt) in points.iter().enumerate() {
        let a = has(EngineKind::Analytic).then(|| analytic_row(s, &key, pt));
        let c = has(EngineKind::Ctmc).then(|| ctmc_row(s, &key, pt));
        let m = has(EngineKind::Sim).then(|| sim_row(s, &key, pt, pi as u64));
        let mut pc = PointCheck {
            sweep_value: pt.value,
            delta_p_empty: None,
            delta_e_n1: None,
            covered_p_empty: None,
            covered_e_n1: None,
        };
        if let (Some(a), Some(c)) = (&a, &c) {
            if let (Some(pa), Some(pb)) = (a.p_empty, c.p_empty) {
                let d = (pa - pb).abs();
                pc.delta_p_empty = Some(d);
                max_delta = max_delta.max(d);
            }
            if let (Some(na), Some(nb)) = (a.e_n1, c.e_n1) {
                let d = (na - nb).abs();
                pc.delta_e_n1 = Some(d);
                max_delta = max_delta.max(d);
            }
        }
        // prefer the ctmc reference (exact for the 2-D chain) when present
        let reference = c.as_ref().or(a.as_ref());
        if let (Some(r), Some(m)) = (reference, &m) {
            if let (Some(exact), Some(mean), Some(hw)) = (r.p_empty, m.p_empty, m.p_empty_hw) {
                let ok = (exact - mean).abs() <= hw;
                pc.covered_p_empty = Some(ok);
                cover_den += 1;
                cover_num += ok as usize;
            }
            if let (Some(exact), Some(mean), Some(hw)) = (r.e_n1, m.e_n1, m.e_n1_hw) {
                let ok = (exact - mean).abs() <= hw;
                pc.covered_e_n1 = Some(ok);
                cover_den += 1;
                cover_num += ok as usize;
            }
        }
        checks.push(pc);
    }
    let coverage = if cover_den == 0 { 1.0 } else { cover_num as f64 / cover_den as f64 };
    let pass = max_delta <= tol.abs_analytic_ctmc && coverage >= tol.min_coverage;
    Ok(ValidationReport { points: checks, max_delta, coverage, pass })
}
