//! `cqlab` — analytic, CTMC, and simulation front ends plus scenario
//! sweeps. Exit codes: 0 success, 1 validation failure, 2 input error.

use clap::{Args, Parser, Subcommand};
use cqlab_core::scenario::{
    cross_validate, parse_scenario, rows_to_csv, run_scenario, CrossTolerances, Scenario,
};
use cqlab_core::sim::{run_sim, PreemptionMode, ServiceMode, SimConfig};
use cqlab_core::{analytic, ctmc, PatienceSpec, SystemParams};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cqlab", about = "two-class preemptive-priority queueing laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// class-1 (high priority) arrival rate
    #[arg(long)]
    lambda1: f64,
    /// class-2 arrival rate
    #[arg(long, default_value_t = 0.0)]
    lambda2: f64,
    /// class-1 service rate
    #[arg(long)]
    mu1: f64,
    /// class-2 service rate
    #[arg(long, default_value_t = 100.0)]
    mu2: f64,
    /// per-packet impatience rate of waiting class-1 packets
    #[arg(long, default_value_t = 100.0)]
    gamma: f64,
    /// class-1 queue capacity
    #[arg(long, default_value_t = 100)]
    n1: usize,
    /// class-2 QoS bound on the mean waiting time
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// damping constant of the class-2 approximation
    #[arg(long, default_value_t = 0.01)]
    omega: f64,
}

impl ParamArgs {
    fn to_params(&self) -> SystemParams {
        SystemParams {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            mu1: self.mu1,
            mu2: self.mu2,
            gamma: self.gamma,
            n1_cap: self.n1,
            epsilon: self.epsilon,
            omega: self.omega,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form class-1 chain and class-2 approximation
    Analytic {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Truncated 2-D CTMC steady state
    Ctmc {
        #[command(flatten)]
        params: ParamArgs,
        /// dump the stationary distribution as CSV to this path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete-event simulation
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        events: u64,
        /// dump the event trace (time, kind, packet, queue lengths)
        #[arg(long)]
        trace: bool,
    },
    /// Run a scenario file and emit CSV
    Sweep {
        scenario: PathBuf,
        /// write CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// override the scenario master seed
        #[arg(long)]
        seed: Option<u64>,
        /// override the per-run event horizon
        #[arg(long)]
        events: Option<u64>,
        /// override the simulation replication count
        #[arg(long)]
        reps: Option<u32>,
    },
    /// Cross-validate the engines a scenario requests
    Validate {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        events: Option<u64>,
        /// absolute tolerance for analytic vs ctmc deltas
        #[arg(long, default_value_t = 1e-8)]
        abs_tol: f64,
        /// required fraction of sweep points covered by the sim CI
        #[arg(long, default_value_t = 0.9)]
        min_coverage: f64,
    },
}

fn load_scenario(path: &PathBuf, seed: Option<u64>, events: Option<u64>, reps: Option<u32>) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut s = parse_scenario(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(events) = events {
        s.events = events;
    }
    if let Some(reps) = reps {
        s.reps = reps;
    }
    Ok(s)
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run() -> Result<(), (u8, String)> {
    let cli = Cli::parse();
    let input_err = |m: String| (2u8, m);
    match cli.command {
        Command::Analytic { params } => {
            let p = params.to_params();
            let ss = analytic::class1_steady_state(&p).map_err(|e| input_err(e.to_string()))?;
            let m = analytic::class1_metrics(&p, &ss, 0.0, 0.0);
            println!("p_empty       {:.12e}", m.empty_prob);
            println!("e_n1          {:.12e}", m.mean_len);
            println!("e_n1_waiting  {:.12e}", m.mean_len_waiting);
            println!("e_tq1         {:.12e}", m.mean_wait_queue_only);
            println!("e_t1          {:.12e}", m.mean_wait);
            println!("p_overflow    {:.12e}", m.overflow_prob);
            println!("p_block       {:.12e}", m.blocking_prob);
            match analytic::class2_approx(&p) {
                Ok(m2) => {
                    println!("e_n2          {:.12e}", m2.mean_num);
                    println!("e_tq2         {:.12e}", m2.mean_wait);
                    println!("d_factor      {:.12e}", m2.d);
                    println!("feasible      {}", m2.feasible);
                }
                Err(e) => println!("class2        error: {e}"),
            }
        }
        Command::Ctmc { params, out } => {
            let p = params.to_params();
            let (model, d) = ctmc::solve_auto(&p, 1e-9).map_err(|e| input_err(e.to_string()))?;
            let m = ctmc::ctmc_metrics(&d, &p, 1e-9);
            println!("states        {}", model.n_states());
            println!("j_max         {}", d.j_max);
            println!("boundary_mass {:.3e}", d.boundary_mass);
            println!("residual      {:.3e}", d.residual);
            println!("p_empty       {:.12e}", m.p_empty1);
            println!("e_n1          {:.12e}", m.e_n1);
            println!("e_n2          {:.12e}", m.e_n2);
            println!("e_tq1         {:.12e}", m.wait1_queue_little);
            println!("e_tq2         {:.12e}", m.wait2_eff);
            println!("p_block       {:.12e}", m.blocking_prob);
            println!("p_renege      {:.12e}", m.renege_frac);
            println!("trusted       {}", m.trusted);
            let report = ctmc::printed_equation_report(&d, &model);
            for (name, ok) in report.verdicts(1e-8) {
                println!("balance {:14} {}", name, if ok { "holds" } else { "violated" });
            }
            if let Some(path) = out {
                write_or_print(Some(&path), &ctmc::dump_csv(&d)).map_err(input_err)?;
            }
        }
        Command::Simulate { params, seed, events, trace } => {
            let p = params.to_params();
            let mut cfg = SimConfig {
                params: p,
                channel: None,
                patience: PatienceSpec::Exponential { rate: p.gamma.max(f64::MIN_POSITIVE) },
                service_mode: ServiceMode::Markovian,
                preemption_mode: PreemptionMode::Resume,
                horizon_events: events,
                warmup_fraction: 0.2,
                batches: 32,
                seed,
                record_trace: trace,
            };
            cfg.horizon_events = events;
            let r = run_sim(&cfg).map_err(|e| input_err(e.to_string()))?;
            println!("seed          {}", r.seed);
            println!("end_time      {:.6}", r.end_time);
            println!("arrived1      {}", r.class1.arrived);
            println!("served1       {}", r.class1.served);
            println!("reneged1      {}", r.class1.reneged);
            println!("overflowed1   {}", r.class1.overflowed);
            println!("arrived2      {}", r.class2.arrived);
            println!("served2       {}", r.class2.served);
            println!("p_empty       {:.6e} +- {:.2e}", r.empty_prob1.mean, r.empty_prob1.half_width);
            println!("e_n1          {:.6e} +- {:.2e}", r.mean_n1.mean, r.mean_n1.half_width);
            println!("e_n2          {:.6e} +- {:.2e}", r.mean_n2.mean, r.mean_n2.half_width);
            if let Some(w) = r.wait1 {
                println!("wait1         {:.6e} +- {:.2e}", w.mean, w.half_width);
            }
            if let Some(w) = r.wait2 {
                println!("wait2         {:.6e} +- {:.2e}", w.mean, w.half_width);
            }
            println!("p_renege      {:.6e} [{:.3e}, {:.3e}]", r.reneged_frac.value, r.reneged_frac.lo, r.reneged_frac.hi);
            if let Some(tr) = &r.trace {
                for e in tr {
                    println!("trace {:.9} {:?} pkt={} n1={} n2={}", e.time, e.kind, e.packet_id, e.n1, e.n2);
                }
            }
        }
        Command::Sweep { scenario, out, seed, events, reps } => {
            let s = load_scenario(&scenario, seed, events, reps).map_err(input_err)?;
            let rows = run_scenario(&s).map_err(|e| input_err(e.to_string()))?;
            write_or_print(out.as_ref(), &rows_to_csv(&rows)).map_err(input_err)?;
            let failures = rows.iter().filter(|r| r.error.is_some()).count();
            if failures > 0 {
                return Err((1, format!("{failures} of {} rows carry error markers", rows.len())));
            }
        }
        Command::Validate { scenario, seed, events, abs_tol, min_coverage } => {
            let s = load_scenario(&scenario, seed, events, None).map_err(input_err)?;
            let tol = CrossTolerances { abs_analytic_ctmc: abs_tol, min_coverage };
            let report = cross_validate(&s, tol).map_err(|e| input_err(e.to_string()))?;
            for pc in &report.points {
                let fmt_delta = |d: Option<f64>| d.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
                let fmt_cov = |c: Option<bool>| c.map(|v| if v { "yes" } else { "NO" }).unwrap_or("-");
                println!(
                    "point {:>12.6}: d_p_empty={} d_e_n1={} cover_p_empty={} cover_e_n1={}",
                    pc.sweep_value,
                    fmt_delta(pc.delta_p_empty),
                    fmt_delta(pc.delta_e_n1),
                    fmt_cov(pc.covered_p_empty),
                    fmt_cov(pc.covered_e_n1),
                );
            }
            println!("max_delta {:.3e}", report.max_delta);
            println!("coverage  {:.3}", report.coverage);
            println!("verdict   {}", if report.pass { "PASS" } else { "FAIL" });
            if !report.pass {
                return Err((1, "cross-validation failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
