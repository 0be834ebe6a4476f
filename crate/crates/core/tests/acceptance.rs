//! Acceptance gate: one test per criterion, each emitting a single
//! `criterion N: PASS/FAIL` line.

use cqlab_core::analytic;
use cqlab_core::channel::{
    expected_transmission_time, outage_probability, sample_service_time, service_time_cdf,
    ServiceTimeLaw,
};
use cqlab_core::ctmc;
use cqlab_core::scenario::{parse_scenario, rows_to_csv, run_scenario, ResultRow};
use cqlab_core::sim::{run_sim, SimConfig};
use cqlab_core::{PatienceSpec, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn params(lambda1: f64, mu1: f64, gamma: f64, n1_cap: usize) -> SystemParams {
    SystemParams {
        lambda1,
        lambda2: 0.0,
        mu1,
        mu2: 2.0,
        gamma,
        n1_cap,
        epsilon: 0.1,
        omega: 0.01,
    }
}

const GRID: [(f64, f64, f64, usize); 5] = [
    (1.0, 2.0, 1.0, 10),
    (50.0, 160.0, 100.0, 100),
    (0.5, 1.0, 0.0, 20),
    (5.0, 2.0, 3.0, 15),
    (100.0, 160.0, 100.0, 50),
];

fn verdict(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_1_oracle_equivalence() {
    let mut max_delta: f64 = 0.0;
    let mut max_boundary: f64 = 0.0;
    for &(l1, m1, g, cap) in &GRID {
        let p = params(l1, m1, g, cap);
        let ss = analytic::class1_steady_state(&p).unwrap();
        let (_, d) = ctmc::solve_auto(&p, 1e-9).unwrap();
        max_boundary = max_boundary.max(d.boundary_mass);
        let marginal = ctmc::marginal_class1(&d);
        assert_eq!(marginal.len(), ss.probs.len());
        for (a, b) in ss.probs.iter().zip(&marginal) {
            max_delta = max_delta.max((a - b).abs());
        }
    }
    let pass = max_delta < 1e-8 && max_boundary <= 1e-9;
    verdict(1, pass, &format!("max marginal delta {max_delta:.3e}, max boundary mass {max_boundary:.3e} over 5 grid points"));
}

#[test]
fn criterion_2_marginal_independence() {
    let base = params(1.0, 2.0, 1.0, 10);
    let mut loaded = base;
    loaded.lambda2 = 0.5 * loaded.mu2;
    let (_, d0) = ctmc::solve_auto(&base, 1e-9).unwrap();
    let (_, d1) = ctmc::solve_auto(&loaded, 1e-9).unwrap();
    let m0 = ctmc::marginal_class1(&d0);
    let m1 = ctmc::marginal_class1(&d1);
    let max_delta = m0
        .iter()
        .zip(&m1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    verdict(2, max_delta < 1e-6, &format!("class-1 marginal shift under lambda2 = mu2/2: {max_delta:.3e}"));
}

#[test]
fn criterion_3_simulation_consistency() {
    let mut covered = 0;
    let mut total = 0;
    let mut detail = Vec::new();
    for (k, &(l1, m1, g, cap)) in GRID.iter().enumerate() {
        let p = params(l1, m1, g, cap);
        let ss = analytic::class1_steady_state(&p).unwrap();
        let m = analytic::class1_metrics(&p, &ss, 0.0, 0.0);
        let mut cfg = SimConfig::markovian(p, 1000 + k as u64);
        if p.gamma == 0.0 {
            // no impatience: effectively infinite patience
            cfg.patience = PatienceSpec::Exponential { rate: f64::MIN_POSITIVE };
        }
        let r = run_sim(&cfg).unwrap();
        let hits = [
            r.empty_prob1.covers(m.empty_prob),
            r.wait1_queue_little.unwrap().covers(m.mean_wait_queue_only),
            r.overflow_frac.covers(m.overflow_prob),
        ];
        covered += hits.iter().filter(|&&h| h).count();
        total += 3;
        detail.push(format!("point {k}: {}/3", hits.iter().filter(|&&h| h).count()));
    }
    verdict(3, covered >= 13, &format!("CI coverage {covered}/{total} ({})", detail.join(", ")));
}

#[test]
fn criterion_4_channel_law() {
    // 1000-bit packets over 1 MHz at Q/N0 = 0 dB
    let b_bar = 1000.0 * std::f64::consts::LN_2 / 1e6;
    let t_out = 3.4818271;
    let law = ServiceTimeLaw::new(b_bar, 1.0).unwrap();

    // (a) sampler round-trip on 10^3 quantiles
    let mut max_rt: f64 = 0.0;
    for k in 1..1000 {
        let u = k as f64 / 1000.0;
        let t = sample_service_time(&law, u).unwrap();
        max_rt = max_rt.max((service_time_cdf(&law, t).unwrap() - u).abs());
    }
    let a_ok = max_rt < 1e-12;

    // (b) Monte Carlo truncated mean vs the quadrature oracle
    let oracle = expected_transmission_time(&law, t_out).unwrap().truncated_mean;
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let n = 1_000_000usize;
    let mut sum = 0.0;
    let mut exceed = 0u64;
    for _ in 0..n {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        let t = sample_service_time(&law, u).unwrap();
        if t > t_out {
            exceed += 1;
        }
        sum += t.min(t_out);
    }
    let mc = sum / n as f64;
    let b_ok = (mc - oracle).abs() / oracle < 0.01;

    // (c) empirical outage fraction within a 99% binomial CI of the
    // closed-form outage probability
    let p_out = outage_probability(&law, t_out).unwrap();
    let phat = exceed as f64 / n as f64;
    let half = 2.5758293035489 * (p_out * (1.0 - p_out) / n as f64).sqrt();
    let c_ok = (phat - p_out).abs() <= half;

    verdict(
        4,
        a_ok && b_ok && c_ok,
        &format!(
            "round-trip {max_rt:.2e}; MC mean {mc:.6e} vs oracle {oracle:.6e}; outage {phat:.5e} vs {p_out:.5e} (99% hw {half:.2e})"
        ),
    );
}

fn load_rows(name: &str) -> Vec<ResultRow> {
    let path = format!("{}/../../scenarios/{name}.scn", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap();
    run_scenario(&parse_scenario(&text).unwrap()).unwrap()
}

fn column(rows: &[ResultRow], engine: &str, get: impl Fn(&ResultRow) -> Option<f64>) -> Vec<f64> {
    rows.iter().filter(|r| r.engine == engine).map(|r| get(r).unwrap()).collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] > w[1])
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

#[test]
fn criterion_5_trend_reproduction() {
    let fig5 = column(&load_rows("fig5"), "analytic", |r| r.e_tq1);
    let fig5_ok = strictly_decreasing(&fig5) && fig5.len() == 11;

    let fig6 = column(&load_rows("fig6"), "analytic", |r| r.p_empty);
    let fig6_ok = strictly_decreasing(&fig6) && fig6.len() == 10;

    let fig7 = column(&load_rows("fig7"), "analytic", |r| r.p_renege);
    let fig7_n50 = column(&load_rows("fig7_n50"), "analytic", |r| r.p_renege);
    let fig7_ok = strictly_decreasing(&fig7)
        && strictly_decreasing(&fig7_n50)
        && fig7.iter().zip(&fig7_n50).all(|(p100, p50)| p100 < p50);

    let fig8 = column(&load_rows("fig8"), "analytic", |r| r.e_tq2);
    let fig9 = column(&load_rows("fig9"), "analytic", |r| r.e_tq2);
    let fig89_ok = strictly_increasing(&fig8) && strictly_increasing(&fig9);

    verdict(
        5,
        fig5_ok && fig6_ok && fig7_ok && fig89_ok,
        &format!("fig5 {fig5_ok}, fig6 {fig6_ok}, fig7 {fig7_ok}, fig8/9 {fig89_ok}"),
    );
}

#[test]
fn criterion_6_point_value_checks() {
    let fig8 = load_rows("fig8");
    let feasible = fig8
        .iter()
        .filter(|r| r.engine == "analytic")
        .all(|r| r.feasible == Some(true));

    let p = SystemParams { lambda1: 150.0, lambda2: 0.0, mu1: 160.0, mu2: 100.0, gamma: 100.0, n1_cap: 100, epsilon: 0.1, omega: 0.01 };
    let ss = analytic::class1_steady_state(&p).unwrap();
    let m = analytic::class1_metrics(&p, &ss, 0.0, 0.0);
    let envelope = (0.004..=0.016).contains(&m.mean_wait);

    verdict(
        6,
        feasible && envelope,
        &format!("fig8 feasible over lambda1 in [10,100]: {feasible}; E[T_q1](150,160,100,100) = {:.4e} in [0.004, 0.016]: {envelope}", m.mean_wait),
    );
}

#[test]
fn criterion_7_conservation_and_determinism() {
    let mut conserved = true;
    for &(l1, m1, g, cap) in &GRID {
        let mut p = params(l1, m1, g, cap);
        p.lambda2 = 0.5;
        for seed in [1u64, 77, 4242] {
            let mut cfg = SimConfig::markovian(p, seed);
            cfg.horizon_events = 100_000;
            if p.gamma == 0.0 {
                cfg.patience = PatienceSpec::Exponential { rate: f64::MIN_POSITIVE };
            }
            let r = run_sim(&cfg).unwrap();
            conserved &= r.class1.conserved() && r.class2.conserved();
        }
    }

    let path = format!("{}/../../scenarios/fig6.scn", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap();
    let s = parse_scenario(&text).unwrap();
    let csv_a = rows_to_csv(&run_scenario(&s).unwrap());
    let csv_b = rows_to_csv(&run_scenario(&s).unwrap());
    let identical = csv_a == csv_b;

    verdict(
        7,
        conserved && identical,
        &format!("counts conserved over 5 params x 3 seeds: {conserved}; fig6 CSV byte-identical across runs: {identical}"),
    );
}

#[test]
fn criterion_8_balance_residual_audit() {
    let p = params(1.0, 2.0, 1.0, 10);
    let mut loaded = p;
    loaded.lambda2 = 1.0;
    let (model, d) = ctmc::solve_auto(&loaded, 1e-9).unwrap();
    let residual = ctmc::balance_residual(&d, &model);
    let report = ctmc::printed_equation_report(&d, &model);
    // informational: which printed balance equations the solution satisfies
    for (name, ok) in report.verdicts(1e-8) {
        println!("  printed {name}: {}", if ok { "holds" } else { "violated as written" });
    }
    verdict(8, residual < 1e-10, &format!("generator balance residual {residual:.3e} (printed-equation report above)"));
}
