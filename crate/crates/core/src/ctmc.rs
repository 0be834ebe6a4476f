//! Brute-force stationary solution of the full two-dimensional chain on a
//! truncated state space.
//!
//! States are pairs `(i, j)` of class-1/class-2 packet counts. The
//! generator is constructed from transitions (arrivals, combined service
//! plus reneging departures, class-2 completions only while the class-1
//! queue is empty); the printed balance-equation families are used purely
//! as residual checks so a typo in them cannot leak into the solution.
//! Truncation at `j_max` drops the outgoing class-2 arrival (reflecting).

use crate::band::{BandError, BandMatrix};
use crate::params::SystemParams;
use thiserror::Error;

pub const DEFAULT_STATE_CAP: usize = 1_000_000;
/// Above this the banded factorization gives way to power iteration on the
/// uniformized chain.
const DIRECT_LIMIT: usize = 200_000;
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CtmcError {
    #[error("state space too large: {states} states exceeds cap {cap}")]
    StateCapExceeded { states: usize, cap: usize },
    #[error("j_max must be at least 1")]
    BadTruncation,
    #[error("invalid parameters: {0}")]
    BadParams(#[from] crate::params::ParamError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] BandError),
    #[error("power iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("truncation grew to j_max={j_max} without pushing boundary mass below {tol:.1e} (mass {mass:.3e})")]
    BoundaryMass { j_max: usize, tol: f64, mass: f64 },
}

/// Truncated two-dimensional chain.
#[derive(Debug, Clone)]
pub struct CtmcModel {
    pub i_max: usize,
    pub j_max: usize,
    pub params: SystemParams,
}

/// Solved stationary vector with solve diagnostics.
#[derive(Debug, Clone)]
pub struct StationaryDist {
    pub i_max: usize,
    pub j_max: usize,
    /// flat layout: `pij[j * (i_max + 1) + i]`
    pub pij: Vec<f64>,
    /// probability on the `j = j_max` truncation frontier
    pub boundary_mass: f64,
    /// max global-balance residual under the generator
    pub residual: f64,
    /// negative mass (below `-1e-14` would be an error) zeroed after solve
    pub clamped_mass: f64,
}

impl CtmcModel {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.i_max + 1) + i
    }

    pub fn n_states(&self) -> usize {
        (self.i_max + 1) * (self.j_max + 1)
    }

    /// Death rate out of class-1 level `i`: service plus reneging.
    #[inline]
    fn class1_departure(&self, i: usize) -> f64 {
        self.params.mu1 + (i - 1) as f64 * self.params.gamma
    }

    /// Outgoing transitions of `(i, j)` as `(target, rate)` flat pairs.
    pub fn transitions(&self, i: usize, j: usize) -> Vec<(usize, f64)> {
        let p = &self.params;
        let mut out = Vec::with_capacity(4);
        if i < self.i_max && p.lambda1 > 0.0 {
            out.push((self.index(i + 1, j), p.lambda1));
        }
        if j < self.j_max && p.lambda2 > 0.0 {
            out.push((self.index(i, j + 1), p.lambda2));
        }
        if i >= 1 {
            out.push((self.index(i - 1, j), self.class1_departure(i)));
        }
        if i == 0 && j >= 1 {
            out.push((self.index(0, j - 1), p.mu2));
        }
        out
    }

    fn total_outflow(&self, i: usize, j: usize) -> f64 {
        self.transitions(i, j).iter().map(|(_, r)| r).sum()
    }
}

/// Builds the truncated model; `i_max` is the physical class-1 capacity.
pub fn build_ctmc(p: &SystemParams, j_max: usize) -> Result<CtmcModel, CtmcError> {
    build_ctmc_capped(p, j_max, DEFAULT_STATE_CAP)
}

pub fn build_ctmc_capped(p: &SystemParams, j_max: usize, state_cap: usize) -> Result<CtmcModel, CtmcError> {
    p.validate()?;
    if j_max < 1 {
        return Err(CtmcError::BadTruncation);
    }
    let states = (p.n1_cap + 1) * (j_max + 1);
    if states > state_cap {
        return Err(CtmcError::StateCapExceeded { states, cap: state_cap });
    }
    Ok(CtmcModel { i_max: p.n1_cap, j_max, params: *p })
}

/// Solves `pi G = 0`, `sum pi = 1` on the truncated chain.
pub fn solve_stationary(m: &CtmcModel) -> Result<StationaryDist, CtmcError> {
    let n = m.n_states();
    let mut pi = if n <= DIRECT_LIMIT {
        solve_direct(m)?
    } else {
        solve_power(m)?
    };
    // clamp tiny negatives from roundoff, report what was removed
    let mut clamped = 0.0;
    for v in pi.iter_mut() {
        if *v < 0.0 {
            clamped += -*v;
            *v = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= total;
    }
    let boundary_mass: f64 = (0..=m.i_max).map(|i| pi[m.index(i, m.j_max)]).sum();
    let mut dist = StationaryDist {
        i_max: m.i_max,
        j_max: m.j_max,
        pij: pi,
        boundary_mass,
        residual: 0.0,
        clamped_mass: clamped,
    };
    dist.residual = balance_residual(&dist, m);
    Ok(dist)
}

/// Banded LU route: fix `pi(0,0) = 1`, drop its balance equation, solve
/// the remaining nonsingular system, then normalize.
fn solve_direct(m: &CtmcModel) -> Result<Vec<f64>, CtmcError> {
    let n = m.n_states();
    let band = m.i_max + 1;
    let mut a = BandMatrix::zeros(n - 1, band, band);
    let mut rhs = vec![0.0; n - 1];
    for j in 0..=m.j_max {
        for i in 0..=m.i_max {
            let s = m.index(i, j);
            // diagonal: -total outflow of s, in equation s
            if s != 0 {
                a.add(s - 1, s - 1, -m.total_outflow(i, j))?;
            }
            for (t, rate) in m.transitions(i, j) {
                if t == 0 {
                    continue; // equation at (0,0) dropped
                }
                if s == 0 {
                    rhs[t - 1] -= rate; // pi(0,0) fixed at 1
                } else {
                    a.add(t - 1, s - 1, rate)?;
                }
            }
        }
    }
    let x = a.solve(&rhs)?;
    let mut pi = Vec::with_capacity(n);
    pi.push(1.0);
    pi.extend(x);
    Ok(pi)
}

/// Power iteration on the uniformized chain for very large truncations.
fn solve_power(m: &CtmcModel) -> Result<Vec<f64>, CtmcError> {
    let n = m.n_states();
    let mut rate_max = 0.0f64;
    for j in 0..=m.j_max {
        for i in 0..=m.i_max {
            rate_max = rate_max.max(m.total_outflow(i, j));
        }
    }
    let uniform = rate_max * 1.02;
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    const MAX_ITERS: usize = 500_000;
    const CHECK_EVERY: usize = 200;
    for iter in 1..=MAX_ITERS {
        next.iter_mut().zip(pi.iter()).for_each(|(o, &p)| *o = p);
        for j in 0..=m.j_max {
            for i in 0..=m.i_max {
                let s = m.index(i, j);
                let mass = pi[s] / uniform;
                if mass == 0.0 {
                    continue;
                }
                for (t, rate) in m.transitions(i, j) {
                    next[s] -= rate * mass;
                    next[t] += rate * mass;
                }
            }
        }
        std::mem::swap(&mut pi, &mut next);
        if iter % CHECK_EVERY == 0 {
            let delta: f64 = pi.iter().zip(next.iter()).map(|(a, b)| (a - b).abs()).sum();
            if delta * uniform < 1e-12 {
                return Ok(pi);
            }
        }
    }
    let delta: f64 = pi.iter().zip(next.iter()).map(|(a, b)| (a - b).abs()).sum();
    Err(CtmcError::NoConvergence { residual: delta * uniform, iterations: MAX_ITERS })
}

/// Doubles `j_max` (from 64) until the truncation frontier holds less than
/// `boundary_tol` probability, then returns the model and solution.
pub fn solve_auto(p: &SystemParams, boundary_tol: f64) -> Result<(CtmcModel, StationaryDist), CtmcError> {
    let mut j_max = 64;
    loop {
        let m = build_ctmc(p, j_max)?;
        let d = solve_stationary(&m)?;
        if d.boundary_mass < boundary_tol {
            return Ok((m, d));
        }
        let next = j_max * 2;
        if (p.n1_cap + 1) * (next + 1) > DEFAULT_STATE_CAP {
            return Err(CtmcError::BoundaryMass { j_max, tol: boundary_tol, mass: d.boundary_mass });
        }
        j_max = next;
    }
}

/// Class-1 marginal `sum_j pi(i, j)`.
pub fn marginal_class1(d: &StationaryDist) -> Vec<f64> {
    let cols = d.i_max + 1;
    let mut out = vec![0.0; cols];
    for j in 0..=d.j_max {
        for i in 0..cols {
            out[i] += d.pij[j * cols + i];
        }
    }
    out
}

/// Moments and Little's-law waits read off the stationary vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtmcMetrics {
    pub e_n1: f64,
    pub e_n1_waiting: f64,
    pub e_n2: f64,
    pub e_n2_waiting: f64,
    /// probability the class-1 queue is empty (any j)
    pub p_empty1: f64,
    pub p00: f64,
    /// mass at the class-1 capacity level (the blocking probability seen
    /// by Poisson arrivals)
    pub blocking_prob: f64,
    /// stationary patience-loss rate divided by lambda1
    pub renege_frac: f64,
    /// served class-1 rate `mu1 P(i >= 1)`
    pub throughput1: f64,
    /// served class-2 rate `mu2 P(i = 0, j >= 1)`
    pub throughput2: f64,
    /// `E[n1] / lambda1` (same functional the closed form uses)
    pub wait1_little: f64,
    pub wait1_queue_little: f64,
    /// waits against effective (non-blocked, non-reneged) throughput
    pub wait1_eff: f64,
    pub wait2_eff: f64,
    /// result untrusted when boundary mass exceeded the tolerance
    pub trusted: bool,
}

pub fn ctmc_metrics(d: &StationaryDist, p: &SystemParams, boundary_tol: f64) -> CtmcMetrics {
    let cols = d.i_max + 1;
    let mut e_n1 = 0.0;
    let mut e_n1_waiting = 0.0;
    let mut e_n2 = 0.0;
    let mut p_empty1 = 0.0;
    let mut p_serving2 = 0.0;
    let mut blocking = 0.0;
    let mut renege_rate_mass = 0.0;
    for j in 0..=d.j_max {
        for i in 0..cols {
            let pr = d.pij[j * cols + i];
            e_n1 += i as f64 * pr;
            e_n1_waiting += i.saturating_sub(1) as f64 * pr;
            e_n2 += j as f64 * pr;
            if i == 0 {
                p_empty1 += pr;
                if j >= 1 {
                    p_serving2 += pr;
                }
            }
            if i == d.i_max {
                blocking += pr;
            }
            if i >= 1 {
                renege_rate_mass += (i - 1) as f64 * p.gamma * pr;
            }
        }
    }
    let e_n2_waiting = e_n2 - p_serving2;
    let throughput1 = p.mu1 * (1.0 - p_empty1);
    let throughput2 = p.mu2 * p_serving2;
    let div = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    CtmcMetrics {
        e_n1,
        e_n1_waiting,
        e_n2,
        e_n2_waiting,
        p_empty1,
        p00: d.pij[0],
        blocking_prob: blocking,
        renege_frac: div(renege_rate_mass, p.lambda1),
        throughput1,
        throughput2,
        wait1_little: div(e_n1, p.lambda1),
        wait1_queue_little: div(e_n1_waiting, p.lambda1),
        wait1_eff: div(e_n1, throughput1),
        wait2_eff: div(e_n2_waiting, throughput2),
        trusted: d.boundary_mass <= boundary_tol,
    }
}

/// Max absolute global-balance residual under the generator the chain was
/// actually built from (truncation-aware).
pub fn balance_residual(d: &StationaryDist, m: &CtmcModel) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..=m.j_max {
        for i in 0..=m.i_max {
            let s = m.index(i, j);
            let outflow = m.total_outflow(i, j) * d.pij[s];
            let mut inflow = 0.0;
            if i >= 1 {
                // arrival into i from the left neighbour
                if i - 1 < m.i_max {
                    inflow += m.params.lambda1 * d.pij[m.index(i - 1, j)];
                }
            }
            if j >= 1 && j - 1 < m.j_max {
                inflow += m.params.lambda2 * d.pij[m.index(i, j - 1)];
            }
            if i + 1 <= m.i_max {
                inflow += m.class1_departure(i + 1) * d.pij[m.index(i + 1, j)];
            }
            if i == 0 && j + 1 <= m.j_max {
                inflow += m.params.mu2 * d.pij[m.index(0, j + 1)];
            }
            worst = worst.max((outflow - inflow).abs());
        }
    }
    worst
}

/// Residuals of the four printed balance-equation families, evaluated
/// verbatim on interior states (truncation edges excluded).
///
/// Two of the printed families disagree with the generator: the corner
/// family indexes the reneging rate by the pre-departure level minus one,
/// and the interior family takes its class-1-departure inflow from
/// `(i, j+1)` instead of `(i+1, j)`. The report shows which reading the
/// solved chain satisfies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedEqReport {
    pub eq11_residual: f64,
    pub eq12_max_residual: f64,
    pub eq13_max_residual: f64,
    pub eq14_max_residual: f64,
    /// generator residual at the same solution, for comparison
    pub generator_residual: f64,
}

impl PrintedEqReport {
    /// `(family, satisfied)` pairs at the given tolerance.
    pub fn verdicts(&self, tol: f64) -> [(&'static str, bool); 4] {
        [
            ("eq11 (0,0)", self.eq11_residual <= tol),
            ("eq12 (0,j>0)", self.eq12_max_residual <= tol),
            ("eq13 (i>0,0)", self.eq13_max_residual <= tol),
            ("eq14 (i>0,j>0)", self.eq14_max_residual <= tol),
        ]
    }
}

pub fn printed_equation_report(d: &StationaryDist, m: &CtmcModel) -> PrintedEqReport {
    let p = &m.params;
    let pij = |i: usize, j: usize| d.pij[m.index(i, j)];
    let eq11 = ((p.lambda1 + p.lambda2) * pij(0, 0) - p.mu1 * pij(1, 0) - p.mu2 * pij(0, 1)).abs();
    let mut eq12 = 0.0f64;
    for j in 1..m.j_max {
        let lhs = pij(0, j) * (p.lambda1 + p.lambda2 + p.mu2);
        let rhs = p.lambda2 * pij(0, j - 1) + p.mu2 * pij(0, j + 1) + p.mu1 * pij(1, j);
        eq12 = eq12.max((lhs - rhs).abs());
    }
    let mut eq13 = 0.0f64;
    for i in 1..m.i_max {
        let dep_i = p.mu1 + (i - 1) as f64 * p.gamma;
        let lhs = pij(i, 0) * (p.lambda1 + p.lambda2 + dep_i);
        // printed inflow reuses the departing-state-minus-one rate index
        let rhs = p.lambda1 * pij(i - 1, 0) + dep_i * pij(i + 1, 0);
        eq13 = eq13.max((lhs - rhs).abs());
    }
    let mut eq14 = 0.0f64;
    for i in 1..m.i_max {
        for j in 1..m.j_max {
            let dep_i = p.mu1 + (i - 1) as f64 * p.gamma;
            let lhs = pij(i, j) * (dep_i + p.lambda1 + p.lambda2);
            // printed class-1-departure inflow comes from (i, j+1)
            let rhs = p.lambda2 * pij(i, j - 1) + p.lambda1 * pij(i - 1, j) + dep_i * pij(i, j + 1);
            eq14 = eq14.max((lhs - rhs).abs());
        }
    }
    PrintedEqReport {
        eq11_residual: eq11,
        eq12_max_residual: eq12,
        eq13_max_residual: eq13,
        eq14_max_residual: eq14,
        generator_residual: balance_residual(d, m),
    }
}

/// Debug dump of the stationary vector as `i,j,prob` CSV.
pub fn dump_csv(d: &StationaryDist) -> String {
    let mut out = String::from("i,j,prob\n");
    let cols = d.i_max + 1;
    for j in 0..=d.j_max {
        for i in 0..cols {
            out.push_str(&format!("{},{},{:e}\n", i, j, d.pij[j * cols + i]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;

    fn params(lambda1: f64, lambda2: f64, mu1: f64, mu2: f64, gamma: f64, n1_cap: usize) -> SystemParams {
        SystemParams { lambda1, lambda2, mu1, mu2, gamma, n1_cap, epsilon: 0.1, omega: 0.01 }
    }

    #[test]
    fn transition_structure() {
        let m = build_ctmc(&params(1.0, 0.5, 2.0, 2.0, 1.0, 5), 4).unwrap();
        // (0,0): outflow lambda1 + lambda2 only
        assert!((m.total_outflow(0, 0) - 1.5).abs() < 1e-15);
        // i > 0: no class-2 service transition
        let targets = m.transitions(2, 1);
        assert!(!targets.iter().any(|&(t, _)| t == m.index(2, 0)));
        // departure rate at i = 3 is mu1 + 2 gamma
        let dep = m
            .transitions(3, 0)
            .iter()
            .find(|&&(t, _)| t == m.index(2, 0))
            .unwrap()
            .1;
        assert!((dep - 4.0).abs() < 1e-15);
    }

    #[test]
    fn state_cap_enforced() {
        let p = params(1.0, 1.0, 2.0, 2.0, 0.0, 2000);
        assert!(matches!(
            build_ctmc(&p, 2000),
            Err(CtmcError::StateCapExceeded { .. })
        ));
    }

    #[test]
    fn collapses_to_class1_chain_when_lambda2_zero() {
        let p = params(1.0, 0.0, 2.0, 2.0, 1.0, 10);
        let m = build_ctmc(&p, 8).unwrap();
        let d = solve_stationary(&m).unwrap();
        assert!(d.residual < 1e-10, "residual {}", d.residual);
        let marg = marginal_class1(&d);
        let exact = analytic::class1_steady_state(&p).unwrap();
        for (a, b) in marg.iter().zip(exact.probs.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn collapses_to_mm1_when_lambda1_zero() {
        let p = params(0.0, 1.0, 2.0, 2.0, 0.0, 3);
        let (_, d) = solve_auto(&p, 1e-9).unwrap();
        // truncated geometric with ratio 1/2 over the class-2 marginal
        let mut marg2 = vec![0.0; d.j_max + 1];
        for j in 0..=d.j_max {
            for i in 0..=d.i_max {
                marg2[j] += d.pij[j * (d.i_max + 1) + i];
            }
        }
        let rho: f64 = 0.5;
        let norm: f64 = (0..=d.j_max).map(|j| rho.powi(j as i32)).sum();
        for j in 0..=d.j_max {
            assert!((marg2[j] - rho.powi(j as i32) / norm).abs() < 1e-9);
        }
    }

    #[test]
    fn marginal_independent_of_class2_load() {
        let p0 = params(1.0, 0.0, 2.0, 2.0, 1.0, 10);
        let p1 = params(1.0, 1.0, 2.0, 2.0, 1.0, 10);
        let (_, d0) = solve_auto(&p0, 1e-9).unwrap();
        let (_, d1) = solve_auto(&p1, 1e-9).unwrap();
        let m0 = marginal_class1(&d0);
        let m1 = marginal_class1(&d1);
        for (a, b) in m0.iter().zip(m1.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        let total: f64 = m1.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_detects_wrong_distribution() {
        let p = params(1.0, 1.0, 1.0, 1.0, 0.0, 2);
        let m = build_ctmc(&p, 2).unwrap();
        let n = m.n_states();
        let uniform = StationaryDist {
            i_max: m.i_max,
            j_max: m.j_max,
            pij: vec![1.0 / n as f64; n],
            boundary_mass: 0.0,
            residual: 0.0,
            clamped_mass: 0.0,
        };
        assert!(balance_residual(&uniform, &m) > 1e-3);

        // perturbing one entry of a solved vector moves the residual linearly
        let solved = solve_stationary(&m).unwrap();
        let mut bumped = solved.clone();
        bumped.pij[m.index(1, 1)] += 1e-3;
        let r = balance_residual(&bumped, &m);
        assert!(r > 1e-4 && r < 1e-1, "residual {r}");
    }

    #[test]
    fn printed_equations_verdict() {
        // gamma > 0: eq13/eq14 as printed disagree with the generator
        let p = params(1.0, 0.8, 2.0, 2.0, 1.0, 6);
        let (m, d) = solve_auto(&p, 1e-9).unwrap();
        let rep = printed_equation_report(&d, &m);
        assert!(rep.generator_residual < 1e-10);
        let v = rep.verdicts(1e-8);
        assert!(v[0].1, "eq11 should hold: {:?}", rep);
        assert!(v[1].1, "eq12 should hold: {:?}", rep);
        assert!(!v[2].1, "eq13 as printed should fail with gamma > 0: {:?}", rep);
        assert!(!v[3].1, "eq14 as printed should fail: {:?}", rep);
    }

    #[test]
    fn metrics_basics() {
        let p = params(1.0, 0.0, 2.0, 2.0, 1.0, 10);
        let (m, d) = solve_auto(&p, 1e-9).unwrap();
        let met = ctmc_metrics(&d, &p, 1e-9);
        assert!(met.trusted);
        assert!(met.e_n2 < 1e-12);
        let exact = analytic::class1_steady_state(&p).unwrap();
        let l: f64 = exact.probs.iter().enumerate().map(|(n, pr)| n as f64 * pr).sum();
        assert!((met.e_n1 - l).abs() < 1e-9);
        let _ = printed_equation_report(&d, &m);
    }

    #[test]
    fn truncation_doubling_convergence() {
        let p = params(1.0, 1.0, 2.0, 2.0, 1.0, 10);
        let (_, d) = solve_auto(&p, 1e-9).unwrap();
        let met = ctmc_metrics(&d, &p, 1e-9);
        let m2 = build_ctmc(&p, d.j_max * 2).unwrap();
        let d2 = solve_stationary(&m2).unwrap();
        let met2 = ctmc_metrics(&d2, &p, 1e-9);
        let budget = 10.0 * d.boundary_mass.max(1e-15);
        assert!((met.e_n1 - met2.e_n1).abs() <= budget);
        assert!((met.e_n2 - met2.e_n2).abs() <= budget.max(1e-9));
        assert!((met.p_empty1 - met2.p_empty1).abs() <= budget);
    }

    #[test]
    fn dump_has_all_states() {
        let p = params(1.0, 0.5, 2.0, 2.0, 0.0, 3);
        let m = build_ctmc(&p, 3).unwrap();
        let d = solve_stationary(&m).unwrap();
        let csv = dump_csv(&d);
        assert_eq!(csv.lines().count(), 1 + m.n_states());
        assert!(csv.starts_with("i,j,prob\n"));
    }
}
