//! Discrete-event simulator of the two-class preemptive-priority system.
//!
//! Poisson arrivals, a single server with strict preemptive priority for
//! class 1, general impatience of waiting class-1 packets, finite class-1
//! capacity, and either exponential or channel-law service times. A
//! class-1 arrival displaces an in-service class-2 packet, which returns
//! to the head of its queue with its remaining (resume) or a fresh
//! (repeat) service requirement. Output statistics use batch means over
//! the post-warm-up horizon.

use crate::channel::{sample_service_time, ServiceTimeLaw};
use crate::params::{ChannelParams, PatienceSpec, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    BadParams(#[from] crate::params::ParamError),
    #[error("horizon_events ({horizon}) must exceed batches ({batches}) and batches must be >= 10")]
    BadHorizon { horizon: u64, batches: usize },
    #[error("warmup_fraction must lie in [0, 1), got {0}")]
    BadWarmup(f64),
    #[error("channel service mode requires channel parameters")]
    MissingChannel,
    #[error("at least one arrival rate must be positive")]
    NoArrivals,
    #[error("need at least 10 batch means, got {0}")]
    TooFewBatches(usize),
    #[error("empty measurement window")]
    EmptyWindow,
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceMode {
    /// exponential(mu_i) service, matching the analytic chain
    Markovian,
    /// service times drawn from the channel transmission-time law, with
    /// the deadline `t_out` as a transmission-failure cutoff
    Channel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreemptionMode {
    /// a displaced class-2 packet keeps its remaining requirement
    Resume,
    /// a displaced class-2 packet draws a fresh requirement
    Repeat,
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub params: SystemParams,
    pub channel: Option<ChannelParams>,
    pub patience: PatienceSpec,
    pub service_mode: ServiceMode,
    pub preemption_mode: PreemptionMode,
    pub horizon_events: u64,
    pub warmup_fraction: f64,
    pub batches: usize,
    pub seed: u64,
    pub record_trace: bool,
}

impl SimConfig {
    pub fn markovian(params: SystemParams, seed: u64) -> Self {
        SimConfig {
            params,
            channel: None,
            patience: PatienceSpec::Exponential { rate: params.gamma.max(f64::MIN_POSITIVE) },
            service_mode: ServiceMode::Markovian,
            preemption_mode: PreemptionMode::Resume,
            horizon_events: 1_000_000,
            warmup_fraction: 0.2,
            batches: 32,
            seed,
            record_trace: false,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        self.patience.validate()?;
        if self.batches < 10 || self.horizon_events <= self.batches as u64 {
            return Err(SimError::BadHorizon { horizon: self.horizon_events, batches: self.batches });
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(SimError::BadWarmup(self.warmup_fraction));
        }
        if self.service_mode == ServiceMode::Channel {
            let ch = self.channel.ok_or(SimError::MissingChannel)?;
            ch.validate()?;
        }
        if self.params.lambda1 == 0.0 && self.params.lambda2 == 0.0 {
            return Err(SimError::NoArrivals);
        }
        Ok(())
    }
}

/// Mean with a 95% normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub batches: usize,
}

impl Estimate {
    pub fn covers(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width
    }

    pub fn scaled(&self, factor: f64) -> Estimate {
        Estimate { mean: self.mean * factor, half_width: self.half_width * factor.abs(), batches: self.batches }
    }
}

/// Batch-means summary: mean plus `1.96 * s / sqrt(b)`.
pub fn summarize(batch_means: &[f64]) -> Result<Estimate, SimError> {
    let b = batch_means.len();
    if b < 10 {
        return Err(SimError::TooFewBatches(b));
    }
    let mean = batch_means.iter().sum::<f64>() / b as f64;
    let var = batch_means.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (b - 1) as f64;
    let half_width = 1.96 * var.sqrt() / (b as f64).sqrt();
    Ok(Estimate { mean, half_width, batches: b })
}

/// Binomial fraction with a 95% Wilson score interval.
///
/// The score interval stays informative at zero observed successes, which
/// matters when comparing against overflow probabilities far below the
/// simulable resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub successes: u64,
    pub trials: u64,
}

pub fn wilson_ci(successes: u64, trials: u64) -> FracEstimate {
    if trials == 0 {
        return FracEstimate { value: 0.0, lo: 0.0, hi: 1.0, successes, trials };
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    FracEstimate {
        value: p,
        lo: (center - spread).max(0.0),
        hi: (center + spread).min(1.0),
        successes,
        trials,
    }
}

impl FracEstimate {
    pub fn covers(&self, value: f64) -> bool {
        value >= self.lo && value <= self.hi
    }
}

/// Per-class packet accounting. Deadline-expired transmissions count as
/// reneged (the transmitter gives up on them) and additionally in
/// `outaged`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub arrived: u64,
    pub served: u64,
    pub reneged: u64,
    pub overflowed: u64,
    pub in_system_at_end: u64,
    pub patience_reneged: u64,
    pub outaged: u64,
}

impl ClassCounts {
    pub fn conserved(&self) -> bool {
        self.arrived == self.served + self.reneged + self.overflowed + self.in_system_at_end
    }
}

/// Raw batch-mean vectors behind the headline estimates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchMeans {
    pub wait1: Vec<f64>,
    pub wait2: Vec<f64>,
    pub empty1: Vec<f64>,
    pub n1: Vec<f64>,
    pub n1_waiting: Vec<f64>,
    pub n2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Arrival1,
    Arrival2,
    ServiceDone,
    PatienceExpired,
    Overflow,
    Outage,
}

/// One state-change record: system occupancy after the event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub time: f64,
    pub kind: TraceKind,
    pub packet_id: u64,
    pub n1: u32,
    pub n2: u32,
    /// class of the packet in service after the event, 0 if idle
    pub serving_class: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub class1: ClassCounts,
    pub class2: ClassCounts,
    /// per-packet class-1 queueing delay (arrival to service start)
    pub wait1: Option<Estimate>,
    /// per-packet class-2 queueing delay (sojourn minus service received)
    pub wait2: Option<Estimate>,
    /// time-average probability of an empty class-1 queue
    pub empty_prob1: Estimate,
    /// time-average class-1 packets in system
    pub mean_n1: Estimate,
    /// time-average waiting class-1 packets (in-service excluded)
    pub mean_n1_waiting: Estimate,
    /// time-average class-2 packets in system
    pub mean_n2: Estimate,
    /// `mean_n1 / lambda1`, the same Little functional the closed form uses
    pub wait1_little: Option<Estimate>,
    /// `mean_n1_waiting / lambda1`
    pub wait1_queue_little: Option<Estimate>,
    pub reneged_frac: FracEstimate,
    pub patience_renege_frac: FracEstimate,
    pub overflow_frac: FracEstimate,
    pub outage_frac: FracEstimate,
    pub batch_means: BatchMeans,
    pub measured_time: f64,
    pub end_time: f64,
    pub seed: u64,
    pub trace: Option<Vec<TraceEntry>>,
}

// deterministic event ordering: time, then kind rank, then id
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ev {
    time: f64,
    rank: u8, // 0 service_done, 1 patience_expired, 2 arrival1, 3 arrival2
    id: u64,
    token: u64,
}

impl Eq for Ev {}

impl Ord for Ev {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .partial_cmp(&self.time)
            .unwrap()
            .then(other.rank.cmp(&self.rank))
            .then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Ev {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const RANK_SERVICE: u8 = 0;
const RANK_PATIENCE: u8 = 1;
const RANK_ARRIVAL1: u8 = 2;
const RANK_ARRIVAL2: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PktState {
    Waiting,
    InService,
    Gone,
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    class: u8,
    arrival: f64,
    state: PktState,
    /// remaining service requirement carried across preemptions (resume)
    remaining: Option<f64>,
    service_received: f64,
}

struct Serving {
    pkt: usize,
    start: f64,
    token: u64,
    /// completion event marks a transmission-deadline expiry
    outage: bool,
}

struct Integrator {
    last_time: f64,
    batch_start: f64,
    empty1: f64,
    n1: f64,
    n1_waiting: f64,
    n2: f64,
    wait1_sum: f64,
    wait1_count: u64,
    wait2_sum: f64,
    wait2_count: u64,
}

impl Integrator {
    fn new(t: f64) -> Self {
        Integrator {
            last_time: t,
            batch_start: t,
            empty1: 0.0,
            n1: 0.0,
            n1_waiting: 0.0,
            n2: 0.0,
            wait1_sum: 0.0,
            wait1_count: 0,
            wait2_sum: 0.0,
            wait2_count: 0,
        }
    }

    fn advance(&mut self, t: f64, n1: usize, n2: usize) {
        let dt = t - self.last_time;
        self.last_time = t;
        if n1 == 0 {
            self.empty1 += dt;
        }
        self.n1 += dt * n1 as f64;
        self.n1_waiting += dt * (n1.saturating_sub(1)) as f64;
        self.n2 += dt * n2 as f64;
    }

    /// Closes the current batch at `t` and starts the next one.
    fn close_batch(&mut self, t: f64, n1: usize, n2: usize, batches: &mut BatchMeans) {
        self.advance(t, n1, n2);
        let dur = t - self.batch_start;
        if dur > 0.0 {
            batches.empty1.push(self.empty1 / dur);
            batches.n1.push(self.n1 / dur);
            batches.n1_waiting.push(self.n1_waiting / dur);
            batches.n2.push(self.n2 / dur);
        }
        if self.wait1_count > 0 {
            batches.wait1.push(self.wait1_sum / self.wait1_count as f64);
        }
        if self.wait2_count > 0 {
            batches.wait2.push(self.wait2_sum / self.wait2_count as f64);
        }
        *self = Integrator::new(t);
    }
}

struct Engine {
    cfg: SimConfig,
    rng: ChaCha12Rng,
    heap: BinaryHeap<Ev>,
    packets: Vec<Packet>,
    queue1: VecDeque<usize>,
    queue2: VecDeque<usize>,
    server: Option<Serving>,
    n1: usize,
    n2: usize,
    clock: f64,
    token_counter: u64,
    law: Option<ServiceTimeLaw>,
    t_out: f64,
    c1: ClassCounts,
    c2: ClassCounts,
    trace: Option<Vec<TraceEntry>>,
}

impl Engine {
    fn exp(&mut self, rate: f64) -> f64 {
        // inverse transform on (0,1]; rate > 0 assumed
        let u: f64 = self.rng.gen_range(f64::EPSILON..1.0);
        -u.ln() / rate
    }

    fn draw_patience(&mut self) -> f64 {
        match self.cfg.patience {
            PatienceSpec::Exponential { rate } => self.exp(rate),
            PatienceSpec::Deterministic { deadline } => deadline,
            PatienceSpec::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    self.rng.gen_range(lo..hi)
                }
            }
        }
    }

    /// Fresh service requirement for `class`; channel mode samples the
    /// transmission-time law.
    fn draw_service(&mut self, class: u8) -> f64 {
        match self.cfg.service_mode {
            ServiceMode::Markovian => {
                let rate = if class == 1 { self.cfg.params.mu1 } else { self.cfg.params.mu2 };
                self.exp(rate)
            }
            ServiceMode::Channel => {
                let u: f64 = self.rng.gen_range(f64::EPSILON..1.0);
                sample_service_time(self.law.as_ref().unwrap(), u).unwrap()
            }
        }
    }

    fn record(&mut self, kind: TraceKind, packet_id: u64) {
        let serving_class = self
            .server
            .as_ref()
            .map(|s| self.packets[s.pkt].class)
            .unwrap_or(0);
        let (time, n1, n2) = (self.clock, self.n1 as u32, self.n2 as u32);
        if let Some(tr) = self.trace.as_mut() {
            tr.push(TraceEntry { time, kind, packet_id, n1, n2, serving_class });
        }
    }

    fn start_service(&mut self, pkt: usize) {
        let class = self.packets[pkt].class;
        let requirement = match self.packets[pkt].remaining.take() {
            Some(r) => r,
            None => self.draw_service(class),
        };
        self.token_counter += 1;
        let token = self.token_counter;
        // transmission deadline applies in channel mode: the transmitter
        // gives up after t_out and the packet departs unserved
        let (duration, outage) = if self.cfg.service_mode == ServiceMode::Channel && requirement > self.t_out {
            (self.t_out, true)
        } else {
            (requirement, false)
        };
        self.packets[pkt].state = PktState::InService;
        self.server = Some(Serving { pkt, start: self.clock, token, outage });
        self.heap.push(Ev { time: self.clock + duration, rank: RANK_SERVICE, id: pkt as u64, token });
    }

    fn next_from_queues(&mut self) {
        debug_assert!(self.server.is_none());
        while let Some(pkt) = self.queue1.pop_front() {
            if self.packets[pkt].state == PktState::Waiting {
                self.start_service(pkt);
                return;
            }
        }
        while let Some(pkt) = self.queue2.pop_front() {
            if self.packets[pkt].state == PktState::Waiting {
                self.start_service(pkt);
                return;
            }
        }
    }
}

/// Runs the simulation to `horizon_events` processed events and returns
/// the batch-means statistics. Identical configurations produce
/// bit-identical results.
pub fn run_sim(cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let p = cfg.params;
    let law = match cfg.service_mode {
        ServiceMode::Channel => {
            let ch = cfg.channel.unwrap();
            Some(ServiceTimeLaw::new(ch.b_bar(), ch.q_over_n0())?)
        }
        ServiceMode::Markovian => None,
    };
    let t_out = cfg.channel.map(|c| c.t_out).unwrap_or(f64::INFINITY);
    let mut eng = Engine {
        cfg: *cfg,
        rng: ChaCha12Rng::seed_from_u64(cfg.seed),
        heap: BinaryHeap::new(),
        packets: Vec::new(),
        queue1: VecDeque::new(),
        queue2: VecDeque::new(),
        server: None,
        n1: 0,
        n2: 0,
        clock: 0.0,
        token_counter: 0,
        law,
        t_out,
        c1: ClassCounts::default(),
        c2: ClassCounts::default(),
        trace: cfg.record_trace.then(Vec::new),
    };
    if p.lambda1 > 0.0 {
        let t = eng.exp(p.lambda1);
        eng.heap.push(Ev { time: t, rank: RANK_ARRIVAL1, id: u64::MAX, token: 0 });
    }
    if p.lambda2 > 0.0 {
        let t = eng.exp(p.lambda2);
        eng.heap.push(Ev { time: t, rank: RANK_ARRIVAL2, id: u64::MAX, token: 0 });
    }

    let warmup_events = (cfg.horizon_events as f64 * cfg.warmup_fraction) as u64;
    let measured = cfg.horizon_events - warmup_events;
    let batch_size = (measured / cfg.batches as u64).max(1);

    let mut processed: u64 = 0;
    let mut integ: Option<Integrator> = if warmup_events == 0 { Some(Integrator::new(0.0)) } else { None };
    let mut warm_start_time = 0.0f64;
    let mut batches = BatchMeans::default();
    let mut events_in_batch: u64 = 0;
    let mut measuring = warmup_events == 0;
    let mut closed_batches = 0usize;

    // arrivals seen after warm-up, denominators of the fraction estimates
    let mut meas_arrived1 = 0u64;
    let mut meas_over1 = 0u64;
    let mut meas_patience1 = 0u64;
    let mut meas_outage1 = 0u64;
    let mut meas_reneged1 = 0u64;

    while processed < cfg.horizon_events {
        let ev = match eng.heap.pop() {
            Some(e) => e,
            None => break, // all processes extinguished (cannot happen with an arrival stream)
        };
        // staleness checks
        let effective = match ev.rank {
            RANK_SERVICE => eng.server.as_ref().is_some_and(|s| s.token == ev.token),
            RANK_PATIENCE => eng
                .packets
                .get(ev.id as usize)
                .is_some_and(|pk| pk.state == PktState::Waiting && pk.class == 1),
            _ => true,
        };
        if !effective {
            continue;
        }
        if let Some(it) = integ.as_mut() {
            it.advance(ev.time, eng.n1, eng.n2);
        }
        eng.clock = ev.time;

        match ev.rank {
            RANK_ARRIVAL1 => {
                let t = eng.clock + eng.exp(p.lambda1);
                eng.heap.push(Ev { time: t, rank: RANK_ARRIVAL1, id: u64::MAX, token: 0 });
                eng.c1.arrived += 1;
                if measuring {
                    meas_arrived1 += 1;
                }
                if eng.n1 >= p.n1_cap {
                    eng.c1.overflowed += 1;
                    if measuring {
                        meas_over1 += 1;
                    }
                    eng.record(TraceKind::Overflow, u64::MAX);
                } else {
                    let id = eng.packets.len();
                    eng.packets.push(Packet {
                        class: 1,
                        arrival: eng.clock,
                        state: PktState::Waiting,
                        remaining: None,
                        service_received: 0.0,
                    });
                    eng.n1 += 1;
                    let patience = eng.draw_patience();
                    if patience.is_finite() {
                        eng.heap.push(Ev {
                            time: eng.clock + patience,
                            rank: RANK_PATIENCE,
                            id: id as u64,
                            token: 0,
                        });
                    }
                    match eng.server.take() {
                        None => eng.start_service(id),
                        Some(s) if eng.packets[s.pkt].class == 2 => {
                            // preemption: displaced packet returns to the
                            // head of the class-2 queue
                            let displaced = s.pkt;
                            let got = eng.clock - s.start;
                            eng.packets[displaced].service_received += got;
                            eng.packets[displaced].state = PktState::Waiting;
                            if cfg.preemption_mode == PreemptionMode::Resume {
                                // remaining time of the scheduled completion
                                let sched = eng
                                    .heap
                                    .iter()
                                    .find(|e| e.rank == RANK_SERVICE && e.token == s.token)
                                    .map(|e| e.time)
                                    .unwrap_or(eng.clock);
                                eng.packets[displaced].remaining = Some((sched - eng.clock).max(0.0));
                            }
                            eng.queue2.push_front(displaced);
                            eng.start_service(id);
                        }
                        Some(s) => {
                            eng.server = Some(s);
                            eng.queue1.push_back(id);
                        }
                    }
                    eng.record(TraceKind::Arrival1, id as u64);
                }
            }
            RANK_ARRIVAL2 => {
                let t = eng.clock + eng.exp(p.lambda2);
                eng.heap.push(Ev { time: t, rank: RANK_ARRIVAL2, id: u64::MAX, token: 0 });
                eng.c2.arrived += 1;
                let id = eng.packets.len();
                eng.packets.push(Packet {
                    class: 2,
                    arrival: eng.clock,
                    state: PktState::Waiting,
                    remaining: None,
                    service_received: 0.0,
                });
                eng.n2 += 1;
                eng.queue2.push_back(id);
                if eng.server.is_none() && eng.n1 == 0 {
                    eng.next_from_queues();
                }
                eng.record(TraceKind::Arrival2, id as u64);
            }
            RANK_SERVICE => {
                let s = eng.server.take().unwrap();
                let pkt = s.pkt;
                let class = eng.packets[pkt].class;
                eng.packets[pkt].service_received += eng.clock - s.start;
                eng.packets[pkt].state = PktState::Gone;
                let kind;
                if s.outage {
                    kind = TraceKind::Outage;
                    let c = if class == 1 { &mut eng.c1 } else { &mut eng.c2 };
                    c.outaged += 1;
                    c.reneged += 1;
                    if measuring && class == 1 {
                        meas_outage1 += 1;
                        meas_reneged1 += 1;
                    }
                } else {
                    kind = TraceKind::ServiceDone;
                    if class == 1 {
                        eng.c1.served += 1;
                    } else {
                        eng.c2.served += 1;
                    }
                }
                if class == 1 {
                    eng.n1 -= 1;
                    if let Some(it) = integ.as_mut() {
                        it.wait1_sum += s.start - eng.packets[pkt].arrival;
                        it.wait1_count += 1;
                    }
                } else {
                    eng.n2 -= 1;
                    if let Some(it) = integ.as_mut() {
                        let pk = &eng.packets[pkt];
                        it.wait2_sum += eng.clock - pk.arrival - pk.service_received;
                        it.wait2_count += 1;
                    }
                }
                eng.next_from_queues();
                eng.record(kind, pkt as u64);
            }
            RANK_PATIENCE => {
                let pkt = ev.id as usize;
                eng.packets[pkt].state = PktState::Gone;
                eng.n1 -= 1;
                eng.c1.reneged += 1;
                eng.c1.patience_reneged += 1;
                if measuring {
                    meas_patience1 += 1;
                    meas_reneged1 += 1;
                }
                eng.record(TraceKind::PatienceExpired, pkt as u64);
            }
            _ => unreachable!(),
        }

        processed += 1;
        if !measuring && processed >= warmup_events {
            measuring = true;
            integ = Some(Integrator::new(eng.clock));
            warm_start_time = eng.clock;
        } else if measuring {
            events_in_batch += 1;
            if events_in_batch >= batch_size && (closed_batches as u64) < cfg.batches as u64 - 1 {
                let it = integ.as_mut().unwrap();
                it.close_batch(eng.clock, eng.n1, eng.n2, &mut batches);
                events_in_batch = 0;
                closed_batches += 1;
            }
        }
    }
    if let Some(it) = integ.as_mut() {
        it.close_batch(eng.clock, eng.n1, eng.n2, &mut batches);
    }

    let end_time = eng.clock;
    let measured_time = if integ.is_some() { end_time - warm_start_time } else { 0.0 };

    eng.c1.in_system_at_end = eng.n1 as u64;
    eng.c2.in_system_at_end = eng.n2 as u64;

    let empty_prob1 = summarize(&batches.empty1)?;
    let mean_n1 = summarize(&batches.n1)?;
    let mean_n1_waiting = summarize(&batches.n1_waiting)?;
    let mean_n2 = summarize(&batches.n2)?;
    let wait1 = summarize(&batches.wait1).ok();
    let wait2 = summarize(&batches.wait2).ok();
    let inv_l1 = (p.lambda1 > 0.0).then(|| 1.0 / p.lambda1);

    Ok(SimResult {
        class1: eng.c1,
        class2: eng.c2,
        wait1,
        wait2,
        empty_prob1,
        mean_n1,
        mean_n1_waiting,
        mean_n2,
        wait1_little: inv_l1.map(|f| mean_n1.scaled(f)),
        wait1_queue_little: inv_l1.map(|f| mean_n1_waiting.scaled(f)),
        reneged_frac: wilson_ci(meas_reneged1, meas_arrived1),
        patience_renege_frac: wilson_ci(meas_patience1, meas_arrived1),
        overflow_frac: wilson_ci(meas_over1, meas_arrived1),
        outage_frac: wilson_ci(meas_outage1, meas_arrived1),
        batch_means: batches,
        measured_time,
        end_time,
        seed: cfg.seed,
        trace: eng.trace,
    })
}

/// Time-average probability of an empty class-1 queue over `[t0, t1]`,
/// read from a state-change trace (entries carry post-event occupancy).
pub fn measure_empty_prob(trace: &[TraceEntry], t0: f64, t1: f64) -> Result<f64, SimError> {
    if t1 <= t0 {
        return Err(SimError::EmptyWindow);
    }
    let mut empty = 0.0;
    // occupancy before the first entry is zero (system starts empty)
    let mut prev_t = 0.0f64;
    let mut prev_n1 = 0u32;
    for e in trace {
        let lo = prev_t.max(t0);
        let hi = e.time.min(t1);
        if hi > lo && prev_n1 == 0 {
            empty += hi - lo;
        }
        prev_t = e.time;
        prev_n1 = e.n1;
    }
    let lo = prev_t.max(t0);
    if t1 > lo && prev_n1 == 0 {
        empty += t1 - lo;
    }
    Ok(empty / (t1 - t0))
}
