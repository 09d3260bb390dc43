//! Discrete-time slot loop.
//!
//! Every slot runs the same fixed phases: (1) output arbitration moves at
//! most one cell per output from a crosspoint buffer onto the line, (2) input
//! arbitration moves at most one cell per input from a VOQ into its
//! crosspoint buffer, (3) new arrivals enqueue into the VOQs, (4) the clock
//! advances. Draining outputs before filling inputs models a pipelined fabric
//! and means a cell needs at least two slots to traverse a buffered crossbar;
//! it only shifts delay curves by a constant.
//!
//! On a bufferless crossbar (iSLIP) phase 1 and 2 collapse into one matching
//! phase that moves matched head-of-line cells straight to the outputs.

use thiserror::Error;

use crate::rng::SplitMix64;
use crate::sched::{
    burst_update, cicq_input_arbitrate, cicq_output_arbitrate, islip_match, BurstCounterEvent,
    InputPolicy,
};
use crate::switch::{Cell, ConfigError, SchedulerKind, SwitchConfig, SwitchState};
use crate::traffic::{generate_arrivals_into, TrafficMatrix};

/// Queue length beyond which a run is declared unstable.
pub const DEFAULT_QUEUE_CAP: usize = 5000;
/// Drift slope (cells per slot) below which queue growth counts as zero.
pub const DEFAULT_DRIFT_EPSILON: f64 = 1e-4;
/// Slots between queue-length samples.
pub const DEFAULT_SAMPLE_INTERVAL: u64 = 1000;
/// Leading slots excluded from delay statistics.
pub const DEFAULT_WARMUP_SLOTS: u64 = 10_000;
/// Default run horizon in slots. Long enough that the asymmetric overloads
/// studied here trip the queue cap well before it expires.
pub const DEFAULT_MAX_SLOTS: u64 = 5_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("traffic matrix is {traffic}x{traffic} but the switch has {ports} ports")]
    DimensionMismatch { traffic: usize, ports: usize },
    #[error("run horizon must be at least one slot")]
    ZeroHorizon,
    #[error("sample interval must be at least one slot")]
    ZeroSampleInterval,
    #[error("warmup ({warmup} slots) must be shorter than the horizon ({horizon})")]
    WarmupExceedsHorizon { warmup: u64, horizon: u64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("drift estimation needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("drift estimation needs samples at distinct slots")]
    DegenerateSamples,
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub switch: SwitchConfig,
    pub traffic: TrafficMatrix,
    pub seed: u64,
    pub max_slots: u64,
    /// Instability tripwire: the run stops as unstable the first time any
    /// VOQ exceeds this length.
    pub queue_cap: usize,
    pub sample_interval: u64,
    pub warmup_slots: u64,
}

impl RunConfig {
    pub fn new(switch: SwitchConfig, traffic: TrafficMatrix, seed: u64) -> Self {
        Self {
            switch,
            traffic,
            seed,
            max_slots: DEFAULT_MAX_SLOTS,
            queue_cap: DEFAULT_QUEUE_CAP,
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
            warmup_slots: DEFAULT_WARMUP_SLOTS,
        }
    }

    fn validate(&self) -> Result<(), EngineError> {
        self.switch.validate()?;
        if self.traffic.n_ports() != self.switch.n_ports {
            return Err(EngineError::DimensionMismatch {
                traffic: self.traffic.n_ports(),
                ports: self.switch.n_ports,
            });
        }
        if self.max_slots == 0 {
            return Err(EngineError::ZeroHorizon);
        }
        if self.sample_interval == 0 {
            return Err(EngineError::ZeroSampleInterval);
        }
        if self.warmup_slots >= self.max_slots {
            return Err(EngineError::WarmupExceedsHorizon {
                warmup: self.warmup_slots,
                horizon: self.max_slots,
            });
        }
        Ok(())
    }
}

/// Outcome of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    /// First slot in which some VOQ exceeded the queue cap, and which one.
    Unstable { slot: u64, input: usize, output: usize },
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }
}

/// One queue-length observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueSample {
    pub slot: u64,
    pub input: usize,
    pub output: usize,
    pub queue_len: u64,
}

/// What happened during a single slot.
#[derive(Debug, Default)]
pub struct SlotEvents {
    /// Cells that left the switch this slot.
    pub departures: Vec<Cell>,
    /// Cells accepted into VOQs this slot.
    pub arrivals: Vec<Cell>,
    /// (input, voq) transfers into crosspoint buffers this slot.
    pub transfers: Vec<(usize, usize)>,
    /// Cells rejected by a configured VOQ capacity bound.
    pub dropped: Vec<Cell>,
    // Matcher scratch, reused across slots.
    requests: Vec<bool>,
    accept_snapshot: Vec<usize>,
}

impl SlotEvents {
    pub fn new() -> Self {
        Self::default()
    }

    fn clear(&mut self) {
        self.departures.clear();
        self.arrivals.clear();
        self.transfers.clear();
        self.dropped.clear();
    }
}

/// Advance the switch by one slot, recording the slot's events.
pub fn step(
    config: &SwitchConfig,
    state: &mut SwitchState,
    traffic: &TrafficMatrix,
    rng: &mut SplitMix64,
    events: &mut SlotEvents,
) {
    events.clear();
    match config.scheduler {
        SchedulerKind::Islip => islip_phase(config, state, events),
        kind => {
            let policy = match kind {
                SchedulerKind::RrRrCicq => InputPolicy::RoundRobin,
                SchedulerKind::OcfRr => InputPolicy::OldestCellFirst,
                SchedulerKind::LqfRr => InputPolicy::LongestQueueFirst,
                SchedulerKind::Islip => unreachable!(),
            };
            cicq_phases(config, state, policy, events);
        }
    }
    arrivals_phase(config, state, traffic, rng, events);
    state.advance_clock();
}

fn cicq_phases(
    config: &SwitchConfig,
    state: &mut SwitchState,
    policy: InputPolicy,
    events: &mut SlotEvents,
) {
    let n = config.n_ports;

    // Phase 1: each output drains one crosspoint buffer.
    for output in 0..n {
        if let Some(input) = cicq_output_arbitrate(state, output) {
            let cell = state.pop_cp(input, output).expect("arbitrated CP is non-empty");
            events.departures.push(cell);
        }
    }

    // Phase 2: each input forwards one cell into a crosspoint buffer. The
    // burst protocol only governs round-robin polling; OCF and LQF rank
    // queues directly.
    let burst = if policy == InputPolicy::RoundRobin { config.active_burst() } else { None };
    for input in 0..n {
        if let Some(voq) = cicq_input_arbitrate(state, input, policy, burst) {
            let cell = state.pop_voq(input, voq).expect("arbitrated VOQ is non-empty");
            state.push_cp(cell);
            events.transfers.push((input, voq));
        }
    }
}

fn islip_phase(config: &SwitchConfig, state: &mut SwitchState, events: &mut SlotEvents) {
    let n = config.n_ports;
    events.requests.clear();
    events.requests.resize(n * n, false);
    for input in 0..n {
        for output in 0..n {
            events.requests[input * n + output] = state.voq_len(input, output) > 0;
        }
    }

    let burst = config.active_burst();
    if burst.is_some() {
        events.accept_snapshot.clear();
        events.accept_snapshot.extend((0..n).map(|i| state.accept_pointer(i)));
    }

    let matching = {
        let (grant_ptr, accept_ptr) = state.islip_pointers_mut();
        islip_match(&events.requests, n, grant_ptr, accept_ptr, config.islip_iterations)
    };

    for &(input, output) in matching.pairs() {
        let cell = state.pop_voq(input, output).expect("matched VOQ is non-empty");
        events.departures.push(cell);

        if let Some(cfg) = burst {
            // Accept-pointer variant of the burst hold: while the matched VOQ
            // stays above THRESHOLD with credit left, the input's accept
            // pointer is frozen where it was, keeping that output preferred.
            let len_after = state.voq_len(input, output) as u64;
            let credit_after = state.burst_counter(input, output).saturating_sub(1);
            let hold = len_after > cfg.threshold && credit_after > 0;
            if hold {
                let counter = burst_update(
                    state.burst_counter(input, output),
                    BurstCounterEvent::CellTransferred,
                    cfg,
                );
                state.set_burst_counter(input, output, counter);
                state.set_accept_pointer(input, events.accept_snapshot[input]);
            } else {
                if len_after == 0 {
                    state.set_burst_counter(input, output, cfg.burst);
                }
                if state.accept_pointer(input) != events.accept_snapshot[input] {
                    state.reset_input_burst_counters(input, cfg.burst);
                }
            }
        }
    }
}

fn arrivals_phase(
    config: &SwitchConfig,
    state: &mut SwitchState,
    traffic: &TrafficMatrix,
    rng: &mut SplitMix64,
    events: &mut SlotEvents,
) {
    generate_arrivals_into(traffic, state.clock(), rng, &mut events.arrivals);
    if let Some(cap) = config.voq_capacity {
        let mut dropped = std::mem::take(&mut events.dropped);
        events.arrivals.retain(|cell| {
            if state.voq_len(cell.input_port, cell.output_port) >= cap {
                dropped.push(*cell);
                false
            } else {
                state.enqueue_voq(*cell);
                true
            }
        });
        events.dropped = dropped;
    } else {
        for cell in &events.arrivals {
            state.enqueue_voq(*cell);
        }
    }
}

/// Full result of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub verdict: Verdict,
    pub samples: Vec<QueueSample>,
    /// First slot in which the optional VOQ capacity bound dropped a cell.
    pub first_overflow: Option<(u64, usize, usize)>,
    pub dropped_cells: u64,
    n_ports: usize,
    arrivals: Vec<u64>,
    departures: Vec<u64>,
    delay_sum: Vec<u64>,
    delay_count: Vec<u64>,
}

impl RunResult {
    #[inline]
    fn idx(&self, input: usize, output: usize) -> usize {
        input * self.n_ports + output
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn arrivals(&self, input: usize, output: usize) -> u64 {
        self.arrivals[self.idx(input, output)]
    }

    pub fn departures(&self, input: usize, output: usize) -> u64 {
        self.departures[self.idx(input, output)]
    }

    /// Mean delay of post-warmup departures from one VOQ, in slots. `None`
    /// when nothing departed after warmup.
    pub fn mean_delay(&self, input: usize, output: usize) -> Option<f64> {
        let idx = self.idx(input, output);
        (self.delay_count[idx] > 0)
            .then(|| self.delay_sum[idx] as f64 / self.delay_count[idx] as f64)
    }

    /// Mean delay over the three loaded VOQs of the asymmetric scenario:
    /// (0,0), (0,1) and (1,0), weighted by departures.
    pub fn combined_mean_delay(&self) -> Option<f64> {
        let mut sum = 0u64;
        let mut count = 0u64;
        for &(i, j) in &[(0, 0), (0, 1), (1, 0)] {
            if i < self.n_ports && j < self.n_ports {
                let idx = self.idx(i, j);
                sum += self.delay_sum[idx];
                count += self.delay_count[idx];
            }
        }
        (count > 0).then(|| sum as f64 / count as f64)
    }

    /// Queue-length trajectory of one VOQ as (slot, length) pairs.
    pub fn voq_samples(&self, input: usize, output: usize) -> Vec<(u64, u64)> {
        self.samples
            .iter()
            .filter(|s| s.input == input && s.output == output)
            .map(|s| (s.slot, s.queue_len))
            .collect()
    }

    /// Least-squares drift of one VOQ's sampled queue length.
    pub fn drift(&self, input: usize, output: usize) -> Result<DriftEstimate, EngineError> {
        estimate_drift(&self.voq_samples(input, output))
    }
}

/// Run a configuration to completion (horizon reached or queue cap tripped).
pub fn run(config: &RunConfig) -> Result<RunResult, EngineError> {
    config.validate()?;
    let n = config.switch.n_ports;
    let nn = n * n;
    let mut state = SwitchState::new(&config.switch)?;
    let mut rng = SplitMix64::new(config.seed);
    let mut events = SlotEvents::new();

    let mut verdict = Verdict::Stable;
    let mut samples = Vec::new();
    let mut arrivals = vec![0u64; nn];
    let mut departures = vec![0u64; nn];
    let mut delay_sum = vec![0u64; nn];
    let mut delay_count = vec![0u64; nn];
    let mut dropped_cells = 0u64;
    let mut first_overflow = None;

    'slots: for slot in 0..config.max_slots {
        if slot % config.sample_interval == 0 {
            for input in 0..n {
                for output in 0..n {
                    samples.push(QueueSample {
                        slot,
                        input,
                        output,
                        queue_len: state.voq_len(input, output) as u64,
                    });
                }
            }
        }

        step(&config.switch, &mut state, &config.traffic, &mut rng, &mut events);

        for cell in &events.departures {
            let idx = cell.input_port * n + cell.output_port;
            departures[idx] += 1;
            if slot >= config.warmup_slots {
                delay_sum[idx] += slot - cell.arrival_slot;
                delay_count[idx] += 1;
            }
        }
        for cell in &events.arrivals {
            arrivals[cell.input_port * n + cell.output_port] += 1;
        }
        if !events.dropped.is_empty() {
            dropped_cells += events.dropped.len() as u64;
            if first_overflow.is_none() {
                let c = events.dropped[0];
                first_overflow = Some((slot, c.input_port, c.output_port));
            }
        }

        // Only queues that just received a cell can newly exceed the cap.
        for cell in &events.arrivals {
            let len = state.voq_len(cell.input_port, cell.output_port);
            if len > config.queue_cap {
                verdict = Verdict::Unstable {
                    slot,
                    input: cell.input_port,
                    output: cell.output_port,
                };
                samples.push(QueueSample {
                    slot,
                    input: cell.input_port,
                    output: cell.output_port,
                    queue_len: len as u64,
                });
                break 'slots;
            }
        }
    }

    Ok(RunResult {
        verdict,
        samples,
        first_overflow,
        dropped_cells,
        n_ports: n,
        arrivals,
        departures,
        delay_sum,
        delay_count,
    })
}

/// Least-squares queue-growth estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEstimate {
    /// Cells per slot.
    pub slope: f64,
    pub intercept: f64,
    pub n_samples: usize,
}

/// Ordinary least squares over (slot, queue length) samples.
pub fn estimate_drift(samples: &[(u64, u64)]) -> Result<DriftEstimate, EngineError> {
    if samples.len() < 2 {
        return Err(EngineError::TooFewSamples(samples.len()));
    }
    let n = samples.len() as f64;
    let mean_x = samples.iter().map(|&(x, _)| x as f64).sum::<f64>() / n;
    let mean_y = samples.iter().map(|&(_, y)| y as f64).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in samples {
        let dx = x as f64 - mean_x;
        sxx += dx * dx;
        sxy += dx * (y as f64 - mean_y);
    }
    if sxx == 0.0 {
        return Err(EngineError::DegenerateSamples);
    }
    let slope = sxy / sxx;
    Ok(DriftEstimate { slope, intercept: mean_y - slope * mean_x, n_samples: samples.len() })
}

/// Whether estimated queue growth is indistinguishable from zero.
pub fn is_drift_zero(estimate: &DriftEstimate, epsilon: f64) -> bool {
    estimate.slope.abs() <= epsilon
}
