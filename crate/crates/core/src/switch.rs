//! Switch configuration and per-run mutable state.
//!
//! The model is a cell switch with `N` input ports and `N` output ports. Each
//! input port keeps one virtual output queue (VOQ) per output; a buffered
//! crossbar adds one small crosspoint (CP) buffer per (input, output) pair.
//! Time advances in slots of one cell service time, i.e. every server forwards
//! at most one cell per slot.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// One fixed-size cell traversing the switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub input_port: usize,
    pub output_port: usize,
    /// Slot in which the cell entered its VOQ.
    pub arrival_slot: u64,
}

/// Arbitration scheme run by the switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerKind {
    /// Round robin over VOQs at each input, round robin over CP buffers at
    /// each output (buffered crossbar).
    RrRrCicq,
    /// Oldest-cell-first VOQ selection, round robin at the outputs.
    OcfRr,
    /// Longest-queue-first VOQ selection, round robin at the outputs.
    LqfRr,
    /// Iterative request/grant/accept matching on a bufferless crossbar.
    Islip,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [
        SchedulerKind::RrRrCicq,
        SchedulerKind::OcfRr,
        SchedulerKind::LqfRr,
        SchedulerKind::Islip,
    ];
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchedulerKind::RrRrCicq => "rr_rr",
            SchedulerKind::OcfRr => "ocf_rr",
            SchedulerKind::LqfRr => "lqf_rr",
            SchedulerKind::Islip => "islip",
        };
        f.write_str(s)
    }
}

impl FromStr for SchedulerKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "rr_rr" | "rr" => Ok(SchedulerKind::RrRrCicq),
            "ocf_rr" | "ocf" => Ok(SchedulerKind::OcfRr),
            "lqf_rr" | "lqf" => Ok(SchedulerKind::LqfRr),
            "islip" => Ok(SchedulerKind::Islip),
            other => Err(ConfigError::UnknownScheduler(other.to_string())),
        }
    }
}

/// Parameters of the burst stabilization protocol.
///
/// A VOQ whose length exceeds `threshold` may transmit up to `burst` cells
/// consecutively before the input arbiter moves on. `burst = 0` disables the
/// protocol entirely (plain round robin).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstConfig {
    pub threshold: u64,
    pub burst: u64,
}

impl BurstConfig {
    pub fn new(threshold: u64, burst: u64) -> Self {
        Self { threshold, burst }
    }

    /// Whether the protocol actually does anything.
    pub fn is_active(&self) -> bool {
        self.burst > 0
    }
}

/// Static description of one switch instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchConfig {
    pub n_ports: usize,
    /// Cells each crosspoint buffer can hold. Two is enough to keep the
    /// crossbar busy while the input decides its next transfer.
    pub cp_capacity: usize,
    pub scheduler: SchedulerKind,
    /// Matching iterations per slot when `scheduler` is `Islip`.
    pub islip_iterations: usize,
    pub burst: Option<BurstConfig>,
    /// Optional VOQ bound. Unset means unbounded, which is the modelled
    /// system; a bound exists only as a memory tripwire for exploratory runs
    /// and overflowing it flags the run rather than silently truncating.
    pub voq_capacity: Option<usize>,
}

impl SwitchConfig {
    pub fn new(n_ports: usize) -> Self {
        Self {
            n_ports,
            cp_capacity: 2,
            scheduler: SchedulerKind::RrRrCicq,
            islip_iterations: 4,
            burst: None,
            voq_capacity: None,
        }
    }

    pub fn with_scheduler(mut self, scheduler: SchedulerKind) -> Self {
        self.scheduler = scheduler;
        self
    }

    pub fn with_burst(mut self, threshold: u64, burst: u64) -> Self {
        self.burst = Some(BurstConfig::new(threshold, burst));
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_ports == 0 {
            return Err(ConfigError::ZeroPorts);
        }
        if self.cp_capacity == 0 {
            return Err(ConfigError::ZeroCpCapacity);
        }
        if self.islip_iterations == 0 {
            return Err(ConfigError::ZeroIslipIterations);
        }
        Ok(())
    }

    /// Burst config, treating `burst = 0` the same as no config.
    pub fn active_burst(&self) -> Option<&BurstConfig> {
        self.burst.as_ref().filter(|b| b.is_active())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("switch must have at least one port")]
    ZeroPorts,
    #[error("crosspoint buffers must hold at least one cell")]
    ZeroCpCapacity,
    #[error("iSLIP needs at least one iteration per slot")]
    ZeroIslipIterations,
    #[error("unknown scheduler `{0}` (expected rr_rr, ocf_rr, lqf_rr, or islip)")]
    UnknownScheduler(String),
}

/// All mutable switch state for one run: queues, buffers, arbiter pointers,
/// burst counters, and the slot clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchState {
    n_ports: usize,
    cp_capacity: usize,
    /// VOQ FIFOs, flattened `input * n_ports + output`.
    voq: Vec<VecDeque<Cell>>,
    /// Crosspoint FIFOs, flattened the same way, each bounded by `cp_capacity`.
    cp: Vec<VecDeque<Cell>>,
    /// Per-input round-robin poll pointer over that input's VOQs.
    input_rr_pointer: Vec<usize>,
    /// Per-output round-robin pointer over the CP buffers in its column.
    output_rr_pointer: Vec<usize>,
    /// Per-VOQ burst credit counters.
    burst_counter: Vec<u64>,
    /// iSLIP grant pointer per output and accept pointer per input.
    islip_grant_pointer: Vec<usize>,
    islip_accept_pointer: Vec<usize>,
    clock: u64,
}

impl SwitchState {
    /// Fresh state: everything empty, pointers at zero, burst counters at
    /// full credit, clock at zero.
    pub fn new(config: &SwitchConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let n = config.n_ports;
        let credit = config.burst.map_or(0, |b| b.burst);
        Ok(Self {
            n_ports: n,
            cp_capacity: config.cp_capacity,
            voq: vec![VecDeque::new(); n * n],
            cp: vec![VecDeque::new(); n * n],
            input_rr_pointer: vec![0; n],
            output_rr_pointer: vec![0; n],
            burst_counter: vec![credit; n * n],
            islip_grant_pointer: vec![0; n],
            islip_accept_pointer: vec![0; n],
            clock: 0,
        })
    }

    #[inline]
    fn idx(&self, input: usize, output: usize) -> usize {
        debug_assert!(input < self.n_ports && output < self.n_ports);
        input * self.n_ports + output
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn cp_capacity(&self) -> usize {
        self.cp_capacity
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn voq_len(&self, input: usize, output: usize) -> usize {
        self.voq[self.idx(input, output)].len()
    }

    pub fn cp_len(&self, input: usize, output: usize) -> usize {
        self.cp[self.idx(input, output)].len()
    }

    pub fn cp_is_full(&self, input: usize, output: usize) -> bool {
        self.cp_len(input, output) >= self.cp_capacity
    }

    pub fn voq_head(&self, input: usize, output: usize) -> Option<&Cell> {
        self.voq[self.idx(input, output)].front()
    }

    pub fn input_pointer(&self, input: usize) -> usize {
        self.input_rr_pointer[input]
    }

    pub fn output_pointer(&self, output: usize) -> usize {
        self.output_rr_pointer[output]
    }

    pub fn burst_counter(&self, input: usize, output: usize) -> u64 {
        self.burst_counter[self.idx(input, output)]
    }

    pub fn grant_pointer(&self, output: usize) -> usize {
        self.islip_grant_pointer[output]
    }

    pub fn accept_pointer(&self, input: usize) -> usize {
        self.islip_accept_pointer[input]
    }

    /// Total cells currently queued anywhere in the switch.
    pub fn resident_cells(&self) -> usize {
        self.voq.iter().map(VecDeque::len).sum::<usize>()
            + self.cp.iter().map(VecDeque::len).sum::<usize>()
    }

    // --- crate-internal mutators used by sched and engine ---

    pub(crate) fn enqueue_voq(&mut self, cell: Cell) {
        debug_assert!(cell.arrival_slot <= self.clock);
        let idx = self.idx(cell.input_port, cell.output_port);
        self.voq[idx].push_back(cell);
    }

    pub(crate) fn pop_voq(&mut self, input: usize, output: usize) -> Option<Cell> {
        let idx = self.idx(input, output);
        self.voq[idx].pop_front()
    }

    pub(crate) fn push_cp(&mut self, cell: Cell) {
        let idx = self.idx(cell.input_port, cell.output_port);
        debug_assert!(self.cp[idx].len() < self.cp_capacity, "CP overfilled");
        self.cp[idx].push_back(cell);
    }

    pub(crate) fn pop_cp(&mut self, input: usize, output: usize) -> Option<Cell> {
        let idx = self.idx(input, output);
        self.cp[idx].pop_front()
    }

    pub(crate) fn set_input_pointer(&mut self, input: usize, voq: usize) {
        self.input_rr_pointer[input] = voq;
    }

    pub(crate) fn set_output_pointer(&mut self, output: usize, cp: usize) {
        self.output_rr_pointer[output] = cp;
    }

    pub(crate) fn set_burst_counter(&mut self, input: usize, output: usize, value: u64) {
        let idx = self.idx(input, output);
        self.burst_counter[idx] = value;
    }

    /// Reset every burst counter of one input to full credit.
    pub(crate) fn reset_input_burst_counters(&mut self, input: usize, credit: u64) {
        let base = input * self.n_ports;
        for c in &mut self.burst_counter[base..base + self.n_ports] {
            *c = credit;
        }
    }

    pub(crate) fn set_accept_pointer(&mut self, input: usize, value: usize) {
        self.islip_accept_pointer[input] = value;
    }

    /// Grant and accept pointer arrays, for the matcher to update in place.
    pub(crate) fn islip_pointers_mut(&mut self) -> (&mut [usize], &mut [usize]) {
        (&mut self.islip_grant_pointer, &mut self.islip_accept_pointer)
    }

    pub(crate) fn advance_clock(&mut self) {
        self.clock += 1;
    }
}
