//! Arbitration policies.
//!
//! Input side: round robin with the optional burst hold, oldest cell first,
//! and longest queue first. Output side: round robin over the crosspoint
//! buffers of a column. For bufferless crossbars, the iterative
//! request/grant/accept matcher with rotating pointers.
//!
//! The burst protocol, informally: every VOQ carries a credit counter. While
//! the VOQ just served is longer than THRESHOLD and still has credit, the
//! input poll pointer stays parked on it, so it is reselected next slot and
//! the credit decrements with each consecutive transfer. The counter refills
//! to BURST whenever the VOQ drains or the poll pointer moves on. A full
//! crosspoint buffer blocking the pointed-at VOQ always moves the pointer.

use crate::switch::{BurstConfig, SwitchState};

/// What happened to a VOQ's burst counter this slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurstCounterEvent {
    /// The VOQ transferred a cell and keeps the arbiter (burst continues).
    CellTransferred,
    /// The VOQ emptied.
    VoqDrained,
    /// The input poll pointer moved off the VOQ.
    PollPointerIncremented,
}

/// Pure counter transition of the burst protocol.
pub fn burst_update(counter: u64, event: BurstCounterEvent, cfg: &BurstConfig) -> u64 {
    debug_assert!(counter <= cfg.burst);
    match event {
        BurstCounterEvent::CellTransferred => counter.saturating_sub(1),
        BurstCounterEvent::VoqDrained | BurstCounterEvent::PollPointerIncremented => cfg.burst,
    }
}

/// VOQ-selection policy of a buffered-crossbar input port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputPolicy {
    RoundRobin,
    OldestCellFirst,
    LongestQueueFirst,
}

/// Pick the VOQ that input `port` forwards this slot, updating the poll
/// pointer and burst counters.
///
/// Returns the selected VOQ index, or `None` when no VOQ is eligible (a VOQ
/// is eligible when non-empty and its crosspoint buffer has room). On `Some`,
/// the caller must move that VOQ's head cell into its crosspoint buffer;
/// pointer and counter updates already assume the transfer happens.
pub fn cicq_input_arbitrate(
    state: &mut SwitchState,
    port: usize,
    policy: InputPolicy,
    burst: Option<&BurstConfig>,
) -> Option<usize> {
    match policy {
        InputPolicy::RoundRobin => match burst.filter(|b| b.is_active()) {
            Some(cfg) => rr_arbitrate_burst(state, port, cfg),
            None => rr_arbitrate_plain(state, port),
        },
        InputPolicy::OldestCellFirst => ocf_arbitrate(state, port),
        InputPolicy::LongestQueueFirst => lqf_arbitrate(state, port),
    }
}

#[inline]
fn eligible(state: &SwitchState, port: usize, voq: usize) -> bool {
    state.voq_len(port, voq) > 0 && !state.cp_is_full(port, voq)
}

/// Plain round robin: serve the first eligible VOQ at or after the pointer,
/// then advance the pointer one past it.
fn rr_arbitrate_plain(state: &mut SwitchState, port: usize) -> Option<usize> {
    let n = state.n_ports();
    let start = state.input_pointer(port);
    for k in 0..n {
        let v = (start + k) % n;
        if eligible(state, port, v) {
            state.set_input_pointer(port, (v + 1) % n);
            return Some(v);
        }
    }
    None
}

/// Round robin with the burst hold.
fn rr_arbitrate_burst(state: &mut SwitchState, port: usize, cfg: &BurstConfig) -> Option<usize> {
    let n = state.n_ports();
    let mut start = state.input_pointer(port);

    // A full crosspoint buffer blocking the currently selected VOQ always
    // increments the poll pointer (and refills that VOQ's credit).
    if state.voq_len(port, start) > 0 && state.cp_is_full(port, start) {
        let refilled =
            burst_update(state.burst_counter(port, start), BurstCounterEvent::PollPointerIncremented, cfg);
        state.set_burst_counter(port, start, refilled);
        start = (start + 1) % n;
        state.set_input_pointer(port, start);
    }

    for k in 0..n {
        let v = (start + k) % n;
        if !eligible(state, port, v) {
            continue;
        }
        // Only the pointed-at VOQ can be mid-burst; everything the pointer
        // left was refilled on departure.
        debug_assert!(v == start || state.burst_counter(port, v) == cfg.burst);

        let len_after = state.voq_len(port, v) as u64 - 1;
        let credit_after = state.burst_counter(port, v).saturating_sub(1);
        let event = if len_after == 0 {
            BurstCounterEvent::VoqDrained
        } else if len_after > cfg.threshold && credit_after > 0 {
            BurstCounterEvent::CellTransferred
        } else {
            BurstCounterEvent::PollPointerIncremented
        };
        let counter = burst_update(state.burst_counter(port, v), event, cfg);
        state.set_burst_counter(port, v, counter);
        let next = if event == BurstCounterEvent::CellTransferred { v } else { (v + 1) % n };
        state.set_input_pointer(port, next);
        return Some(v);
    }
    None
}

/// Serve the eligible VOQ whose head cell is oldest; ties go to the lowest
/// VOQ index.
fn ocf_arbitrate(state: &mut SwitchState, port: usize) -> Option<usize> {
    let n = state.n_ports();
    let mut best: Option<(u64, usize)> = None;
    for v in 0..n {
        if !eligible(state, port, v) {
            continue;
        }
        let age = state.voq_head(port, v).expect("non-empty VOQ has a head").arrival_slot;
        if best.is_none_or(|(b, _)| age < b) {
            best = Some((age, v));
        }
    }
    best.map(|(_, v)| v)
}

/// Serve the longest eligible VOQ; ties go to the lowest VOQ index.
fn lqf_arbitrate(state: &mut SwitchState, port: usize) -> Option<usize> {
    let n = state.n_ports();
    let mut best: Option<(usize, usize)> = None;
    for v in 0..n {
        if !eligible(state, port, v) {
            continue;
        }
        let len = state.voq_len(port, v);
        if best.is_none_or(|(b, _)| len > b) {
            best = Some((len, v));
        }
    }
    best.map(|(_, v)| v)
}

/// Pick the crosspoint buffer that output `output` drains this slot: first
/// non-empty CP in the column at or after the pointer, pointer advances one
/// past it.
pub fn cicq_output_arbitrate(state: &mut SwitchState, output: usize) -> Option<usize> {
    let n = state.n_ports();
    let start = state.output_pointer(output);
    for k in 0..n {
        let i = (start + k) % n;
        if state.cp_len(i, output) > 0 {
            state.set_output_pointer(output, (i + 1) % n);
            return Some(i);
        }
    }
    None
}

/// A conflict-free set of (input, output) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    fn new(pairs: Vec<(usize, usize)>) -> Self {
        debug_assert!(Self::one_to_one(&pairs));
        Self { pairs }
    }

    fn one_to_one(pairs: &[(usize, usize)]) -> bool {
        let mut seen_in = std::collections::HashSet::new();
        let mut seen_out = std::collections::HashSet::new();
        pairs.iter().all(|&(i, j)| seen_in.insert(i) && seen_out.insert(j))
    }

    /// Matched pairs in input order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn output_for(&self, input: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(i, _)| i == input).map(|&(_, j)| j)
    }
}

/// Iterative request/grant/accept matching.
///
/// `requests` is an `n x n` row-major matrix: `requests[i * n + j]` means
/// input `i` has a cell for output `j`. Per iteration, every unmatched output
/// grants the first requesting unmatched input at or after its grant pointer,
/// and every unmatched input accepts the first granting output at or after
/// its accept pointer. Pointers advance one past the match only for matches
/// made in the first iteration, which is what desynchronizes the arbiters
/// under contention.
pub fn islip_match(
    requests: &[bool],
    n: usize,
    grant_ptr: &mut [usize],
    accept_ptr: &mut [usize],
    iterations: usize,
) -> Matching {
    assert_eq!(requests.len(), n * n, "request matrix must be n x n");
    assert_eq!(grant_ptr.len(), n);
    assert_eq!(accept_ptr.len(), n);
    assert!(iterations >= 1);

    let mut matched_input = vec![false; n];
    let mut matched_output = vec![false; n];
    let mut grant: Vec<Option<usize>> = vec![None; n];
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    for iter in 0..iterations {
        // Grant phase.
        for j in 0..n {
            grant[j] = None;
            if matched_output[j] {
                continue;
            }
            for k in 0..n {
                let i = (grant_ptr[j] + k) % n;
                if !matched_input[i] && requests[i * n + j] {
                    grant[j] = Some(i);
                    break;
                }
            }
        }

        // Accept phase.
        let mut progress = false;
        for i in 0..n {
            if matched_input[i] {
                continue;
            }
            for k in 0..n {
                let j = (accept_ptr[i] + k) % n;
                if grant[j] == Some(i) {
                    matched_input[i] = true;
                    matched_output[j] = true;
                    pairs.push((i, j));
                    progress = true;
                    if iter == 0 {
                        grant_ptr[j] = (i + 1) % n;
                        accept_ptr[i] = (j + 1) % n;
                    }
                    break;
                }
            }
        }
        if !progress {
            break;
        }
    }

    pairs.sort_unstable();
    Matching::new(pairs)
}
