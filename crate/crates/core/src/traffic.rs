//! Traffic matrices and Bernoulli arrival generation.
//!
//! Arrivals are independent Bernoulli trials: in every slot, VOQ(i, j)
//! receives one cell with probability `rate[i][j]`. The module also builds the
//! canonical two-port asymmetric load under which round-robin arbitration
//! loses work conservation.

use thiserror::Error;

use crate::rng::SplitMix64;
use crate::switch::Cell;

/// Per-(input, output) arrival rates in cells per slot, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    n: usize,
    rate: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("arrival rate {rate} at ({input},{output}) outside [0, 1]")]
    RateOutOfRange { input: usize, output: usize, rate: f64 },
    #[error("asymmetric scenario needs at least two ports, got {0}")]
    TooFewPorts(usize),
    #[error("traffic split f={0} outside [0.5, 1)")]
    SplitOutOfRange(f64),
    #[error("port-1 offered load {0} outside (0, 1]")]
    LoadOutOfRange(f64),
}

impl TrafficMatrix {
    /// All-zero matrix.
    pub fn new(n_ports: usize) -> Self {
        Self { n: n_ports, rate: vec![0.0; n_ports * n_ports] }
    }

    /// Uniform matrix with the same rate everywhere.
    pub fn uniform(n_ports: usize, rate: f64) -> Result<Self, TrafficError> {
        let mut m = Self::new(n_ports);
        for i in 0..n_ports {
            for j in 0..n_ports {
                m.set_rate(i, j, rate)?;
            }
        }
        Ok(m)
    }

    pub fn n_ports(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rate(&self, input: usize, output: usize) -> f64 {
        self.rate[input * self.n + output]
    }

    pub fn set_rate(&mut self, input: usize, output: usize, rate: f64) -> Result<(), TrafficError> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(TrafficError::RateOutOfRange { input, output, rate });
        }
        self.rate[input * self.n + output] = rate;
        Ok(())
    }

    pub fn row_sum(&self, input: usize) -> f64 {
        (0..self.n).map(|j| self.rate(input, j)).sum()
    }

    pub fn col_sum(&self, output: usize) -> f64 {
        (0..self.n).map(|i| self.rate(i, output)).sum()
    }
}

/// Shape of the two-port asymmetric load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioVariant {
    /// Port 2 mirrors the light flow: `rate[1][0] = rate[0][1]`. Used for the
    /// instability-region sweeps and the delay experiments.
    Region,
    /// Port 2 additionally absorbs the slack of port 1 so that output 1 is
    /// offered exactly one cell per slot: `rate[1][0] = rate[0][1] + (1 - l1)`.
    /// Used for the minimum-burst searches.
    SaturatedPort2,
}

/// Build the asymmetric two-port load on an `n_ports`-sized switch.
///
/// Port 1 offers `lambda1` split between VOQ(0,0) and VOQ(0,1): a fraction `f`
/// goes to output 1 and the rest to output 2. Port 2 sends only to output 1,
/// with a rate chosen per `variant`. All other entries are zero, so the same
/// pairwise pattern embeds into any larger switch.
///
/// The construction keeps two identities exact in floating point:
/// `rate[0][0] + rate[0][1] == lambda1` and, for `SaturatedPort2`,
/// `rate[0][0] + rate[1][0] == 1.0`.
pub fn build_unstable_scenario(
    n_ports: usize,
    lambda1: f64,
    f: f64,
    variant: ScenarioVariant,
) -> Result<TrafficMatrix, TrafficError> {
    if n_ports < 2 {
        return Err(TrafficError::TooFewPorts(n_ports));
    }
    if !(0.5..1.0).contains(&f) {
        return Err(TrafficError::SplitOutOfRange(f));
    }
    if !(lambda1 > 0.0 && lambda1 <= 1.0) {
        return Err(TrafficError::LoadOutOfRange(lambda1));
    }

    let l11 = f * lambda1;
    // Exact because f >= 1/2 puts lambda1 within a factor of two of l11
    // (Sterbenz), so l11 + l12 reproduces lambda1 bit-for-bit.
    let l12 = lambda1 - l11;
    let l21 = match variant {
        ScenarioVariant::Region => l12,
        // Algebraically l12 + (1 - lambda1); written this way the column sum
        // l11 + l21 rounds to exactly 1.0.
        ScenarioVariant::SaturatedPort2 => 1.0 - l11,
    };

    let mut m = TrafficMatrix::new(n_ports);
    m.set_rate(0, 0, l11)?;
    m.set_rate(0, 1, l12)?;
    m.set_rate(1, 0, l21)?;
    Ok(m)
}

/// Append this slot's Bernoulli arrivals to `out`.
///
/// One uniform draw per matrix entry in fixed order (inputs ascending, then
/// outputs ascending within the input), including zero-rate entries, so the
/// stream consumed per slot is independent of the load.
pub fn generate_arrivals_into(
    matrix: &TrafficMatrix,
    slot: u64,
    rng: &mut SplitMix64,
    out: &mut Vec<Cell>,
) {
    let n = matrix.n_ports();
    for input in 0..n {
        for output in 0..n {
            let u = rng.next_uniform();
            if u < matrix.rate(input, output) {
                out.push(Cell { input_port: input, output_port: output, arrival_slot: slot });
            }
        }
    }
}

/// Convenience wrapper around [`generate_arrivals_into`].
pub fn generate_arrivals(matrix: &TrafficMatrix, slot: u64, rng: &mut SplitMix64) -> Vec<Cell> {
    let mut out = Vec::new();
    generate_arrivals_into(matrix, slot, rng, &mut out);
    out
}

/// Admissibility: every input row and every output column offers at most one
/// cell per slot (within 1e-9 to absorb rounding in constructed loads).
pub fn check_schedulable(matrix: &TrafficMatrix) -> bool {
    const TOL: f64 = 1e-9;
    let n = matrix.n_ports();
    (0..n).all(|i| matrix.row_sum(i) <= 1.0 + TOL) && (0..n).all(|j| matrix.col_sum(j) <= 1.0 + TOL)
}
