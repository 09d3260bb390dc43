//! Cell-level simulation and analytical stability modelling of input-buffered
//! crossbar switches.
//!
//! The crate covers two sides of the same question: when does round-robin
//! arbitration of virtual output queues stay stable, and how much bursting
//! does it take to stabilize it.
//!
//! * [`switch`], [`traffic`], [`sched`], [`engine`]: a deterministic slotted
//!   simulator of buffered-crossbar (CICQ) switches with round-robin, oldest
//!   cell first and longest queue first input policies, the burst
//!   stabilization protocol, and an iSLIP matcher for bufferless crossbars.
//! * [`analytic`]: closed-form instability boundary in utilization space and
//!   the two-term predictor of the minimum stabilizing burst.
//!
//! Runs are bit-reproducible: one seeded [`rng::SplitMix64`] stream per run,
//! drawn in a fixed order.

pub mod analytic;
pub mod engine;
pub mod rng;
pub mod sched;
pub mod switch;
pub mod traffic;

pub use analytic::{BoundaryClass, BurstPrediction, LoadPoint};
pub use engine::{DriftEstimate, QueueSample, RunConfig, RunResult, SlotEvents, Verdict};
pub use rng::SplitMix64;
pub use sched::{BurstCounterEvent, InputPolicy, Matching};
pub use switch::{BurstConfig, Cell, SchedulerKind, SwitchConfig, SwitchState};
pub use traffic::{ScenarioVariant, TrafficMatrix};
