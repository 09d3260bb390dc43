//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Criteria 2 and 5 encode reference measurements that this implementation
//! does not fully reproduce at the pinned operating points; those tests state
//! exactly which rows or sub-checks miss and by how much, and fail honestly
//! rather than loosening their tolerances.

use cicq_core::analytic;
use cicq_core::engine::{self, estimate_drift, RunConfig, SlotEvents};
use cicq_core::rng::SplitMix64;
use cicq_core::switch::{SchedulerKind, SwitchConfig, SwitchState};
use cicq_core::traffic::{build_unstable_scenario, ScenarioVariant, TrafficMatrix};
use cicq_cli::experiments::{self, RegionSweepParams, SearchParams};

/// Reference rows: (f, b2, b1, b_hat, ceil(b_hat), searched minimum burst).
const REFERENCE_098: [(f64, f64, f64, f64, u32, u32); 10] = [
    (0.50, 0.96, 0.00, 0.96, 1, 1),
    (0.55, 1.17, 0.96, 2.13, 3, 3),
    (0.60, 1.43, 1.92, 3.35, 4, 4),
    (0.65, 1.75, 2.88, 4.64, 5, 5),
    (0.70, 2.18, 3.84, 6.03, 7, 7),
    (0.75, 2.77, 4.80, 7.58, 8, 8),
    (0.80, 3.63, 5.76, 9.39, 10, 10),
    (0.85, 4.99, 6.72, 11.71, 12, 12),
    (0.90, 7.47, 7.68, 15.16, 16, 16),
    (0.95, 13.49, 8.64, 22.14, 23, 21),
];

const REFERENCE_099: [(f64, f64, f64, f64, u32, u32); 10] = [
    (0.50, 0.98, 0.00, 0.98, 1, 1),
    (0.55, 1.20, 1.96, 3.16, 4, 4),
    (0.60, 1.46, 3.92, 5.38, 6, 7),
    (0.65, 1.81, 5.88, 7.69, 8, 8),
    (0.70, 2.26, 7.84, 10.10, 11, 10),
    (0.75, 2.88, 9.80, 12.68, 13, 11),
    (0.80, 3.81, 11.76, 15.57, 16, 14),
    (0.85, 5.31, 13.72, 19.03, 20, 17),
    (0.90, 8.17, 15.68, 23.86, 24, 22),
    (0.95, 15.81, 17.64, 33.45, 34, 33),
];

fn report(criterion: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("[acceptance] {criterion}: PASS");
    } else {
        println!("[acceptance] {criterion}: FAIL");
        for f in failures {
            println!("  - {f}");
        }
    }
    assert!(failures.is_empty(), "{criterion}: {failures:?}");
}

#[test]
fn criterion_1_analytic_table_reproduction() {
    let mut failures = Vec::new();
    for (lambda1, rows) in [(0.98, &REFERENCE_098), (0.99, &REFERENCE_099)] {
        for &(f, b2, b1, b_hat, b_min, _) in rows.iter() {
            let p = analytic::predict_min_burst(f, lambda1).unwrap();
            for (name, got, want) in
                [("b2", p.b2, b2), ("b1", p.b1, b1), ("b_hat", p.b_hat, b_hat)]
            {
                if (got - want).abs() > 0.005 {
                    failures.push(format!(
                        "l1={lambda1} f={f}: {name}={got:.4} vs reference {want:.2}"
                    ));
                }
            }
            if p.b_min != b_min {
                failures.push(format!(
                    "l1={lambda1} f={f}: ceil={} vs reference {b_min}",
                    p.b_min
                ));
            }
        }
    }
    report("criterion 1 (analytic minimum-burst table, +-0.005)", &failures);
}

#[test]
fn criterion_2_simulated_min_burst_reproduction() {
    let mut failures = Vec::new();
    for (lambda1, rows, tolerance) in
        [(0.98, &REFERENCE_098, 2i64), (0.99, &REFERENCE_099, 3i64)]
    {
        for &(f, _, _, _, b_min, reference) in rows.iter() {
            let params = SearchParams {
                b_hi: b_min.max(reference) + 8,
                ..SearchParams::default()
            };
            let found = experiments::search_min_burst(lambda1, f, &params);
            match found {
                Ok(b) => {
                    let delta = b as i64 - reference as i64;
                    println!(
                        "  l1={lambda1} f={f:.2}: searched={b} reference={reference} delta={delta:+}"
                    );
                    if delta.abs() > tolerance {
                        failures.push(format!(
                            "l1={lambda1} f={f:.2}: searched {b} vs reference {reference} (|delta| > {tolerance})"
                        ));
                    }
                }
                Err(e) => {
                    println!("  l1={lambda1} f={f:.2}: no stable burst found ({e})");
                    failures.push(format!(
                        "l1={lambda1} f={f:.2}: no stable burst in bracket vs reference {reference}"
                    ));
                }
            }
        }
    }
    report(
        "criterion 2 (searched minimum burst within +-2/+-3 of reference)",
        &failures,
    );
}

#[test]
fn criterion_3_burst_stabilizes_the_heavy_flow() {
    let mut failures = Vec::new();
    let horizon = 10_000_000;
    for lambda11 in [0.60, 0.70, 0.80, 0.90] {
        let f = lambda11 / 0.99;
        let traffic = build_unstable_scenario(2, 0.99, f, ScenarioVariant::Region).unwrap();

        // No bursting: the queue cap must trip within the horizon.
        let mut cfg = RunConfig::new(SwitchConfig::new(2), traffic.clone(), 21);
        cfg.max_slots = horizon;
        let bare = engine::run(&cfg).unwrap();
        if bare.verdict.is_stable() {
            failures.push(format!("l11={lambda11}: no bursting should be unstable"));
        }

        // THRESHOLD 32 / BURST 64: stable with flat heavy-VOQ growth.
        let mut cfg = RunConfig::new(
            SwitchConfig::new(2).with_burst(32, 64),
            traffic,
            21,
        );
        cfg.max_slots = horizon;
        let stabilized = engine::run(&cfg).unwrap();
        let drift = stabilized.drift(0, 0).unwrap().slope;
        if !stabilized.verdict.is_stable() {
            failures.push(format!("l11={lambda11}: threshold 32 / burst 64 should be stable"));
        }
        if drift.abs() > 1e-4 {
            failures.push(format!(
                "l11={lambda11}: stabilized drift {drift:+.2e} above 1e-4"
            ));
        }
    }
    report("criterion 3 (burst 0 unstable, 32/64 stable with flat drift)", &failures);
}

#[test]
fn criterion_4_region_shape() {
    let mut failures = Vec::new();
    let sweep = |scheduler| {
        let params = RegionSweepParams::new(scheduler);
        experiments::run_region_sweep(&params).unwrap()
    };
    let key = |x: f64| (x * 100.0).round() as i64;
    let unstable_set = |rows: &[experiments::RegionRow]| -> Vec<(i64, i64)> {
        rows.iter()
            .filter(|r| !r.verdict.is_stable())
            .map(|r| (key(r.lambda11), key(r.lambda11 + r.lambda12)))
            .collect()
    };

    let rr = sweep(SchedulerKind::RrRrCicq);
    let islip = sweep(SchedulerKind::Islip);
    let rr_unstable = unstable_set(&rr);
    let islip_unstable = unstable_set(&islip);

    // (a) Round-robin arbitration needs asymmetry: no instability at the
    // lambda11 = 0.50 edge of the grid.
    for &(l11, load) in &rr_unstable {
        if l11 <= 50 {
            failures.push(format!("(a) rr_rr unstable at lambda11=0.50, load={load}"));
        }
    }

    // (b) Instability present at load >= 0.95 inside 0.6 < lambda11 < 0.7.
    for load in [95, 99] {
        if !rr_unstable.contains(&(65, load)) {
            failures.push(format!("(b) rr_rr stable at lambda11=0.65, load=0.{load}"));
        }
    }

    // (c) OCF and LQF never destabilize on the grid.
    for scheduler in [SchedulerKind::OcfRr, SchedulerKind::LqfRr] {
        for row in sweep(scheduler) {
            if !row.verdict.is_stable() {
                failures.push(format!(
                    "(c) {scheduler} unstable at lambda11={:.2}", row.lambda11
                ));
            }
        }
    }

    // (d) The iSLIP unstable set contains the round-robin one.
    for point in &rr_unstable {
        if !islip_unstable.contains(point) {
            failures.push(format!("(d) rr_rr unstable but islip stable at {point:?}"));
        }
    }

    println!(
        "  rr_rr unstable points: {} of {}; islip unstable points: {} of {}",
        rr_unstable.len(),
        rr.len(),
        islip_unstable.len(),
        islip.len()
    );
    report("criterion 4 (instability region shape and scheduler comparison)", &failures);
}

#[test]
fn criterion_5_threshold_ordering() {
    let mut failures = Vec::new();
    let f = 0.80 / 0.99;
    let burst = 40;

    let run_at = |threshold: u64, horizon: u64| {
        let traffic = build_unstable_scenario(2, 0.99, f, ScenarioVariant::Region).unwrap();
        let mut cfg = RunConfig::new(
            SwitchConfig::new(2).with_burst(threshold, burst),
            traffic,
            31,
        );
        cfg.max_slots = horizon;
        engine::run(&cfg).unwrap()
    };
    let is_stabilized = |result: &engine::RunResult| {
        if !result.verdict.is_stable() {
            return false;
        }
        let samples = result.voq_samples(0, 0);
        estimate_drift(&samples[samples.len() / 2..])
            .map(|d| d.slope.abs() <= 1e-4)
            .unwrap_or(false)
    };

    // Too-small thresholds must destabilize the switch.
    for threshold in [8u64, 16] {
        let result = run_at(threshold, 10_000_000);
        if is_stabilized(&result) {
            failures.push(format!("threshold {threshold} expected unstable, ran stable"));
        }
    }

    // Large thresholds are stable with delay strictly increasing in the
    // threshold.
    let mut delays = Vec::new();
    for threshold in [32u64, 64, 128] {
        let result = run_at(threshold, 5_000_000);
        if !is_stabilized(&result) {
            failures.push(format!("threshold {threshold} expected stable"));
            continue;
        }
        let delay = result.combined_mean_delay().unwrap();
        println!("  threshold {threshold}: combined mean delay {delay:.2}");
        delays.push((threshold, delay));
    }
    for pair in delays.windows(2) {
        if pair[0].1 >= pair[1].1 {
            failures.push(format!(
                "delay({}) = {:.2} not below delay({}) = {:.2}",
                pair[0].0, pair[0].1, pair[1].0, pair[1].1
            ));
        }
    }
    report("criterion 5 (threshold 8/16 unstable; 32/64/128 stable, delays ordered)", &failures);
}

/// Single-queue oracle of the vacating-server model: the server idles one
/// slot after each service unless the queue is over the threshold and credit
/// remains, in which case it serves up to `burst` cells back to back.
/// Independent of the switch engine.
fn vacating_server(
    lambda: f64,
    threshold: u64,
    burst: u64,
    slots: u64,
    seed: u64,
) -> (f64, f64) {
    let mut rng = SplitMix64::new(seed);
    let mut queue: u64 = 0;
    let mut vacationing = false;
    let mut credit = burst;
    let mut departures = 0u64;
    let mut samples = Vec::new();
    for slot in 0..slots {
        if slot % 1000 == 0 {
            samples.push((slot, queue));
        }
        if vacationing {
            vacationing = false;
        } else if queue > 0 {
            queue -= 1;
            departures += 1;
            if queue > threshold && credit > 1 {
                credit -= 1;
            } else {
                vacationing = true;
                credit = burst;
            }
        }
        if rng.next_uniform() < lambda {
            queue += 1;
        }
    }
    let late = &samples[samples.len() / 2..];
    let drift = estimate_drift(late).unwrap().slope;
    (drift, departures as f64 / slots as f64)
}

#[test]
fn criterion_6_vacating_server_burst_threshold() {
    let mut failures = Vec::new();
    let bound = analytic::vacating_burst_bound(0.8, 1.0).unwrap();
    if (bound - 4.0).abs() > 1e-9 {
        failures.push(format!("vacating bound {bound} != 4.0"));
    }
    let b_min = 4u64;

    let (drift_ok, rate_ok) = vacating_server(0.8, 4, b_min, 50_000_000, 61);
    println!("  burst {b_min}: drift {drift_ok:+.2e}, throughput {rate_ok:.4}");
    if drift_ok.abs() > 1e-4 {
        failures.push(format!("burst {b_min} drift {drift_ok:+.2e} above 1e-4"));
    }
    if (rate_ok - 0.8).abs() > 0.008 {
        failures.push(format!("burst {b_min} throughput {rate_ok:.4} not rate-matched"));
    }

    let (drift_low, _) = vacating_server(0.8, 4, b_min - 1, 10_000_000, 61);
    println!("  burst {}: drift {drift_low:+.2e}", b_min - 1);
    if drift_low <= 1e-3 {
        failures.push(format!(
            "burst {} should grow linearly, drift {drift_low:+.2e}",
            b_min - 1
        ));
    }
    report("criterion 6 (vacating-server burst bound is a sharp threshold)", &failures);
}

#[test]
fn criterion_7_property_suite() {
    let mut failures = Vec::new();

    // Cell conservation and crosspoint bounds, every slot for 1e5 slots on a
    // randomized 4x4 load; one-to-one matching for iSLIP.
    for scheduler in [SchedulerKind::RrRrCicq, SchedulerKind::Islip] {
        let n = 4;
        let mut cfg = SwitchConfig::new(n).with_scheduler(scheduler);
        cfg.burst = Some(cicq_core::BurstConfig::new(16, 8));
        let mut rate_rng = SplitMix64::new(17);
        let mut traffic = TrafficMatrix::new(n);
        for i in 0..n {
            for j in 0..n {
                traffic.set_rate(i, j, 0.9 * rate_rng.next_uniform() / n as f64).unwrap();
            }
        }
        let mut state = SwitchState::new(&cfg).unwrap();
        let mut rng = SplitMix64::new(18);
        let mut events = SlotEvents::new();
        let mut arrived = vec![0u64; n * n];
        let mut departed = vec![0u64; n * n];
        'outer: for _ in 0..100_000 {
            engine::step(&cfg, &mut state, &traffic, &mut rng, &mut events);
            for c in &events.arrivals {
                arrived[c.input_port * n + c.output_port] += 1;
            }
            let mut ins = [false; 4];
            let mut outs = [false; 4];
            for c in &events.departures {
                departed[c.input_port * n + c.output_port] += 1;
                if scheduler == SchedulerKind::Islip
                    && (std::mem::replace(&mut ins[c.input_port], true)
                        || std::mem::replace(&mut outs[c.output_port], true))
                {
                    failures.push(format!("{scheduler}: departures not one-to-one"));
                    break 'outer;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let resident = (state.voq_len(i, j) + state.cp_len(i, j)) as u64;
                    if arrived[i * n + j] != departed[i * n + j] + resident {
                        failures.push(format!("{scheduler}: conservation broken at ({i},{j})"));
                        break 'outer;
                    }
                    if state.cp_len(i, j) > cfg.cp_capacity {
                        failures.push(format!("{scheduler}: crosspoint overflow at ({i},{j})"));
                        break 'outer;
                    }
                }
            }
        }
    }

    // Dual forms of the cross-port blocking term agree to 1e-12.
    let mut rng = SplitMix64::new(19);
    for _ in 0..1000 {
        let f = 0.5 + 0.499 * rng.next_uniform();
        let lambda1 = 0.05 + 0.94 * rng.next_uniform();
        let lambda11 = f * lambda1;
        let lambda12 = lambda1 - lambda11;
        let via_port2 = (lambda1 - lambda12) / (1.0 - lambda1 + lambda12);
        let via_voq11 = lambda11 / (1.0 - lambda11);
        if (via_port2 - via_voq11).abs() > 1e-12 {
            failures.push(format!("dual forms disagree at f={f}, l1={lambda1}"));
            break;
        }
    }

    // The predicted burst grows strictly with the split.
    for lambda1 in [0.90, 0.98, 0.99] {
        let mut prev = f64::MIN;
        for k in 0..100 {
            let f = 0.5 + 0.0049 * k as f64;
            let b_hat = analytic::predict_min_burst(f, lambda1).unwrap().b_hat;
            if b_hat <= prev {
                failures.push(format!("b_hat not increasing at f={f}, l1={lambda1}"));
            }
            prev = b_hat;
        }
    }

    // Determinism: identical configurations give identical results and
    // byte-identical CSV.
    let traffic = build_unstable_scenario(2, 0.95, 0.7, ScenarioVariant::Region).unwrap();
    let mut cfg = RunConfig::new(SwitchConfig::new(2).with_burst(32, 16), traffic, 7);
    cfg.max_slots = 300_000;
    let a = engine::run(&cfg).unwrap();
    let b = engine::run(&cfg).unwrap();
    if a != b {
        failures.push("identical runs differ".into());
    }
    let mut params = RegionSweepParams::new(SchedulerKind::RrRrCicq);
    params.lambda11_grid = vec![0.55, 0.65];
    params.load_grid = vec![0.90, 0.95];
    params.horizon = 300_000;
    params.seed = 7;
    let csv_a = experiments::region_csv(&experiments::run_region_sweep(&params).unwrap());
    let csv_b = experiments::region_csv(&experiments::run_region_sweep(&params).unwrap());
    if csv_a != csv_b {
        failures.push("region CSV not byte-deterministic".into());
    }

    report("criterion 7 (conservation, matching, identities, determinism)", &failures);
}
