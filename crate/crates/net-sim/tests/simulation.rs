//! End-to-end simulator checks: determinism, delivery, conservation,
//! causality, neighbor symmetry, and baseline-vs-rule-driven trace equality.

use std::sync::Arc;

use aodv_core::default_ruleset;
use net_sim::{
    Area, Flow, HelloMode, LinkCut, MobilityParams, Placement, Position, SimParams, Simulator,
};

fn static_line(n: usize, spacing: f64) -> Placement {
    Placement::Fixed(
        (0..n)
            .map(|i| Position {
                x: 1.0 + i as f64 * spacing,
                y: 1.0,
            })
            .collect(),
    )
}

fn base_params() -> SimParams {
    SimParams {
        nodes: 5,
        area: Area { x: 200.0, y: 10.0 },
        range_m: 30.0,
        sim_time_ms: 20_000,
        seed: 42,
        mobility: MobilityParams {
            speed_min: 0.0,
            speed_max: 0.0,
            pause_ms: 0,
        },
        hop_delay_ms: 2,
        loss_p: 0.0,
        hello: HelloMode::Off,
        flows: vec![Flow {
            src: 0,
            dst: 4,
            start_ms: 1000,
            interval_ms: 500,
            count: 10,
        }],
        placement: static_line(5, 25.0),
        ..SimParams::default()
    }
}

#[test]
fn static_lossless_line_delivers_everything() {
    let outcome = Simulator::new(base_params(), None).run();
    let c = &outcome.counters;
    assert_eq!(c.data_sent, 10);
    assert_eq!(c.data_delivered, 10);
    assert_eq!(c.data_dropped, 0);
    assert_eq!(c.buffered_at_end, 0);
    assert!(c.rreq_tx > 0 && c.rrep_tx > 0);
    // 4 hops at 2 ms each, plus the discovery round trip for the first packet.
    assert!(c.latency_total_ms >= 10 * 8);
}

#[test]
fn same_seed_same_trace() {
    let a = Simulator::new(base_params(), None).run();
    let b = Simulator::new(base_params(), None).run();
    assert_eq!(a.trace.to_text(), b.trace.to_text());
    assert_eq!(a.counters, b.counters);

    let mut params = base_params();
    params.seed = 43;
    params.loss_p = 0.2;
    params.mobility = MobilityParams {
        speed_min: 0.5,
        speed_max: 2.0,
        pause_ms: 2000,
    };
    params.placement = Placement::RandomUniform;
    params.area = Area { x: 60.0, y: 60.0 };
    params.hello = HelloMode::On;
    let a = Simulator::new(params.clone(), None).run();
    let b = Simulator::new(params, None).run();
    assert_eq!(a.trace.to_text(), b.trace.to_text());
}

#[test]
fn rule_driven_run_matches_baseline_except_firing_lines() {
    let baseline = Simulator::new(base_params(), None).run();
    let eca = Simulator::new(base_params(), Some(Arc::new(default_ruleset()))).run();
    let filter = |text: &str| {
        text.lines()
            .filter(|l| !l.contains("ev=ECA_FIRE"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        filter(&baseline.trace.to_text()),
        filter(&eca.trace.to_text())
    );
    assert_eq!(baseline.counters.eca_invocations, 0);
    assert!(eca.counters.eca_invocations > 0);
    assert!(eca.counters.eca_firings > 0);
}

#[test]
fn conservation_holds_under_loss() {
    for loss in [0.1, 0.3] {
        let mut params = base_params();
        params.loss_p = loss;
        let outcome = Simulator::new(params, None).run();
        let c = &outcome.counters;
        assert_eq!(
            c.data_sent,
            c.data_delivered + c.data_dropped + c.buffered_at_end,
            "loss={loss}"
        );
    }
}

#[test]
fn delivery_timestamps_respect_hop_delay() {
    let outcome = Simulator::new(base_params(), None).run();
    let text = outcome.trace.to_text();
    let mut sends = std::collections::BTreeMap::new();
    for line in text.lines() {
        let t: u64 = line
            .split_whitespace()
            .next()
            .unwrap()
            .trim_start_matches("t=")
            .parse()
            .unwrap();
        let get = |key: &str| {
            line.split_whitespace()
                .find_map(|f| f.strip_prefix(key))
                .map(str::to_string)
        };
        if line.contains("ev=SEND") {
            sends.insert((get("flow=").unwrap(), get("no=").unwrap()), t);
        } else if line.contains("ev=DELIVER") {
            let sent = sends[&(get("flow=").unwrap(), get("no=").unwrap())];
            assert!(t >= sent + 2, "deliver at {t} for send at {sent}");
        }
    }
}

#[test]
fn neighborhood_is_symmetric() {
    // Distances are symmetric, so the closed-ball link rule must be too;
    // spot-check through delivered hellos on a random layout.
    let mut params = base_params();
    params.nodes = 12;
    params.placement = Placement::RandomUniform;
    params.area = Area { x: 80.0, y: 80.0 };
    params.flows.clear();
    params.hello = HelloMode::On;
    params.sim_time_ms = 1100;
    let outcome = Simulator::new(params, None).run();
    // Every node beacons once in 1100 ms.
    assert_eq!(outcome.counters.hello_tx, 12);
}

#[test]
fn link_cut_triggers_error_reporting() {
    let mut params = base_params();
    params.hello = HelloMode::Oracle;
    params.link_cuts = vec![LinkCut {
        a: 2,
        b: 3,
        at_ms: 6000,
    }];
    let outcome = Simulator::new(params, None).run();
    let text = outcome.trace.to_text();
    assert!(outcome.counters.rerr_tx > 0, "no RERR in:\n{text}");
    // Upstream users of the broken link hear about the loss of the far end.
    let invalidations = text
        .lines()
        .filter(|l| l.contains("ev=ROUTE_INVALIDATE"))
        .count();
    assert!(invalidations > 0);
    // Traffic resumes after re-discovery around... there is no alternate
    // path on a line, so later packets are dropped or re-buffered, never
    // silently lost.
    let c = &outcome.counters;
    assert_eq!(
        c.data_sent,
        c.data_delivered + c.data_dropped + c.buffered_at_end
    );
}
