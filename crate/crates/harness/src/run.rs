//! Run orchestration: single runs, seed/protocol comparisons, node-count
//! sweeps. Output order is fixed by the requested matrix, never by thread
//! scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use aodv_core::default_ruleset;
use eca_engine::RuleRegistry;
use net_sim::{Counters, Simulator};

use crate::metrics::{trace_digest, RunResult, TraceMetrics};
use crate::scenario::{Protocol, ScenarioConfig};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: RunResult,
    pub trace: String,
    pub counters: Counters,
}

pub fn run_id(protocol: Protocol, nodes: usize, seed: u64) -> String {
    format!("{protocol}-n{nodes}-s{seed}")
}

/// Execute one scenario. The rule-driven variant loads the standard routing
/// ruleset; a custom registry can be supplied for experiments.
pub fn run_scenario(cfg: &ScenarioConfig, registry: Option<Arc<RuleRegistry>>) -> RunOutput {
    let registry = match cfg.protocol {
        Protocol::Aodv => None,
        Protocol::EcaAodv => Some(registry.unwrap_or_else(|| Arc::new(default_ruleset()))),
    };
    let started = Instant::now();
    let outcome = Simulator::new(cfg.to_sim_params(), registry).run();
    let wall = started.elapsed().as_secs_f64();

    let trace = outcome.trace.to_text();
    let metrics = TraceMetrics::from_trace(&trace);
    // The trace is the source of truth; the simulator's counters must agree.
    if let Err(mismatch) = metrics.check_against(&outcome.counters) {
        panic!("trace and counters disagree: {mismatch}");
    }
    let events_per_sec = if wall > 0.0 {
        metrics.eca_events as f64 / wall
    } else {
        0.0
    };
    RunOutput {
        result: RunResult {
            run_id: run_id(cfg.protocol, cfg.nodes, cfg.seed),
            protocol: cfg.protocol,
            nodes: cfg.nodes,
            seed: cfg.seed,
            metrics,
            events_per_sec,
            trace_digest: trace_digest(&trace),
        },
        trace,
        counters: outcome.counters,
    }
}

/// Run a batch of configurations, optionally across `jobs` worker threads.
/// Results come back in input order regardless of completion order.
pub fn run_batch(cfgs: &[ScenarioConfig], jobs: usize) -> Vec<RunOutput> {
    run_batch_with(cfgs, jobs, None)
}

/// `run_batch` with an explicit ruleset for the rule-driven runs.
pub fn run_batch_with(
    cfgs: &[ScenarioConfig],
    jobs: usize,
    registry: Option<Arc<RuleRegistry>>,
) -> Vec<RunOutput> {
    let jobs = jobs.max(1).min(cfgs.len().max(1));
    if jobs <= 1 {
        return cfgs
            .iter()
            .map(|c| run_scenario(c, registry.clone()))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: std::sync::Mutex<Vec<Option<RunOutput>>> =
        std::sync::Mutex::new((0..cfgs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cfgs.len() {
                    break;
                }
                let out = run_scenario(&cfgs[i], registry.clone());
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect()
}

/// Cartesian product of protocols × seeds over one base scenario, in the
/// order given.
pub fn compare_matrix(
    base: &ScenarioConfig,
    protocols: &[Protocol],
    seeds: &[u64],
) -> Vec<ScenarioConfig> {
    let mut out = Vec::with_capacity(protocols.len() * seeds.len());
    for &protocol in protocols {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.protocol = protocol;
            cfg.seed = seed;
            out.push(cfg);
        }
    }
    out
}

/// Node-count sweep: every count in `nodes` crossed with every seed.
pub fn sweep_matrix(base: &ScenarioConfig, nodes: &[usize], seeds: &[u64]) -> Vec<ScenarioConfig> {
    let mut out = Vec::with_capacity(nodes.len() * seeds.len());
    for &n in nodes {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.nodes = n;
            cfg.seed = seed;
            out.push(cfg);
        }
    }
    out
}
