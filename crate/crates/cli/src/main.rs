//! `manet`: run ad hoc routing simulations from scenario files and report
//! deterministic CSV metrics.
//!
//! Exit codes: 2 usage, 3 scenario/rule parse error, 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::exit;
use std::sync::Arc;

use aodv_core::load_ruleset;
use clap::{Parser, Subcommand};
use eca_engine::RuleRegistry;
use harness::{
    compare_matrix, museum_demo_stream, parse_scenario, run_assistant, run_batch_with, sweep_matrix,
    to_csv, Protocol, RunOutput, ScenarioConfig,
};

const EXIT_PARSE: i32 = 3;
const EXIT_IO: i32 = 4;

#[derive(Parser)]
#[command(
    name = "manet",
    version,
    about = "Mobile ad hoc network simulator with a rule-driven routing core"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProtocolArg {
    Aodv,
    EcaAodv,
    Both,
}

fn parse_protocol_arg(s: &str) -> Result<ProtocolArg, String> {
    match s {
        "aodv" => Ok(ProtocolArg::Aodv),
        "eca-aodv" => Ok(ProtocolArg::EcaAodv),
        "both" => Ok(ProtocolArg::Both),
        other => Err(format!("unknown protocol `{other}` (aodv|eca-aodv|both)")),
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute one scenario and print its metrics row.
    Run {
        /// Scenario file; defaults apply for any key not present.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Custom rule file for the rule-driven protocol.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Override the scenario's protocol (aodv|eca-aodv).
        #[arg(long, value_parser = parse_protocol_arg)]
        protocol: Option<ProtocolArg>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's node count.
        #[arg(long)]
        nodes: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the full event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a node-count sweep crossed with seeds.
    Sweep {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, value_parser = parse_protocol_arg)]
        protocol: Option<ProtocolArg>,
        /// Node counts as from:to:step (inclusive).
        #[arg(long)]
        nodes: String,
        /// Number of seeds; runs seeds 1..=N.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both protocol variants over a seed range and report digests.
    Compare {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Which side(s) to run; default both.
        #[arg(long, value_parser = parse_protocol_arg, default_value = "both")]
        protocol: ProtocolArg,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scripted museum-assistant demo and print its decisions.
    Museum,
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ! {
    eprintln!("manet: {msg}");
    exit(code);
}

fn read_file(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn load_scenario(path: Option<&PathBuf>) -> ScenarioConfig {
    let text = match path {
        Some(p) => read_file(p),
        None => String::new(),
    };
    parse_scenario(&text).unwrap_or_else(|e| fail(EXIT_PARSE, e))
}

fn load_rules(path: Option<&PathBuf>) -> Option<Arc<RuleRegistry>> {
    path.map(|p| {
        let reg = load_ruleset(&read_file(p)).unwrap_or_else(|e| fail(EXIT_PARSE, e));
        Arc::new(reg)
    })
}

fn apply_protocol(cfg: &mut ScenarioConfig, arg: Option<ProtocolArg>) {
    match arg {
        Some(ProtocolArg::Aodv) => cfg.protocol = Protocol::Aodv,
        Some(ProtocolArg::EcaAodv) => cfg.protocol = Protocol::EcaAodv,
        Some(ProtocolArg::Both) => {
            fail(2, "`both` is only valid for the compare command")
        }
        None => {}
    }
}

fn write_out(out: Option<&PathBuf>, text: &str) {
    match out {
        Some(path) => std::fs::write(path, text)
            .unwrap_or_else(|e| fail(EXIT_IO, format!("{}: {e}", path.display()))),
        None => print!("{text}"),
    }
}

fn parse_node_range(spec: &str) -> Vec<usize> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || fail(EXIT_PARSE, format!("bad node range `{spec}` (want from:to:step)"));
    if parts.len() != 3 {
        bad();
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.parse().unwrap_or_else(|_| bad()))
        .collect();
    let (from, to, step) = (nums[0], nums[1], nums[2]);
    if step == 0 || from == 0 || to < from {
        bad();
    }
    (from..=to).step_by(step).collect()
}

fn emit(results: &[RunOutput], out: Option<&PathBuf>) {
    let rows: Vec<_> = results.iter().map(|r| r.result.clone()).collect();
    write_out(out, &to_csv(&rows));
}

fn main() {
    match Cli::parse().cmd {
        Cmd::Run {
            scenario,
            rules,
            protocol,
            seed,
            nodes,
            out,
            trace,
        } => {
            let mut cfg = load_scenario(scenario.as_ref());
            apply_protocol(&mut cfg, protocol);
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = nodes {
                cfg.nodes = n;
            }
            let registry = load_rules(rules.as_ref());
            let result = harness::run_scenario(&cfg, registry);
            if let Some(path) = trace.as_ref() {
                std::fs::write(path, &result.trace)
                    .unwrap_or_else(|e| fail(EXIT_IO, format!("{}: {e}", path.display())));
            }
            emit(std::slice::from_ref(&result), out.as_ref());
        }
        Cmd::Sweep {
            scenario,
            rules,
            protocol,
            nodes,
            seeds,
            jobs,
            out,
        } => {
            let mut cfg = load_scenario(scenario.as_ref());
            apply_protocol(&mut cfg, protocol);
            let counts = parse_node_range(&nodes);
            let seed_list: Vec<u64> = (1..=seeds).collect();
            let registry = load_rules(rules.as_ref());
            let cfgs = sweep_matrix(&cfg, &counts, &seed_list);
            emit(&run_batch_with(&cfgs, jobs, registry), out.as_ref());
        }
        Cmd::Compare {
            scenario,
            rules,
            protocol,
            seeds,
            jobs,
            out,
        } => {
            let cfg = load_scenario(scenario.as_ref());
            let protocols: &[Protocol] = match protocol {
                ProtocolArg::Aodv => &[Protocol::Aodv],
                ProtocolArg::EcaAodv => &[Protocol::EcaAodv],
                ProtocolArg::Both => &[Protocol::Aodv, Protocol::EcaAodv],
            };
            let seed_list: Vec<u64> = (1..=seeds).collect();
            let registry = load_rules(rules.as_ref());
            let cfgs = compare_matrix(&cfg, protocols, &seed_list);
            let results = run_batch_with(&cfgs, jobs, registry);
            emit(&results, out.as_ref());
            if protocols.len() == 2 {
                let half = results.len() / 2;
                let matches = (0..half)
                    .filter(|&i| {
                        results[i].result.trace_digest == results[half + i].result.trace_digest
                    })
                    .count();
                eprintln!("digest matches: {matches}/{half}");
            }
        }
        Cmd::Museum => {
            let actions = run_assistant(&museum_demo_stream())
                .unwrap_or_else(|e| fail(EXIT_PARSE, e));
            for a in actions {
                println!(
                    "t={} rule={} decision={} {}",
                    a.at_ms, a.rule_id, a.decision, a.detail
                );
            }
        }
    }
}
