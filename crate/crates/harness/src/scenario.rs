//! Line-oriented scenario files: `key = value`, `#` comments. Missing keys
//! take the reference-experiment defaults (100 nodes, 25 m × 25 m, 30 m
//! range, 500 s, 512-byte packets).

use std::fmt;
use std::str::FromStr;

use aodv_core::AodvConfig;
use net_sim::{Area, Flow, HelloMode, MobilityParams, Placement, SimParams};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("value for `{0}` out of range")]
    Range(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Aodv,
    EcaAodv,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Aodv => write!(f, "aodv"),
            Protocol::EcaAodv => write!(f, "eca-aodv"),
        }
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aodv" => Ok(Protocol::Aodv),
            "eca-aodv" => Ok(Protocol::EcaAodv),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub nodes: usize,
    pub area_x: f64,
    pub area_y: f64,
    pub range_m: f64,
    pub sim_time_ms: u64,
    pub seed: u64,
    pub protocol: Protocol,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_ms: u64,
    pub hop_delay_ms: u64,
    pub loss_p: f64,
    pub hello: HelloMode,
    pub flows: Vec<Flow>,
    pub aodv: AodvConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nodes: 100,
            area_x: 25.0,
            area_y: 25.0,
            range_m: 30.0,
            sim_time_ms: 500_000,
            seed: 1,
            protocol: Protocol::Aodv,
            speed_min: 0.5,
            speed_max: 2.0,
            pause_ms: 2000,
            hop_delay_ms: 2,
            loss_p: 0.0,
            hello: HelloMode::On,
            flows: Vec::new(),
            aodv: AodvConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn to_sim_params(&self) -> SimParams {
        SimParams {
            nodes: self.nodes,
            area: Area {
                x: self.area_x,
                y: self.area_y,
            },
            range_m: self.range_m,
            sim_time_ms: self.sim_time_ms,
            seed: self.seed,
            mobility: MobilityParams {
                speed_min: self.speed_min,
                speed_max: self.speed_max,
                pause_ms: self.pause_ms,
            },
            hop_delay_ms: self.hop_delay_ms,
            loss_p: self.loss_p,
            hello: self.hello,
            aodv: self.aodv,
            flows: self.flows.clone(),
            placement: Placement::RandomUniform,
            link_cuts: Vec::new(),
        }
    }

    /// Serialize every key; `parse_scenario` round-trips the output.
    pub fn to_text(&self) -> String {
        let hello = match self.hello {
            HelloMode::On => "on",
            HelloMode::Off => "off",
            HelloMode::Oracle => "oracle",
        };
        let mut s = format!(
            "nodes = {}\narea_x = {}\narea_y = {}\nrange_m = {}\nsim_time_ms = {}\nseed = {}\n\
             protocol = {}\nspeed_min = {}\nspeed_max = {}\npause_ms = {}\nhop_delay_ms = {}\n\
             loss_p = {}\nhello = {}\n",
            self.nodes,
            self.area_x,
            self.area_y,
            self.range_m,
            self.sim_time_ms,
            self.seed,
            self.protocol,
            self.speed_min,
            self.speed_max,
            self.pause_ms,
            self.hop_delay_ms,
            self.loss_p,
            hello,
        );
        s.push_str(&format!(
            "active_route_ms = {}\nseen_rreq_ms = {}\ndiscovery_timeout_ms = {}\n\
             discovery_retries = {}\nhello_interval_ms = {}\nallowed_hello_loss = {}\n\
             rrep_lifetime_ms = {}\nrequest_ack = {}\n",
            self.aodv.active_route_ms,
            self.aodv.seen_rreq_ms,
            self.aodv.discovery_timeout_ms,
            self.aodv.discovery_retries,
            self.aodv.hello_interval_ms,
            self.aodv.allowed_hello_loss,
            self.aodv.rrep_lifetime_ms,
            self.aodv.request_ack,
        ));
        for f in &self.flows {
            s.push_str(&format!(
                "flow = {}:{}:{}:{}:{}\n",
                f.src, f.dst, f.start_ms, f.interval_ms, f.count
            ));
        }
        s
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, ScenarioError> {
    value.parse().map_err(|_| ScenarioError::Parse {
        line,
        reason: format!("bad value `{value}` for `{key}`"),
    })
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = ScenarioConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ScenarioError::Parse {
            line: line_no,
            reason: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "nodes" => cfg.nodes = parse_num(key, value, line_no)?,
            "area_x" => cfg.area_x = parse_num(key, value, line_no)?,
            "area_y" => cfg.area_y = parse_num(key, value, line_no)?,
            "range_m" => cfg.range_m = parse_num(key, value, line_no)?,
            "sim_time_ms" => cfg.sim_time_ms = parse_num(key, value, line_no)?,
            "seed" => cfg.seed = parse_num(key, value, line_no)?,
            "protocol" => {
                cfg.protocol = value.parse().map_err(|reason| ScenarioError::Parse {
                    line: line_no,
                    reason,
                })?
            }
            "speed_min" => cfg.speed_min = parse_num(key, value, line_no)?,
            "speed_max" => cfg.speed_max = parse_num(key, value, line_no)?,
            "pause_ms" => cfg.pause_ms = parse_num(key, value, line_no)?,
            "hop_delay_ms" => cfg.hop_delay_ms = parse_num(key, value, line_no)?,
            "loss_p" => cfg.loss_p = parse_num(key, value, line_no)?,
            "hello" => {
                cfg.hello = match value {
                    "on" => HelloMode::On,
                    "off" => HelloMode::Off,
                    "oracle" => HelloMode::Oracle,
                    other => {
                        return Err(ScenarioError::Parse {
                            line: line_no,
                            reason: format!("unknown hello mode `{other}`"),
                        })
                    }
                }
            }
            "active_route_ms" => cfg.aodv.active_route_ms = parse_num(key, value, line_no)?,
            "seen_rreq_ms" => cfg.aodv.seen_rreq_ms = parse_num(key, value, line_no)?,
            "discovery_timeout_ms" => {
                cfg.aodv.discovery_timeout_ms = parse_num(key, value, line_no)?
            }
            "discovery_retries" => cfg.aodv.discovery_retries = parse_num(key, value, line_no)?,
            "hello_interval_ms" => cfg.aodv.hello_interval_ms = parse_num(key, value, line_no)?,
            "allowed_hello_loss" => cfg.aodv.allowed_hello_loss = parse_num(key, value, line_no)?,
            "rrep_lifetime_ms" => cfg.aodv.rrep_lifetime_ms = parse_num(key, value, line_no)?,
            "request_ack" => cfg.aodv.request_ack = parse_num(key, value, line_no)?,
            "flow" => {
                let parts: Vec<&str> = value.split(':').collect();
                if parts.len() != 5 {
                    return Err(ScenarioError::Parse {
                        line: line_no,
                        reason: "flow wants src:dst:start_ms:interval_ms:count".into(),
                    });
                }
                cfg.flows.push(Flow {
                    src: parse_num("flow.src", parts[0], line_no)?,
                    dst: parse_num("flow.dst", parts[1], line_no)?,
                    start_ms: parse_num("flow.start_ms", parts[2], line_no)?,
                    interval_ms: parse_num("flow.interval_ms", parts[3], line_no)?,
                    count: parse_num("flow.count", parts[4], line_no)?,
                });
            }
            other => {
                return Err(ScenarioError::Parse {
                    line: line_no,
                    reason: format!("unknown key `{other}`"),
                })
            }
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ScenarioConfig) -> Result<(), ScenarioError> {
    let positive = [
        ("area_x", cfg.area_x),
        ("area_y", cfg.area_y),
        ("range_m", cfg.range_m),
    ];
    for (key, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ScenarioError::Range(key.into()));
        }
    }
    if !(0.0..=1.0).contains(&cfg.loss_p) {
        return Err(ScenarioError::Range("loss_p".into()));
    }
    if cfg.speed_min < 0.0 || cfg.speed_max < cfg.speed_min {
        return Err(ScenarioError::Range("speed_min/speed_max".into()));
    }
    if cfg.nodes == 0 || (!cfg.flows.is_empty() && cfg.nodes < 2) {
        return Err(ScenarioError::Range("nodes".into()));
    }
    for f in &cfg.flows {
        if f.src == f.dst || f.src >= cfg.nodes || f.dst >= cfg.nodes {
            return Err(ScenarioError::Range("flow".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_gives_reference_defaults() {
        let cfg = parse_scenario("").unwrap();
        assert_eq!(cfg.nodes, 100);
        assert_eq!(cfg.range_m, 30.0);
        assert_eq!(cfg.sim_time_ms, 500_000);
        assert_eq!((cfg.area_x, cfg.area_y), (25.0, 25.0));
    }

    #[test]
    fn out_of_range_loss_rejected() {
        assert_eq!(
            parse_scenario("loss_p = 1.5").unwrap_err(),
            ScenarioError::Range("loss_p".into())
        );
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        match parse_scenario("nodes = 5\nbogus = 1").unwrap_err() {
            ScenarioError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_round_trips_through_text() {
        let mut cfg = ScenarioConfig {
            protocol: Protocol::EcaAodv,
            nodes: 20,
            hello: HelloMode::Oracle,
            ..ScenarioConfig::default()
        };
        cfg.flows.push(Flow {
            src: 0,
            dst: 7,
            start_ms: 1000,
            interval_ms: 250,
            count: 40,
        });
        cfg.aodv.rrep_lifetime_ms = 25;
        assert_eq!(parse_scenario(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn flow_bounds_checked() {
        assert_eq!(
            parse_scenario("nodes = 5\nflow = 0:9:0:100:1").unwrap_err(),
            ScenarioError::Range("flow".into())
        );
    }
}
