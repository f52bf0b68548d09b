//! Smart-museum visitor assistant: context readings flow through the same
//! event-condition-action engine as the routing stack, and route-producing
//! decisions are resolved on a fixed floor graph by breadth-first search.

use std::collections::BTreeMap;

use eca_engine::{
    parse_rules, process_event, AttrTag, AttributeValue, Classifier, EngineError, MapContext,
    OccurrenceSchema, RawOccurrence, RuleRegistry, Vocabulary,
};
use thiserror::Error;

pub const MUSEUM_RULES: &str = include_str!("../rules/museum.rules");

#[derive(Debug, Error)]
pub enum MuseumError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("no path from `{0}` to `{1}`")]
    NoPath(String, String),
}

pub fn museum_vocabulary() -> Vocabulary {
    Vocabulary::new(
        [
            "RouteToExhibit",
            "RouteToRestaurant",
            "SwitchOnAc",
            "RouteToHospital",
            "ShowExhibitDetails",
        ],
        ["user_is_new"],
    )
}

pub fn museum_ruleset() -> RuleRegistry {
    parse_rules(MUSEUM_RULES, museum_vocabulary()).expect("built-in museum rules parse")
}

/// Fixed museum floor graph: 12 locations, undirected corridors.
pub struct FloorPlan {
    names: Vec<&'static str>,
    adj: Vec<Vec<usize>>,
}

pub fn floor_plan() -> FloorPlan {
    let names = vec![
        "entrance",
        "lobby",
        "east_corridor",
        "science_hall",
        "biology_exhibit",
        "physics_exhibit",
        "history_hall",
        "art_hall",
        "restaurant",
        "cafe",
        "first_aid",
        "gift_shop",
    ];
    let edges = [
        (0, 1),  // entrance - lobby
        (1, 2),  // lobby - east_corridor
        (1, 6),  // lobby - history_hall
        (1, 10), // lobby - first_aid
        (1, 11), // lobby - gift_shop
        (2, 3),  // east_corridor - science_hall
        (3, 4),  // science_hall - biology_exhibit
        (3, 5),  // science_hall - physics_exhibit
        (2, 8),  // east_corridor - restaurant
        (8, 9),  // restaurant - cafe
        (6, 7),  // history_hall - art_hall
        (7, 9),  // art_hall - cafe
    ];
    let mut adj = vec![Vec::new(); names.len()];
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    FloorPlan { names, adj }
}

impl FloorPlan {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| *n == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    /// Breadth-first distances from `from`, in hops.
    pub fn distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.names.len()];
        dist[from] = Some(0);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest path by hops; ties broken by lowest node index, so the route
    /// text is deterministic.
    pub fn route(&self, from: &str, to: &str) -> Result<Vec<&'static str>, MuseumError> {
        let from_idx = self
            .index(from)
            .ok_or_else(|| MuseumError::UnknownLocation(from.into()))?;
        let to_idx = self
            .index(to)
            .ok_or_else(|| MuseumError::UnknownLocation(to.into()))?;
        let mut prev = vec![None; self.names.len()];
        let mut seen = vec![false; self.names.len()];
        seen[from_idx] = true;
        let mut queue = std::collections::VecDeque::from([from_idx]);
        while let Some(u) = queue.pop_front() {
            let mut next: Vec<usize> = self.adj[u].clone();
            next.sort_unstable();
            for v in next {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if !seen[to_idx] {
            return Err(MuseumError::NoPath(from.into(), to.into()));
        }
        let mut path = vec![to_idx];
        while let Some(p) = prev[*path.last().unwrap()] {
            path.push(p);
        }
        path.reverse();
        Ok(path.into_iter().map(|i| self.names[i]).collect())
    }
}

/// Everything the assistant knows about a visitor at one point in time.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitorContext {
    pub location: String,
    pub interest: String,
    pub preference: String,
    /// Minutes past midnight on the visitor's clock.
    pub minute_of_day: i64,
    pub temperature_c: i64,
    pub bp_systolic: i64,
    pub bp_diastolic: i64,
    /// Seconds spent in front of the current exhibit.
    pub dwell_s: i64,
    pub exhibit: String,
    pub returning_visitor: bool,
}

impl Default for VisitorContext {
    fn default() -> Self {
        VisitorContext {
            location: "entrance".into(),
            interest: String::new(),
            preference: String::new(),
            minute_of_day: 600,
            temperature_c: 24,
            bp_systolic: 120,
            bp_diastolic: 80,
            dwell_s: 0,
            exhibit: String::new(),
            returning_visitor: false,
        }
    }
}

/// What kind of context change arrived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    /// Visitor asked where to go next.
    RouteQuery,
    /// Periodic clock reading.
    ClockTick,
    /// Ambient sensor report.
    ClimateReport,
    /// Wearable health reading.
    HealthReport,
    /// Positioning system dwell report.
    DwellReport,
}

impl Signal {
    fn kind(self) -> &'static str {
        match self {
            Signal::RouteQuery => "route_query",
            Signal::ClockTick => "clock_tick",
            Signal::ClimateReport => "climate_report",
            Signal::HealthReport => "health_report",
            Signal::DwellReport => "dwell_report",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reading {
    pub at_ms: u64,
    pub signal: Signal,
    pub ctx: VisitorContext,
}

/// One decision the assistant produced, with its resolved effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssistAction {
    pub at_ms: u64,
    pub rule_id: String,
    pub decision: String,
    pub detail: String,
}

fn museum_classifier() -> Classifier {
    let mut c = Classifier::new();
    let schema = |ty: &str, fields: &[(&str, AttrTag)]| OccurrenceSchema {
        event_type: ty.parse().unwrap(),
        fields: fields
            .iter()
            .map(|(n, t)| (n.to_string(), *t))
            .collect::<BTreeMap<_, _>>(),
    };
    c.declare(
        "route_query",
        schema(
            "Request",
            &[("interest", AttrTag::Text), ("preference", AttrTag::Text)],
        ),
    );
    c.declare(
        "clock_tick",
        schema(
            "Time",
            &[
                ("preference", AttrTag::Text),
                ("minute_of_day", AttrTag::Int),
            ],
        ),
    );
    c.declare(
        "climate_report",
        schema("Notification", &[("temperature_c", AttrTag::Int)]),
    );
    c.declare(
        "health_report",
        schema(
            "Fault",
            &[
                ("bp_systolic", AttrTag::Int),
                ("bp_diastolic", AttrTag::Int),
            ],
        ),
    );
    c.declare(
        "dwell_report",
        schema(
            "Spatial",
            &[("dwell_s", AttrTag::Int), ("exhibit", AttrTag::Text)],
        ),
    );
    c
}

fn occurrence_fields(signal: Signal, ctx: &VisitorContext) -> Vec<(String, AttributeValue)> {
    use AttributeValue as V;
    match signal {
        Signal::RouteQuery => vec![
            ("interest".into(), V::Text(ctx.interest.clone())),
            ("preference".into(), V::Text(ctx.preference.clone())),
        ],
        Signal::ClockTick => vec![
            ("preference".into(), V::Text(ctx.preference.clone())),
            ("minute_of_day".into(), V::Int(ctx.minute_of_day)),
        ],
        Signal::ClimateReport => vec![("temperature_c".into(), V::Int(ctx.temperature_c))],
        Signal::HealthReport => vec![
            ("bp_systolic".into(), V::Int(ctx.bp_systolic)),
            ("bp_diastolic".into(), V::Int(ctx.bp_diastolic)),
        ],
        Signal::DwellReport => vec![
            ("dwell_s".into(), V::Int(ctx.dwell_s)),
            ("exhibit".into(), V::Text(ctx.exhibit.clone())),
        ],
    }
}

fn arg_text(args: &[(String, AttributeValue)], name: &str) -> Option<String> {
    args.iter().find(|(n, _)| n == name).map(|(_, v)| match v {
        AttributeValue::Text(s) => s.clone(),
        other => format!("{other:?}"),
    })
}

/// Feed a stream of readings through the rule engine and resolve each firing
/// into a concrete action (a route on the floor plan, a device command, or a
/// content push).
pub fn run_assistant(stream: &[Reading]) -> Result<Vec<AssistAction>, MuseumError> {
    let registry = museum_ruleset();
    let classifier = museum_classifier();
    let plan = floor_plan();
    let mut actions = Vec::new();
    for (idx, reading) in stream.iter().enumerate() {
        let raw = RawOccurrence {
            kind: reading.signal.kind().into(),
            event_id: idx as u128 + 1,
            occurred_at: reading.at_ms,
            source_node: "assistant".into(),
            fields: occurrence_fields(reading.signal, &reading.ctx),
        };
        let event = classifier.classify(&raw)?;
        let mut ctx = MapContext::default().with_probe(
            "user_is_new",
            AttributeValue::Bool(!reading.ctx.returning_visitor),
        );
        for firing in process_event(&event, &registry, &mut ctx)? {
            let detail = match firing.decision.as_str() {
                "RouteToExhibit" | "RouteToRestaurant" | "RouteToHospital" => {
                    let target = arg_text(&firing.args, "target")
                        .ok_or_else(|| MuseumError::UnknownLocation("<missing>".into()))?;
                    plan.route(&reading.ctx.location, &target)?.join(" -> ")
                }
                "SwitchOnAc" => "ac=on".to_string(),
                "ShowExhibitDetails" => {
                    format!("exhibit={}", arg_text(&firing.args, "exhibit").unwrap_or_default())
                }
                other => other.to_string(),
            };
            actions.push(AssistAction {
                at_ms: reading.at_ms,
                rule_id: firing.rule_id,
                decision: firing.decision,
                detail,
            });
        }
    }
    Ok(actions)
}

/// Scripted demo day: seven context readings that exercise every rule,
/// including the near-miss side of both numeric thresholds.
pub fn museum_demo_stream() -> Vec<Reading> {
    let base = VisitorContext::default;
    vec![
        Reading {
            at_ms: 0,
            signal: Signal::RouteQuery,
            ctx: VisitorContext {
                interest: "Science".into(),
                preference: "Biology".into(),
                ..base()
            },
        },
        Reading {
            at_ms: 60_000,
            signal: Signal::ClimateReport,
            ctx: VisitorContext {
                temperature_c: 29,
                ..base()
            },
        },
        Reading {
            at_ms: 120_000,
            signal: Signal::ClimateReport,
            ctx: VisitorContext {
                temperature_c: 31,
                ..base()
            },
        },
        Reading {
            at_ms: 180_000,
            signal: Signal::HealthReport,
            ctx: VisitorContext {
                bp_systolic: 95,
                bp_diastolic: 65,
                ..base()
            },
        },
        Reading {
            at_ms: 240_000,
            signal: Signal::HealthReport,
            ctx: VisitorContext {
                bp_systolic: 85,
                bp_diastolic: 55,
                location: "history_hall".into(),
                ..base()
            },
        },
        Reading {
            at_ms: 300_000,
            signal: Signal::ClockTick,
            ctx: VisitorContext {
                preference: "North-Indian".into(),
                minute_of_day: 810,
                ..base()
            },
        },
        Reading {
            at_ms: 360_000,
            signal: Signal::DwellReport,
            ctx: VisitorContext {
                dwell_s: 300,
                exhibit: "tesla_coil".into(),
                returning_visitor: false,
                ..base()
            },
        },
    ]
}
