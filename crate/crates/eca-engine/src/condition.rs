//! Condition tuples and their pure evaluator.

use std::collections::BTreeSet;

use crate::error::{EngineError, Result};
use crate::event::{AttributeValue, Event, EventType};

/// Where a comparison argument comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgRef {
    /// Named attribute of the event under evaluation.
    Attribute(String),
    /// Host-supplied context probe.
    Probe(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// The "?:" operator: evaluates a probe and checks it against the
    /// boolean operand.
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConditionExpr {
    Compare {
        arg: ArgRef,
        op: CompareOp,
        operand: AttributeValue,
    },
    And(Box<ConditionExpr>, Box<ConditionExpr>),
    Or(Box<ConditionExpr>, Box<ConditionExpr>),
    Not(Box<ConditionExpr>),
}

impl ConditionExpr {
    pub fn and(self, other: ConditionExpr) -> ConditionExpr {
        ConditionExpr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: ConditionExpr) -> ConditionExpr {
        ConditionExpr::Or(Box::new(self), Box::new(other))
    }

    pub fn not(self) -> ConditionExpr {
        ConditionExpr::Not(Box::new(self))
    }

    pub fn compare(attr: impl Into<String>, op: CompareOp, operand: AttributeValue) -> Self {
        ConditionExpr::Compare {
            arg: ArgRef::Attribute(attr.into()),
            op,
            operand,
        }
    }

    /// `EXISTS(probe)`: probe must evaluate to true.
    pub fn probe_true(probe: impl Into<String>) -> Self {
        ConditionExpr::Compare {
            arg: ArgRef::Probe(probe.into()),
            op: CompareOp::Test,
            operand: AttributeValue::Bool(true),
        }
    }

    /// Probe tested against an explicit expected boolean.
    pub fn probe_is(probe: impl Into<String>, expected: bool) -> Self {
        ConditionExpr::Compare {
            arg: ArgRef::Probe(probe.into()),
            op: CompareOp::Test,
            operand: AttributeValue::Bool(expected),
        }
    }

    fn visit_refs<'a>(&'a self, f: &mut impl FnMut(&'a ArgRef, CompareOp)) {
        match self {
            ConditionExpr::Compare { arg, op, .. } => f(arg, *op),
            ConditionExpr::And(l, r) | ConditionExpr::Or(l, r) => {
                l.visit_refs(f);
                r.visit_refs(f);
            }
            ConditionExpr::Not(inner) => inner.visit_refs(f),
        }
    }

    /// All attribute names referenced anywhere in the tree.
    pub fn attribute_refs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_refs(&mut |arg, _| {
            if let ArgRef::Attribute(name) = arg {
                out.insert(name.clone());
            }
        });
        out
    }

    /// All probe names referenced anywhere in the tree.
    pub fn probe_refs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_refs(&mut |arg, _| {
            if let ArgRef::Probe(name) = arg {
                out.insert(name.clone());
            }
        });
        out
    }
}

/// Event-type pattern plus the attribute names a condition may reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDetails {
    pub event_type: EventType,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub condition_id: String,
    pub event_details: EventDetails,
    pub expr: ConditionExpr,
    pub result_label: String,
}

impl Condition {
    /// Structural checks performed at registry freeze: attribute references
    /// must be declared in the event details, probe references must be in the
    /// registered probe set, and TEST arguments must be probes.
    pub fn validate(&self, probes: &BTreeSet<String>) -> Result<()> {
        let declared: BTreeSet<&str> = self
            .event_details
            .attributes
            .iter()
            .map(|s| s.as_str())
            .collect();
        let mut err = None;
        self.expr.visit_refs(&mut |arg, op| {
            if err.is_some() {
                return;
            }
            match arg {
                ArgRef::Attribute(name) => {
                    if op == CompareOp::Test {
                        err = Some(EngineError::TestNeedsProbe(name.clone()));
                    } else if !declared.contains(name.as_str()) {
                        err = Some(EngineError::UndeclaredAttribute {
                            condition_id: self.condition_id.clone(),
                            name: name.clone(),
                        });
                    }
                }
                ArgRef::Probe(name) => {
                    if !probes.contains(name) {
                        err = Some(EngineError::UnresolvedProbe(name.clone()));
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Host-supplied evaluation context: named probes plus named counters the
/// preparation steps may bump. Probe lookup is read-only.
pub trait EvalContext {
    fn probe(&self, name: &str) -> Option<AttributeValue>;
    fn bump_counter(&mut self, name: &str, delta: i64);
}

/// Context with no probes and no counters.
pub struct NullContext;

impl EvalContext for NullContext {
    fn probe(&self, _name: &str) -> Option<AttributeValue> {
        None
    }
    fn bump_counter(&mut self, _name: &str, _delta: i64) {}
}

/// Plain map-backed context, mostly for tests and the museum demo.
#[derive(Debug, Default, Clone)]
pub struct MapContext {
    pub probes: std::collections::BTreeMap<String, AttributeValue>,
    pub counters: std::collections::BTreeMap<String, i64>,
}

impl MapContext {
    pub fn with_probe(mut self, name: impl Into<String>, value: AttributeValue) -> Self {
        self.probes.insert(name.into(), value);
        self
    }
}

impl EvalContext for MapContext {
    fn probe(&self, name: &str) -> Option<AttributeValue> {
        self.probes.get(name).cloned()
    }
    fn bump_counter(&mut self, name: &str, delta: i64) {
        *self.counters.entry(name.to_string()).or_insert(0) += delta;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionOutcome {
    pub holds: bool,
    /// The condition's result label, present when the condition holds.
    pub result_label: Option<String>,
}

/// Evaluate a condition against an event and a context. Never mutates the
/// context (enforced by the shared borrow).
pub fn evaluate_condition(
    cond: &Condition,
    event: &Event,
    ctx: &dyn EvalContext,
) -> Result<ConditionOutcome> {
    let holds = eval_expr(&cond.expr, event, ctx)?;
    Ok(ConditionOutcome {
        holds,
        result_label: holds.then(|| cond.result_label.clone()),
    })
}

pub fn eval_expr(expr: &ConditionExpr, event: &Event, ctx: &dyn EvalContext) -> Result<bool> {
    match expr {
        ConditionExpr::And(l, r) => Ok(eval_expr(l, event, ctx)? && eval_expr(r, event, ctx)?),
        ConditionExpr::Or(l, r) => Ok(eval_expr(l, event, ctx)? || eval_expr(r, event, ctx)?),
        ConditionExpr::Not(inner) => Ok(!eval_expr(inner, event, ctx)?),
        ConditionExpr::Compare { arg, op, operand } => {
            let value = resolve(arg, event, ctx)?;
            if *op == CompareOp::Test {
                if let ArgRef::Attribute(name) = arg {
                    return Err(EngineError::TestNeedsProbe(name.clone()));
                }
                let probed = value.as_bool().ok_or(EngineError::TestOperandNotBool)?;
                let expected = operand.as_bool().ok_or(EngineError::TestOperandNotBool)?;
                return Ok(probed == expected);
            }
            compare(&value, *op, operand)
        }
    }
}

fn resolve(arg: &ArgRef, event: &Event, ctx: &dyn EvalContext) -> Result<AttributeValue> {
    match arg {
        ArgRef::Attribute(name) => event
            .attr(name)
            .cloned()
            .ok_or_else(|| EngineError::UnresolvedReference(name.clone())),
        ArgRef::Probe(name) => ctx
            .probe(name)
            .ok_or_else(|| EngineError::UnresolvedReference(name.clone())),
    }
}

fn compare(left: &AttributeValue, op: CompareOp, right: &AttributeValue) -> Result<bool> {
    use AttributeValue as V;
    if left.tag() != right.tag() {
        return Err(EngineError::IncomparableTypes {
            left: left.tag(),
            right: right.tag(),
        });
    }
    match op {
        CompareOp::Eq => return Ok(left == right),
        CompareOp::Ne => return Ok(left != right),
        _ => {}
    }
    let ordering = match (left, right) {
        (V::Int(a), V::Int(b)) => a.cmp(b),
        (V::Duration(a), V::Duration(b)) => a.cmp(b),
        (V::DateTime(a), V::DateTime(b)) => a.cmp(b),
        _ => {
            return Err(EngineError::IncomparableTypes {
                left: left.tag(),
                right: right.tag(),
            })
        }
    };
    Ok(match op {
        CompareOp::Lt => ordering.is_lt(),
        CompareOp::Le => ordering.is_le(),
        CompareOp::Gt => ordering.is_gt(),
        CompareOp::Ge => ordering.is_ge(),
        CompareOp::Eq | CompareOp::Ne | CompareOp::Test => unreachable!(),
    })
}
