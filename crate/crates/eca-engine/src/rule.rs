//! Rules, the rule registry, and the rule-firing pipeline: split the event,
//! apply the condition, make the runtime decision.

use std::collections::BTreeSet;

use crate::condition::{evaluate_condition, Condition, EvalContext};
use crate::error::{EngineError, Result};
use crate::event::{AttributeValue, Event, EventType};

/// A mutation step run when a rule's when-pattern matches, before the
/// condition is evaluated. Keeping "+=" effects here rather than inside
/// expressions keeps condition evaluation pure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrepStep {
    pub counter: String,
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Attribute(String),
    Literal(AttributeValue),
}

/// A named decision with parameter bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub name: String,
    pub bindings: Vec<(String, Binding)>,
}

/// The 1-tuple action side of a rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpec {
    pub action_id: String,
    pub event_ref: EventType,
    pub condition_result_label: String,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub rule_id: String,
    pub when: EventType,
    pub preparation: Vec<PrepStep>,
    pub condition: Condition,
    pub action: ActionSpec,
}

/// Decision and probe names the host recognizes. Rules resolve against this
/// vocabulary: decisions at registration, probes at freeze.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub decisions: BTreeSet<String>,
    pub probes: BTreeSet<String>,
}

impl Vocabulary {
    pub fn new<D, P>(decisions: D, probes: P) -> Self
    where
        D: IntoIterator,
        D::Item: Into<String>,
        P: IntoIterator,
        P::Item: Into<String>,
    {
        Vocabulary {
            decisions: decisions.into_iter().map(Into::into).collect(),
            probes: probes.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleHandle(pub usize);

/// Ordered rule set. Matching order equals registration order; immutable
/// after freeze and safely shareable across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleRegistry {
    vocab: Vocabulary,
    rules: Vec<Rule>,
    frozen: bool,
}

impl RuleRegistry {
    pub fn new(vocab: Vocabulary) -> Self {
        RuleRegistry {
            vocab,
            rules: Vec::new(),
            frozen: false,
        }
    }

    pub fn register_rule(&mut self, rule: Rule) -> Result<RuleHandle> {
        if self.frozen {
            return Err(EngineError::RegistryFrozen);
        }
        if self.rules.iter().any(|r| r.rule_id == rule.rule_id) {
            return Err(EngineError::DuplicateRuleId(rule.rule_id));
        }
        if !self.vocab.decisions.contains(&rule.action.decision.name) {
            return Err(EngineError::UnresolvedDecisionName(
                rule.action.decision.name,
            ));
        }
        self.rules.push(rule);
        Ok(RuleHandle(self.rules.len() - 1))
    }

    /// Validate probe references and seal the registry.
    pub fn freeze(&mut self) -> Result<()> {
        for rule in &self.rules {
            rule.condition
                .validate(&self.vocab.probes)
                .map_err(|e| EngineError::RuleFailed {
                    rule_id: rule.rule_id.clone(),
                    source: Box::new(e),
                })?;
        }
        self.frozen = true;
        Ok(())
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }
}

/// One fired rule: the decision with its arguments resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub rule_id: String,
    pub decision: String,
    pub args: Vec<(String, AttributeValue)>,
    pub result_label: String,
}

/// Run an event through the registry: for every rule whose when-pattern
/// matches, run its preparation steps, evaluate its condition, and collect
/// the decision when the condition holds. Decisions come back in
/// registration order.
pub fn process_event(
    event: &Event,
    registry: &RuleRegistry,
    ctx: &mut dyn EvalContext,
) -> Result<Vec<Firing>> {
    if !registry.frozen {
        return Err(EngineError::RegistryNotFrozen);
    }
    let mut firings = Vec::new();
    for rule in &registry.rules {
        if rule.when != event.event_type {
            continue;
        }
        for step in &rule.preparation {
            ctx.bump_counter(&step.counter, step.delta);
        }
        fire_if_holds(rule, event, ctx, &mut firings)?;
    }
    Ok(firings)
}

/// Same matching and firing as [`process_event`] but with preparation steps
/// disabled; the shared borrow guarantees the context is never mutated.
pub fn process_event_readonly(
    event: &Event,
    registry: &RuleRegistry,
    ctx: &dyn EvalContext,
) -> Result<Vec<Firing>> {
    if !registry.frozen {
        return Err(EngineError::RegistryNotFrozen);
    }
    let mut firings = Vec::new();
    for rule in &registry.rules {
        if rule.when != event.event_type {
            continue;
        }
        fire_if_holds(rule, event, ctx, &mut firings)?;
    }
    Ok(firings)
}

fn fire_if_holds(
    rule: &Rule,
    event: &Event,
    ctx: &dyn EvalContext,
    firings: &mut Vec<Firing>,
) -> Result<()> {
    let outcome = evaluate_condition(&rule.condition, event, ctx).map_err(|e| {
        EngineError::RuleFailed {
            rule_id: rule.rule_id.clone(),
            source: Box::new(e),
        }
    })?;
    if !outcome.holds {
        return Ok(());
    }
    let mut args = Vec::with_capacity(rule.action.decision.bindings.len());
    for (param, binding) in &rule.action.decision.bindings {
        let value = match binding {
            Binding::Literal(v) => v.clone(),
            Binding::Attribute(name) => {
                event
                    .attr(name)
                    .cloned()
                    .ok_or_else(|| EngineError::RuleFailed {
                        rule_id: rule.rule_id.clone(),
                        source: Box::new(EngineError::UnresolvedReference(name.clone())),
                    })?
            }
        };
        args.push((param.clone(), value));
    }
    firings.push(Firing {
        rule_id: rule.rule_id.clone(),
        decision: rule.action.decision.name.clone(),
        args,
        result_label: outcome.result_label.unwrap_or_default(),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::{CompareOp, ConditionExpr, EventDetails, MapContext};
    use crate::event::EventAttribute;

    fn simple_rule(id: &str, decision: &str) -> Rule {
        Rule {
            rule_id: id.into(),
            when: EventType::Request,
            preparation: vec![],
            condition: Condition {
                condition_id: format!("{id}.C"),
                event_details: EventDetails {
                    event_type: EventType::Request,
                    attributes: vec![],
                },
                expr: ConditionExpr::probe_true("always"),
                result_label: format!("{id}.result"),
            },
            action: ActionSpec {
                action_id: format!("{id}.A"),
                event_ref: EventType::Request,
                condition_result_label: format!("{id}.result"),
                decision: Decision {
                    name: decision.into(),
                    bindings: vec![],
                },
            },
        }
    }

    fn vocab() -> Vocabulary {
        Vocabulary::new(["Broadcast", "Reply"], ["always"])
    }

    fn request_event() -> Event {
        Event::new(
            9,
            EventType::Request,
            vec![EventAttribute::new("packet_type", AttributeValue::Int(1))],
            0,
            "10.32.21.83",
        )
        .unwrap()
    }

    #[test]
    fn register_appends_in_order() {
        let mut reg = RuleRegistry::new(vocab());
        let h = reg.register_rule(simple_rule("E1", "Broadcast")).unwrap();
        assert_eq!(h, RuleHandle(0));
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn duplicate_rule_id_rejected() {
        let mut reg = RuleRegistry::new(vocab());
        reg.register_rule(simple_rule("E1", "Broadcast")).unwrap();
        assert_eq!(
            reg.register_rule(simple_rule("E1", "Reply")).unwrap_err(),
            EngineError::DuplicateRuleId("E1".into())
        );
    }

    #[test]
    fn register_after_freeze_rejected() {
        let mut reg = RuleRegistry::new(vocab());
        reg.freeze().unwrap();
        assert_eq!(
            reg.register_rule(simple_rule("E1", "Broadcast"))
                .unwrap_err(),
            EngineError::RegistryFrozen
        );
    }

    #[test]
    fn unknown_decision_rejected_at_registration() {
        let mut reg = RuleRegistry::new(vocab());
        assert_eq!(
            reg.register_rule(simple_rule("E1", "Nope")).unwrap_err(),
            EngineError::UnresolvedDecisionName("Nope".into())
        );
    }

    #[test]
    fn unknown_probe_rejected_at_freeze() {
        let mut reg = RuleRegistry::new(Vocabulary::new(["Broadcast"], Vec::<String>::new()));
        reg.register_rule(simple_rule("E1", "Broadcast")).unwrap();
        assert!(matches!(
            reg.freeze().unwrap_err(),
            EngineError::RuleFailed { .. }
        ));
    }

    #[test]
    fn empty_registry_yields_no_decisions() {
        let mut reg = RuleRegistry::new(vocab());
        reg.freeze().unwrap();
        let mut ctx = MapContext::default();
        assert!(process_event(&request_event(), &reg, &mut ctx)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unfrozen_registry_cannot_process() {
        let reg = RuleRegistry::new(vocab());
        let mut ctx = MapContext::default();
        assert_eq!(
            process_event(&request_event(), &reg, &mut ctx).unwrap_err(),
            EngineError::RegistryNotFrozen
        );
    }

    #[test]
    fn preparation_runs_before_condition() {
        let mut rule = simple_rule("E1", "Broadcast");
        rule.preparation.push(PrepStep {
            counter: "node_seq".into(),
            delta: 1,
        });
        let mut reg = RuleRegistry::new(vocab());
        reg.register_rule(rule).unwrap();
        reg.freeze().unwrap();
        let mut ctx = MapContext::default().with_probe("always", AttributeValue::Bool(true));
        let firings = process_event(&request_event(), &reg, &mut ctx).unwrap();
        assert_eq!(firings.len(), 1);
        assert_eq!(firings[0].decision, "Broadcast");
        assert_eq!(ctx.counters.get("node_seq"), Some(&1));
    }

    #[test]
    fn two_matching_rules_fire_in_registration_order() {
        // A link-break style event handled by two rules: invalidate first,
        // then list the affected nodes.
        let mk = |id: &str, name: &str| {
            let mut r = simple_rule(id, name);
            r.when = EventType::Notification;
            r
        };
        let mut reg = RuleRegistry::new(Vocabulary::new(
            ["InvalidateRoutes", "ListAffected"],
            ["always"],
        ));
        reg.register_rule(mk("E3a", "InvalidateRoutes")).unwrap();
        reg.register_rule(mk("E3b", "ListAffected")).unwrap();
        reg.freeze().unwrap();
        let event = Event::new(25, EventType::Notification, vec![], 0, "10.32.21.51").unwrap();
        let mut ctx = MapContext::default().with_probe("always", AttributeValue::Bool(true));
        let firings = process_event(&event, &reg, &mut ctx).unwrap();
        let names: Vec<_> = firings.iter().map(|f| f.decision.as_str()).collect();
        assert_eq!(names, ["InvalidateRoutes", "ListAffected"]);
    }

    #[test]
    fn error_is_tagged_with_rule_id() {
        let mut rule = simple_rule("E9", "Broadcast");
        rule.condition.expr =
            ConditionExpr::compare("missing", CompareOp::Eq, AttributeValue::Int(1));
        rule.condition.event_details.attributes = vec!["missing".into()];
        let mut reg = RuleRegistry::new(vocab());
        reg.register_rule(rule).unwrap();
        reg.freeze().unwrap();
        let mut ctx = MapContext::default();
        match process_event(&request_event(), &reg, &mut ctx).unwrap_err() {
            EngineError::RuleFailed { rule_id, .. } => assert_eq!(rule_id, "E9"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
