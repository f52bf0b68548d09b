//! General Event-Condition-Action rule engine: typed events, pure condition
//! evaluation, an ordered rule registry, and the pentuple state machine.

pub mod condition;
pub mod dsl;
pub mod error;
pub mod event;
pub mod machine;
pub mod rule;

pub use condition::{
    evaluate_condition, ArgRef, CompareOp, Condition, ConditionExpr, ConditionOutcome,
    EvalContext, EventDetails, MapContext, NullContext,
};
pub use dsl::{parse_rules, DslError, DslResult};
pub use error::{EngineError, Result};
pub use event::{
    datetime_from_millis, event_fields, AttrTag, AttributeValue, Classifier, Event,
    EventAttribute, EventType, OccurrenceSchema, RawOccurrence,
};
pub use machine::{EcaStateMachine, StepResult};
pub use rule::{
    process_event, process_event_readonly, ActionSpec, Binding, Decision, Firing, PrepStep, Rule,
    RuleHandle, RuleRegistry, Vocabulary,
};
