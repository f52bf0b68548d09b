use thiserror::Error;

use crate::event::AttrTag;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("duplicate rule id `{0}`")]
    DuplicateRuleId(String),
    #[error("registry is frozen")]
    RegistryFrozen,
    #[error("registry must be frozen before events can be processed")]
    RegistryNotFrozen,
    #[error("decision `{0}` is not in the action vocabulary")]
    UnresolvedDecisionName(String),
    #[error("probe `{0}` is not registered")]
    UnresolvedProbe(String),
    #[error("unknown occurrence kind `{0}`")]
    UnknownOccurrenceKind(String),
    #[error("field `{field}` declared as {expected} but value is {actual}")]
    TypeMismatch {
        field: String,
        expected: AttrTag,
        actual: AttrTag,
    },
    #[error("unresolved reference `{0}`")]
    UnresolvedReference(String),
    #[error("cannot order {left} against {right}")]
    IncomparableTypes { left: AttrTag, right: AttrTag },
    #[error("TEST operator requires a probe argument, got attribute `{0}`")]
    TestNeedsProbe(String),
    #[error("TEST operand must be a boolean")]
    TestOperandNotBool,
    #[error("custom event type name must be non-empty")]
    EmptyCustomEventType,
    #[error("attribute `{parameter}` carries {actual} but is declared {expected}")]
    AttributeTagMismatch {
        parameter: String,
        expected: AttrTag,
        actual: AttrTag,
    },
    #[error("attribute `{0}` appears more than once")]
    DuplicateAttribute(String),
    #[error("condition `{condition_id}` references `{name}` outside its event details")]
    UndeclaredAttribute { condition_id: String, name: String },
    #[error("rule `{rule_id}` failed: {source}")]
    RuleFailed {
        rule_id: String,
        #[source]
        source: Box<EngineError>,
    },
    #[error("state `{0}` is not in the machine's state set")]
    StateNotInMachine(String),
    #[error("no transition from `{state}` on ({event}, {outcome})")]
    UndefinedTransition {
        state: String,
        event: String,
        outcome: bool,
    },
    #[error("invalid state machine: {0}")]
    InvalidStateMachine(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
