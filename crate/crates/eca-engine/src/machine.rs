//! The pentuple state machine (Σ, S, s₀, δ, F) describing node state
//! transitions driven by (event type, condition outcome) inputs.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{EngineError, Result};
use crate::event::EventType;

pub type TransitionKey = (String, EventType, bool);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcaStateMachine {
    alphabet: BTreeSet<EventType>,
    states: BTreeSet<String>,
    initial: String,
    transitions: BTreeMap<TransitionKey, String>,
    finals: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub next: String,
    pub is_final: bool,
}

impl EcaStateMachine {
    pub fn new(
        alphabet: impl IntoIterator<Item = EventType>,
        states: impl IntoIterator<Item = String>,
        initial: impl Into<String>,
        transitions: impl IntoIterator<Item = (TransitionKey, String)>,
        finals: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let alphabet: BTreeSet<_> = alphabet.into_iter().collect();
        let states: BTreeSet<_> = states.into_iter().collect();
        let initial = initial.into();
        let transitions: BTreeMap<_, _> = transitions.into_iter().collect();
        let finals: BTreeSet<_> = finals.into_iter().collect();

        if !states.contains(&initial) {
            return Err(EngineError::InvalidStateMachine(format!(
                "initial state `{initial}` not in S"
            )));
        }
        for f in &finals {
            if !states.contains(f) {
                return Err(EngineError::InvalidStateMachine(format!(
                    "final state `{f}` not in S"
                )));
            }
        }
        for ((from, event, _), to) in &transitions {
            if !states.contains(from) {
                return Err(EngineError::InvalidStateMachine(format!(
                    "transition source `{from}` not in S"
                )));
            }
            if !states.contains(to) {
                return Err(EngineError::InvalidStateMachine(format!(
                    "transition target `{to}` not in S"
                )));
            }
            if !alphabet.contains(event) {
                return Err(EngineError::InvalidStateMachine(format!(
                    "transition input `{event}` not in the alphabet"
                )));
            }
        }
        Ok(EcaStateMachine {
            alphabet,
            states,
            initial,
            transitions,
            finals,
        })
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn states(&self) -> &BTreeSet<String> {
        &self.states
    }

    pub fn alphabet(&self) -> &BTreeSet<EventType> {
        &self.alphabet
    }

    pub fn finals(&self) -> &BTreeSet<String> {
        &self.finals
    }

    pub fn transitions(&self) -> &BTreeMap<TransitionKey, String> {
        &self.transitions
    }

    /// δ(state, event type, condition outcome), plus whether the target is
    /// final.
    pub fn step(&self, state: &str, event_type: &EventType, cond_outcome: bool) -> Result<StepResult> {
        if !self.states.contains(state) {
            return Err(EngineError::StateNotInMachine(state.to_string()));
        }
        let key = (state.to_string(), event_type.clone(), cond_outcome);
        match self.transitions.get(&key) {
            Some(next) => Ok(StepResult {
                next: next.clone(),
                is_final: self.finals.contains(next),
            }),
            None => Err(EngineError::UndefinedTransition {
                state: state.to_string(),
                event: event_type.to_string(),
                outcome: cond_outcome,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> EcaStateMachine {
        EcaStateMachine::new(
            [EventType::Request],
            ["A".to_string(), "B".to_string()],
            "A",
            [
                (("A".to_string(), EventType::Request, true), "B".to_string()),
                (("B".to_string(), EventType::Request, true), "B".to_string()),
            ],
            ["B".to_string()],
        )
        .unwrap()
    }

    #[test]
    fn step_follows_delta() {
        let m = tiny();
        let r = m.step("A", &EventType::Request, true).unwrap();
        assert_eq!(r.next, "B");
        assert!(r.is_final);
    }

    #[test]
    fn unknown_state_is_a_domain_violation() {
        let m = tiny();
        assert_eq!(
            m.step("Z", &EventType::Request, true).unwrap_err(),
            EngineError::StateNotInMachine("Z".into())
        );
    }

    #[test]
    fn missing_transition_is_undefined() {
        let m = tiny();
        assert!(matches!(
            m.step("A", &EventType::Request, false).unwrap_err(),
            EngineError::UndefinedTransition { .. }
        ));
    }

    #[test]
    fn all_final_machine_reports_final_on_every_step() {
        let m = EcaStateMachine::new(
            [EventType::Request],
            ["A".to_string(), "B".to_string()],
            "A",
            [
                (("A".to_string(), EventType::Request, true), "B".to_string()),
                (("A".to_string(), EventType::Request, false), "A".to_string()),
                (("B".to_string(), EventType::Request, true), "A".to_string()),
                (("B".to_string(), EventType::Request, false), "B".to_string()),
            ],
            ["A".to_string(), "B".to_string()],
        )
        .unwrap();
        for state in ["A", "B"] {
            for outcome in [true, false] {
                assert!(m.step(state, &EventType::Request, outcome).unwrap().is_final);
            }
        }
    }

    #[test]
    fn construction_rejects_stray_states() {
        let err = EcaStateMachine::new(
            [EventType::Request],
            ["A".to_string()],
            "A",
            [(("A".to_string(), EventType::Request, true), "Z".to_string())],
            Vec::<String>::new(),
        )
        .unwrap_err();
        assert!(matches!(err, EngineError::InvalidStateMachine(_)));
    }
}
