//! Event tuples: an event is a typed, timestamped occurrence carrying a list
//! of typed attributes.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use chrono::NaiveDateTime;

use crate::error::{EngineError, Result};

/// The closed set of event kinds, plus an escape hatch for host-defined ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventType {
    Time,
    Spatial,
    Composite,
    Request,
    Notification,
    Internal,
    External,
    Fault,
    Service,
    Custom(String),
}

impl EventType {
    pub fn custom(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(EngineError::EmptyCustomEventType);
        }
        Ok(EventType::Custom(name))
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventType::Time => write!(f, "Time"),
            EventType::Spatial => write!(f, "Spatial"),
            EventType::Composite => write!(f, "Composite"),
            EventType::Request => write!(f, "Request"),
            EventType::Notification => write!(f, "Notification"),
            EventType::Internal => write!(f, "Internal"),
            EventType::External => write!(f, "External"),
            EventType::Fault => write!(f, "Fault"),
            EventType::Service => write!(f, "Service"),
            EventType::Custom(name) => write!(f, "{name}"),
        }
    }
}

impl FromStr for EventType {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Time" => EventType::Time,
            "Spatial" => EventType::Spatial,
            "Composite" => EventType::Composite,
            "Request" => EventType::Request,
            "Notification" => EventType::Notification,
            "Internal" => EventType::Internal,
            "External" => EventType::External,
            "Fault" => EventType::Fault,
            "Service" => EventType::Service,
            other => EventType::custom(other)?,
        })
    }
}

/// Data-type tag of an attribute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrTag {
    Guid,
    DateTime,
    Int,
    Bool,
    IpAddr,
    Duration,
    Text,
}

impl fmt::Display for AttrTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            AttrTag::Guid => "GUID",
            AttrTag::DateTime => "datetime",
            AttrTag::Int => "int",
            AttrTag::Bool => "bool",
            AttrTag::IpAddr => "string*ip_address",
            AttrTag::Duration => "time_t",
            AttrTag::Text => "string",
        };
        write!(f, "{label}")
    }
}

/// A typed attribute value. Each variant maps to exactly one data-type tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttributeValue {
    Guid(u128),
    DateTime(NaiveDateTime),
    Int(i64),
    Bool(bool),
    IpAddr(Ipv4Addr),
    /// Milliseconds.
    Duration(u64),
    Text(String),
}

impl AttributeValue {
    pub fn tag(&self) -> AttrTag {
        match self {
            AttributeValue::Guid(_) => AttrTag::Guid,
            AttributeValue::DateTime(_) => AttrTag::DateTime,
            AttributeValue::Int(_) => AttrTag::Int,
            AttributeValue::Bool(_) => AttrTag::Bool,
            AttributeValue::IpAddr(_) => AttrTag::IpAddr,
            AttributeValue::Duration(_) => AttrTag::Duration,
            AttributeValue::Text(_) => AttrTag::Text,
        }
    }

    pub fn text(s: impl Into<String>) -> Self {
        AttributeValue::Text(s.into())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            AttributeValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Parse dotted-quad or other textual representation back into a value
    /// of the given tag.
    pub fn parse(tag: AttrTag, s: &str) -> Option<Self> {
        match tag {
            AttrTag::Guid => s.parse().ok().map(AttributeValue::Guid),
            AttrTag::DateTime => NaiveDateTime::parse_from_str(s, DATETIME_FMT)
                .ok()
                .map(AttributeValue::DateTime),
            AttrTag::Int => s.parse().ok().map(AttributeValue::Int),
            AttrTag::Bool => s.parse().ok().map(AttributeValue::Bool),
            AttrTag::IpAddr => s.parse().ok().map(AttributeValue::IpAddr),
            AttrTag::Duration => s.parse().ok().map(AttributeValue::Duration),
            AttrTag::Text => Some(AttributeValue::Text(s.to_string())),
        }
    }
}

pub const DATETIME_FMT: &str = "%Y-%m-%d %H:%M:%S";

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Guid(g) => write!(f, "{g}"),
            AttributeValue::DateTime(dt) => write!(f, "{}", dt.format(DATETIME_FMT)),
            AttributeValue::Int(i) => write!(f, "{i}"),
            AttributeValue::Bool(b) => write!(f, "{b}"),
            AttributeValue::IpAddr(ip) => write!(f, "{ip}"),
            AttributeValue::Duration(ms) => write!(f, "{ms}"),
            AttributeValue::Text(t) => write!(f, "{t}"),
        }
    }
}

/// One (data type, parameter, value) attribute triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventAttribute {
    pub data_type: AttrTag,
    pub parameter: String,
    pub value: AttributeValue,
}

impl EventAttribute {
    pub fn new(parameter: impl Into<String>, value: AttributeValue) -> Self {
        EventAttribute {
            data_type: value.tag(),
            parameter: parameter.into(),
            value,
        }
    }

    /// Build with an explicit declared tag; fails when the value's variant
    /// does not match.
    pub fn declared(
        parameter: impl Into<String>,
        data_type: AttrTag,
        value: AttributeValue,
    ) -> Result<Self> {
        let parameter = parameter.into();
        if value.tag() != data_type {
            return Err(EngineError::AttributeTagMismatch {
                parameter,
                expected: data_type,
                actual: value.tag(),
            });
        }
        Ok(EventAttribute {
            data_type,
            parameter,
            value,
        })
    }
}

/// A classified event: identity, type, attributes, and where/when it occurred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub event_id: u128,
    pub event_type: EventType,
    pub attributes: Vec<EventAttribute>,
    /// Simulation time in milliseconds.
    pub occurred_at: u64,
    pub source_node: String,
}

impl Event {
    pub fn new(
        event_id: u128,
        event_type: EventType,
        attributes: Vec<EventAttribute>,
        occurred_at: u64,
        source_node: impl Into<String>,
    ) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for attr in &attributes {
            if !seen.insert(attr.parameter.as_str()) {
                return Err(EngineError::DuplicateAttribute(attr.parameter.clone()));
            }
        }
        Ok(Event {
            event_id,
            event_type,
            attributes,
            occurred_at,
            source_node: source_node.into(),
        })
    }

    pub fn attr(&self, name: &str) -> Option<&AttributeValue> {
        self.attributes
            .iter()
            .find(|a| a.parameter == name)
            .map(|a| &a.value)
    }
}

/// A host occurrence before classification: a named kind plus a field map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawOccurrence {
    pub kind: String,
    pub event_id: u128,
    pub occurred_at: u64,
    pub source_node: String,
    pub fields: Vec<(String, AttributeValue)>,
}

/// Declared shape of one occurrence kind.
#[derive(Debug, Clone)]
pub struct OccurrenceSchema {
    pub event_type: EventType,
    /// Declared field tags; fields not listed here take the tag of the value
    /// they arrive with.
    pub fields: BTreeMap<String, AttrTag>,
}

/// Attribute name synthesized from `RawOccurrence::event_id` during
/// classification.
pub const ATTR_EVENT_UNIQUE_ID: &str = "event_unique_id";
/// Attribute name synthesized from `RawOccurrence::occurred_at`.
pub const ATTR_OCCURRED_AT: &str = "occurred_at";

/// Maps occurrence kinds to event types and checks declared field tags.
#[derive(Debug, Clone, Default)]
pub struct Classifier {
    kinds: BTreeMap<String, OccurrenceSchema>,
}

impl Classifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, kind: impl Into<String>, schema: OccurrenceSchema) -> &mut Self {
        self.kinds.insert(kind.into(), schema);
        self
    }

    /// Split an occurrence into an event type and a typed attribute list.
    pub fn classify(&self, raw: &RawOccurrence) -> Result<Event> {
        let schema = self
            .kinds
            .get(&raw.kind)
            .ok_or_else(|| EngineError::UnknownOccurrenceKind(raw.kind.clone()))?;
        let mut attributes = Vec::with_capacity(raw.fields.len() + 2);
        attributes.push(EventAttribute::new(
            ATTR_EVENT_UNIQUE_ID,
            AttributeValue::Guid(raw.event_id),
        ));
        attributes.push(EventAttribute::new(
            ATTR_OCCURRED_AT,
            AttributeValue::DateTime(datetime_from_millis(raw.occurred_at)),
        ));
        for (name, value) in &raw.fields {
            match schema.fields.get(name) {
                Some(&tag) if tag != value.tag() => {
                    return Err(EngineError::TypeMismatch {
                        field: name.clone(),
                        expected: tag,
                        actual: value.tag(),
                    });
                }
                _ => attributes.push(EventAttribute::new(name.clone(), value.clone())),
            }
        }
        Event::new(
            raw.event_id,
            schema.event_type.clone(),
            attributes,
            raw.occurred_at,
            raw.source_node.clone(),
        )
    }
}

/// The field map an event was classified from, without the two synthesized
/// attributes. `classify` followed by this is the identity on the input map.
pub fn event_fields(event: &Event) -> Vec<(String, AttributeValue)> {
    event
        .attributes
        .iter()
        .filter(|a| a.parameter != ATTR_EVENT_UNIQUE_ID && a.parameter != ATTR_OCCURRED_AT)
        .map(|a| (a.parameter.clone(), a.value.clone()))
        .collect()
}

pub fn datetime_from_millis(ms: u64) -> NaiveDateTime {
    chrono::DateTime::from_timestamp_millis(ms as i64)
        .expect("simulation time in datetime range")
        .naive_utc()
}
