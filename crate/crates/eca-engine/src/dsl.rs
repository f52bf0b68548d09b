//! Line-oriented rule file format:
//!
//! ```text
//! RULE <id> WHEN <event-type> [PREP <name> += <int>]* IF <expr> THEN <decision>(<arg>=<attr-or-literal>, ...)
//! ```
//!
//! `<expr>` uses attribute names, literals, `== != < <= > >= && || !` and
//! `EXISTS(<probe>)` for the "?:" test operator. `#` starts a comment.

use std::net::Ipv4Addr;
use std::str::FromStr;

use thiserror::Error;

use crate::condition::{CompareOp, Condition, ConditionExpr, EventDetails};
use crate::error::EngineError;
use crate::event::{AttributeValue, EventType};
use crate::rule::{ActionSpec, Binding, Decision, PrepStep, Rule, RuleRegistry, Vocabulary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub type DslResult<T> = Result<T, DslError>;

/// Parse a rule file into a frozen registry. Decision and probe names are
/// resolved against the vocabulary before the registry is handed back.
pub fn parse_rules(text: &str, vocab: Vocabulary) -> DslResult<RuleRegistry> {
    let mut registry = RuleRegistry::new(vocab);
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let rule = parse_rule_line(line, line_no)?;
        registry.register_rule(rule)?;
    }
    registry.freeze().map_err(flatten_freeze_error)?;
    Ok(registry)
}

// Freeze wraps per-rule problems in RuleFailed; surface the inner probe
// error directly so callers see UnresolvedProbe.
fn flatten_freeze_error(err: EngineError) -> DslError {
    match err {
        EngineError::RuleFailed { source, .. } => DslError::Engine(*source),
        other => DslError::Engine(other),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Int(i64),
    Str(String),
    Ip(Ipv4Addr),
    Op(&'static str),
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "{s}"),
            Token::Int(i) => write!(f, "{i}"),
            Token::Str(s) => write!(f, "\"{s}\""),
            Token::Ip(ip) => write!(f, "{ip}"),
            Token::Op(op) => write!(f, "{op}"),
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn err<T>(&self, msg: impl Into<String>) -> DslResult<T> {
        Err(DslError::Syntax {
            line: self.line,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_op(&mut self, op: &str) -> DslResult<()> {
        match self.next() {
            Some(Token::Op(o)) if o == op => Ok(()),
            Some(t) => self.err(format!("expected `{op}`, got `{t}`")),
            None => self.err(format!("expected `{op}`, got end of line")),
        }
    }

    fn expect_ident(&mut self, what: &str) -> DslResult<String> {
        match self.next() {
            Some(Token::Ident(s)) => Ok(s),
            Some(t) => self.err(format!("expected {what}, got `{t}`")),
            None => self.err(format!("expected {what}, got end of line")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> DslResult<()> {
        match self.next() {
            Some(Token::Ident(s)) if s == kw => Ok(()),
            Some(t) => self.err(format!("expected `{kw}`, got `{t}`")),
            None => self.err(format!("expected `{kw}`, got end of line")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Ident(s)) if s == kw)
    }
}

fn tokenize(line: &str, line_no: usize) -> DslResult<Vec<Token>> {
    let mut tokens = Vec::new();
    let bytes: Vec<char> = line.chars().collect();
    let mut i = 0;
    let syntax = |msg: String| DslError::Syntax { line: line_no, msg };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j] != '"' {
                j += 1;
            }
            if j == bytes.len() {
                return Err(syntax("unterminated string literal".into()));
            }
            tokens.push(Token::Str(bytes[start..j].iter().collect()));
            i = j + 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && bytes.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                i += 1;
            }
            let text: String = bytes[start..i].iter().collect();
            if text.contains('.') {
                let ip = text
                    .parse::<Ipv4Addr>()
                    .map_err(|_| syntax(format!("bad address literal `{text}`")))?;
                tokens.push(Token::Ip(ip));
            } else {
                let n = text
                    .parse::<i64>()
                    .map_err(|_| syntax(format!("bad integer `{text}`")))?;
                tokens.push(Token::Int(n));
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            tokens.push(Token::Ident(bytes[start..i].iter().collect()));
            continue;
        }
        let two: String = bytes[i..bytes.len().min(i + 2)].iter().collect();
        let op = match two.as_str() {
            "==" | "!=" | "<=" | ">=" | "&&" | "||" | "+=" => {
                i += 2;
                match two.as_str() {
                    "==" => "==",
                    "!=" => "!=",
                    "<=" => "<=",
                    ">=" => ">=",
                    "&&" => "&&",
                    "||" => "||",
                    _ => "+=",
                }
            }
            _ => {
                i += 1;
                match c {
                    '<' => "<",
                    '>' => ">",
                    '!' => "!",
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    '=' => "=",
                    _ => return Err(syntax(format!("unexpected character `{c}`"))),
                }
            }
        };
        tokens.push(Token::Op(op));
    }
    Ok(tokens)
}

fn parse_rule_line(line: &str, line_no: usize) -> DslResult<Rule> {
    let mut p = Parser {
        tokens: tokenize(line, line_no)?,
        pos: 0,
        line: line_no,
    };
    p.expect_keyword("RULE")?;
    let rule_id = p.expect_ident("rule id")?;
    p.expect_keyword("WHEN")?;
    let type_name = p.expect_ident("event type")?;
    let when = EventType::from_str(&type_name).map_err(DslError::Engine)?;

    let mut preparation = Vec::new();
    while p.at_keyword("PREP") {
        p.next();
        let counter = p.expect_ident("counter name")?;
        p.expect_op("+=")?;
        let delta = match p.next() {
            Some(Token::Int(n)) => n,
            Some(t) => return p.err(format!("expected integer, got `{t}`")),
            None => return p.err("expected integer, got end of line"),
        };
        preparation.push(PrepStep { counter, delta });
    }

    p.expect_keyword("IF")?;
    let expr = parse_or(&mut p)?;
    p.expect_keyword("THEN")?;
    let decision_name = p.expect_ident("decision name")?;
    p.expect_op("(")?;
    let mut bindings = Vec::new();
    if !matches!(p.peek(), Some(Token::Op(")"))) {
        loop {
            let param = p.expect_ident("argument name")?;
            p.expect_op("=")?;
            let binding = match p.next() {
                Some(Token::Ident(s)) if s == "true" => Binding::Literal(AttributeValue::Bool(true)),
                Some(Token::Ident(s)) if s == "false" => {
                    Binding::Literal(AttributeValue::Bool(false))
                }
                Some(Token::Ident(s)) => Binding::Attribute(s),
                Some(Token::Int(n)) => Binding::Literal(AttributeValue::Int(n)),
                Some(Token::Str(s)) => Binding::Literal(AttributeValue::Text(s)),
                Some(Token::Ip(ip)) => Binding::Literal(AttributeValue::IpAddr(ip)),
                Some(t) => return p.err(format!("bad argument value `{t}`")),
                None => return p.err("expected argument value, got end of line"),
            };
            bindings.push((param, binding));
            match p.next() {
                Some(Token::Op(",")) => continue,
                Some(Token::Op(")")) => {
                    p.pos -= 1;
                    break;
                }
                Some(t) => return p.err(format!("expected `,` or `)`, got `{t}`")),
                None => return p.err("expected `,` or `)`, got end of line"),
            }
        }
    }
    p.expect_op(")")?;
    if let Some(t) = p.next() {
        return Err(DslError::Syntax {
            line: line_no,
            msg: format!("trailing input `{t}`"),
        });
    }

    let attributes: Vec<String> = expr.attribute_refs().into_iter().collect();
    let result_label = format!("{rule_id}.result");
    Ok(Rule {
        rule_id: rule_id.clone(),
        when: when.clone(),
        preparation,
        condition: Condition {
            condition_id: format!("{rule_id}.C"),
            event_details: EventDetails {
                event_type: when.clone(),
                attributes,
            },
            expr,
            result_label: result_label.clone(),
        },
        action: ActionSpec {
            action_id: format!("{rule_id}.A"),
            event_ref: when,
            condition_result_label: result_label,
            decision: Decision {
                name: decision_name,
                bindings,
            },
        },
    })
}

fn parse_or(p: &mut Parser) -> DslResult<ConditionExpr> {
    let mut left = parse_and(p)?;
    while matches!(p.peek(), Some(Token::Op("||"))) {
        p.next();
        let right = parse_and(p)?;
        left = left.or(right);
    }
    Ok(left)
}

fn parse_and(p: &mut Parser) -> DslResult<ConditionExpr> {
    let mut left = parse_unary(p)?;
    while matches!(p.peek(), Some(Token::Op("&&"))) {
        p.next();
        let right = parse_unary(p)?;
        left = left.and(right);
    }
    Ok(left)
}

fn parse_unary(p: &mut Parser) -> DslResult<ConditionExpr> {
    if matches!(p.peek(), Some(Token::Op("!"))) {
        p.next();
        return Ok(parse_unary(p)?.not());
    }
    parse_primary(p)
}

fn parse_primary(p: &mut Parser) -> DslResult<ConditionExpr> {
    match p.next() {
        Some(Token::Op("(")) => {
            let inner = parse_or(p)?;
            p.expect_op(")")?;
            Ok(inner)
        }
        Some(Token::Ident(name)) if name == "EXISTS" => {
            p.expect_op("(")?;
            let probe = p.expect_ident("probe name")?;
            p.expect_op(")")?;
            Ok(ConditionExpr::probe_true(probe))
        }
        Some(Token::Ident(attr)) => {
            let op = match p.next() {
                Some(Token::Op("==")) => CompareOp::Eq,
                Some(Token::Op("!=")) => CompareOp::Ne,
                Some(Token::Op("<")) => CompareOp::Lt,
                Some(Token::Op("<=")) => CompareOp::Le,
                Some(Token::Op(">")) => CompareOp::Gt,
                Some(Token::Op(">=")) => CompareOp::Ge,
                Some(t) => return p.err(format!("expected comparison operator, got `{t}`")),
                None => return p.err("expected comparison operator, got end of line"),
            };
            let operand = match p.next() {
                Some(Token::Int(n)) => AttributeValue::Int(n),
                Some(Token::Str(s)) => AttributeValue::Text(s),
                Some(Token::Ip(ip)) => AttributeValue::IpAddr(ip),
                Some(Token::Ident(s)) if s == "true" => AttributeValue::Bool(true),
                Some(Token::Ident(s)) if s == "false" => AttributeValue::Bool(false),
                Some(t) => return p.err(format!("expected literal, got `{t}`")),
                None => return p.err("expected literal, got end of line"),
            };
            Ok(ConditionExpr::compare(attr, op, operand))
        }
        Some(t) => p.err(format!("expected expression, got `{t}`")),
        None => p.err("expected expression, got end of line"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::new(
            ["BroadcastRreq", "SwitchOnAc"],
            ["valid_route_to_dest", "link_ok"],
        )
    }

    #[test]
    fn parses_a_full_rule_line() {
        let text = "RULE E1 WHEN Request PREP node_seq += 1 \
                    IF packet_type == 1 && !EXISTS(valid_route_to_dest) \
                    THEN BroadcastRreq(dest=dest_ip)";
        let reg = parse_rules(text, vocab()).unwrap();
        assert_eq!(reg.len(), 1);
        let rule = &reg.rules()[0];
        assert_eq!(rule.rule_id, "E1");
        assert_eq!(rule.when, EventType::Request);
        assert_eq!(
            rule.preparation,
            vec![PrepStep {
                counter: "node_seq".into(),
                delta: 1
            }]
        );
        assert_eq!(rule.action.decision.name, "BroadcastRreq");
        assert_eq!(
            rule.action.decision.bindings,
            vec![("dest".to_string(), Binding::Attribute("dest_ip".into()))]
        );
        assert!(reg.is_frozen());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# header\n\nRULE M3 WHEN Notification IF temperature >= 30 THEN SwitchOnAc()\n";
        let reg = parse_rules(text, vocab()).unwrap();
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn unknown_probe_is_rejected() {
        let text = "RULE X WHEN Request IF EXISTS(nope) THEN BroadcastRreq()";
        assert_eq!(
            parse_rules(text, vocab()).unwrap_err(),
            DslError::Engine(EngineError::UnresolvedProbe("nope".into()))
        );
    }

    #[test]
    fn unknown_decision_is_rejected() {
        let text = "RULE X WHEN Request IF EXISTS(link_ok) THEN Nope()";
        assert_eq!(
            parse_rules(text, vocab()).unwrap_err(),
            DslError::Engine(EngineError::UnresolvedDecisionName("Nope".into()))
        );
    }

    #[test]
    fn syntax_error_carries_line_number() {
        let text = "# fine\nRULE broken WHEN";
        match parse_rules(text, vocab()).unwrap_err() {
            DslError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn operator_precedence_binds_and_tighter_than_or() {
        let text = "RULE X WHEN Request IF a == 1 || b == 2 && c == 3 THEN BroadcastRreq()";
        let reg = parse_rules(text, vocab()).unwrap();
        match &reg.rules()[0].condition.expr {
            ConditionExpr::Or(_, right) => {
                assert!(matches!(**right, ConditionExpr::And(_, _)));
            }
            other => panic!("expected Or at the root, got {other:?}"),
        }
    }
}
