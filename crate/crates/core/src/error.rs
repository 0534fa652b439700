use std::fmt;

use serde::Serialize;

use crate::derivation::RuleKind;
use crate::id::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("polarity is ambiguous at `{0}`: root paths of both parities reach it")]
    ParityInconsistent(NodeId),
    #[error("`{0}` is not an outloop")]
    NotAnOutloop(NodeId),
    #[error("`{0}` has several parents; shared structures have no interpretation")]
    NotInterpretable(NodeId),
    #[error("`{0}` is shared; sharing can only be written as JSON")]
    SharingNotPrintable(NodeId),
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("schema error at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("invalid structure: {0}")]
    InvalidStructure(Report),
    #[error("invalid net: {0}")]
    InvalidNet(Report),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("step {index}: {source}")]
    Replay { index: usize, source: RuleError },
    #[error("type error: {0}")]
    Type(String),
    #[error("detour reduction: {0}")]
    Detour(String),
    #[error("composition: {0}")]
    Composition(String),
    #[error("fragment error: {0}")]
    Fragment(String),
}

/// A failed rule premiss: which rule, which premiss, and what was wrong.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{rule:?}: premiss `{premiss}` failed: {detail}")]
pub struct RuleError {
    pub rule: RuleKind,
    pub premiss: &'static str,
    pub detail: String,
}

impl RuleError {
    pub(crate) fn new(rule: RuleKind, premiss: &'static str, detail: impl Into<String>) -> Self {
        RuleError { rule, premiss, detail: detail.into() }
    }
}

/// One broken invariant, with the nodes that witness it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: &'static str,
    pub nodes: Vec<NodeId>,
}

/// Outcome of a validation pass. Violations are data, not failures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn push(&mut self, kind: &'static str, nodes: Vec<NodeId>) {
        self.violations.push(Violation { kind, nodes });
    }

    pub fn has(&self, kind: &str) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}", v.kind)?;
            if !v.nodes.is_empty() {
                let ids: Vec<&str> = v.nodes.iter().map(|n| n.as_str()).collect();
                write!(f, " at {}", ids.join(", "))?;
            }
        }
        Ok(())
    }
}
