//! Scroll nets: a structure together with argumentation arrows (↷, ↻) and
//! interaction marks on attachments (↔, ✶).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::derivation::{Step, Trace};
use crate::error::{Error, Report, Result};
use crate::id::{Atom, NodeId};
use crate::iso::{self, Extra, Mapping};
use crate::structure::{NodeJson, Polarity, ScrollStructure, StructureJson};

/// A scroll net. Equality and hashing ignore the certificate.
#[derive(Clone, Default)]
pub struct ScrollNet {
    pub(crate) structure: ScrollStructure,
    pub(crate) justifications: BTreeSet<(NodeId, NodeId)>,
    pub(crate) self_justifications: BTreeSet<NodeId>,
    pub(crate) expansions: BTreeSet<(NodeId, NodeId)>,
    pub(crate) collapses: BTreeSet<(NodeId, NodeId)>,
    pub(crate) certificate: Option<Trace>,
}

impl PartialEq for ScrollNet {
    fn eq(&self, other: &Self) -> bool {
        self.structure == other.structure
            && self.justifications == other.justifications
            && self.self_justifications == other.self_justifications
            && self.expansions == other.expansions
            && self.collapses == other.collapses
    }
}

impl Eq for ScrollNet {}

impl Hash for ScrollNet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.structure.hash(state);
        self.justifications.hash(state);
        self.self_justifications.hash(state);
        self.expansions.hash(state);
        self.collapses.hash(state);
    }
}

/// Opened, closed, introduced and eliminated nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EditState {
    pub opened: BTreeSet<NodeId>,
    pub closed: BTreeSet<NodeId>,
    pub introduced: BTreeSet<NodeId>,
    pub eliminated: BTreeSet<NodeId>,
}

/// One step of boundary extraction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoundaryEvent {
    Prune(NodeId),
    Collapse(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Premiss,
    Conclusion,
}

impl From<ScrollStructure> for ScrollNet {
    fn from(structure: ScrollStructure) -> Self {
        ScrollNet { structure, ..Default::default() }
    }
}

impl ScrollNet {
    pub fn new(structure: ScrollStructure) -> Self {
        structure.into()
    }

    pub fn structure(&self) -> &ScrollStructure {
        &self.structure
    }

    pub fn justifications(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.justifications
    }

    pub fn self_justifications(&self) -> &BTreeSet<NodeId> {
        &self.self_justifications
    }

    pub fn expansions(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.expansions
    }

    pub fn collapses(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.collapses
    }

    pub fn certificate(&self) -> Option<&Trace> {
        self.certificate.as_ref()
    }

    pub fn set_certificate(&mut self, t: Option<Trace>) {
        self.certificate = t;
    }

    pub fn without_certificate(&self) -> ScrollNet {
        ScrollNet { certificate: None, ..self.clone() }
    }

    pub fn justify(&mut self, source: impl Into<NodeId>, target: impl Into<NodeId>) -> &mut Self {
        self.justifications.insert((source.into(), target.into()));
        self
    }

    pub fn self_justify(&mut self, v: impl Into<NodeId>) -> &mut Self {
        self.self_justifications.insert(v.into());
        self
    }

    pub fn expand(&mut self, o: impl Into<NodeId>, i: impl Into<NodeId>) -> &mut Self {
        self.expansions.insert((o.into(), i.into()));
        self
    }

    pub fn collapse(&mut self, o: impl Into<NodeId>, i: impl Into<NodeId>) -> &mut Self {
        self.collapses.insert((o.into(), i.into()));
        self
    }

    /// Total number of arrows and interaction marks.
    pub fn event_count(&self) -> usize {
        self.justifications.len() + self.self_justifications.len() + self.expansions.len() + self.collapses.len()
    }

    pub fn is_arrow_free(&self) -> bool {
        self.event_count() == 0
    }

    /// The source justifying `v`, if any.
    pub fn justifier_of(&self, v: &NodeId) -> Option<&NodeId> {
        // Justification sets are small relative to nodes.
        self.justifications.iter().find(|(_, t)| t == v).map(|(s, _)| s)
    }

    pub fn has_incoming_justification(&self, v: &NodeId) -> bool {
        self.justifier_of(v).is_some()
    }

    pub fn edit_state(&self) -> Result<EditState> {
        let pol = self.structure.polarities()?;
        Ok(self.edit_state_with(&pol))
    }

    pub(crate) fn edit_state_with(&self, pol: &BTreeMap<NodeId, Polarity>) -> EditState {
        let positive = |v: &NodeId| pol.get(v).copied() == Some(Polarity::Positive);
        let negative = |v: &NodeId| pol.get(v).copied() == Some(Polarity::Negative);
        let mut es = EditState::default();
        for (o, _) in &self.expansions {
            if positive(o) {
                es.opened.insert(o.clone());
            } else if negative(o) {
                es.closed.insert(o.clone());
            }
        }
        for (o, _) in &self.collapses {
            if negative(o) {
                es.opened.insert(o.clone());
            } else if positive(o) {
                es.closed.insert(o.clone());
            }
        }
        for (_, t) in &self.justifications {
            if positive(t) {
                es.introduced.insert(t.clone());
            } else if negative(t) {
                es.eliminated.insert(t.clone());
            }
        }
        for v in &self.self_justifications {
            if negative(v) {
                es.introduced.insert(v.clone());
            } else if positive(v) {
                es.eliminated.insert(v.clone());
            }
        }
        es
    }

    pub fn validate(&self) -> Report {
        let mut report = self.structure.validate();
        let s = &self.structure;
        let mut missing: BTreeSet<NodeId> = BTreeSet::new();
        let pairs = self.justifications.iter().chain(&self.expansions).chain(&self.collapses);
        for (a, b) in pairs {
            for v in [a, b] {
                if !s.contains(v) {
                    missing.insert(v.clone());
                }
            }
        }
        missing.extend(self.self_justifications.iter().filter(|v| !s.contains(v)).cloned());
        if !missing.is_empty() {
            report.push("Arrow-endpoints-exist", missing.into_iter().collect());
        }
        let mut incoming: BTreeMap<&NodeId, usize> = BTreeMap::new();
        for (_, t) in &self.justifications {
            *incoming.entry(t).or_default() += 1;
        }
        let multi: Vec<NodeId> = incoming.iter().filter(|(_, c)| **c > 1).map(|(v, _)| (*v).clone()).collect();
        if !multi.is_empty() {
            report.push("Justification-forest", multi);
        }
        let cyc = justification_cycle(&self.justifications);
        if !cyc.is_empty() {
            report.push("Justification-acyclic", cyc);
        }
        let off: Vec<NodeId> = self
            .expansions
            .iter()
            .chain(&self.collapses)
            .filter(|p| !s.attachments.contains(*p))
            .map(|(o, _)| o.clone())
            .collect();
        if !off.is_empty() {
            report.push("Interaction-on-attachments", off);
        }
        if let Ok(pol) = s.polarities() {
            let es = self.edit_state_with(&pol);
            let oi: Vec<NodeId> = es.opened.intersection(&es.introduced).cloned().collect();
            if !oi.is_empty() {
                report.push("Opened-not-introduced", oi);
            }
            let ce: Vec<NodeId> = es.closed.intersection(&es.eliminated).cloned().collect();
            if !ce.is_empty() {
                report.push("Closed-not-eliminated", ce);
            }
        }
        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    fn require_valid(&self) -> Result<()> {
        let r = self.validate();
        if r.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidNet(r))
        }
    }

    /// The default extraction order: collapses shallowest first, then prunes
    /// deepest first, ties by id. A node shared between inloops ends up where
    /// the last collapse puts it, and the newer scroll is never the shallower.
    pub fn boundary_events(&self, side: Side) -> Result<Vec<BoundaryEvent>> {
        let es = self.edit_state()?;
        Ok(self.boundary_events_with(&es, side))
    }

    pub(crate) fn boundary_events_with(&self, es: &EditState, side: Side) -> Vec<BoundaryEvent> {
        let (pruned, collapsed) = match side {
            Side::Premiss => (&es.introduced, &es.opened),
            Side::Conclusion => (&es.eliminated, &es.closed),
        };
        let depth = self.structure.depths();
        let by_depth = |set: &BTreeSet<NodeId>, deepest: bool| {
            let mut v: Vec<NodeId> = set.iter().cloned().collect();
            v.sort_by(|a, b| {
                let d = depth.get(a).cmp(&depth.get(b));
                if deepest { d.reverse() } else { d }.then_with(|| a.cmp(b))
            });
            v
        };
        let mut out: Vec<BoundaryEvent> = by_depth(collapsed, false).into_iter().map(BoundaryEvent::Collapse).collect();
        out.extend(by_depth(pruned, true).into_iter().map(BoundaryEvent::Prune));
        out
    }

    /// Runs extraction events in the given order against the structure.
    /// Events on nodes that are already gone are skipped.
    pub fn apply_boundary_events(&self, events: &[BoundaryEvent]) -> ScrollStructure {
        let mut s = self.structure.clone();
        for e in events {
            match e {
                BoundaryEvent::Prune(v) => s.prune_in_place(v),
                BoundaryEvent::Collapse(v) => {
                    if s.is_outloop(v) {
                        s.collapse_in_place(v).expect("outloop checked");
                    }
                }
            }
        }
        s
    }

    pub(crate) fn boundary_with(&self, es: &EditState, side: Side) -> ScrollStructure {
        self.apply_boundary_events(&self.boundary_events_with(es, side))
    }

    pub fn boundary(&self, side: Side) -> Result<ScrollStructure> {
        self.require_valid()?;
        let es = self.edit_state()?;
        Ok(self.boundary_with(&es, side))
    }

    pub fn premiss(&self) -> Result<ScrollStructure> {
        self.boundary(Side::Premiss)
    }

    pub fn conclusion(&self) -> Result<ScrollStructure> {
        self.boundary(Side::Conclusion)
    }

    pub fn is_complete(&self) -> Result<bool> {
        Ok(self.premiss()?.is_empty())
    }

    pub fn is_interpretable(&self) -> Result<bool> {
        self.require_valid()?;
        let es = self.edit_state()?;
        Ok(self.boundary_with(&es, Side::Premiss).is_forest() && self.boundary_with(&es, Side::Conclusion).is_forest())
    }

    /// Restriction to `v` and everything below it. Arrows leaving or entering
    /// the restriction are dropped.
    pub fn subnet(&self, v: &NodeId) -> Result<ScrollNet> {
        let structure = self.structure.reachable(v)?;
        Ok(self.restrict_arrows(structure))
    }

    pub(crate) fn restrict_arrows(&self, structure: ScrollStructure) -> ScrollNet {
        let inside = |p: &(NodeId, NodeId)| structure.contains(&p.0) && structure.contains(&p.1);
        ScrollNet {
            justifications: self.justifications.iter().filter(|p| inside(p)).cloned().collect(),
            self_justifications: self.self_justifications.iter().filter(|v| structure.contains(v)).cloned().collect(),
            expansions: self.expansions.iter().filter(|p| inside(p)).cloned().collect(),
            collapses: self.collapses.iter().filter(|p| inside(p)).cloned().collect(),
            structure,
            certificate: None,
        }
    }

    /// Renames every id through `f`, which must be injective.
    pub fn map_ids(&self, f: impl Fn(&NodeId) -> NodeId) -> ScrollNet {
        let pair = |p: &(NodeId, NodeId)| (f(&p.0), f(&p.1));
        ScrollNet {
            structure: self.structure.map_ids(&f),
            justifications: self.justifications.iter().map(pair).collect(),
            self_justifications: self.self_justifications.iter().map(&f).collect(),
            expansions: self.expansions.iter().map(pair).collect(),
            collapses: self.collapses.iter().map(pair).collect(),
            certificate: None,
        }
    }

    fn extra(&self) -> Extra<'_> {
        Extra {
            unary: vec![&self.self_justifications],
            binary: vec![&self.justifications, &self.expansions, &self.collapses],
        }
    }

    pub fn to_json(&self) -> NetJson {
        let s = self.structure.to_json();
        NetJson {
            nodes: s.nodes,
            edges: s.edges,
            attachments: s.attachments,
            justifications: self.justifications.iter().cloned().collect(),
            self_justifications: self.self_justifications.iter().cloned().collect(),
            expansions: self.expansions.iter().cloned().collect(),
            collapses: self.collapses.iter().cloned().collect(),
            certificate: self.certificate.as_ref().map(|t| CertificateJson::Trace(t.to_json())),
        }
    }

    pub fn encode_json(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("net serializes")
    }

    pub fn encode_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("net serializes")
    }

    /// Decodes and validates. A bare step list as certificate is read as a
    /// trace starting at the net's premiss.
    pub fn decode_json(src: &str) -> Result<ScrollNet> {
        let raw: NetJson = crate::json::from_str(src)?;
        ScrollNet::from_json(raw)
    }

    pub fn from_json(raw: NetJson) -> Result<ScrollNet> {
        let structure = ScrollStructure::from_json(StructureJson {
            nodes: raw.nodes,
            edges: raw.edges,
            attachments: raw.attachments,
        })?;
        let mut n = ScrollNet {
            structure,
            justifications: raw.justifications.into_iter().collect(),
            self_justifications: raw.self_justifications.into_iter().collect(),
            expansions: raw.expansions.into_iter().collect(),
            collapses: raw.collapses.into_iter().collect(),
            certificate: None,
        };
        n.require_valid()?;
        n.certificate = match raw.certificate {
            None => None,
            Some(CertificateJson::Trace(t)) => Some(Trace::from_json(t)?),
            Some(CertificateJson::Steps(steps)) => Some(Trace::new(n.premiss()?, steps)),
        };
        Ok(n)
    }
}

fn justification_cycle(js: &BTreeSet<(NodeId, NodeId)>) -> Vec<NodeId> {
    let mut g = ScrollStructure::new();
    for (a, b) in js {
        g.add_sep(a.clone()).add_sep(b.clone()).add_edge(a.clone(), b.clone());
    }
    let placed: BTreeSet<NodeId> = g.topological().into_iter().collect();
    g.node_ids().filter(|v| !placed.contains(v)).cloned().collect()
}

/// Whether adding `s ↷ t` keeps the justifications acyclic.
pub(crate) fn creates_cycle(js: &BTreeSet<(NodeId, NodeId)>, s: &NodeId, t: &NodeId) -> bool {
    if s == t {
        return true;
    }
    // Follow justifications forward from t; reaching s closes a cycle.
    let mut stack = vec![t.clone()];
    let mut seen = BTreeSet::new();
    while let Some(x) = stack.pop() {
        if &x == s {
            return true;
        }
        if seen.insert(x.clone()) {
            let lo = (x.clone(), NodeId::min());
            stack.extend(js.range(lo..).take_while(|(a, _)| *a == x).map(|(_, b)| b.clone()));
        }
    }
    false
}

/// A bijection between two nets preserving structure and every arrow set.
pub fn net_isomorphism(a: &ScrollNet, b: &ScrollNet) -> Option<Mapping> {
    iso::isomorphism_with(&a.structure, &a.extra(), &b.structure, &b.extra())
}

pub fn net_isomorphic(a: &ScrollNet, b: &ScrollNet) -> bool {
    net_isomorphism(a, b).is_some()
}

impl fmt::Debug for ScrollNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode_json())
    }
}

/// Interchange form of a net.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct NetJson {
    pub nodes: Vec<NodeJson>,
    #[serde(default)]
    pub edges: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    pub attachments: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    pub justifications: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    pub self_justifications: Vec<NodeId>,
    #[serde(default)]
    pub expansions: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    pub collapses: Vec<(NodeId, NodeId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CertificateJson {
    Trace(crate::derivation::TraceJson),
    Steps(Vec<Step>),
}

/// Atoms used anywhere in the net, or `a` if there are none.
pub(crate) fn atom_palette(n: &ScrollNet) -> Vec<Atom> {
    let atoms: Vec<Atom> = n.structure.atoms().into_iter().collect();
    if atoms.is_empty() {
        vec![Atom::new("a")]
    } else {
        atoms
    }
}
