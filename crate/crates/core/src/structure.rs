//! Scroll structures: labeled DAGs in which some edges are marked as
//! attachments, tying an outloop to its inloop.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Report, Result};
use crate::formula::Formula;
use crate::id::{is_atom_name, Atom, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Polarity::Positive
    }
}

/// A scroll structure. Construction is unchecked; call [`ScrollStructure::validate`]
/// to learn which invariants hold.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ScrollStructure {
    pub(crate) nodes: BTreeMap<NodeId, Option<Atom>>,
    pub(crate) edges: BTreeSet<(NodeId, NodeId)>,
    /// `(child, parent)`, mirrors `edges`.
    pub(crate) rev: BTreeSet<(NodeId, NodeId)>,
    pub(crate) attachments: BTreeSet<(NodeId, NodeId)>,
    /// inloop -> outloop, mirrors `attachments`.
    pub(crate) att_rev: BTreeMap<NodeId, NodeId>,
}

fn range_from<'a>(
    set: &'a BTreeSet<(NodeId, NodeId)>,
    v: &NodeId,
) -> impl Iterator<Item = &'a NodeId> + 'a {
    let v = v.clone();
    set.range((v.clone(), NodeId::min())..).take_while(move |(a, _)| *a == v).map(|(_, b)| b)
}

impl ScrollStructure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, v: &NodeId) -> bool {
        self.nodes.contains_key(v)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> + '_ {
        self.nodes.keys()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, Option<&Atom>)> + '_ {
        self.nodes.iter().map(|(k, l)| (k, l.as_ref()))
    }

    pub fn edges(&self) -> impl Iterator<Item = &(NodeId, NodeId)> + '_ {
        self.edges.iter()
    }

    pub fn attachments(&self) -> impl Iterator<Item = &(NodeId, NodeId)> + '_ {
        self.attachments.iter()
    }

    pub fn has_edge(&self, p: &NodeId, c: &NodeId) -> bool {
        self.edges.contains(&(p.clone(), c.clone()))
    }

    pub fn label(&self, v: &NodeId) -> Option<&Atom> {
        self.nodes.get(v).and_then(|l| l.as_ref())
    }

    pub fn is_atom(&self, v: &NodeId) -> bool {
        self.label(v).is_some()
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.nodes.values().flatten().cloned().collect()
    }

    /// Adds a node, returning false if the id was taken.
    pub fn add_node(&mut self, id: NodeId, label: Option<Atom>) -> bool {
        if self.nodes.contains_key(&id) {
            return false;
        }
        self.nodes.insert(id, label);
        true
    }

    pub fn add_atom(&mut self, id: impl Into<NodeId>, atom: impl Into<Atom>) -> &mut Self {
        self.nodes.insert(id.into(), Some(atom.into()));
        self
    }

    pub fn add_sep(&mut self, id: impl Into<NodeId>) -> &mut Self {
        self.nodes.insert(id.into(), None);
        self
    }

    pub fn add_edge(&mut self, p: impl Into<NodeId>, c: impl Into<NodeId>) -> &mut Self {
        let (p, c) = (p.into(), c.into());
        self.rev.insert((c.clone(), p.clone()));
        self.edges.insert((p, c));
        self
    }

    pub fn remove_edge(&mut self, p: &NodeId, c: &NodeId) -> bool {
        self.rev.remove(&(c.clone(), p.clone()));
        self.edges.remove(&(p.clone(), c.clone()))
    }

    /// Marks `(outloop, inloop)` as a scroll. The edge is added too.
    pub fn attach(&mut self, o: impl Into<NodeId>, i: impl Into<NodeId>) -> &mut Self {
        let (o, i) = (o.into(), i.into());
        self.add_edge(o.clone(), i.clone());
        self.insert_attachment(o, i);
        self
    }

    /// Records an attachment without adding the edge.
    pub(crate) fn insert_attachment(&mut self, o: NodeId, i: NodeId) {
        self.att_rev.insert(i.clone(), o.clone());
        self.attachments.insert((o, i));
    }

    pub(crate) fn remove_attachment(&mut self, o: &NodeId, i: &NodeId) {
        if self.attachments.remove(&(o.clone(), i.clone())) && self.att_rev.get(i) == Some(o) {
            self.att_rev.remove(i);
        }
    }

    /// Removes a node together with every edge and attachment touching it.
    pub fn remove_node(&mut self, v: &NodeId) {
        if self.nodes.remove(v).is_none() {
            return;
        }
        let kids: Vec<NodeId> = self.children(v).cloned().collect();
        let pars: Vec<NodeId> = self.parents(v).cloned().collect();
        for c in &kids {
            self.remove_edge(v, c);
        }
        for p in &pars {
            self.remove_edge(p, v);
        }
        let outs: Vec<NodeId> = range_from(&self.attachments, v).cloned().collect();
        for i in outs {
            self.remove_attachment(v, &i);
        }
        let ins: Vec<NodeId> = self.attachments.iter().filter(|(_, i)| i == v).map(|(o, _)| o.clone()).collect();
        for o in ins {
            self.remove_attachment(&o, v);
        }
    }

    pub fn children<'a>(&'a self, v: &NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        range_from(&self.edges, v)
    }

    pub fn parents<'a>(&'a self, v: &NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        range_from(&self.rev, v)
    }

    pub fn parent_set(&self, v: &NodeId) -> BTreeSet<NodeId> {
        self.parents(v).cloned().collect()
    }

    pub fn child_set(&self, v: &NodeId) -> BTreeSet<NodeId> {
        self.children(v).cloned().collect()
    }

    pub fn roots(&self) -> impl Iterator<Item = &NodeId> + '_ {
        self.nodes.keys().filter(move |v| self.parents(v).next().is_none())
    }

    /// The inloop attached to `v`, if `v` is an outloop.
    pub fn inloop_of(&self, v: &NodeId) -> Option<&NodeId> {
        range_from(&self.attachments, v).next()
    }

    /// The outloop `v` is attached to, if `v` is an inloop.
    pub fn outloop_of(&self, v: &NodeId) -> Option<&NodeId> {
        self.att_rev.get(v)
    }

    pub fn is_outloop(&self, v: &NodeId) -> bool {
        self.inloop_of(v).is_some()
    }

    pub fn is_inloop(&self, v: &NodeId) -> bool {
        self.outloop_of(v).is_some()
    }

    fn require(&self, v: &NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownNode(v.clone()))
        }
    }

    /// Children of `v` that are not its inloop.
    pub fn outloop_contents(&self, v: &NodeId) -> Vec<NodeId> {
        let i = self.inloop_of(v);
        self.children(v).filter(|c| Some(*c) != i).cloned().collect()
    }

    pub fn siblings(&self, u: &NodeId, v: &NodeId) -> Result<bool> {
        self.require(u)?;
        self.require(v)?;
        Ok(self.parents(u).eq(self.parents(v)))
    }

    /// `v` and everything below it.
    pub fn descendants(&self, v: &NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v.clone()];
        while let Some(x) = stack.pop() {
            if seen.insert(x.clone()) {
                stack.extend(self.children(&x).cloned());
            }
        }
        seen
    }

    /// Whether `a →* b` (reflexive).
    pub fn reaches(&self, a: &NodeId, b: &NodeId) -> bool {
        if a == b {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![a.clone()];
        while let Some(x) = stack.pop() {
            for c in self.children(&x) {
                if c == b {
                    return true;
                }
                if seen.insert(c.clone()) {
                    stack.push(c.clone());
                }
            }
        }
        false
    }

    /// The sub-structure induced on `keep`.
    pub fn restrict(&self, keep: &BTreeSet<NodeId>) -> ScrollStructure {
        let mut out = ScrollStructure::new();
        for v in keep {
            if let Some(l) = self.nodes.get(v) {
                out.nodes.insert(v.clone(), l.clone());
            }
        }
        for (p, c) in &self.edges {
            if keep.contains(p) && keep.contains(c) {
                out.add_edge(p.clone(), c.clone());
            }
        }
        for (o, i) in &self.attachments {
            if keep.contains(o) && keep.contains(i) {
                out.insert_attachment(o.clone(), i.clone());
            }
        }
        out
    }

    pub fn reachable(&self, v: &NodeId) -> Result<ScrollStructure> {
        self.require(v)?;
        Ok(self.restrict(&self.descendants(v)))
    }

    /// Nodes in a topological order (parents first), ties by id. Nodes on a
    /// cycle are omitted.
    pub fn topological(&self) -> Vec<NodeId> {
        let mut indeg: BTreeMap<&NodeId, usize> = self.nodes.keys().map(|v| (v, 0)).collect();
        for (_, c) in &self.edges {
            if let Some(d) = indeg.get_mut(c) {
                *d += 1;
            }
        }
        let mut ready: BTreeSet<&NodeId> = indeg.iter().filter(|(_, d)| **d == 0).map(|(v, _)| *v).collect();
        let mut out = Vec::with_capacity(self.nodes.len());
        while let Some(v) = ready.pop_first() {
            out.push(v.clone());
            for c in self.children(v) {
                if let Some(d) = indeg.get_mut(c) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(c);
                    }
                }
            }
        }
        out
    }

    /// Depth-first order from the roots, children by id, each node once.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(self.nodes.len());
        let roots: Vec<NodeId> = self.roots().cloned().collect();
        let mut stack: Vec<NodeId> = roots.into_iter().rev().collect();
        while let Some(x) = stack.pop() {
            if !seen.insert(x.clone()) {
                continue;
            }
            let kids: Vec<NodeId> = self.children(&x).cloned().collect();
            stack.extend(kids.into_iter().rev());
            out.push(x);
        }
        out
    }

    /// Length of the longest root path to each node.
    pub fn depths(&self) -> BTreeMap<NodeId, usize> {
        let mut depth: BTreeMap<NodeId, usize> = BTreeMap::new();
        for v in self.topological() {
            let d = self.parents(&v).filter_map(|p| depth.get(p)).map(|d| d + 1).max().unwrap_or(0);
            depth.insert(v, d);
        }
        depth
    }

    /// Polarity of every node reachable from a root.
    pub fn polarities(&self) -> Result<BTreeMap<NodeId, Polarity>> {
        let mut pol: BTreeMap<NodeId, Polarity> = BTreeMap::new();
        let mut queue: VecDeque<NodeId> = VecDeque::new();
        for r in self.roots() {
            pol.insert(r.clone(), Polarity::Positive);
            queue.push_back(r.clone());
        }
        while let Some(v) = queue.pop_front() {
            let p = pol[&v].flip();
            for c in self.children(&v) {
                match pol.get(c) {
                    Some(q) if *q != p => return Err(Error::ParityInconsistent(c.clone())),
                    Some(_) => {}
                    None => {
                        pol.insert(c.clone(), p);
                        queue.push_back(c.clone());
                    }
                }
            }
        }
        Ok(pol)
    }

    pub fn polarity(&self, v: &NodeId) -> Result<Polarity> {
        self.require(v)?;
        self.polarities()?.remove(v).ok_or_else(|| Error::ParityInconsistent(v.clone()))
    }

    pub fn is_forest(&self) -> bool {
        self.nodes.keys().all(|v| self.parents(v).nth(1).is_none())
    }

    /// Every invariant that fails, grouped by kind.
    pub fn validate(&self) -> Report {
        let mut report = Report::default();
        let dangling: BTreeSet<NodeId> = self
            .edges
            .iter()
            .flat_map(|(p, c)| [p, c])
            .filter(|v| !self.contains(v))
            .cloned()
            .collect();
        if !dangling.is_empty() {
            report.push("Edge-endpoints-exist", dangling.into_iter().collect());
        }
        let order = self.topological();
        if order.len() < self.nodes.len() {
            let placed: BTreeSet<&NodeId> = order.iter().collect();
            let cyc: Vec<NodeId> = self.nodes.keys().filter(|v| !placed.contains(v)).cloned().collect();
            report.push("Acyclic", cyc);
        }
        let loose: Vec<NodeId> = self
            .attachments
            .iter()
            .filter(|(o, i)| !self.has_edge(o, i))
            .flat_map(|(o, i)| [o.clone(), i.clone()])
            .collect();
        if !loose.is_empty() {
            report.push("Attachments-are-edges", loose);
        }
        let nonleaf: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|(v, l)| l.is_some() && self.children(v).next().is_some())
            .map(|(v, _)| v.clone())
            .collect();
        if !nonleaf.is_empty() {
            report.push("Labels-on-leaves", nonleaf);
        }
        let atom_inloops: BTreeSet<NodeId> = self
            .attachments
            .iter()
            .flat_map(|(o, i)| [o, i])
            .filter(|v| self.is_atom(v))
            .cloned()
            .collect();
        if !atom_inloops.is_empty() {
            report.push("Atoms-not-inloops", atom_inloops.into_iter().collect());
        }
        let mut count: BTreeMap<&NodeId, usize> = BTreeMap::new();
        for (o, i) in &self.attachments {
            *count.entry(o).or_default() += 1;
            *count.entry(i).or_default() += 1;
        }
        let unattached: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|(v, l)| l.is_none() && count.get(v).copied().unwrap_or(0) != 1)
            .map(|(v, _)| v.clone())
            .collect();
        if !unattached.is_empty() {
            report.push("Every-sep-attached", unattached);
        }
        let inloops: BTreeSet<&NodeId> = self.attachments.iter().map(|(_, i)| i).collect();
        let bad_share: Vec<NodeId> = self
            .nodes
            .keys()
            .filter(|v| self.parents(v).nth(1).is_some() && !self.parents(v).all(|p| inloops.contains(p)))
            .cloned()
            .collect();
        if !bad_share.is_empty() {
            report.push("Sharing", bad_share);
        }
        if let Err(Error::ParityInconsistent(v)) = self.polarities() {
            report.push("Parity-consistency", vec![v]);
        }
        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Removes `v`, then every node left without parents that used to be below it.
    pub(crate) fn prune_in_place(&mut self, v: &NodeId) {
        if !self.contains(v) {
            return;
        }
        let mut stack: Vec<NodeId> = self.children(v).cloned().collect();
        self.remove_node(v);
        while let Some(x) = stack.pop() {
            if self.contains(&x) && self.parents(&x).next().is_none() {
                stack.extend(self.children(&x).cloned());
                self.remove_node(&x);
            }
        }
    }

    pub fn prune(&self, v: &NodeId) -> Result<ScrollStructure> {
        self.require(v)?;
        let mut out = self.clone();
        out.prune_in_place(v);
        Ok(out)
    }

    /// Collapses the scroll `v ⋈ u`. A child of `u` that still has another
    /// parent after the removal keeps only that parent.
    pub(crate) fn collapse_in_place(&mut self, v: &NodeId) -> Result<()> {
        self.require(v)?;
        let u = self.inloop_of(v).cloned().ok_or_else(|| Error::NotAnOutloop(v.clone()))?;
        for c in self.outloop_contents(v) {
            self.remove_edge(v, &c);
            if self.parents(&c).next().is_none() {
                self.prune_in_place(&c);
            }
        }
        let pars: Vec<NodeId> = self.parents(v).cloned().collect();
        let kids: Vec<NodeId> = self.children(&u).cloned().collect();
        self.remove_node(v);
        self.remove_node(&u);
        for c in kids {
            if self.parents(&c).next().is_none() {
                for p in &pars {
                    self.add_edge(p.clone(), c.clone());
                }
            }
        }
        Ok(())
    }

    pub fn collapse(&self, v: &NodeId) -> Result<ScrollStructure> {
        let mut out = self.clone();
        out.collapse_in_place(v)?;
        Ok(out)
    }

    /// Renames every id through `f`. `f` must be injective on the node set.
    pub fn map_ids(&self, mut f: impl FnMut(&NodeId) -> NodeId) -> ScrollStructure {
        let mut memo: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut g = |v: &NodeId| memo.entry(v.clone()).or_insert_with(|| f(v)).clone();
        let mut out = ScrollStructure::new();
        for (v, l) in &self.nodes {
            out.nodes.insert(g(v), l.clone());
        }
        for (p, c) in &self.edges {
            out.add_edge(g(p), g(c));
        }
        for (o, i) in &self.attachments {
            out.insert_attachment(g(o), g(i));
        }
        out
    }

    /// Adds every node, edge and attachment of `other`. Ids must be disjoint.
    pub fn absorb(&mut self, other: &ScrollStructure) {
        for (v, l) in &other.nodes {
            self.nodes.insert(v.clone(), l.clone());
        }
        for (p, c) in &other.edges {
            self.add_edge(p.clone(), c.clone());
        }
        for (o, i) in &other.attachments {
            self.insert_attachment(o.clone(), i.clone());
        }
    }

    /// The formula this structure denotes. Requires a forest.
    pub fn interpret(&self) -> Result<Formula> {
        if let Some(v) = self.nodes.keys().find(|v| self.parents(v).nth(1).is_some()) {
            return Err(Error::NotInterpretable(v.clone()));
        }
        let report = self.validate();
        if !report.is_ok() {
            return Err(Error::InvalidStructure(report));
        }
        let roots: Vec<NodeId> = self.roots().cloned().collect();
        Ok(self.interpret_group(&roots))
    }

    fn interpret_group(&self, group: &[NodeId]) -> Formula {
        Formula::conj(group.iter().map(|v| self.interpret_node(v)))
    }

    fn interpret_node(&self, v: &NodeId) -> Formula {
        if let Some(a) = self.label(v) {
            return Formula::Atom(a.clone());
        }
        let i = self.inloop_of(v).expect("validated: separator is an outloop");
        let lhs = self.interpret_group(&self.outloop_contents(v));
        let kids: Vec<NodeId> = self.children(i).cloned().collect();
        Formula::imp(lhs, self.interpret_group(&kids))
    }

    /// Parses the bracket notation, e.g. `a [a ; b]`.
    pub fn parse(src: &str) -> Result<ScrollStructure> {
        let mut p = TextParser { src: src.as_bytes(), pos: 0, next: 0, out: ScrollStructure::new() };
        p.group(None, false)?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected character"));
        }
        Ok(p.out)
    }

    /// Prints the bracket notation. Sharing cannot be printed.
    pub fn to_text(&self) -> Result<String> {
        if let Some(v) = self.nodes.keys().find(|v| self.parents(v).nth(1).is_some()) {
            return Err(Error::SharingNotPrintable(v.clone()));
        }
        let report = self.validate();
        if !report.is_ok() {
            return Err(Error::InvalidStructure(report));
        }
        let roots: Vec<NodeId> = self.roots().cloned().collect();
        let mut out = String::new();
        self.print_group(&roots, &mut out);
        Ok(out)
    }

    fn print_group(&self, group: &[NodeId], out: &mut String) {
        for (k, v) in group.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            self.print_node(v, out);
        }
    }

    fn print_node(&self, v: &NodeId, out: &mut String) {
        if let Some(a) = self.label(v) {
            out.push_str(a.as_str());
            return;
        }
        let i = self.inloop_of(v).expect("validated: separator is an outloop");
        out.push('[');
        self.print_group(&self.outloop_contents(v), out);
        out.push_str(" ; ");
        let kids: Vec<NodeId> = self.children(i).cloned().collect();
        self.print_group(&kids, out);
        out.push(']');
    }

    pub fn to_json(&self) -> StructureJson {
        StructureJson {
            nodes: self
                .nodes
                .iter()
                .map(|(id, label)| NodeJson { id: id.clone(), label: label.clone() })
                .collect(),
            edges: self.edges.iter().cloned().collect(),
            attachments: self.attachments.iter().cloned().collect(),
        }
    }

    pub fn encode_json(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("structure serializes")
    }

    /// Decodes and validates.
    pub fn decode_json(src: &str) -> Result<ScrollStructure> {
        let raw: StructureJson = crate::json::from_str(src)?;
        let s = ScrollStructure::from_json(raw)?;
        let report = s.validate();
        if report.is_ok() {
            Ok(s)
        } else {
            Err(Error::InvalidStructure(report))
        }
    }

    /// Builds from the interchange form without validating invariants.
    pub fn from_json(raw: StructureJson) -> Result<ScrollStructure> {
        let mut s = ScrollStructure::new();
        for (k, n) in raw.nodes.into_iter().enumerate() {
            if n.id.as_str().is_empty() {
                return Err(Error::Schema { path: format!("nodes[{k}].id"), msg: "empty id".into() });
            }
            if let Some(l) = &n.label {
                if l.as_str().is_empty() {
                    return Err(Error::Schema { path: format!("nodes[{k}].label"), msg: "empty label".into() });
                }
            }
            let id = n.id.clone();
            if !s.add_node(n.id, n.label) {
                return Err(Error::Schema { path: format!("nodes[{k}].id"), msg: format!("duplicate id `{id}`") });
            }
        }
        for (p, c) in raw.edges {
            s.add_edge(p, c);
        }
        for (o, i) in raw.attachments {
            s.insert_attachment(o, i);
        }
        Ok(s)
    }
}

impl fmt::Debug for ScrollStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_text() {
            Ok(t) if !self.is_empty() => write!(f, "`{t}` ")?,
            _ => {}
        }
        write!(f, "{}", self.encode_json())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeJson {
    pub id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Atom>,
}

/// Interchange form of a structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureJson {
    pub nodes: Vec<NodeJson>,
    #[serde(default)]
    pub edges: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    pub attachments: Vec<(NodeId, NodeId)>,
}

struct TextParser<'a> {
    src: &'a [u8],
    pos: usize,
    next: usize,
    out: ScrollStructure,
}

impl TextParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn fresh(&mut self) -> NodeId {
        self.next += 1;
        NodeId::new(format!("n{}", self.next))
    }

    /// Reads tokens until `]`, `;` or end of input and hangs them under `parent`.
    fn group(&mut self, parent: Option<&NodeId>, nested: bool) -> Result<()> {
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                None => {
                    if nested {
                        return Err(self.err("unclosed `[`"));
                    }
                    return Ok(());
                }
                Some(b']') | Some(b';') => {
                    if nested {
                        return Ok(());
                    }
                    return Err(self.err("unbalanced bracket"));
                }
                Some(b'[') => {
                    self.pos += 1;
                    let o = self.fresh();
                    let i = self.fresh();
                    self.out.add_sep(o.clone()).add_sep(i.clone()).attach(o.clone(), i.clone());
                    if let Some(p) = parent {
                        self.out.add_edge(p.clone(), o.clone());
                    }
                    self.group(Some(&o), true)?;
                    if self.src.get(self.pos) != Some(&b';') {
                        return Err(self.err("expected `;`"));
                    }
                    self.pos += 1;
                    self.group(Some(&i), true)?;
                    if self.src.get(self.pos) != Some(&b']') {
                        return Err(self.err("expected `]`"));
                    }
                    self.pos += 1;
                }
                Some(_) => {
                    let start = self.pos;
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                    if !is_atom_name(word) {
                        self.pos = start;
                        return Err(self.err("expected an atom or `[`"));
                    }
                    let v = self.fresh();
                    self.out.add_atom(v.clone(), word);
                    if let Some(p) = parent {
                        self.out.add_edge(p.clone(), v);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn id(s: &str) -> NodeId {
        NodeId::new(s)
    }

    pub(crate) fn mp() -> ScrollStructure {
        let mut s = ScrollStructure::new();
        s.add_atom("a1", "a").add_sep("s").add_sep("i").add_atom("a2", "a").add_atom("b1", "b");
        s.attach("s", "i").add_edge("s", "a2").add_edge("i", "b1");
        s
    }

    #[test]
    fn validate_mp() {
        assert!(mp().validate().is_ok());
        assert!(ScrollStructure::new().validate().is_ok());
        let mut bad = mp();
        bad.attachments.clear();
        bad.att_rev.clear();
        let r = bad.validate();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].kind, "Every-sep-attached");
        assert_eq!(r.violations[0].nodes, vec![id("i"), id("s")]);
    }

    #[test]
    fn polarity_examples() {
        let s = mp();
        assert_eq!(s.polarity(&id("a1")).unwrap(), Polarity::Positive);
        assert_eq!(s.polarity(&id("a2")).unwrap(), Polarity::Negative);
        assert_eq!(s.polarity(&id("b1")).unwrap(), Polarity::Positive);
        assert!(matches!(s.polarity(&id("zz")), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn parity_violation_is_reported() {
        // b sits below inloops at depths 1 and 2.
        let mut s = ScrollStructure::new();
        s.add_sep("o").add_sep("i").attach("o", "i");
        s.add_sep("o2").add_sep("i2").attach("o2", "i2").add_edge("o", "o2");
        s.add_sep("p").add_sep("j").attach("p", "j");
        s.add_atom("b", "b").add_edge("i2", "b").add_edge("j", "b");
        let r = s.validate();
        assert!(r.has("Parity-consistency"), "{r}");
        assert!(matches!(s.polarity(&id("b")), Err(Error::ParityInconsistent(_))));
    }

    #[test]
    fn reachable_examples() {
        let s = mp();
        let r = s.reachable(&id("s")).unwrap();
        assert_eq!(r.node_ids().cloned().collect::<Vec<_>>(), vec![id("a2"), id("b1"), id("i"), id("s")]);
        assert_eq!(r.edges.len(), 3);
        assert_eq!(s.reachable(&id("b1")).unwrap().len(), 1);
        assert_eq!(s.reachable(&id("a1")).unwrap().len(), 1);
    }

    #[test]
    fn sibling_examples() {
        let s = mp();
        assert!(s.siblings(&id("a1"), &id("s")).unwrap());
        assert!(s.siblings(&id("a2"), &id("i")).unwrap());
        assert!(!s.siblings(&id("a1"), &id("a2")).unwrap());
    }

    #[test]
    fn prune_examples() {
        let s = mp();
        let p = s.prune(&id("a2")).unwrap();
        assert_eq!(p.node_ids().cloned().collect::<BTreeSet<_>>(), ["a1", "b1", "i", "s"].map(id).into());
        assert_eq!(p.interpret().unwrap().to_string(), "a & (T => b)");
        let q = s.prune(&id("s")).unwrap();
        assert_eq!(q.node_ids().cloned().collect::<Vec<_>>(), vec![id("a1")]);
        let r = s.prune(&id("a1")).unwrap();
        assert_eq!(r.to_text().unwrap(), "[a ; b]");
    }

    #[test]
    fn collapse_examples() {
        let p = mp().prune(&id("a2")).unwrap();
        let c = p.collapse(&id("s")).unwrap();
        assert_eq!(c.roots().cloned().collect::<Vec<_>>(), vec![id("a1"), id("b1")]);
        let t = ScrollStructure::parse("[ ; a]").unwrap().collapse(&id("n1")).unwrap();
        assert_eq!(t.to_text().unwrap(), "a");
        let u = ScrollStructure::parse("[b ; a]").unwrap().collapse(&id("n1")).unwrap();
        assert_eq!(u.to_text().unwrap(), "a");
        assert!(matches!(mp().collapse(&id("a1")), Err(Error::NotAnOutloop(_))));
    }

    #[test]
    fn interpret_examples() {
        assert_eq!(ScrollStructure::new().interpret().unwrap(), Formula::Top);
        assert_eq!(mp().interpret().unwrap().to_string(), "a & (a => b)");
        let s = ScrollStructure::parse("[a b ; c]").unwrap();
        assert_eq!(s.interpret().unwrap().to_string(), "(a & b) => c");
    }

    #[test]
    fn text_round_trip() {
        let s = ScrollStructure::parse("a [a ; b]").unwrap();
        assert!(s.validate().is_ok());
        assert_eq!(s.to_text().unwrap(), "a [a ; b]");
        assert!(ScrollStructure::parse("").unwrap().is_empty());
        let t = ScrollStructure::parse("[ ; a]").unwrap();
        assert_eq!(t.interpret().unwrap().to_string(), "T => a");
        assert!(matches!(ScrollStructure::parse("[a ; b"), Err(Error::Syntax { pos: 6, .. })));
        assert!(matches!(ScrollStructure::parse("a ]"), Err(Error::Syntax { pos: 2, .. })));
        assert!(ScrollStructure::parse("A").is_err());
    }

    pub(crate) fn shared_outloop() -> ScrollStructure {
        // `[a ; b] [c ; b]` with a single b shared by both inloops.
        let mut s = ScrollStructure::new();
        s.add_sep("o1").add_sep("i1").attach("o1", "i1").add_atom("a", "a").add_edge("o1", "a");
        s.add_sep("o2").add_sep("i2").attach("o2", "i2").add_atom("c", "c").add_edge("o2", "c");
        s.add_atom("b", "b").add_edge("i1", "b").add_edge("i2", "b");
        s
    }

    #[test]
    fn json_round_trip() {
        let s = mp();
        let back = ScrollStructure::decode_json(&s.encode_json()).unwrap();
        assert_eq!(back, s);
        let f = shared_outloop();
        assert_eq!(ScrollStructure::decode_json(&f.encode_json()).unwrap(), f);
        assert!(matches!(f.interpret(), Err(Error::NotInterpretable(_))));
        assert!(matches!(f.to_text(), Err(Error::SharingNotPrintable(_))));
        let bad = r#"{"nodes":[{"id":"s"},{"id":"i"}],"edges":[],"attachments":[["s","i"]]}"#;
        match ScrollStructure::decode_json(bad) {
            Err(Error::InvalidStructure(r)) => assert!(r.has("Attachments-are-edges")),
            other => panic!("{other:?}"),
        }
        let unknown = r#"{"nodes":[{"id":"s","colour":1}]}"#;
        match ScrollStructure::decode_json(unknown) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "nodes[0].colour"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sharing_prune_keeps_shared_child() {
        let f = shared_outloop();
        let p = f.prune(&id("o1")).unwrap();
        assert!(p.contains(&id("b")));
        assert!(p.validate().is_ok());
        assert_eq!(p.interpret().unwrap().to_string(), "c => b");
        let c = f.collapse(&id("o1")).unwrap();
        assert!(c.contains(&id("b")));
        assert_eq!(c.interpret().unwrap().to_string(), "c => b");
    }
}
