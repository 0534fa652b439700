//! The nine derivation rules, traces and replay.
//!
//! Every location premiss (liveness, siblinghood, parents, scope) is read on
//! the current conclusion ⌊𝔖⌋: a node is *live* when it survives there.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RuleError};
use crate::id::NodeId;
use crate::iso;
use crate::net::{atom_palette, creates_cycle, EditState, ScrollNet, Side};
use crate::structure::{Polarity, ScrollStructure, StructureJson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    OpenPos,
    OpenNeg,
    ClosePos,
    CloseNeg,
    Insert,
    Delete,
    IterateRoot,
    IterateDeep,
    Deiterate,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// How a rule names the nodes it creates.
///
/// A prefix `p` gives `p` and `p'` for the two seps of an opened scroll, and
/// `p.0`, `p.1`, … in preorder for copies. An explicit list is used in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fresh {
    Prefix(String),
    Ids(Vec<NodeId>),
}

impl From<&str> for Fresh {
    fn from(s: &str) -> Self {
        Fresh::Prefix(s.to_string())
    }
}

mod payload_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &ScrollStructure, s: S) -> std::result::Result<S::Ok, S::Error> {
        p.to_json().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ScrollStructure, D::Error> {
        let raw = StructureJson::deserialize(d)?;
        ScrollStructure::from_json(raw).map_err(serde::de::Error::custom)
    }
}

/// One derivation step, as serialized in scripts and certificates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "rule", deny_unknown_fields)]
pub enum Step {
    OpenPos {
        targets: Vec<NodeId>,
        #[serde(default)]
        parent: Option<NodeId>,
        fresh: Fresh,
    },
    OpenNeg {
        targets: Vec<NodeId>,
        #[serde(default)]
        parent: Option<NodeId>,
        fresh: Fresh,
    },
    ClosePos {
        target: NodeId,
    },
    CloseNeg {
        target: NodeId,
    },
    Insert {
        parent: NodeId,
        #[serde(with = "payload_serde")]
        payload: ScrollStructure,
        fresh: Fresh,
    },
    Delete {
        target: NodeId,
    },
    IterateRoot {
        source: NodeId,
        fresh: Fresh,
    },
    IterateDeep {
        source: NodeId,
        parent: NodeId,
        fresh: Fresh,
    },
    Deiterate {
        source: NodeId,
        target: NodeId,
    },
}

impl Step {
    pub fn kind(&self) -> RuleKind {
        match self {
            Step::OpenPos { .. } => RuleKind::OpenPos,
            Step::OpenNeg { .. } => RuleKind::OpenNeg,
            Step::ClosePos { .. } => RuleKind::ClosePos,
            Step::CloseNeg { .. } => RuleKind::CloseNeg,
            Step::Insert { .. } => RuleKind::Insert,
            Step::Delete { .. } => RuleKind::Delete,
            Step::IterateRoot { .. } => RuleKind::IterateRoot,
            Step::IterateDeep { .. } => RuleKind::IterateDeep,
            Step::Deiterate { .. } => RuleKind::Deiterate,
        }
    }

    /// Existing nodes the step refers to.
    pub fn references(&self) -> Vec<&NodeId> {
        match self {
            Step::OpenPos { targets, parent, .. } | Step::OpenNeg { targets, parent, .. } => {
                targets.iter().chain(parent.iter()).collect()
            }
            Step::ClosePos { target } | Step::CloseNeg { target } | Step::Delete { target } => vec![target],
            Step::Insert { parent, .. } => vec![parent],
            Step::IterateRoot { source, .. } => vec![source],
            Step::IterateDeep { source, parent, .. } => vec![source, parent],
            Step::Deiterate { source, target } => vec![source, target],
        }
    }

    pub fn touches(&self, v: &NodeId) -> bool {
        self.references().into_iter().any(|r| r == v)
    }

    pub fn fresh(&self) -> Option<&Fresh> {
        match self {
            Step::OpenPos { fresh, .. }
            | Step::OpenNeg { fresh, .. }
            | Step::Insert { fresh, .. }
            | Step::IterateRoot { fresh, .. }
            | Step::IterateDeep { fresh, .. } => Some(fresh),
            _ => None,
        }
    }

    /// Renames references through `f` and replaces the fresh-id policy.
    pub fn relabel(&self, f: impl Fn(&NodeId) -> NodeId, new_fresh: Option<Fresh>) -> Step {
        let fr = |old: &Fresh| new_fresh.clone().unwrap_or_else(|| old.clone());
        match self {
            Step::OpenPos { targets, parent, fresh } => Step::OpenPos {
                targets: targets.iter().map(&f).collect(),
                parent: parent.as_ref().map(&f),
                fresh: fr(fresh),
            },
            Step::OpenNeg { targets, parent, fresh } => Step::OpenNeg {
                targets: targets.iter().map(&f).collect(),
                parent: parent.as_ref().map(&f),
                fresh: fr(fresh),
            },
            Step::ClosePos { target } => Step::ClosePos { target: f(target) },
            Step::CloseNeg { target } => Step::CloseNeg { target: f(target) },
            Step::Insert { parent, payload, fresh } => {
                Step::Insert { parent: f(parent), payload: payload.clone(), fresh: fr(fresh) }
            }
            Step::Delete { target } => Step::Delete { target: f(target) },
            Step::IterateRoot { source, fresh } => Step::IterateRoot { source: f(source), fresh: fr(fresh) },
            Step::IterateDeep { source, parent, fresh } => {
                Step::IterateDeep { source: f(source), parent: f(parent), fresh: fr(fresh) }
            }
            Step::Deiterate { source, target } => Step::Deiterate { source: f(source), target: f(target) },
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

/// A derivation: steps replayed from an arrow-free origin.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Trace {
    pub origin: ScrollStructure,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceJson {
    pub origin: StructureJson,
    #[serde(default)]
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn new(origin: ScrollStructure, steps: Vec<Step>) -> Self {
        Trace { origin, steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_json(&self) -> TraceJson {
        TraceJson { origin: self.origin.to_json(), steps: self.steps.clone() }
    }

    pub fn from_json(raw: TraceJson) -> Result<Trace> {
        Ok(Trace { origin: ScrollStructure::from_json(raw.origin)?, steps: raw.steps })
    }

    pub fn encode_json(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("trace serializes")
    }

    pub fn decode_json(src: &str) -> Result<Trace> {
        Trace::from_json(crate::json::from_str(src)?)
    }

    /// Replays the trace from its origin.
    pub fn replay(&self) -> Result<ScrollNet> {
        replay(&self.origin, &self.steps)
    }
}

/// Cached facts about a net that every premiss check needs.
pub(crate) struct View<'a> {
    pub net: &'a ScrollNet,
    pub pol: BTreeMap<NodeId, Polarity>,
    pub es: EditState,
    /// ⌊𝔖⌋
    pub concl: ScrollStructure,
    prem: OnceCell<ScrollStructure>,
}

impl<'a> View<'a> {
    pub fn new(net: &'a ScrollNet) -> Result<View<'a>> {
        let pol = net.structure.polarities()?;
        let es = net.edit_state_with(&pol);
        let concl = net.boundary_with(&es, Side::Conclusion);
        Ok(View { net, pol, es, concl, prem: OnceCell::new() })
    }

    /// ⌈𝔖⌉, computed on first use.
    fn premiss(&self) -> &ScrollStructure {
        self.prem.get_or_init(|| self.net.boundary_with(&self.es, Side::Premiss))
    }

    fn live(&self, v: &NodeId) -> bool {
        self.concl.contains(v)
    }

    fn polarity(&self, v: &NodeId) -> Option<Polarity> {
        self.pol.get(v).copied()
    }

    fn is_inloop(&self, v: &NodeId) -> bool {
        self.net.structure.is_inloop(v)
    }

    /// Some `v0 ≠ u` that is a sibling of `u` in ⌊𝔖⌋ with `v0 →* v`.
    fn in_scope(&self, u: &NodeId, v: &NodeId) -> bool {
        let c = &self.concl;
        let parents: Vec<&NodeId> = c.parents(u).collect();
        let siblings: Vec<NodeId> = match parents.first() {
            None => c.roots().cloned().collect(),
            Some(p) => c.children(p).cloned().collect(),
        };
        siblings.iter().filter(|s| *s != u).filter(|s| c.parents(s).eq(parents.iter().copied())).any(|s| c.reaches(s, v))
    }
}

/// What a step will do once its premisses hold.
#[derive(Clone)]
pub(crate) enum Plan {
    Open { parents: Vec<NodeId>, targets: Vec<NodeId>, u: NodeId, u2: NodeId, positive: bool },
    Close { pair: (NodeId, NodeId), into_collapses: bool },
    Graft { parent: Option<NodeId>, copy: ScrollStructure, ids: Vec<NodeId>, justifier: Option<NodeId> },
    Delete { target: NodeId },
    Deiterate { source: NodeId, target: NodeId },
}

fn fail(rule: RuleKind, premiss: &'static str, detail: impl Into<String>) -> RuleError {
    RuleError::new(rule, premiss, detail)
}

fn unused(s: &ScrollStructure, ids: &[NodeId], rule: RuleKind) -> Result<(), RuleError> {
    let mut seen = BTreeSet::new();
    for v in ids {
        if v.as_str().is_empty() || s.contains(v) || !seen.insert(v) {
            return Err(fail(rule, "fresh", format!("id `{v}` is not fresh")));
        }
    }
    Ok(())
}

/// Renames `src` into fresh ids, assigned in preorder.
fn fresh_copy(
    src: &ScrollStructure,
    fresh: &Fresh,
    host: &ScrollStructure,
    rule: RuleKind,
) -> Result<(ScrollStructure, Vec<NodeId>), RuleError> {
    let order = src.preorder();
    let ids: Vec<NodeId> = match fresh {
        Fresh::Prefix(p) => (0..order.len()).map(|k| NodeId::new(format!("{p}.{k}"))).collect(),
        Fresh::Ids(list) => {
            if list.len() != order.len() {
                return Err(fail(rule, "fresh", format!("{} ids given, {} needed", list.len(), order.len())));
            }
            list.clone()
        }
    };
    unused(host, &ids, rule)?;
    let map: BTreeMap<NodeId, NodeId> = order.into_iter().zip(ids.iter().cloned()).collect();
    Ok((src.map_ids(|v| map[v].clone()), ids))
}

fn open_ids(fresh: &Fresh, rule: RuleKind) -> Result<(NodeId, NodeId), RuleError> {
    match fresh {
        Fresh::Prefix(p) => Ok((NodeId::new(p), NodeId::new(format!("{p}'")))),
        Fresh::Ids(v) if v.len() == 2 => Ok((v[0].clone(), v[1].clone())),
        Fresh::Ids(v) => Err(fail(rule, "fresh", format!("{} ids given, 2 needed", v.len()))),
    }
}

pub(crate) fn check(view: &View<'_>, step: &Step) -> Result<Plan, RuleError> {
    let rule = step.kind();
    let s = &view.net.structure;
    let c = &view.concl;
    let live = |v: &NodeId, premiss: &'static str| {
        if view.live(v) {
            Ok(())
        } else if s.contains(v) {
            Err(fail(rule, premiss, format!("`{v}` is not in the current conclusion")))
        } else {
            Err(fail(rule, premiss, format!("unknown node `{v}`")))
        }
    };
    let polarity = |v: &NodeId, want: Polarity| {
        if view.polarity(v) == Some(want) {
            Ok(())
        } else {
            Err(fail(rule, "polarity", format!("`{v}` is not {want:?}").to_lowercase()))
        }
    };
    let not_inloop = |v: &NodeId| {
        if view.is_inloop(v) {
            Err(fail(rule, "not-inloop", format!("`{v}` is an inloop")))
        } else {
            Ok(())
        }
    };
    match step {
        Step::OpenPos { targets, parent, fresh } | Step::OpenNeg { targets, parent, fresh } => {
            let positive = rule == RuleKind::OpenPos;
            let want = if positive { Polarity::Positive } else { Polarity::Negative };
            for t in targets {
                live(t, "targets-live")?;
                not_inloop(t)?;
                polarity(t, want)?;
            }
            let distinct: BTreeSet<&NodeId> = targets.iter().collect();
            if distinct.len() != targets.len() {
                return Err(fail(rule, "siblings", "targets repeat"));
            }
            let parents: Vec<NodeId> = match targets.first() {
                Some(t0) => {
                    let p0: Vec<NodeId> = c.parents(t0).cloned().collect();
                    for t in &targets[1..] {
                        if !c.parents(t).eq(p0.iter()) {
                            return Err(fail(rule, "siblings", format!("`{t0}` and `{t}` are not siblings")));
                        }
                    }
                    if let Some(w) = parent {
                        if !p0.contains(w) {
                            return Err(fail(rule, "parent", format!("`{w}` is not a parent of the targets")));
                        }
                    }
                    p0
                }
                None => match parent {
                    None => {
                        if !positive {
                            return Err(fail(rule, "polarity", "the sheet is a positive area"));
                        }
                        Vec::new()
                    }
                    Some(w) => {
                        live(w, "parent")?;
                        if s.is_atom(w) {
                            return Err(fail(rule, "parent", format!("`{w}` is an atom")));
                        }
                        polarity(w, want.flip())?;
                        vec![w.clone()]
                    }
                },
            };
            let (u, u2) = open_ids(fresh, rule)?;
            unused(s, &[u.clone(), u2.clone()], rule)?;
            let plan = Plan::Open { parents: parents.clone(), targets: targets.clone(), u: u.clone(), u2: u2.clone(), positive };
            // A target whose structure parents are not its conclusion parents
            // hangs below closed inloops and ends up shared. That is allowed
            // only when both boundaries come out as for an unshared Open.
            let shared = targets.iter().any(|t| s.parents(t).any(|p| !parents.contains(p)));
            if shared {
                let (after, _) = execute(view.net, plan.clone());
                let es = after.edit_state().map_err(|e| fail(rule, "sharing", e.to_string()))?;
                let mut want = view.concl.clone();
                wrap(&mut want, &parents, targets, &u, &u2);
                if after.boundary_with(&es, Side::Premiss) != *view.premiss()
                    || after.boundary_with(&es, Side::Conclusion) != want
                {
                    let t = targets.iter().find(|t| s.parents(t).any(|p| !parents.contains(p))).expect("shared");
                    return Err(fail(rule, "sharing", format!("`{t}` cannot be shared with a closed inloop")));
                }
            }
            Ok(plan)
        }
        Step::ClosePos { target: v } | Step::CloseNeg { target: v } => {
            let positive = rule == RuleKind::ClosePos;
            live(v, "target-live")?;
            let u = s
                .inloop_of(v)
                .cloned()
                .ok_or_else(|| fail(rule, "attachment", format!("`{v}` is not an outloop")))?;
            polarity(v, if positive { Polarity::Positive } else { Polarity::Negative })?;
            if !c.children(v).eq([&u]) {
                return Err(fail(rule, "discharged", format!("the outloop of `{v}` is not empty in the conclusion")));
            }
            if view.es.eliminated.contains(v) {
                return Err(fail(rule, "not-eliminated", format!("`{v}` is eliminated")));
            }
            let pair = (v.clone(), u);
            let set = if positive { &view.net.collapses } else { &view.net.expansions };
            if set.contains(&pair) {
                return Err(fail(rule, "not-closed", format!("`{v}` is already closed")));
            }
            Ok(Plan::Close { pair, into_collapses: positive })
        }
        Step::Insert { parent: v, payload, fresh } => {
            live(v, "parent")?;
            if s.is_atom(v) {
                return Err(fail(rule, "unlabeled", format!("`{v}` is an atom")));
            }
            polarity(v, Polarity::Positive)?;
            let report = payload.validate();
            if !report.is_ok() {
                return Err(fail(rule, "payload", format!("invalid payload: {report}")));
            }
            if payload.roots().count() != 1 || !payload.is_forest() {
                return Err(fail(rule, "payload", "payload must be a tree"));
            }
            let (copy, ids) = fresh_copy(payload, fresh, s, rule)?;
            Ok(Plan::Graft { parent: Some(v.clone()), copy, ids, justifier: None })
        }
        Step::Delete { target: v } => {
            live(v, "target-live")?;
            not_inloop(v)?;
            polarity(v, Polarity::Positive)?;
            if view.net.self_justifications.contains(v) {
                return Err(fail(rule, "not-self-justified", format!("`{v}` is already deleted")));
            }
            if view.es.closed.contains(v) {
                return Err(fail(rule, "not-closed", format!("`{v}` is closed")));
            }
            Ok(Plan::Delete { target: v.clone() })
        }
        Step::IterateRoot { source: u, fresh } => {
            live(u, "source")?;
            not_inloop(u)?;
            if c.parents(u).next().is_some() {
                return Err(fail(rule, "root", format!("`{u}` is not a root of the conclusion")));
            }
            let src = c.reachable(u).expect("live");
            let (copy, ids) = fresh_copy(&src, fresh, s, rule)?;
            Ok(Plan::Graft { parent: None, copy, ids, justifier: Some(u.clone()) })
        }
        Step::IterateDeep { source: u, parent: v, fresh } => {
            live(v, "parent")?;
            if s.is_atom(v) {
                return Err(fail(rule, "unlabeled", format!("`{v}` is an atom")));
            }
            polarity(v, Polarity::Negative)?;
            live(u, "source")?;
            not_inloop(u)?;
            let same_area = c.parents(u).any(|p| p == v);
            if !same_area && !view.in_scope(u, v) {
                return Err(fail(rule, "scope", format!("`{v}` is not in the scope of `{u}`")));
            }
            let src = c.reachable(u).expect("live");
            let (copy, ids) = fresh_copy(&src, fresh, s, rule)?;
            Ok(Plan::Graft { parent: Some(v.clone()), copy, ids, justifier: Some(u.clone()) })
        }
        Step::Deiterate { source: u, target: v } => {
            live(v, "target-live")?;
            not_inloop(v)?;
            polarity(v, Polarity::Negative)?;
            if view.net.has_incoming_justification(v) {
                return Err(fail(rule, "target-fresh", format!("`{v}` is already justified")));
            }
            live(u, "source")?;
            not_inloop(u)?;
            if u == v || !view.in_scope(u, v) {
                return Err(fail(rule, "scope", format!("`{v}` is not in the scope of `{u}`")));
            }
            let a = c.reachable(u).expect("live");
            let b = c.reachable(v).expect("live");
            if !iso::isomorphic(&a, &b) {
                return Err(fail(rule, "shape", format!("`{u}` and `{v}` differ in the conclusion")));
            }
            if creates_cycle(&view.net.justifications, u, v) {
                return Err(fail(rule, "acyclic", format!("`{u}` ↷ `{v}` closes a cycle")));
            }
            if view.es.closed.contains(v) {
                return Err(fail(rule, "not-closed", format!("`{v}` is closed")));
            }
            Ok(Plan::Deiterate { source: u.clone(), target: v.clone() })
        }
    }
}

/// Moves `targets` from below `parents` into the new scroll `u ⋈ u2`.
fn wrap(s: &mut ScrollStructure, parents: &[NodeId], targets: &[NodeId], u: &NodeId, u2: &NodeId) {
    for w in parents {
        for t in targets {
            s.remove_edge(w, t);
        }
    }
    s.add_sep(u.clone()).add_sep(u2.clone()).attach(u.clone(), u2.clone());
    for w in parents {
        s.add_edge(w.clone(), u.clone());
    }
    for t in targets {
        s.add_edge(u2.clone(), t.clone());
    }
}

/// Executes a checked plan, returning the new net and the ids it created.
pub(crate) fn execute(net: &ScrollNet, plan: Plan) -> (ScrollNet, Vec<NodeId>) {
    let mut n = net.clone();
    let created = match plan {
        Plan::Open { parents, targets, u, u2, positive } => {
            wrap(&mut n.structure, &parents, &targets, &u, &u2);
            let pair = (u.clone(), u2.clone());
            if positive {
                n.expansions.insert(pair);
            } else {
                n.collapses.insert(pair);
            }
            vec![u, u2]
        }
        Plan::Close { pair, into_collapses } => {
            if into_collapses {
                n.collapses.insert(pair);
            } else {
                n.expansions.insert(pair);
            }
            Vec::new()
        }
        Plan::Graft { parent, copy, ids, justifier } => {
            n.structure.absorb(&copy);
            let root = ids[0].clone();
            if let Some(p) = parent {
                n.structure.add_edge(p, root.clone());
            }
            match justifier {
                Some(src) => {
                    n.justifications.insert((src, root));
                }
                None => {
                    n.self_justifications.insert(root);
                }
            }
            ids
        }
        Plan::Delete { target } => {
            n.self_justifications.insert(target);
            Vec::new()
        }
        Plan::Deiterate { source, target } => {
            n.justifications.insert((source, target));
            Vec::new()
        }
    };
    (n, created)
}

/// Applies one step, also returning the ids it created. If the net carries a
/// certificate, the step is appended to it.
pub fn apply_traced(net: &ScrollNet, step: &Step) -> Result<(ScrollNet, Vec<NodeId>)> {
    let view = View::new(net)?;
    let plan = check(&view, step)?;
    let (mut out, created) = execute(net, plan);
    if let Some(t) = &mut out.certificate {
        t.steps.push(step.clone());
    }
    Ok((out, created))
}

pub fn apply(net: &ScrollNet, step: &Step) -> Result<ScrollNet> {
    Ok(apply_traced(net, step)?.0)
}

/// Whether every premiss of `step` holds on `net`.
pub fn applicable(net: &ScrollNet, step: &Step) -> Result<(), RuleError> {
    let view = View::new(net).map_err(|e| fail(step.kind(), "net", e.to_string()))?;
    check(&view, step).map(|_| ())
}

/// Applies `steps` to `origin` in order, recording them as the certificate.
pub fn replay(origin: &ScrollStructure, steps: &[Step]) -> Result<ScrollNet> {
    let report = origin.validate();
    if !report.is_ok() {
        return Err(Error::InvalidStructure(report));
    }
    let mut net = ScrollNet::new(origin.clone());
    for (index, step) in steps.iter().enumerate() {
        let view = View::new(&net)?;
        let plan = check(&view, step).map_err(|source| Error::Replay { index, source })?;
        net = execute(&net, plan).0;
    }
    net.certificate = Some(Trace::new(origin.clone(), steps.to_vec()));
    Ok(net)
}

/// The smallest `f<k>` that names no node and prefixes no node id.
pub fn fresh_prefix(s: &ScrollStructure) -> String {
    (0..)
        .map(|k| format!("f{k}"))
        .find(|p| {
            !s.node_ids().any(|v| {
                let v = v.as_str();
                v == p || v.strip_prefix(p.as_str()).is_some_and(|r| r.starts_with('.') || r.starts_with('\''))
            })
        })
        .expect("some prefix is free")
}

/// Insert payloads with at most `bound` atoms drawn from `atoms`: single atoms
/// and scrolls whose two sides are atom lists.
pub fn payloads(atoms: &[crate::id::Atom], bound: usize) -> Vec<ScrollStructure> {
    let mut out = Vec::new();
    if bound >= 1 {
        for a in atoms {
            let mut s = ScrollStructure::new();
            s.add_atom("p", a.clone());
            out.push(s);
        }
    }
    // Multisets of atoms of size ≤ bound, as sorted index lists.
    let mut bags: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..bound {
        let mut next = Vec::new();
        for b in &frontier {
            let from = b.last().copied().unwrap_or(0);
            for k in from..atoms.len() {
                let mut nb = b.clone();
                nb.push(k);
                next.push(nb);
            }
        }
        bags.extend(next.iter().cloned());
        frontier = next;
    }
    for lhs in &bags {
        for rhs in &bags {
            if lhs.len() + rhs.len() > bound {
                continue;
            }
            let mut s = ScrollStructure::new();
            s.add_sep("o").add_sep("i").attach("o", "i");
            for (k, &a) in lhs.iter().enumerate() {
                let id = format!("l{k}");
                s.add_atom(id.as_str(), atoms[a].clone()).add_edge("o", id.as_str());
            }
            for (k, &a) in rhs.iter().enumerate() {
                let id = format!("r{k}");
                s.add_atom(id.as_str(), atoms[a].clone()).add_edge("i", id.as_str());
            }
            out.push(s);
        }
    }
    out
}

fn subsets(group: &[NodeId]) -> Vec<Vec<NodeId>> {
    if group.len() <= 6 {
        (1u32..(1 << group.len()))
            .map(|mask| group.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, v)| v.clone()).collect())
            .collect()
    } else {
        let mut out: Vec<Vec<NodeId>> = group.iter().map(|v| vec![v.clone()]).collect();
        out.push(group.to_vec());
        out
    }
}

/// Every applicable step, optionally only those touching `at`. Insert
/// payloads come from [`payloads`] with the given bound.
pub fn enumerate_applicable(net: &ScrollNet, at: Option<&NodeId>, payload_bound: usize) -> Result<Vec<Step>> {
    let list = payloads(&atom_palette(net), payload_bound);
    enumerate_with_payloads(net, at, &list)
}

/// Like [`enumerate_applicable`] with caller-chosen Insert payloads.
pub fn enumerate_with_payloads(net: &ScrollNet, at: Option<&NodeId>, payloads: &[ScrollStructure]) -> Result<Vec<Step>> {
    let view = View::new(net)?;
    let prefix = fresh_prefix(&net.structure);
    let mut cands = candidates(&view, payloads, &prefix, None);
    if let Some(a) = at {
        cands.retain(|st| st.touches(a));
    }
    Ok(cands.into_iter().filter(|st| check(&view, st).is_ok()).collect())
}

/// Steps worth checking: every rule at every plausible location. Only
/// structural filters are applied here. With `only`, other rules are skipped.
pub(crate) fn candidates(view: &View<'_>, payloads: &[ScrollStructure], prefix: &str, only: Option<RuleKind>) -> Vec<Step> {
    let c = &view.concl;
    let s = &view.net.structure;
    let want = |k: RuleKind| only.is_none_or(|o| o == k);
    let fresh = || Fresh::Prefix(prefix.to_string());
    let live: Vec<NodeId> = c.node_ids().cloned().collect();
    let mut cands: Vec<Step> = Vec::new();

    if want(RuleKind::OpenPos) || want(RuleKind::OpenNeg) {
        // Sibling groups by (parents in the conclusion, polarity).
        let mut groups: BTreeMap<(Vec<NodeId>, bool), Vec<NodeId>> = BTreeMap::new();
        for v in &live {
            if s.is_inloop(v) {
                continue;
            }
            let pos = view.polarity(v) == Some(Polarity::Positive);
            groups.entry((c.parents(v).cloned().collect(), pos)).or_default().push(v.clone());
        }
        for ((_, pos), group) in &groups {
            for targets in subsets(group) {
                if *pos && want(RuleKind::OpenPos) {
                    cands.push(Step::OpenPos { targets, parent: None, fresh: fresh() });
                } else if !*pos && want(RuleKind::OpenNeg) {
                    cands.push(Step::OpenNeg { targets, parent: None, fresh: fresh() });
                }
            }
        }
        if want(RuleKind::OpenPos) {
            cands.push(Step::OpenPos { targets: Vec::new(), parent: None, fresh: fresh() });
        }
        for w in &live {
            if s.is_atom(w) {
                continue;
            }
            let parent = Some(w.clone());
            match view.polarity(w) {
                Some(Polarity::Negative) if want(RuleKind::OpenPos) => {
                    cands.push(Step::OpenPos { targets: Vec::new(), parent, fresh: fresh() })
                }
                Some(Polarity::Positive) if want(RuleKind::OpenNeg) => {
                    cands.push(Step::OpenNeg { targets: Vec::new(), parent, fresh: fresh() })
                }
                _ => {}
            }
        }
    }
    for v in &live {
        let pos = view.polarity(v) == Some(Polarity::Positive);
        if s.is_outloop(v) {
            if pos && want(RuleKind::ClosePos) {
                cands.push(Step::ClosePos { target: v.clone() });
            } else if !pos && want(RuleKind::CloseNeg) {
                cands.push(Step::CloseNeg { target: v.clone() });
            }
        }
        if want(RuleKind::Insert) && !s.is_atom(v) && pos {
            for p in payloads {
                cands.push(Step::Insert { parent: v.clone(), payload: p.clone(), fresh: fresh() });
            }
        }
        if want(RuleKind::Delete) && pos && !s.is_inloop(v) {
            cands.push(Step::Delete { target: v.clone() });
        }
        if want(RuleKind::IterateRoot) && c.parents(v).next().is_none() {
            cands.push(Step::IterateRoot { source: v.clone(), fresh: fresh() });
        }
    }
    if want(RuleKind::IterateDeep) || want(RuleKind::Deiterate) {
        for u in &live {
            if s.is_inloop(u) {
                continue;
            }
            for v in &live {
                if u == v || view.polarity(v) != Some(Polarity::Negative) {
                    continue;
                }
                if want(RuleKind::IterateDeep) && !s.is_atom(v) {
                    cands.push(Step::IterateDeep { source: u.clone(), parent: v.clone(), fresh: fresh() });
                }
                if want(RuleKind::Deiterate) && !s.is_inloop(v) && s.label(u) == s.label(v) {
                    cands.push(Step::Deiterate { source: u.clone(), target: v.clone() });
                }
            }
        }
    }
    cands
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::iso::isomorphic;
    use crate::structure::tests::{id, mp};

    pub(crate) fn mp_steps() -> Vec<Step> {
        vec![
            Step::Deiterate { source: id("a1"), target: id("a2") },
            Step::ClosePos { target: id("s") },
            Step::Delete { target: id("a1") },
        ]
    }

    pub(crate) fn text(s: &str) -> ScrollStructure {
        ScrollStructure::parse(s).unwrap()
    }

    #[test]
    fn mp_replay() {
        let n = replay(&mp(), &mp_steps()).unwrap();
        assert_eq!(n, crate::net::tests::mp_derived());
        assert_eq!(n.premiss().unwrap().to_text().unwrap(), "a [a ; b]");
        assert_eq!(n.conclusion().unwrap().to_text().unwrap(), "b");
        assert_eq!(n.certificate().unwrap().steps.len(), 3);
    }

    pub(crate) fn identity_steps() -> Vec<Step> {
        vec![
            Step::OpenPos { targets: vec![], parent: None, fresh: "u".into() },
            Step::Insert { parent: id("u"), payload: text("a"), fresh: "h".into() },
            Step::IterateDeep { source: id("h.0"), parent: id("u'"), fresh: "c".into() },
        ]
    }

    #[test]
    fn identity_construction() {
        let n = replay(&ScrollStructure::new(), &identity_steps()).unwrap();
        assert!(n.validate().is_ok());
        assert!(n.is_complete().unwrap());
        assert_eq!(n.conclusion().unwrap().to_text().unwrap(), "[a ; a]");
    }

    #[test]
    fn open_examples() {
        let n = apply(&ScrollNet::default(), &Step::OpenPos { targets: vec![], parent: None, fresh: "u".into() })
            .unwrap();
        assert_eq!(n.structure().to_text().unwrap(), "[ ; ]");
        assert!(n.expansions().contains(&(id("u"), id("u'"))));

        let ab = ScrollNet::new(text("a b"));
        let n = apply(&ab, &Step::OpenPos { targets: vec![id("n1"), id("n2")], parent: None, fresh: "u".into() })
            .unwrap();
        assert!(isomorphic(&n.premiss().unwrap(), &text("a b")));
        assert_eq!(n.conclusion().unwrap().interpret().unwrap().to_string(), "T => (a & b)");

        let sc = ScrollNet::new(text("[a ; b]"));
        let n = apply(&sc, &Step::OpenNeg { targets: vec![id("n3")], parent: None, fresh: "u".into() }).unwrap();
        assert!(n.collapses().contains(&(id("u"), id("u'"))));
        assert!(n.validate().is_ok());
        assert!(isomorphic(&n.premiss().unwrap(), &text("[a ; b]")));

        let mixed = Step::OpenPos { targets: vec![id("a1"), id("a2")], parent: None, fresh: "u".into() };
        let e = applicable(&ScrollNet::new(mp()), &mixed).unwrap_err();
        assert_eq!(e.premiss, "polarity");
        let apart = Step::OpenPos { targets: vec![id("a1"), id("b1")], parent: None, fresh: "u".into() };
        assert_eq!(applicable(&ScrollNet::new(mp()), &apart).unwrap_err().premiss, "siblings");
        let neg_root = Step::OpenNeg { targets: vec![], parent: None, fresh: "u".into() };
        assert_eq!(applicable(&ScrollNet::default(), &neg_root).unwrap_err().premiss, "polarity");
    }

    #[test]
    fn close_examples() {
        let n = replay(&mp(), &mp_steps()[..2]).unwrap();
        assert_eq!(n.collapses().iter().cloned().collect::<Vec<_>>(), vec![(id("s"), id("i"))]);
        let e = applicable(&ScrollNet::new(text("[a ; b]")), &Step::ClosePos { target: id("n1") }).unwrap_err();
        assert_eq!(e.premiss, "discharged");
        // A closed scroll leaves the conclusion, so it cannot be closed again.
        let e = applicable(&n, &Step::ClosePos { target: id("s") }).unwrap_err();
        assert_eq!(e.premiss, "target-live");
        // An empty negative scroll opened by OpenNeg can be closed negatively.
        let base = ScrollNet::new(text("[ ; b]"));
        let open = apply(&base, &Step::OpenNeg { targets: vec![], parent: Some(id("n1")), fresh: "u".into() }).unwrap();
        let closed = apply(&open, &Step::CloseNeg { target: id("u") }).unwrap();
        assert!(closed.expansions().contains(&(id("u"), id("u'"))));
    }

    #[test]
    fn insert_examples() {
        let open = apply(&ScrollNet::default(), &Step::OpenPos { targets: vec![], parent: None, fresh: "u".into() })
            .unwrap();
        let n = apply(&open, &Step::Insert { parent: id("u"), payload: text("a"), fresh: "p".into() }).unwrap();
        assert_eq!(n.structure().to_text().unwrap(), "[a ; ]");
        assert!(n.self_justifications().contains(&id("p.0")));
        let m = apply(&open, &Step::Insert { parent: id("u"), payload: text("[a ; b]"), fresh: "p".into() }).unwrap();
        assert_eq!(m.self_justifications().len(), 1);
        assert_eq!(m.structure().to_text().unwrap(), "[[a ; b] ; ]");
        let e = applicable(&ScrollNet::new(mp()), &Step::Insert { parent: id("a1"), payload: text("a"), fresh: "p".into() })
            .unwrap_err();
        assert_eq!(e.premiss, "unlabeled");
        let e = applicable(&open, &Step::Insert { parent: id("u"), payload: text("a b"), fresh: "p".into() }).unwrap_err();
        assert_eq!(e.premiss, "payload");
    }

    #[test]
    fn delete_examples() {
        let n = replay(&mp(), &mp_steps()).unwrap();
        assert!(n.self_justifications().contains(&id("a1")));
        let e = applicable(&ScrollNet::new(mp()), &Step::Delete { target: id("a2") }).unwrap_err();
        assert_eq!(e.premiss, "polarity");
        let once = apply(&ScrollNet::new(mp()), &Step::Delete { target: id("a1") }).unwrap();
        // Deleted nodes leave the conclusion, so a second deletion cannot find it.
        assert!(applicable(&once, &Step::Delete { target: id("a1") }).is_err());
    }

    #[test]
    fn iterate_root_examples() {
        let n = apply(&ScrollNet::new(text("a")), &Step::IterateRoot { source: id("n1"), fresh: "c".into() }).unwrap();
        assert_eq!(n.structure().to_text().unwrap(), "a a");
        assert!(n.justifications().contains(&(id("n1"), id("c.0"))));
        let m = apply(&ScrollNet::new(text("[a ; b]")), &Step::IterateRoot { source: id("n1"), fresh: "c".into() })
            .unwrap();
        assert_eq!(m.structure().to_text().unwrap(), "[a ; b] [a ; b]");
        // Deleting an inner positive node first means the copy omits it.
        let del = apply(&ScrollNet::new(text("[a ; b]")), &Step::Delete { target: id("n4") }).unwrap();
        let it = apply(&del, &Step::IterateRoot { source: id("n1"), fresh: "c".into() }).unwrap();
        assert!(isomorphic(&it.structure().reachable(&id("c.0")).unwrap(), &text("[a ; ]")));
        let e = applicable(&ScrollNet::new(mp()), &Step::IterateRoot { source: id("a2"), fresh: "c".into() }).unwrap_err();
        assert_eq!(e.premiss, "root");
    }

    #[test]
    fn iterate_deep_examples() {
        let sc = ScrollNet::new(text("[a ; ]"));
        let n = apply(&sc, &Step::IterateDeep { source: id("n3"), parent: id("n2"), fresh: "c".into() }).unwrap();
        assert_eq!(n.structure().to_text().unwrap(), "[a ; a]");
        let far = ScrollNet::new(text("a [b ; ] [c ; ]"));
        // Into the inloop of a sibling scroll is in scope.
        assert!(applicable(&far, &Step::IterateDeep { source: id("n1"), parent: id("n3"), fresh: "c".into() }).is_ok());
        let e = applicable(&far, &Step::IterateDeep { source: id("n1"), parent: id("n2"), fresh: "c".into() }).unwrap_err();
        assert_eq!(e.premiss, "polarity");
        let nested = ScrollNet::new(text("[[a ; ] ; ] [b ; ]"));
        let e = applicable(&nested, &Step::IterateDeep { source: id("n6"), parent: id("n7"), fresh: "c".into() })
            .unwrap_err();
        assert_eq!(e.premiss, "scope");
    }

    #[test]
    fn deiterate_examples() {
        let e = applicable(&ScrollNet::new(text("a [b ; c]")), &Step::Deiterate { source: id("n1"), target: id("n4") })
            .unwrap_err();
        assert_eq!(e.premiss, "shape");
        // a ↷ a' then a' ↷ a" is fine, but a" ↷ a is a cycle (and out of scope).
        let base = ScrollNet::new(text("a [a ; ]"));
        let one = apply(&base, &Step::Deiterate { source: id("n1"), target: id("n4") }).unwrap();
        let e = applicable(&one, &Step::Deiterate { source: id("n4"), target: id("n1") }).unwrap_err();
        assert!(["target-live", "polarity"].contains(&e.premiss), "{e}");
        let mut cyc = ScrollNet::new(text("a [a [a ; ] ; ]"));
        cyc.justify("n4", "n1");
        let e = applicable(&cyc, &Step::Deiterate { source: id("n1"), target: id("n4") }).unwrap_err();
        assert!(["acyclic", "target-live"].contains(&e.premiss), "{e}");
        assert!(!creates_cycle(&cyc.justifications, &id("n1"), &id("n7")));
        assert!(creates_cycle(&cyc.justifications, &id("n1"), &id("n4")));
    }

    #[test]
    fn enumeration_example() {
        let steps = enumerate_applicable(&ScrollNet::new(text("a")), None, 0).unwrap();
        let v = id("n1");
        assert!(steps.contains(&Step::Delete { target: v.clone() }));
        assert!(steps.contains(&Step::IterateRoot { source: v.clone(), fresh: "f0".into() }));
        assert!(steps.contains(&Step::OpenPos { targets: vec![v.clone()], parent: None, fresh: "f0".into() }));
        let at = enumerate_applicable(&replay(&mp(), &mp_steps()[..1]).unwrap(), Some(&id("s")), 1).unwrap();
        assert!(at.contains(&Step::ClosePos { target: id("s") }));
        assert!(at.iter().all(|st| st.touches(&id("s"))));
    }

    #[test]
    fn step_json() {
        let s: Step = serde_json::from_str(r#"{"rule":"Deiterate","source":"a1","target":"a2"}"#).unwrap();
        assert_eq!(s, mp_steps()[0]);
        let o: Step = serde_json::from_str(r#"{"rule":"OpenPos","targets":["x","y"],"parent":null,"fresh":"u3"}"#).unwrap();
        assert_eq!(o.fresh(), Some(&Fresh::Prefix("u3".into())));
        let ins = Step::Insert { parent: id("v"), payload: text("[a ; b]"), fresh: Fresh::Ids(vec![id("x")]) };
        let back: Step = serde_json::from_str(&serde_json::to_string(&ins).unwrap()).unwrap();
        assert_eq!(back, ins);
        assert!(serde_json::from_str::<Step>(r#"{"rule":"Delete","target":"a","extra":1}"#).is_err());
        let t = Trace::new(mp(), mp_steps());
        assert_eq!(Trace::decode_json(&t.encode_json()).unwrap(), t);
    }

    #[test]
    fn replay_reports_index_and_premiss() {
        let steps = vec![mp_steps()[1].clone()];
        match replay(&mp(), &steps) {
            Err(Error::Replay { index: 0, source }) => assert_eq!(source.premiss, "discharged"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fresh_ids_must_be_unused() {
        let e = applicable(&ScrollNet::new(text("a")), &Step::IterateRoot { source: id("n1"), fresh: Fresh::Ids(vec![id("n1")]) })
            .unwrap_err();
        assert_eq!(e.premiss, "fresh");
        assert_eq!(fresh_prefix(&text("a")), "f0");
        let mut s = ScrollStructure::new();
        s.add_atom("f0.1", "a").add_atom("f1'", "a");
        assert_eq!(fresh_prefix(&s), "f2");
    }
}
