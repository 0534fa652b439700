//! Sequentialization by reverse peeling, and the correctness predicate.
//!
//! A net is peeled one event at a time: pick an arrow or mark, undo it (for
//! Insert and Iterate also remove the copy, for Open remove the scroll and
//! hand its inloop contents back to the outloop's parents), and keep the undo
//! only if re-applying the reconstructed step gives back exactly the net we
//! started from. Dead ends are remembered so that no state is explored twice.

use std::collections::{BTreeSet, HashSet};

use crate::derivation::{apply, Fresh, Step, Trace};
use crate::error::{Error, Result};
use crate::id::NodeId;
use crate::iso;
use crate::net::ScrollNet;
use crate::structure::Polarity;

pub const DEFAULT_BUDGET: usize = 1_000_000;

/// The answer of a sequentialization search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sequentialization {
    /// A derivation from the premiss that rebuilds the net.
    Found(Trace),
    /// The search space was exhausted.
    Impossible,
    /// The state budget ran out first.
    Unknown,
}

impl Sequentialization {
    pub fn trace(&self) -> Option<&Trace> {
        match self {
            Sequentialization::Found(t) => Some(t),
            _ => None,
        }
    }
}

pub fn sequentialize(n: &ScrollNet) -> Result<Sequentialization> {
    sequentialize_with(n, DEFAULT_BUDGET)
}

/// Searches at most `budget` states.
pub fn sequentialize_with(n: &ScrollNet, budget: usize) -> Result<Sequentialization> {
    let report = n.validate();
    if !report.is_ok() {
        return Err(Error::InvalidNet(report));
    }
    let mut search = Search { dead: HashSet::new(), visited: 0, budget, exhausted: false };
    let start = n.without_certificate();
    let mut steps = Vec::new();
    match search.peel(start, &mut steps) {
        Some(origin) => {
            steps.reverse();
            Ok(Sequentialization::Found(Trace::new(origin, steps)))
        }
        None if search.exhausted => Ok(Sequentialization::Unknown),
        None => Ok(Sequentialization::Impossible),
    }
}

struct Search {
    dead: HashSet<ScrollNet>,
    visited: usize,
    budget: usize,
    exhausted: bool,
}

impl Search {
    /// Peels `n` down to an arrow-free structure, pushing undone steps
    /// last-first. Returns the origin on success.
    fn peel(&mut self, n: ScrollNet, steps: &mut Vec<Step>) -> Option<crate::structure::ScrollStructure> {
        if n.is_arrow_free() {
            return Some(n.structure);
        }
        if self.dead.contains(&n) {
            return None;
        }
        if self.visited >= self.budget {
            self.exhausted = true;
            return None;
        }
        self.visited += 1;
        for (prev, step) in candidates(&n) {
            if !rebuilds(&prev, &step, &n) {
                continue;
            }
            steps.push(step);
            if let Some(origin) = self.peel(prev, steps) {
                return Some(origin);
            }
            steps.pop();
            if self.exhausted {
                return None;
            }
        }
        self.dead.insert(n);
        None
    }
}

/// Every way of undoing one event of `n`, as (earlier net, step rebuilding `n`).
pub fn undos(n: &ScrollNet) -> Vec<(ScrollNet, Step)> {
    candidates(n).into_iter().filter(|(p, st)| rebuilds(p, st, n)).collect()
}

/// Dropping an arrow, or a copy no other arrow touches, keeps a valid net
/// valid. Undoing an Open re-parents nodes, so only that is re-validated.
fn rebuilds(p: &ScrollNet, st: &Step, n: &ScrollNet) -> bool {
    let reparented = matches!(st, Step::OpenPos { .. } | Step::OpenNeg { .. });
    (!reparented || p.is_valid()) && apply(p, st).is_ok_and(|m| m == *n)
}

/// Undo candidates, unchecked, most plausible first. An event below the
/// source of a justification, or below a deiterated target, probably came
/// before that justification, whose copy or match still contains it, so it
/// waits. Copies themselves are newer than anything that happens inside them.
fn candidates(n: &ScrollNet) -> Vec<(ScrollNet, Step)> {
    let mut c = raw_candidates(n);
    let pol = n.structure.polarities().unwrap_or_default();
    let ends: Vec<(&NodeId, BTreeSet<NodeId>)> = n
        .justifications
        .iter()
        .flat_map(|(a, b)| {
            let deiterated = pol.get(b) == Some(&Polarity::Negative);
            std::iter::once(a).chain(deiterated.then_some(b))
        })
        .map(|x| (x, n.structure.descendants(x)))
        .collect();
    let rank = |st: &Step| {
        let at = focus(st);
        ends.iter().filter(|(x, below)| *x != at && below.contains(at)).count()
    };
    c.sort_by_cached_key(|(_, st)| rank(st));
    c
}

/// The node a reconstructed step introduces, eliminates or marks.
fn focus(st: &Step) -> &NodeId {
    match st {
        Step::OpenPos { fresh: Fresh::Ids(ids), .. } | Step::OpenNeg { fresh: Fresh::Ids(ids), .. } => &ids[0],
        Step::Insert { fresh: Fresh::Ids(ids), .. }
        | Step::IterateRoot { fresh: Fresh::Ids(ids), .. }
        | Step::IterateDeep { fresh: Fresh::Ids(ids), .. } => &ids[0],
        Step::ClosePos { target } | Step::CloseNeg { target } | Step::Delete { target } => target,
        Step::Deiterate { target, .. } => target,
        _ => unreachable!("undo steps name their ids"),
    }
}

fn raw_candidates(n: &ScrollNet) -> Vec<(ScrollNet, Step)> {
    let Ok(pol) = n.structure.polarities() else { return Vec::new() };
    let positive = |v: &NodeId| pol.get(v) == Some(&Polarity::Positive);
    let mut structural = Vec::new();
    let mut marks = Vec::new();
    for pair in &n.expansions {
        let (v, _) = pair;
        if positive(v) {
            structural.extend(undo_open(n, pair, true));
        } else {
            let mut p = n.clone();
            p.expansions.remove(pair);
            marks.push((p, Step::CloseNeg { target: v.clone() }));
        }
    }
    for pair in &n.collapses {
        let (v, _) = pair;
        if positive(v) {
            let mut p = n.clone();
            p.collapses.remove(pair);
            marks.push((p, Step::ClosePos { target: v.clone() }));
        } else {
            structural.extend(undo_open(n, pair, false));
        }
    }
    for v in &n.self_justifications {
        if positive(v) {
            let mut p = n.clone();
            p.self_justifications.remove(v);
            marks.push((p, Step::Delete { target: v.clone() }));
        } else {
            structural.extend(undo_insert(n, v));
        }
    }
    for (u, v) in &n.justifications {
        if positive(v) {
            structural.extend(undo_iterate(n, u, v));
        } else {
            let mut p = n.clone();
            p.justifications.remove(&(u.clone(), v.clone()));
            marks.push((p, Step::Deiterate { source: u.clone(), target: v.clone() }));
        }
    }
    structural.extend(marks);
    structural
}

fn undo_open(n: &ScrollNet, pair: &(NodeId, NodeId), positive: bool) -> Vec<(ScrollNet, Step)> {
    let (v, u) = pair;
    let s = &n.structure;
    if s.children(v).any(|c| c != u) {
        return Vec::new();
    }
    let parents: Vec<NodeId> = s.parents(v).cloned().collect();
    let targets: Vec<NodeId> = s.children(u).cloned().collect();
    let parent = if targets.is_empty() {
        if parents.len() > 1 {
            return Vec::new();
        }
        parents.first().cloned()
    } else {
        None
    };
    let mut base = n.clone();
    base.expansions.remove(pair);
    base.collapses.remove(pair);
    base.structure.remove_node(v);
    base.structure.remove_node(u);
    // A shared target either hung below `parents` too or only below its
    // other parents; an unshared one always goes back below `parents`.
    let shared = targets.iter().any(|t| base.structure.parents(t).next().is_some());
    let variants: &[bool] = if shared { &[false, true] } else { &[true] };
    let fresh = Fresh::Ids(vec![v.clone(), u.clone()]);
    let step = if positive {
        Step::OpenPos { targets: targets.clone(), parent, fresh }
    } else {
        Step::OpenNeg { targets: targets.clone(), parent, fresh }
    };
    variants
        .iter()
        .map(|&all| {
            let mut p = base.clone();
            let back: Vec<&NodeId> =
                targets.iter().filter(|t| all || base.structure.parents(t).next().is_none()).collect();
            for t in back {
                for w in &parents {
                    p.structure.add_edge(w.clone(), t.clone());
                }
            }
            (p, step.clone())
        })
        .collect()
}

/// Removes the tree hanging from `v`, if no node of it is reachable from
/// elsewhere. Returns the earlier net and the single parent of `v`, if any.
fn cut_tree(n: &ScrollNet, v: &NodeId) -> Option<(ScrollNet, Option<NodeId>, BTreeSet<NodeId>)> {
    let s = &n.structure;
    let below = s.descendants(v);
    let parents: Vec<&NodeId> = s.parents(v).collect();
    if parents.len() > 1 {
        return None;
    }
    for x in &below {
        if x != v && s.parents(x).any(|p| !below.contains(p)) {
            return None;
        }
    }
    let mut p = n.clone();
    for x in &below {
        p.structure.remove_node(x);
    }
    // Only the arrow being undone may touch the copy.
    let touched = |x: &NodeId| below.contains(x) && x != v;
    let arrows = n.justifications.iter().chain(&n.expansions).chain(&n.collapses);
    if arrows.clone().any(|(a, b)| touched(a) || touched(b))
        || n.self_justifications.iter().any(touched)
        || n.justifications.iter().filter(|(_, b)| b == v).count() + usize::from(n.self_justifications.contains(v)) > 1
        || n.justifications.iter().any(|(a, _)| a == v)
    {
        return None;
    }
    Some((p, parents.first().map(|w| (*w).clone()), below))
}

fn undo_insert(n: &ScrollNet, v: &NodeId) -> Option<(ScrollNet, Step)> {
    let (mut p, parent, below) = cut_tree(n, v)?;
    let parent = parent?;
    p.self_justifications.remove(v);
    let payload = n.structure.restrict(&below);
    let fresh = Fresh::Ids(payload.preorder());
    Some((p, Step::Insert { parent, payload, fresh }))
}

fn undo_iterate(n: &ScrollNet, u: &NodeId, v: &NodeId) -> Option<(ScrollNet, Step)> {
    let (mut p, parent, below) = cut_tree(n, v)?;
    p.justifications.remove(&(u.clone(), v.clone()));
    let copy = n.structure.restrict(&below);
    let concl = p.conclusion().ok()?;
    let src = concl.reachable(u).ok()?;
    let m = iso::isomorphism(&src, &copy)?;
    if m.get(u) != Some(v) {
        return None;
    }
    let fresh = Fresh::Ids(src.preorder().iter().map(|x| m[x].clone()).collect());
    let step = match parent {
        None => Step::IterateRoot { source: u.clone(), fresh },
        Some(w) => Step::IterateDeep { source: u.clone(), parent: w, fresh },
    };
    Some((p, step))
}

/// Whether the stored certificate replays to exactly this net.
pub fn check_certificate(n: &ScrollNet) -> bool {
    match n.certificate() {
        Some(t) => t.replay().is_ok_and(|m| m == *n),
        None => false,
    }
}

/// The outcome of a correctness check, with a reason when negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Correct(Trace),
    Incorrect(String),
    Unknown,
}

pub fn verdict(n: &ScrollNet) -> Result<Verdict> {
    verdict_with(n, DEFAULT_BUDGET)
}

pub fn verdict_with(n: &ScrollNet, budget: usize) -> Result<Verdict> {
    let report = n.validate();
    if !report.is_ok() {
        return Ok(Verdict::Incorrect(format!("invalid net: {report}")));
    }
    if !n.is_interpretable()? {
        return Ok(Verdict::Incorrect("a boundary shares nodes between inloops".into()));
    }
    if check_certificate(n) {
        return Ok(Verdict::Correct(n.certificate().expect("checked").clone()));
    }
    Ok(match sequentialize_with(n, budget)? {
        Sequentialization::Found(t) => Verdict::Correct(t),
        Sequentialization::Impossible => Verdict::Incorrect("no ordering of the arrows rebuilds the net".into()),
        Sequentialization::Unknown => Verdict::Unknown,
    })
}

/// Interpretable and sequentializable. An exhausted budget counts as no.
pub fn is_correct(n: &ScrollNet) -> bool {
    matches!(verdict(n), Ok(Verdict::Correct(_)))
}

/// The net together with a certificate, found if it has none that replays.
pub fn certified(n: &ScrollNet) -> Result<ScrollNet> {
    match verdict(n)? {
        Verdict::Correct(t) => {
            let mut out = n.clone();
            out.set_certificate(Some(t));
            Ok(out)
        }
        Verdict::Incorrect(why) => Err(Error::Composition(format!("net is not correct: {why}"))),
        Verdict::Unknown => Err(Error::Composition("sequentialization budget exhausted".into())),
    }
}
