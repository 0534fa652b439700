//! Detours (nodes both introduced and eliminated) and their reduction.
//!
//! Each reduction removes the detour's node and its two events, rewires what
//! remains, and is accepted only if the result is a valid net with the same
//! boundaries up to isomorphism. Anything else is reported as blocked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::NodeId;
use crate::iso;
use crate::net::{creates_cycle, ScrollNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetourKind {
    /// Opened and closed.
    Ii,
    /// Opened then deleted, or inserted then closed.
    Ia,
    /// Iterated then closed, or opened then deiterated.
    Ai,
    /// Iterated then deleted, or inserted then deiterated, on a scroll.
    AaScroll,
    /// The same, on an atom.
    AaAtom,
}

impl fmt::Display for DetourKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetourKind::Ii => "ii",
            DetourKind::Ia => "ia",
            DetourKind::Ai => "ai",
            DetourKind::AaScroll => "aa_scroll",
            DetourKind::AaAtom => "aa_atom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetourReport {
    pub node: NodeId,
    pub kind: DetourKind,
}

/// Every detour of `n`, deepest first; at equal depth ii, ia, ai, aa.
pub fn find_detours(n: &ScrollNet) -> Result<Vec<DetourReport>> {
    let report = n.validate();
    if !report.is_ok() {
        return Err(Error::InvalidNet(report));
    }
    let s = n.structure();
    let mut out = Vec::new();
    for (v, u) in s.attachments() {
        let pair = (v.clone(), u.clone());
        let opened_like = n.expansions().contains(&pair);
        let closed_like = n.collapses().contains(&pair);
        let kind = if opened_like && closed_like {
            Some(DetourKind::Ii)
        } else if opened_like && n.self_justifications().contains(v) {
            Some(DetourKind::Ia)
        } else if closed_like && n.has_incoming_justification(v) {
            Some(DetourKind::Ai)
        } else {
            None
        };
        if let Some(kind) = kind {
            out.push(DetourReport { node: v.clone(), kind });
        }
    }
    for v in n.self_justifications() {
        if n.has_incoming_justification(v) {
            let kind = if s.is_atom(v) { DetourKind::AaAtom } else { DetourKind::AaScroll };
            out.push(DetourReport { node: v.clone(), kind });
        }
    }
    let depth = s.depths();
    out.sort_by(|a, b| {
        depth
            .get(&b.node)
            .cmp(&depth.get(&a.node))
            .then_with(|| a.kind.cmp(&b.kind))
            .then_with(|| a.node.cmp(&b.node))
    });
    Ok(out)
}

fn blocked(d: &DetourReport, why: impl fmt::Display) -> Error {
    Error::Detour(format!("blocked at {} `{}`: {why}", d.kind, d.node))
}

/// The node of `w`'s subtree that corresponds to `x` in the subtree of `r`,
/// where `r` is a copy (or a match) of `w`. Whole-subtree isomorphism is
/// tried first; otherwise the path from `r` to `x` is followed child by
/// child, matching labels and sep roles.
fn counterpart(n: &ScrollNet, w: &NodeId, r: &NodeId, x: &NodeId) -> Option<NodeId> {
    if x == r {
        return Some(w.clone());
    }
    let s = n.structure();
    if let (Ok(a), Ok(b)) = (s.reachable(r), s.reachable(w)) {
        if let Some(m) = iso::isomorphism(&a, &b) {
            if m.get(r) == Some(w) {
                return m.get(x).cloned();
            }
        }
    }
    let mut path = vec![x.clone()];
    while path.last() != Some(r) {
        let top = path.last().expect("nonempty");
        let up = s.parents(top).find(|p| s.reaches(r, p))?;
        path.push(up.clone());
    }
    path.reverse();
    let role = |v: &NodeId| (s.label(v).cloned(), s.is_inloop(v), s.is_outloop(v));
    let mut here = w.clone();
    for step in &path[1..] {
        let want = role(step);
        let mut options: Vec<&NodeId> = s.children(&here).filter(|c| role(c) == want).collect();
        let shape = s.reachable(step).ok();
        options.sort_by_key(|c| {
            let same = shape.as_ref().zip(s.reachable(c).ok()).is_some_and(|(a, b)| iso::isomorphic(a, &b));
            !same
        });
        here = options.first()?.to_owned().clone();
    }
    Some(here)
}

/// Removes `dead` from the net. Arrows into it are dropped; a justification
/// leaving it is re-sourced through `resource`.
fn remove(
    n: &mut ScrollNet,
    dead: &BTreeSet<NodeId>,
    resource: impl Fn(&NodeId) -> Option<NodeId>,
    d: &DetourReport,
) -> Result<()> {
    let old: Vec<(NodeId, NodeId)> = n.justifications.iter().cloned().collect();
    n.justifications.clear();
    let mut moved = Vec::new();
    for (a, b) in old {
        if dead.contains(&b) {
            continue;
        }
        if dead.contains(&a) {
            let to = resource(&a).ok_or_else(|| blocked(d, format!("no counterpart for `{a}`")))?;
            if dead.contains(&to) {
                return Err(blocked(d, format!("counterpart of `{a}` is removed too")));
            }
            moved.push((to, b));
        } else {
            n.justifications.insert((a, b));
        }
    }
    for (a, b) in moved {
        if creates_cycle(&n.justifications, &a, &b) {
            return Err(blocked(d, format!("re-sourcing onto `{a}` closes a cycle")));
        }
        n.justifications.insert((a, b));
    }
    n.self_justifications.retain(|v| !dead.contains(v));
    n.expansions.retain(|(o, _)| !dead.contains(o));
    n.collapses.retain(|(o, _)| !dead.contains(o));
    for v in dead {
        n.structure.remove_node(v);
    }
    Ok(())
}

/// Collapses the scroll at `v` in the structure. Returns the removed nodes
/// and the inloop children that moved up to `v`'s parents.
fn splice(n: &mut ScrollNet, v: &NodeId) -> Result<(BTreeSet<NodeId>, Vec<NodeId>)> {
    let before = n.structure.clone();
    let u = before.inloop_of(v).cloned().ok_or_else(|| Error::NotAnOutloop(v.clone()))?;
    n.structure.collapse_in_place(v)?;
    let dead = before.node_ids().filter(|x| !n.structure.contains(x)).cloned().collect();
    let moved = before.children(&u).filter(|c| n.structure.contains(c) && before.parents(c).count() == 1).cloned().collect();
    Ok((dead, moved))
}

/// Reduces one reported detour. The result has the same boundaries up to
/// isomorphism, or an error explains why the rewiring is blocked.
pub fn reduce_detour(n: &ScrollNet, d: &DetourReport) -> Result<ScrollNet> {
    if !find_detours(n)?.contains(d) {
        return Err(Error::Detour(format!("stale report: no {} detour at `{}`", d.kind, d.node)));
    }
    let mut m = n.without_certificate();
    let v = &d.node;
    match d.kind {
        DetourKind::Ii | DetourKind::Ia | DetourKind::Ai => {
            let u = m.structure.inloop_of(v).cloned().expect("reported on an outloop");
            let pair = (v.clone(), u.clone());
            m.expansions.remove(&pair);
            m.collapses.remove(&pair);
            let justifier = m.justifier_of(v).cloned();
            if d.kind == DetourKind::Ia {
                m.self_justifications.remove(v);
            }
            if d.kind == DetourKind::Ai {
                m.justifications.remove(&(justifier.clone().expect("reported"), v.clone()));
            }
            let (dead, moved) = splice(&mut m, v)?;
            // Outloop contents were matched by whatever eliminated them; an
            // arrow leaving them moves to that match.
            let roots: BTreeMap<NodeId, NodeId> = n
                .structure()
                .outloop_contents(v)
                .into_iter()
                .filter_map(|r| n.justifier_of(&r).map(|w| (r.clone(), w.clone())))
                .collect();
            let s0 = n.structure().clone();
            let resource = |x: &NodeId| -> Option<NodeId> {
                if d.kind == DetourKind::Ai {
                    if let Some(w) = &justifier {
                        return counterpart(n, w, v, x);
                    }
                }
                roots.iter().find(|(r, _)| s0.reaches(r, x)).and_then(|(r, w)| counterpart(n, w, r, x))
            };
            remove(&mut m, &dead, resource, d)?;
            match d.kind {
                DetourKind::Ia => {
                    m.self_justifications.extend(moved.iter().cloned());
                }
                DetourKind::Ai => {
                    let w = justifier.expect("reported");
                    for c in &moved {
                        if m.has_incoming_justification(c) {
                            continue;
                        }
                        let src = counterpart(n, &w, v, c).ok_or_else(|| blocked(d, format!("no counterpart for `{c}`")))?;
                        if !m.structure.contains(&src) || creates_cycle(&m.justifications, &src, c) {
                            return Err(blocked(d, format!("cannot justify `{c}` from `{src}`")));
                        }
                        m.justifications.insert((src, c.clone()));
                    }
                }
                _ => {}
            }
        }
        DetourKind::AaScroll | DetourKind::AaAtom => {
            let w = n.justifier_of(v).cloned().expect("reported");
            m.justifications.remove(&(w.clone(), v.clone()));
            m.self_justifications.remove(v);
            let mut after = m.structure.clone();
            after.prune_in_place(v);
            let dead: BTreeSet<NodeId> = m.structure.node_ids().filter(|x| !after.contains(x)).cloned().collect();
            remove(&mut m, &dead, |x| counterpart(n, &w, v, x), d)?;
        }
    }
    let report = m.validate();
    if !report.is_ok() {
        return Err(blocked(d, format!("result is invalid: {report}")));
    }
    for (before, after, side) in [(n.premiss()?, m.premiss()?, "premiss"), (n.conclusion()?, m.conclusion()?, "conclusion")] {
        if !iso::isomorphic(&before, &after) {
            return Err(blocked(d, format!("the {side} would change")));
        }
    }
    Ok(m)
}

/// The outcome of repeated reduction.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub net: ScrollNet,
    pub steps: usize,
    /// No detours remain.
    pub normal: bool,
    /// Detours left because every reduction of them was blocked.
    pub blocked: Vec<DetourReport>,
}

/// Reduces the deepest reducible detour until none remain, every remaining
/// one is blocked, or `max_steps` reductions have been made.
pub fn normalize(n: &ScrollNet, max_steps: usize) -> Result<Normalization> {
    let mut cur = n.without_certificate();
    let mut steps = 0;
    loop {
        let found = find_detours(&cur)?;
        if found.is_empty() {
            return Ok(Normalization { net: cur, steps, normal: true, blocked: Vec::new() });
        }
        if steps >= max_steps {
            return Ok(Normalization { net: cur, steps, normal: false, blocked: Vec::new() });
        }
        let mut next = None;
        let mut stuck = Vec::new();
        for d in &found {
            match reduce_detour(&cur, d) {
                Ok(m) => {
                    next = Some(m);
                    break;
                }
                Err(_) => stuck.push(d.clone()),
            }
        }
        match next {
            Some(m) => {
                cur = m;
                steps += 1;
            }
            None => return Ok(Normalization { net: cur, steps, normal: false, blocked: stuck }),
        }
    }
}
