//! Seeded random structures, derivations and nets, for fuzzing and benches.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::derivation::{candidates, check, execute, fresh_prefix, RuleKind, Step, Trace, View};
use crate::id::{Atom, NodeId};
use crate::net::ScrollNet;
use crate::structure::ScrollStructure;

pub use rand::SeedableRng;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

const ATOMS: [&str; 3] = ["a", "b", "c"];

/// Shape limits for random structures.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub depth: usize,
    pub width: usize,
    pub atoms: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { depth: 3, width: 3, atoms: 2 }
    }
}

/// A random valid forest: juxtaposed atoms and scrolls.
pub fn structure(rng: &mut impl Rng, shape: Shape) -> ScrollStructure {
    let mut s = ScrollStructure::new();
    let mut next = 0usize;
    let roots = rng.gen_range(0..=shape.width);
    for _ in 0..roots {
        grow(rng, shape, shape.depth, None, &mut s, &mut next);
    }
    s
}

fn grow(rng: &mut impl Rng, shape: Shape, depth: usize, parent: Option<&NodeId>, s: &mut ScrollStructure, next: &mut usize) {
    let mut fresh = || {
        *next += 1;
        NodeId::new(format!("n{next}"))
    };
    let v = fresh();
    if depth < 2 || rng.gen_bool(0.5) {
        let a = ATOMS[rng.gen_range(0..shape.atoms.clamp(1, ATOMS.len()))];
        s.add_atom(v.clone(), a);
    } else {
        let i = fresh();
        s.add_sep(v.clone()).add_sep(i.clone()).attach(v.clone(), i.clone());
        for area in [&v, &i] {
            let k = rng.gen_range(0..=shape.width.min(2));
            for _ in 0..k {
                grow(rng, shape, depth - 2, Some(area), s, next);
            }
        }
    }
    if let Some(p) = parent {
        s.add_edge(p.clone(), v);
    }
}

/// A random tree with at most `atoms` atoms, for Insert.
pub fn payload(rng: &mut impl Rng, palette: &[Atom], atoms: usize) -> ScrollStructure {
    let mut s = ScrollStructure::new();
    let pick = |rng: &mut dyn rand::RngCore| palette[rng.gen_range(0..palette.len())].clone();
    if atoms >= 1 && rng.gen_bool(0.4) {
        s.add_atom("p", pick(rng));
        return s;
    }
    s.add_sep("o").add_sep("i").attach("o", "i");
    let total = rng.gen_range(0..=atoms);
    for k in 0..total {
        let id = format!("x{k}");
        s.add_atom(id.as_str(), pick(rng));
        s.add_edge(if rng.gen_bool(0.5) { "o" } else { "i" }, id.as_str());
    }
    s
}

const KINDS: [RuleKind; 9] = [
    RuleKind::OpenPos,
    RuleKind::OpenNeg,
    RuleKind::ClosePos,
    RuleKind::CloseNeg,
    RuleKind::Insert,
    RuleKind::Delete,
    RuleKind::IterateRoot,
    RuleKind::IterateDeep,
    RuleKind::Deiterate,
];

/// A random applicable step, or `None` if nothing applies. Rules are drawn
/// uniformly, then locations.
pub fn step(rng: &mut impl Rng, net: &ScrollNet, payload_atoms: usize) -> Option<Step> {
    step_of(rng, net, payload_atoms, &KINDS)
}

pub fn step_of(rng: &mut impl Rng, net: &ScrollNet, payload_atoms: usize, kinds: &[RuleKind]) -> Option<Step> {
    let view = View::new(net).ok()?;
    let prefix = fresh_prefix(&net.structure);
    let palette = crate::net::atom_palette(net);
    let mut order = kinds.to_vec();
    order.shuffle(rng);
    for kind in order {
        let payloads: Vec<ScrollStructure> = if kind == RuleKind::Insert {
            (0..2).map(|_| payload(rng, &palette, payload_atoms)).collect()
        } else {
            Vec::new()
        };
        let mut cands = candidates(&view, &payloads, &prefix, Some(kind));
        cands.shuffle(rng);
        if let Some(st) = cands.into_iter().take(24).find(|st| check(&view, st).is_ok()) {
            return Some(st);
        }
    }
    None
}

/// A random derivation of at most `len` steps from a random origin.
pub fn trace(rng: &mut impl Rng, shape: Shape, len: usize, payload_atoms: usize) -> Trace {
    let origin = structure(rng, shape);
    trace_from(rng, origin, len, payload_atoms)
}

pub fn trace_from(rng: &mut impl Rng, origin: ScrollStructure, len: usize, payload_atoms: usize) -> Trace {
    let mut net = ScrollNet::new(origin.clone());
    let mut steps = Vec::new();
    let target = rng.gen_range(0..=len);
    for _ in 0..target {
        let Some(st) = step(rng, &net, payload_atoms) else { break };
        net = apply_unchecked(&net, &st);
        steps.push(st);
    }
    Trace::new(origin, steps)
}

fn apply_unchecked(net: &ScrollNet, st: &Step) -> ScrollNet {
    let view = View::new(net).expect("valid net");
    let plan = check(&view, st).expect("step was checked");
    execute(net, plan).0
}

/// The detour shapes that can be manufactured on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Injected {
    /// OpenPos followed by ClosePos.
    OpenClose,
    /// OpenPos followed by Delete of the new outloop.
    OpenDelete,
    /// Insert of a scroll followed by CloseNeg.
    InsertClose,
    /// IterateRoot of a scroll followed by ClosePos of the copy.
    IterateClose,
    /// OpenNeg followed by Deiterate onto the new outloop.
    OpenDeiterate,
    /// IterateRoot followed by Delete of the copy.
    IterateDelete,
    /// Insert followed by Deiterate onto the inserted root.
    InsertDeiterate,
}

pub const INJECTED: [Injected; 7] = [
    Injected::OpenClose,
    Injected::OpenDelete,
    Injected::InsertClose,
    Injected::IterateClose,
    Injected::OpenDeiterate,
    Injected::IterateDelete,
    Injected::InsertDeiterate,
];

/// Appends a detour of the given shape to a random derivation. Returns the
/// extended trace, or `None` if no location admitted it.
pub fn inject(rng: &mut impl Rng, base: &Trace, kind: Injected) -> Option<Trace> {
    let net = base.replay().ok()?;
    let mut tries: Vec<(Step, Step)> = Vec::new();
    let view = View::new(&net).ok()?;
    let prefix = fresh_prefix(&net.structure);
    let palette = crate::net::atom_palette(&net);
    let first_kind = match kind {
        Injected::OpenClose | Injected::OpenDelete => RuleKind::OpenPos,
        Injected::OpenDeiterate => RuleKind::OpenNeg,
        Injected::InsertClose | Injected::InsertDeiterate => RuleKind::Insert,
        Injected::IterateClose | Injected::IterateDelete => RuleKind::IterateRoot,
    };
    let payloads: Vec<ScrollStructure> = match kind {
        Injected::InsertClose => vec![ScrollStructure::parse("[ ; ]").unwrap()],
        _ => (0..3).map(|_| payload(rng, &palette, 2)).collect(),
    };
    let mut firsts = candidates(&view, &payloads, &prefix, Some(first_kind));
    firsts.shuffle(rng);
    for first in firsts.into_iter().filter(|st| check(&view, st).is_ok()).take(16) {
        let (mid, created) = crate::derivation::apply_traced(&net, &first).ok()?;
        let root = created[0].clone();
        let seconds: Vec<Step> = match kind {
            Injected::OpenClose | Injected::IterateClose => vec![Step::ClosePos { target: root.clone() }],
            Injected::InsertClose => vec![Step::CloseNeg { target: root.clone() }],
            Injected::OpenDelete | Injected::IterateDelete => vec![Step::Delete { target: root.clone() }],
            Injected::OpenDeiterate | Injected::InsertDeiterate => {
                let mv = View::new(&mid).ok()?;
                let mut c = candidates(&mv, &[], "unused", Some(RuleKind::Deiterate));
                c.retain(|st| matches!(st, Step::Deiterate { target, .. } if *target == root));
                c
            }
        };
        let mv = View::new(&mid).ok()?;
        if let Some(second) = seconds.into_iter().find(|st| check(&mv, st).is_ok()) {
            tries.push((first, second));
            break;
        }
    }
    let (a, b) = tries.pop()?;
    let mut steps = base.steps.clone();
    steps.push(a);
    steps.push(b);
    Some(Trace::new(base.origin.clone(), steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_structures_are_valid() {
        let mut r = rng(7);
        for _ in 0..200 {
            let s = structure(&mut r, Shape { depth: 6, width: 4, atoms: 3 });
            assert!(s.validate().is_ok(), "{s:?}");
        }
    }

    #[test]
    fn generated_traces_replay() {
        let mut r = rng(11);
        for _ in 0..100 {
            let t = trace(&mut r, Shape::default(), 8, 3);
            let n = t.replay().unwrap();
            assert!(n.validate().is_ok());
        }
    }

    #[test]
    fn injection_finds_locations() {
        let mut r = rng(3);
        for kind in INJECTED {
            let found = (0..40).any(|_| {
                let base = trace(&mut r, Shape::default(), 4, 2);
                inject(&mut r, &base, kind).is_some()
            });
            assert!(found, "{kind:?}");
        }
    }
}
