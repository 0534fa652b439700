//! Horizontal and vertical composition of nets.

use std::collections::BTreeMap;

use crate::correctness::{verdict, Verdict};
use crate::derivation::{apply_traced, fresh_prefix, replay, Fresh, Step, Trace};
use crate::error::{Error, Result};
use crate::id::NodeId;
use crate::iso::{self, Mapping};
use crate::net::ScrollNet;
use crate::structure::ScrollStructure;

const LEFT: &str = "l/";
const RIGHT: &str = "r/";

fn tag_fresh(f: &Fresh, tag: &str) -> Fresh {
    match f {
        Fresh::Prefix(p) => Fresh::Prefix(format!("{tag}{p}")),
        Fresh::Ids(ids) => Fresh::Ids(ids.iter().map(|v| v.with_prefix(tag)).collect()),
    }
}

fn tag_step(st: &Step, tag: &str) -> Step {
    let fresh = st.fresh().map(|f| tag_fresh(f, tag));
    st.relabel(|v| v.with_prefix(tag), fresh)
}

/// Juxtaposition. Left ids get the prefix `l/`, right ids `r/`. When both
/// nets carry certificates, the result carries the left steps followed by
/// the right ones.
pub fn horizontal(a: &ScrollNet, b: &ScrollNet) -> ScrollNet {
    let l = a.map_ids(|v| v.with_prefix(LEFT));
    let r = b.map_ids(|v| v.with_prefix(RIGHT));
    let mut out = l.clone();
    out.structure.absorb(&r.structure);
    out.justifications.extend(r.justifications.iter().cloned());
    out.self_justifications.extend(r.self_justifications.iter().cloned());
    out.expansions.extend(r.expansions.iter().cloned());
    out.collapses.extend(r.collapses.iter().cloned());
    if let (Some(ta), Some(tb)) = (a.certificate(), b.certificate()) {
        let mut origin = ta.origin.map_ids(|v| v.with_prefix(LEFT));
        origin.absorb(&tb.origin.map_ids(|v| v.with_prefix(RIGHT)));
        let steps = ta.steps.iter().map(|s| tag_step(s, LEFT)).chain(tb.steps.iter().map(|s| tag_step(s, RIGHT))).collect();
        out.certificate = Some(Trace::new(origin, steps));
    }
    out
}

/// A witness that ⌊a⌋ ≅ ⌈b⌉, from conclusion nodes of `a` to premiss nodes
/// of `b`.
pub fn compatible(a: &ScrollNet, b: &ScrollNet) -> Result<Option<Mapping>> {
    Ok(iso::isomorphism(&a.conclusion()?, &b.premiss()?))
}

fn trace_of(n: &ScrollNet, side: &str) -> Result<Trace> {
    match verdict(n)? {
        Verdict::Correct(t) => Ok(t),
        Verdict::Incorrect(why) => Err(Error::Composition(format!("{side} net is not correct: {why}"))),
        Verdict::Unknown => Err(Error::Composition(format!("{side} net: sequentialization budget exhausted"))),
    }
}

/// Lifts the derivation of `b` onto the conclusion of `a`.
///
/// `b`'s steps are replayed on `a` with references renamed through the
/// compatibility witness; nodes created along the way get ids fresh for `a`.
/// The certificate is `a`'s derivation followed by the lifted steps.
pub fn superpose(a: &ScrollNet, b: &ScrollNet) -> Result<ScrollNet> {
    let ta = trace_of(a, "left")?;
    let tb = trace_of(b, "right")?;
    let concl = a.conclusion()?;
    // Maps ids of b's derivation to ids of the growing net.
    let mut names: BTreeMap<NodeId, NodeId> = iso::isomorphism(&tb.origin, &concl)
        .ok_or_else(|| Error::Composition("the conclusion of the left net is not the premiss of the right net".into()))?;
    let mut here = a.clone();
    here.certificate = Some(ta);
    let mut there = ScrollNet::new(tb.origin.clone());
    for (index, st) in tb.steps.iter().enumerate() {
        let (next_there, made_there) = apply_traced(&there, st).map_err(|e| lift_error(index, e))?;
        let prefix = Fresh::Prefix(fresh_prefix(&here.structure));
        let lifted = st.relabel(|v| names.get(v).cloned().unwrap_or_else(|| v.clone()), st.fresh().map(|_| prefix));
        let (next_here, made_here) = apply_traced(&here, &lifted).map_err(|e| lift_error(index, e))?;
        match made_there.len() {
            0 => {}
            2 if matches!(st, Step::OpenPos { .. } | Step::OpenNeg { .. }) => {
                names.extend(made_there.iter().cloned().zip(made_here.iter().cloned()));
            }
            _ => {
                let copy_there = next_there.structure.reachable(&made_there[0])?;
                let copy_here = next_here.structure.reachable(&made_here[0])?;
                let m = iso::isomorphism(&copy_there, &copy_here)
                    .ok_or_else(|| Error::Composition(format!("step {index}: lifted copy differs")))?;
                names.extend(m);
            }
        }
        there = next_there;
        here = next_here;
    }
    Ok(here)
}

fn lift_error(index: usize, e: Error) -> Error {
    Error::Composition(format!("step {index} does not lift: {e}"))
}

/// `b ∘ a`: the superposition, whose certificate is the derivation of `a`
/// followed by the lifted derivation of `b`, checked by replay.
pub fn vertical(a: &ScrollNet, b: &ScrollNet) -> Result<ScrollNet> {
    let out = superpose(a, b)?;
    let t = out.certificate().expect("superpose certifies").clone();
    let back = replay(&t.origin, &t.steps)?;
    if back != out {
        return Err(Error::Composition("certificate does not replay to the composite".into()));
    }
    Ok(back)
}

/// The arrow-free net on `s`, the unit of both compositions.
pub fn identity(s: &ScrollStructure) -> ScrollNet {
    let mut n = ScrollNet::new(s.clone());
    n.certificate = Some(Trace::new(s.clone(), Vec::new()));
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correctness::is_correct;
    use crate::derivation::tests::{mp_steps, text};
    use crate::iso::isomorphic;
    use crate::net::net_isomorphic;
    use crate::structure::tests::{id, mp};

    fn mp_derived() -> ScrollNet {
        replay(&mp(), &mp_steps()).unwrap()
    }

    #[test]
    fn horizontal_unit_and_boundaries() {
        let n = mp_derived();
        assert!(net_isomorphic(&horizontal(&ScrollNet::default(), &n), &n));
        let h = horizontal(&n, &n);
        assert!(isomorphic(&h.premiss().unwrap(), &text("a [a ; b] a [a ; b]")));
        assert_eq!(h.conclusion().unwrap().interpret().unwrap().to_string(), "b & b");
        assert!(is_correct(&h));
        assert!(crate::correctness::check_certificate(&h));
    }

    #[test]
    fn horizontal_laws() {
        let a = mp_derived();
        let b = ScrollNet::new(text("[c ; ]"));
        let c = replay(&text("a"), &[Step::IterateRoot { source: id("n1"), fresh: "x".into() }]).unwrap();
        assert!(net_isomorphic(&horizontal(&a, &b), &horizontal(&b, &a)));
        assert!(net_isomorphic(&horizontal(&horizontal(&a, &b), &c), &horizontal(&a, &horizontal(&b, &c))));
    }

    #[test]
    fn compatibility_examples() {
        let b_concl = mp_derived();
        let b_prem = ScrollNet::new(text("b"));
        assert!(compatible(&b_concl, &b_prem).unwrap().is_some());
        let ab = ScrollNet::new(text("a b"));
        let ba = ScrollNet::new(text("b a"));
        assert!(compatible(&ab, &ba).unwrap().is_some());
        let imp = ScrollNet::new(text("[a ; b]"));
        assert!(compatible(&imp, &ScrollNet::new(text("a"))).unwrap().is_none());
    }

    #[test]
    fn superposition_rebuilds_mp_derivation() {
        let first = replay(&mp(), &mp_steps()[..1]).unwrap();
        let concl = first.conclusion().unwrap().map_ids(|v| v.with_prefix("z"));
        let steps: Vec<Step> = mp_steps()[1..].iter().map(|s| s.relabel(|v| v.with_prefix("z"), None)).collect();
        let rest = replay(&concl, &steps).unwrap();
        let whole = superpose(&first, &rest).unwrap();
        assert!(net_isomorphic(&whole, &mp_derived()));
        assert!(net_isomorphic(&vertical(&first, &rest).unwrap(), &mp_derived()));
    }

    #[test]
    fn identity_is_a_unit() {
        let n = mp_derived();
        let right = identity(&n.conclusion().unwrap());
        assert!(net_isomorphic(&superpose(&n, &right).unwrap(), &n));
        let left = identity(&n.premiss().unwrap());
        assert!(net_isomorphic(&vertical(&left, &n).unwrap(), &n));
    }

    #[test]
    fn lifted_open() {
        let n = mp_derived();
        let open = replay(&text("b"), &[Step::OpenPos { targets: vec![id("n1")], parent: None, fresh: "u".into() }]).unwrap();
        let sup = superpose(&n, &open).unwrap();
        assert_eq!(sup.conclusion().unwrap().interpret().unwrap().to_string(), "T => b");
        assert!(isomorphic(&sup.premiss().unwrap(), &mp()));
    }

    #[test]
    fn vertical_chains_entailments() {
        // a [a ; b] [b ; c] ⊢ b [b ; c] ⊢ c
        let s = text("a [a ; b] [b ; c]");
        let first = replay(
            &s,
            &[
                Step::Deiterate { source: id("n1"), target: id("n4") },
                Step::ClosePos { target: id("n2") },
                Step::Delete { target: id("n1") },
            ],
        )
        .unwrap();
        let mid = first.conclusion().unwrap();
        assert!(isomorphic(&mid, &text("b [b ; c]")));
        let b = mid.roots().find(|v| mid.is_atom(v)).unwrap().clone();
        let o = mid.roots().find(|v| mid.is_outloop(v)).unwrap().clone();
        let inner_b = mid.outloop_contents(&o)[0].clone();
        let second = replay(
            &mid,
            &[
                Step::Deiterate { source: b.clone(), target: inner_b },
                Step::ClosePos { target: o },
                Step::Delete { target: b },
            ],
        )
        .unwrap();
        let v = vertical(&first, &second).unwrap();
        assert!(isomorphic(&v.premiss().unwrap(), &s));
        assert!(isomorphic(&v.conclusion().unwrap(), &text("c")));
        assert!(is_correct(&v));
    }

    #[test]
    fn incompatible_is_an_error() {
        assert!(superpose(&mp_derived(), &ScrollNet::new(text("a"))).is_err());
    }
}
