use proptest::prelude::*;

use scrollnet::composition::{horizontal, superpose};
use scrollnet::correctness::{sequentialize, Sequentialization};
use scrollnet::derivation::{apply, replay};
use scrollnet::detour::{find_detours, reduce_detour};
use scrollnet::formula::{Formula, Sequent};
use scrollnet::gen::{self, Shape, INJECTED};
use scrollnet::iso::isomorphic;
use scrollnet::net::{net_isomorphic, BoundaryEvent, ScrollNet, Side};
use scrollnet::oracle::{kripke_check, prove};
use scrollnet::structure::ScrollStructure;

fn net(seed: u64, len: usize) -> ScrollNet {
    gen::trace(&mut gen::rng(seed), Shape::default(), len, 3).replay().unwrap()
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just(Formula::Top), "[abc]".prop_map(|a| Formula::atom(&a))];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::imp(a, b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let s = gen::structure(&mut gen::rng(seed), Shape::default());
        let back = ScrollStructure::parse(&s.to_text().unwrap()).unwrap();
        prop_assert!(isomorphic(&s, &back));
        prop_assert_eq!(s.interpret().unwrap().canonical(), back.interpret().unwrap().canonical());
    }

    #[test]
    fn renaming_preserves_isomorphism(seed in any::<u64>()) {
        let n = net(seed, 8);
        let renamed = n.map_ids(|v| v.with_prefix("q/"));
        prop_assert!(net_isomorphic(&n, &renamed));
        prop_assert!(isomorphic(&n.conclusion().unwrap(), &renamed.conclusion().unwrap()));
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let n = net(seed, 8);
        prop_assert_eq!(ScrollNet::decode_json(&n.encode_json()).unwrap(), n);
    }

    #[test]
    fn steps_keep_validity_and_premiss(seed in any::<u64>()) {
        let t = gen::trace(&mut gen::rng(seed), Shape::default(), 12, 3);
        let mut n = ScrollNet::new(t.origin.clone());
        let prem = n.premiss().unwrap();
        let mut interpretable = n.is_interpretable().unwrap();
        for st in &t.steps {
            n = apply(&n, st).unwrap();
            prop_assert!(n.is_valid(), "{}", n.validate());
            prop_assert_eq!(&n.premiss().unwrap(), &prem);
            let now = n.is_interpretable().unwrap();
            prop_assert!(!interpretable || now);
            interpretable = now;
        }
    }

    #[test]
    fn phased_extraction_is_confluent(seed in any::<u64>(), rot in 0usize..6) {
        let n = net(seed, 10);
        for side in [Side::Premiss, Side::Conclusion] {
            let events = n.boundary_events(side).unwrap();
            let (mut prunes, mut collapses): (Vec<BoundaryEvent>, Vec<BoundaryEvent>) =
                events.iter().cloned().partition(|e| matches!(e, BoundaryEvent::Prune(_)));
            if !prunes.is_empty() {
                let k = rot % prunes.len();
                prunes.rotate_left(k);
            }
            collapses.reverse();
            let order: Vec<BoundaryEvent> = collapses.into_iter().chain(prunes).collect();
            prop_assert!(isomorphic(&n.apply_boundary_events(&order), &n.apply_boundary_events(&events)));
        }
    }

    #[test]
    fn sequentialization_rebuilds(seed in any::<u64>()) {
        let n = net(seed, 10);
        match sequentialize(&n.without_certificate()).unwrap() {
            Sequentialization::Found(t) => prop_assert!(net_isomorphic(&replay(&t.origin, &t.steps).unwrap(), &n)),
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn superposition_boundaries(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let a = gen::trace(&mut r, Shape::default(), 6, 2).replay().unwrap();
        let mid = a.conclusion().unwrap().map_ids(|v| v.with_prefix("z"));
        let b = gen::trace_from(&mut r, mid, 6, 2).replay().unwrap();
        let s = superpose(&a, &b).unwrap();
        prop_assert_eq!(&s.premiss().unwrap(), &a.premiss().unwrap());
        prop_assert!(isomorphic(&s.conclusion().unwrap(), &b.conclusion().unwrap()));
    }

    #[test]
    fn horizontal_boundaries(x in any::<u64>(), y in any::<u64>()) {
        let (a, b) = (net(x, 6), net(y, 6));
        let h = horizontal(&a, &b);
        let mut want = a.conclusion().unwrap().map_ids(|v| v.with_prefix("l/"));
        want.absorb(&b.conclusion().unwrap().map_ids(|v| v.with_prefix("r/")));
        prop_assert_eq!(h.conclusion().unwrap(), want);
    }

    #[test]
    fn detour_reduction_keeps_boundaries(seed in any::<u64>(), kind in 0usize..7) {
        let mut r = gen::rng(seed);
        let base = gen::trace(&mut r, Shape::default(), 6, 2);
        if let Some(t) = gen::inject(&mut r, &base, INJECTED[kind]) {
            let n = t.replay().unwrap();
            for d in find_detours(&n).unwrap() {
                if let Ok(m) = reduce_detour(&n, &d) {
                    prop_assert!(m.is_valid());
                    prop_assert!(isomorphic(&m.premiss().unwrap(), &n.premiss().unwrap()));
                    prop_assert!(isomorphic(&m.conclusion().unwrap(), &n.conclusion().unwrap()));
                }
            }
        }
    }

    #[test]
    fn reflexivity(f in formula()) {
        prop_assert!(prove(&Sequent::new(vec![f.clone()], f)));
    }

    #[test]
    fn weakening(g in formula(), f in formula(), extra in formula()) {
        if prove(&Sequent::new(vec![g.clone()], f.clone())) {
            prop_assert!(prove(&Sequent::new(vec![g, extra], f)));
        }
    }

    #[test]
    fn cut(g in formula(), a in formula(), b in formula()) {
        if prove(&Sequent::new(vec![g.clone()], a.clone())) && prove(&Sequent::new(vec![g.clone(), a], b.clone())) {
            prop_assert!(prove(&Sequent::new(vec![g], b)));
        }
    }

    #[test]
    fn provable_means_valid(g in formula(), f in formula()) {
        let s = Sequent::new(vec![g], f);
        if prove(&s) {
            prop_assert!(kripke_check(&s, 3));
        }
    }
}
