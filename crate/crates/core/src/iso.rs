//! Isomorphism of scroll structures and of nets.
//!
//! Both graphs are coloured by joint refinement over every relation (edges,
//! attachments and, for nets, the arrow sets). On forests the stable colours
//! agree with canonical subtree codes, so matching is greedy in practice;
//! sharing falls back to backtracking. Candidates are tried in id order, so
//! the witness returned is deterministic.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use crate::id::NodeId;
use crate::structure::ScrollStructure;

pub type Mapping = BTreeMap<NodeId, NodeId>;

/// What an isomorphism must preserve beyond the structure itself.
#[derive(Default)]
pub(crate) struct Extra<'a> {
    pub unary: Vec<&'a BTreeSet<NodeId>>,
    pub binary: Vec<&'a BTreeSet<(NodeId, NodeId)>>,
}

type Adjacency = Vec<Vec<usize>>;

struct Indexed {
    ids: Vec<NodeId>,
    base: Vec<u64>,
    // rels[r] = (out-neighbours, in-neighbours); relation 0 is the edge set.
    rels: Vec<(Adjacency, Adjacency)>,
}

fn hash_of<T: Hash>(t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

impl Indexed {
    fn new(s: &ScrollStructure, extra: &Extra<'_>) -> Indexed {
        let ids: Vec<NodeId> = s.nodes.keys().cloned().collect();
        let index: HashMap<&NodeId, usize> = ids.iter().enumerate().map(|(k, v)| (v, k)).collect();
        let n = ids.len();
        let base = ids
            .iter()
            .map(|v| {
                let flags: Vec<bool> = extra.unary.iter().map(|u| u.contains(v)).collect();
                hash_of(&(s.label(v).map(|a| a.as_str()), flags))
            })
            .collect();
        let mut sets: Vec<&BTreeSet<(NodeId, NodeId)>> = vec![&s.edges, &s.attachments];
        sets.extend(extra.binary.iter().copied());
        let rels = sets
            .into_iter()
            .map(|set| {
                let mut out = vec![Vec::new(); n];
                let mut inn = vec![Vec::new(); n];
                for (a, b) in set {
                    if let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) {
                        out[i].push(j);
                        inn[j].push(i);
                    }
                }
                (out, inn)
            })
            .collect();
        Indexed { ids, base, rels }
    }

    fn refine(&self, colours: &[u64]) -> Vec<u64> {
        (0..self.ids.len())
            .map(|x| {
                let mut h = DefaultHasher::new();
                colours[x].hash(&mut h);
                for (out, inn) in &self.rels {
                    let mut o: Vec<u64> = out[x].iter().map(|&y| colours[y]).collect();
                    let mut i: Vec<u64> = inn[x].iter().map(|&y| colours[y]).collect();
                    o.sort_unstable();
                    i.sort_unstable();
                    o.hash(&mut h);
                    i.hash(&mut h);
                }
                h.finish()
            })
            .collect()
    }

    /// Parents first; nodes on cycles at the end.
    fn order(&self) -> Vec<usize> {
        let n = self.ids.len();
        let (out, inn) = &self.rels[0];
        let mut indeg: Vec<usize> = inn.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&x| indeg[x] == 0).collect();
        let mut order = Vec::with_capacity(n);
        let mut placed = vec![false; n];
        loop {
            while let Some(x) = ready.pop_first() {
                order.push(x);
                placed[x] = true;
                for &c in &out[x] {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        ready.insert(c);
                    }
                }
            }
            match (0..n).find(|&x| !placed[x]) {
                Some(x) => {
                    indeg[x] = 0;
                    ready.insert(x);
                }
                None => break,
            }
        }
        order
    }
}

fn distinct(a: &[u64], b: &[u64]) -> usize {
    a.iter().chain(b).collect::<std::collections::HashSet<_>>().len()
}

struct Matcher<'a> {
    a: &'a Indexed,
    b: &'a Indexed,
    ca: Vec<u64>,
    cb: Vec<u64>,
    buckets: HashMap<u64, Vec<usize>>,
    order: Vec<usize>,
    fwd: Vec<usize>,
    inv: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Matcher<'_> {
    fn consistent(&self, x: usize, y: usize) -> bool {
        for (r, (oa, ia)) in self.a.rels.iter().enumerate() {
            let (ob, ib) = &self.b.rels[r];
            for &z in &oa[x] {
                if self.fwd[z] != NONE && !ob[y].contains(&self.fwd[z]) {
                    return false;
                }
            }
            for &z in &ia[x] {
                if self.fwd[z] != NONE && !ib[y].contains(&self.fwd[z]) {
                    return false;
                }
            }
            for &w in &ob[y] {
                if self.inv[w] != NONE && !oa[x].contains(&self.inv[w]) {
                    return false;
                }
            }
            for &w in &ib[y] {
                if self.inv[w] != NONE && !ia[x].contains(&self.inv[w]) {
                    return false;
                }
            }
        }
        true
    }

    fn candidates(&self, x: usize) -> Vec<usize> {
        let parent = self.a.rels[0].1[x].iter().find(|&&p| self.fwd[p] != NONE);
        let pool: Vec<usize> = match parent {
            Some(&p) => self.b.rels[0].0[self.fwd[p]].clone(),
            None => self.buckets.get(&self.ca[x]).cloned().unwrap_or_default(),
        };
        let mut c: Vec<usize> =
            pool.into_iter().filter(|&y| self.inv[y] == NONE && self.cb[y] == self.ca[x]).collect();
        c.sort_unstable();
        c
    }

    fn search(&mut self, k: usize) -> bool {
        if k == self.order.len() {
            return true;
        }
        let x = self.order[k];
        for y in self.candidates(x) {
            self.fwd[x] = y;
            self.inv[y] = x;
            if self.consistent(x, y) && self.search(k + 1) {
                return true;
            }
            self.fwd[x] = NONE;
            self.inv[y] = NONE;
        }
        false
    }
}

fn matching(a: &Indexed, b: &Indexed) -> Option<Mapping> {
    let n = a.ids.len();
    if n != b.ids.len() {
        return None;
    }
    for (ra, rb) in a.rels.iter().zip(&b.rels) {
        let ea: usize = ra.0.iter().map(Vec::len).sum();
        let eb: usize = rb.0.iter().map(Vec::len).sum();
        if ea != eb {
            return None;
        }
    }
    let (mut ca, mut cb) = (a.base.clone(), b.base.clone());
    let mut classes = distinct(&ca, &cb);
    for _ in 0..=n {
        let (na, nb) = (a.refine(&ca), b.refine(&cb));
        let c = distinct(&na, &nb);
        ca = na;
        cb = nb;
        if c == classes {
            break;
        }
        classes = c;
    }
    let mut sa = ca.clone();
    let mut sb = cb.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return None;
    }
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (y, c) in cb.iter().enumerate() {
        buckets.entry(*c).or_default().push(y);
    }
    let mut m = Matcher { a, b, ca, cb, buckets, order: a.order(), fwd: vec![NONE; n], inv: vec![NONE; n] };
    if !m.search(0) {
        return None;
    }
    Some((0..n).map(|x| (a.ids[x].clone(), b.ids[m.fwd[x]].clone())).collect())
}

pub(crate) fn isomorphism_with(
    a: &ScrollStructure,
    ea: &Extra<'_>,
    b: &ScrollStructure,
    eb: &Extra<'_>,
) -> Option<Mapping> {
    matching(&Indexed::new(a, ea), &Indexed::new(b, eb))
}

/// A bijection from the nodes of `a` to those of `b` preserving edges, labels
/// and attachments, if one exists.
pub fn isomorphism(a: &ScrollStructure, b: &ScrollStructure) -> Option<Mapping> {
    isomorphism_with(a, &Extra::default(), b, &Extra::default())
}

pub fn isomorphic(a: &ScrollStructure, b: &ScrollStructure) -> bool {
    isomorphism(a, b).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::tests::{shared_outloop, id, mp};

    #[test]
    fn renaming_is_found() {
        let s = mp();
        let t = s.map_ids(|v| NodeId::new(format!("x_{v}")));
        let m = isomorphism(&s, &t).unwrap();
        for (k, v) in &m {
            assert_eq!(v.as_str(), format!("x_{k}"));
        }
        let own = isomorphism(&s, &s).unwrap();
        assert!(own.iter().all(|(k, v)| k == v));
    }

    #[test]
    fn juxtaposition_is_unordered() {
        let a = ScrollStructure::parse("a b").unwrap();
        let b = ScrollStructure::parse("b a").unwrap();
        assert!(isomorphic(&a, &b));
    }

    #[test]
    fn orientation_matters() {
        let a = ScrollStructure::parse("[a ; b]").unwrap();
        let b = ScrollStructure::parse("[b ; a]").unwrap();
        assert!(!isomorphic(&a, &b));
    }

    #[test]
    fn sharing_is_respected() {
        let f = shared_outloop();
        let g = f.map_ids(|v| v.with_prefix("z"));
        assert!(isomorphic(&f, &g));
        // The same nodes without sharing: two copies of b.
        let h = ScrollStructure::parse("[a ; b] [c ; b]").unwrap();
        assert!(!isomorphic(&f, &h));
        let m = isomorphism(&f, &g).unwrap();
        assert_eq!(m[&id("b")], id("zb"));
    }

    #[test]
    fn symmetric_structures_match() {
        let a = ScrollStructure::parse("[a [b ; c] ; [b ; c] a] [a [b ; c] ; [b ; c] a]").unwrap();
        let b = a.map_ids(|v| NodeId::new(format!("{v}r")));
        assert!(isomorphic(&a, &b));
        let c = ScrollStructure::parse("[a [b ; c] ; [b ; c] a] [a [b ; c] ; [c ; b] a]").unwrap();
        assert!(!isomorphic(&a, &c));
    }
}
