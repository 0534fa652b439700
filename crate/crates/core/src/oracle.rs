//! Intuitionistic entailment in the ⊤/∧/⇒ fragment: a contraction-free
//! sequent prover and an exhaustive Kripke model checker.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::batch::Exec;
use crate::formula::{Formula, Sequent};
use crate::id::Atom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Top,
    Atom(u32),
    And(u32, u32),
    Imp(u32, u32),
}

/// A G4ip prover over hash-consed formulas. The memo table lives as long as
/// the prover.
#[derive(Debug, Default)]
pub struct Prover {
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
    atoms: HashMap<Atom, u32>,
    memo: HashMap<(Box<[u32]>, u32), bool>,
}

/// Memo entries kept before the table is cleared.
const MEMO_LIMIT: usize = 1 << 20;

impl Prover {
    pub fn new() -> Self {
        Prover::default()
    }

    fn intern(&mut self, n: Node) -> u32 {
        if let Some(&i) = self.index.get(&n) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(n);
        self.index.insert(n, i);
        i
    }

    fn atom_id(&mut self, a: &Atom) -> u32 {
        let next = self.atoms.len() as u32;
        let k = *self.atoms.entry(a.clone()).or_insert(next);
        self.intern(Node::Atom(k))
    }

    fn formula(&mut self, f: &Formula) -> u32 {
        match f {
            Formula::Top => self.intern(Node::Top),
            Formula::Atom(a) => self.atom_id(a),
            Formula::Impl(a, b) => {
                let (a, b) = (self.formula(a), self.formula(b));
                self.intern(Node::Imp(a, b))
            }
            Formula::Conj(items) => {
                let ids: Vec<u32> = items.iter().map(|g| self.formula(g)).collect();
                let mut acc = *ids.last().expect("conjunctions have two items");
                for &g in ids.iter().rev().skip(1) {
                    acc = self.intern(Node::And(g, acc));
                }
                acc
            }
        }
    }

    /// Adds `f` to a sorted context, splitting conjunctions and dropping ⊤.
    fn add(&self, ctx: &mut Vec<u32>, f: u32) {
        match self.nodes[f as usize] {
            Node::Top => {}
            Node::And(a, b) => {
                self.add(ctx, a);
                self.add(ctx, b);
            }
            _ => {
                if let Err(k) = ctx.binary_search(&f) {
                    ctx.insert(k, f);
                }
            }
        }
    }

    pub fn prove(&mut self, s: &Sequent) -> bool {
        let mut ctx = Vec::new();
        for h in &s.hypotheses {
            let id = self.formula(h);
            self.add(&mut ctx, id);
        }
        let g = self.formula(&s.goal);
        self.search(ctx, g)
    }

    fn search(&mut self, ctx: Vec<u32>, goal: u32) -> bool {
        match self.nodes[goal as usize] {
            Node::Top => true,
            Node::And(a, b) => self.search(ctx.clone(), a) && self.search(ctx, b),
            Node::Imp(a, b) => {
                let mut c = ctx;
                self.add(&mut c, a);
                self.search(c, b)
            }
            Node::Atom(_) => self.atomic(ctx, goal),
        }
    }

    fn without(ctx: &[u32], k: usize) -> Vec<u32> {
        let mut c = ctx.to_vec();
        c.remove(k);
        c
    }

    fn atomic(&mut self, ctx: Vec<u32>, goal: u32) -> bool {
        if ctx.binary_search(&goal).is_ok() {
            return true;
        }
        // Invertible left rules first.
        for (k, &h) in ctx.iter().enumerate() {
            let Node::Imp(a, b) = self.nodes[h as usize] else { continue };
            let replacement = match self.nodes[a as usize] {
                Node::Top => Some(b),
                Node::Atom(_) if ctx.binary_search(&a).is_ok() => Some(b),
                Node::And(c, d) => {
                    let db = self.intern(Node::Imp(d, b));
                    Some(self.intern(Node::Imp(c, db)))
                }
                _ => None,
            };
            if let Some(r) = replacement {
                let mut next = Self::without(&ctx, k);
                self.add(&mut next, r);
                return self.atomic(next, goal);
            }
        }
        let key = (ctx.clone().into_boxed_slice(), goal);
        if let Some(&r) = self.memo.get(&key) {
            return r;
        }
        let mut found = false;
        for (k, &h) in ctx.iter().enumerate() {
            let Node::Imp(a, b) = self.nodes[h as usize] else { continue };
            let Node::Imp(c, d) = self.nodes[a as usize] else { continue };
            let rest = Self::without(&ctx, k);
            let db = self.intern(Node::Imp(d, b));
            let mut left = rest.clone();
            self.add(&mut left, db);
            self.add(&mut left, c);
            if !self.search(left, d) {
                continue;
            }
            let mut right = rest;
            self.add(&mut right, b);
            if self.search(right, goal) {
                found = true;
                break;
            }
        }
        if self.memo.len() >= MEMO_LIMIT {
            self.memo.clear();
        }
        self.memo.insert(key, found);
        found
    }
}

/// Whether the sequent is intuitionistically derivable.
pub fn prove(s: &Sequent) -> bool {
    Prover::new().prove(s)
}

/// Mutual entailment.
pub fn equivalent(f: &Formula, g: &Formula) -> bool {
    let mut p = Prover::new();
    p.prove(&Sequent::new(vec![f.clone()], g.clone())) && p.prove(&Sequent::new(vec![g.clone()], f.clone()))
}

/// A finite rooted poset; world 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub worlds: usize,
    /// `up[w]`: the worlds `v` with `w ≤ v`, `w` included.
    pub up: Vec<Vec<usize>>,
}

impl Frame {
    fn leq(&self, w: usize, v: usize) -> bool {
        self.up[w].contains(&v)
    }

    /// Sets of worlds closed upwards, as bitmasks.
    fn upsets(&self) -> Vec<u32> {
        (0u32..1 << self.worlds)
            .filter(|&s| (0..self.worlds).all(|w| s & (1 << w) == 0 || self.up[w].iter().all(|&v| s & (1 << v) != 0)))
            .collect()
    }
}

/// Every rooted poset with at most `max_worlds` worlds, up to isomorphism.
pub fn rooted_frames(max_worlds: usize) -> Vec<Frame> {
    let mut out = Vec::new();
    for k in 1..=max_worlds {
        let others: Vec<usize> = (1..k).collect();
        let pairs: Vec<(usize, usize)> =
            others.iter().flat_map(|&i| others.iter().filter(move |&&j| j != i).map(move |&j| (i, j))).collect();
        let mut seen = std::collections::BTreeSet::new();
        for bits in 0u64..1 << pairs.len() {
            let lt = |i: usize, j: usize| {
                i == 0 && j != 0 || pairs.iter().position(|&p| p == (i, j)).is_some_and(|q| bits & (1 << q) != 0)
            };
            let strict = (0..k).all(|i| {
                (0..k).all(|j| !(lt(i, j) && lt(j, i)) && (0..k).all(|m| !(lt(i, j) && lt(j, m)) || lt(i, m)))
            });
            if !strict {
                continue;
            }
            let canon = permutations(&others)
                .into_iter()
                .map(|perm| {
                    let at = |w: usize| if w == 0 { 0 } else { perm[w - 1] };
                    let mut code = Vec::new();
                    for i in 0..k {
                        for j in 0..k {
                            code.push(lt(i, j) as u8);
                        }
                    }
                    let mut relabeled = vec![0u8; k * k];
                    for i in 0..k {
                        for j in 0..k {
                            relabeled[at(i) * k + at(j)] = code[i * k + j];
                        }
                    }
                    relabeled
                })
                .min()
                .expect("one permutation");
            if seen.insert(canon) {
                let up = (0..k).map(|w| (0..k).filter(|&v| v == w || lt(w, v)).collect()).collect();
                out.push(Frame { worlds: k, up });
            }
        }
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (k, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Block {
    frame: Frame,
    upsets: Vec<u32>,
    models: usize,
    words: usize,
    offset: usize,
}

/// Every Kripke model on the frames up to a size, for a fixed atom list,
/// evaluated in parallel: a value holds one bit per (model, world).
#[derive(Debug, Clone)]
pub struct Models {
    atoms: Vec<Atom>,
    blocks: Vec<Block>,
    len: usize,
}

/// A world of a model where the hypotheses hold and the goal does not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Countermodel {
    pub worlds: usize,
    /// Pairs `(w, v)` with `w < v`.
    pub order: Vec<(usize, usize)>,
    /// The worlds where each atom holds.
    pub valuation: BTreeMap<String, Vec<usize>>,
    pub world: usize,
}

impl Models {
    /// # Panics
    /// If `max_worlds` is not between 1 and 5.
    pub fn new(atoms: Vec<Atom>, max_worlds: usize) -> Models {
        assert!((1..=5).contains(&max_worlds), "frame bound must be between 1 and 5");
        let mut blocks = Vec::new();
        let mut len = 0;
        for frame in rooted_frames(max_worlds) {
            let upsets = frame.upsets();
            let models = upsets.len().pow(atoms.len() as u32);
            let words = models.div_ceil(64);
            blocks.push(Block { offset: len, words, models, upsets, frame: frame.clone() });
            len += words * frame.worlds;
        }
        Models { atoms, blocks, len }
    }

    pub fn width(&self) -> usize {
        self.len
    }

    pub fn model_count(&self) -> usize {
        self.blocks.iter().map(|b| b.models).sum()
    }

    pub fn top(&self) -> Vec<u64> {
        vec![!0; self.len]
    }

    pub fn atom(&self, k: usize) -> Vec<u64> {
        let mut out = vec![0; self.len];
        let power = |b: &Block| b.upsets.len().pow(k as u32);
        for b in &self.blocks {
            for m in 0..b.models {
                let set = b.upsets[(m / power(b)) % b.upsets.len()];
                for w in 0..b.frame.worlds {
                    if set & (1 << w) != 0 {
                        out[b.offset + w * b.words + m / 64] |= 1 << (m % 64);
                    }
                }
            }
        }
        out
    }

    pub fn and_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = x & y;
        }
    }

    pub fn imp_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for blk in &self.blocks {
            for w in 0..blk.frame.worlds {
                for k in 0..blk.words {
                    let mut acc = !0u64;
                    for &v in &blk.frame.up[w] {
                        let i = blk.offset + v * blk.words + k;
                        acc &= !a[i] | b[i];
                    }
                    out[blk.offset + w * blk.words + k] = acc;
                }
            }
        }
    }

    /// The value of `f`. Atoms outside the model's list are false everywhere.
    pub fn eval(&self, f: &Formula) -> Vec<u64> {
        match f {
            Formula::Top => self.top(),
            Formula::Atom(a) => match self.atoms.iter().position(|b| b == a) {
                Some(k) => self.atom(k),
                None => vec![0; self.len],
            },
            Formula::Conj(items) => {
                let mut acc = self.top();
                for g in items {
                    let v = self.eval(g);
                    let prev = acc.clone();
                    self.and_into(&prev, &v, &mut acc);
                }
                acc
            }
            Formula::Impl(a, b) => {
                let (va, vb) = (self.eval(a), self.eval(b));
                let mut out = vec![0; self.len];
                self.imp_into(&va, &vb, &mut out);
                out
            }
        }
    }

    fn first_failure(&self, hyp: &[u64], goal: &[u64]) -> Option<(usize, usize, usize)> {
        for (bi, b) in self.blocks.iter().enumerate() {
            for w in 0..b.frame.worlds {
                for k in 0..b.words {
                    let i = b.offset + w * b.words + k;
                    let live = if (k + 1) * 64 <= b.models { !0 } else { (1u64 << (b.models % 64)) - 1 };
                    let bad = hyp[i] & !goal[i] & live;
                    if bad != 0 {
                        return Some((bi, w, k * 64 + bad.trailing_zeros() as usize));
                    }
                }
            }
        }
        None
    }

    /// Whether every world forcing `hyp` forces `goal`.
    pub fn holds(&self, hyp: &[u64], goal: &[u64]) -> bool {
        self.first_failure(hyp, goal).is_none()
    }

    pub fn countermodel(&self, hyp: &[u64], goal: &[u64]) -> Option<Countermodel> {
        let (bi, world, m) = self.first_failure(hyp, goal)?;
        let b = &self.blocks[bi];
        let f = &b.frame;
        let order = (0..f.worlds)
            .flat_map(|w| (0..f.worlds).filter(move |&v| v != w && f.leq(w, v)).map(move |v| (w, v)))
            .collect();
        let valuation = self
            .atoms
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let set = b.upsets[(m / b.upsets.len().pow(k as u32)) % b.upsets.len()];
                (a.to_string(), (0..f.worlds).filter(|w| set & (1 << w) != 0).collect())
            })
            .collect();
        Some(Countermodel { worlds: f.worlds, order, valuation, world })
    }
}

fn sequent_models(s: &Sequent, max_worlds: usize) -> (Models, Vec<u64>, Vec<u64>) {
    let mut atoms = Vec::new();
    for h in &s.hypotheses {
        h.atoms(&mut atoms);
    }
    s.goal.atoms(&mut atoms);
    atoms.sort();
    atoms.dedup();
    let models = Models::new(atoms, max_worlds);
    let hyp = models.eval(&Formula::conj(s.hypotheses.iter().cloned()));
    let goal = models.eval(&s.goal);
    (models, hyp, goal)
}

/// Whether the sequent holds in every model on rooted frames with at most
/// `max_worlds` worlds.
///
/// # Panics
/// If `max_worlds` is not between 1 and 5.
pub fn kripke_check(s: &Sequent, max_worlds: usize) -> bool {
    let (m, h, g) = sequent_models(s, max_worlds);
    m.holds(&h, &g)
}

pub fn kripke_countermodel(s: &Sequent, max_worlds: usize) -> Option<Countermodel> {
    let (m, h, g) = sequent_models(s, max_worlds);
    m.countermodel(&h, &g)
}

#[derive(Debug, Clone, Copy)]
enum Entry {
    Atom(usize),
    And(u32, u32),
    Imp(u32, u32),
}

/// Outcome of checking every formula up to a size.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrossCheck {
    pub formulas: u64,
    /// Formulas true in every model up to the bound.
    pub kripke_valid: u64,
    pub provable: u64,
    /// Formulas the prover derives although a countermodel exists.
    pub failures: Vec<Formula>,
}

impl CrossCheck {
    fn merge(mut self, other: CrossCheck) -> CrossCheck {
        self.formulas += other.formulas;
        self.kripke_valid += other.kripke_valid;
        self.provable += other.provable;
        self.failures.extend(other.failures);
        self
    }
}

struct Table {
    entries: Vec<Entry>,
    levels: Vec<std::ops::Range<usize>>,
    values: Vec<u64>,
    stride: usize,
}

impl Table {
    fn build(models: &Models, atoms: usize, below: usize) -> Table {
        let stride = models.width();
        let mut t = Table { entries: Vec::new(), levels: Vec::new(), values: Vec::new(), stride };
        let mut scratch = vec![0; stride];
        for level in 0..below {
            let start = t.entries.len();
            if level == 0 {
                for k in 0..atoms {
                    t.entries.push(Entry::Atom(k));
                    t.values.extend(models.atom(k));
                }
            } else {
                for i in 0..level {
                    for x in t.levels[i].clone() {
                        for y in t.levels[level - 1 - i].clone() {
                            for imp in [false, true] {
                                let (vx, vy) = (t.value(x), t.value(y));
                                if imp {
                                    models.imp_into(vx, vy, &mut scratch);
                                } else {
                                    models.and_into(vx, vy, &mut scratch);
                                }
                                let (x, y) = (x as u32, y as u32);
                                t.entries.push(if imp { Entry::Imp(x, y) } else { Entry::And(x, y) });
                                t.values.extend_from_slice(&scratch);
                            }
                        }
                    }
                }
            }
            t.levels.push(start..t.entries.len());
        }
        t
    }

    fn value(&self, i: usize) -> &[u64] {
        &self.values[i * self.stride..(i + 1) * self.stride]
    }

    fn formula(&self, i: usize, atoms: &[Atom]) -> Formula {
        match self.entries[i] {
            Entry::Atom(k) => Formula::Atom(atoms[k].clone()),
            Entry::And(x, y) => Formula::and(self.formula(x as usize, atoms), self.formula(y as usize, atoms)),
            Entry::Imp(x, y) => Formula::imp(self.formula(x as usize, atoms), self.formula(y as usize, atoms)),
        }
    }
}

/// A prover working on table entries.
struct Checker<'a> {
    table: &'a Table,
    prover: Prover,
    ids: Vec<u32>,
    provable: Vec<u8>,
}

impl<'a> Checker<'a> {
    fn new(table: &'a Table) -> Self {
        let n = table.entries.len();
        Checker { table, prover: Prover::new(), ids: vec![u32::MAX; n], provable: vec![2; n] }
    }

    fn id(&mut self, i: usize) -> u32 {
        if self.ids[i] != u32::MAX {
            return self.ids[i];
        }
        let id = match self.table.entries[i] {
            Entry::Atom(k) => self.prover.intern(Node::Atom(k as u32)),
            Entry::And(x, y) => {
                let (x, y) = (self.id(x as usize), self.id(y as usize));
                self.prover.intern(Node::And(x, y))
            }
            Entry::Imp(x, y) => {
                let (x, y) = (self.id(x as usize), self.id(y as usize));
                self.prover.intern(Node::Imp(x, y))
            }
        };
        self.ids[i] = id;
        id
    }

    fn entails(&mut self, x: usize, y: usize) -> bool {
        let (x, y) = (self.id(x), self.id(y));
        let mut ctx = Vec::new();
        self.prover.add(&mut ctx, x);
        self.prover.search(ctx, y)
    }

    fn theorem(&mut self, i: usize) -> bool {
        if self.provable[i] == 2 {
            let r = match self.table.entries[i] {
                Entry::Atom(_) => false,
                Entry::And(x, y) => self.theorem(x as usize) && self.theorem(y as usize),
                Entry::Imp(x, y) => self.entails(x as usize, y as usize),
            };
            self.provable[i] = r as u8;
        }
        self.provable[i] == 1
    }
}

enum Job {
    Stored(std::ops::Range<usize>),
    /// Formulas `x op y` with `x` in the range and `y` in a stored level.
    Top { xs: std::ops::Range<usize>, ys: std::ops::Range<usize> },
}

/// Checks `prove ⇒ kripke_check` on every formula over `atoms` built from
/// ∧ and ⇒ with at most `max_connectives` connectives.
pub fn cross_check(atoms: &[Atom], max_connectives: usize, max_worlds: usize, exec: Exec) -> CrossCheck {
    let models = Models::new(atoms.to_vec(), max_worlds);
    // Levels below the top are stored; the top level is generated on the fly.
    let top = max_connectives;
    let table = Table::build(&models, atoms.len(), top.max(1));
    let mut jobs = Vec::new();
    for r in &table.levels {
        for start in r.clone().step_by(1 << 14) {
            jobs.push(Job::Stored(start..(start + (1 << 14)).min(r.end)));
        }
    }
    if top > 0 {
        for i in 0..top {
            let xs = table.levels[i].clone();
            let ys = table.levels[top - 1 - i].clone();
            let per = ((1usize << 17) / ys.len().max(1)).max(1);
            for start in xs.clone().step_by(per) {
                jobs.push(Job::Top { xs: start..(start + per).min(xs.end), ys: ys.clone() });
            }
        }
    }
    let run = |job: Job| -> CrossCheck {
        let mut out = CrossCheck::default();
        let mut ck = Checker::new(&table);
        let mut scratch = vec![0; table.stride];
        let top_value = models.top();
        let check = |ck: &mut Checker, out: &mut CrossCheck, value: &[u64], provable: &mut dyn FnMut(&mut Checker) -> bool| -> bool {
            out.formulas += 1;
            let valid = models.holds(&top_value, value);
            out.kripke_valid += valid as u64;
            let proved = provable(ck);
            out.provable += proved as u64;
            proved && !valid
        };
        match job {
            Job::Stored(r) => {
                for i in r {
                    if check(&mut ck, &mut out, table.value(i), &mut |ck| ck.theorem(i)) {
                        out.failures.push(table.formula(i, atoms));
                    }
                }
            }
            Job::Top { xs, ys } => {
                for x in xs {
                    for y in ys.clone() {
                        for imp in [false, true] {
                            if imp {
                                models.imp_into(table.value(x), table.value(y), &mut scratch);
                            } else {
                                models.and_into(table.value(x), table.value(y), &mut scratch);
                            }
                            let prove = &mut |ck: &mut Checker| {
                                if imp {
                                    ck.entails(x, y)
                                } else {
                                    ck.theorem(x) && ck.theorem(y)
                                }
                            };
                            if check(&mut ck, &mut out, &scratch, prove) {
                                let (fx, fy) = (table.formula(x, atoms), table.formula(y, atoms));
                                out.failures.push(if imp { Formula::imp(fx, fy) } else { Formula::and(fx, fy) });
                            }
                        }
                    }
                }
            }
        }
        out
    };
    exec.map(jobs, run).into_iter().fold(CrossCheck::default(), CrossCheck::merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Sequent {
        Sequent::parse(s).unwrap()
    }

    const PEIRCE: &str = "|- ((a => b) => a) => a";

    #[test]
    fn curated_sequents() {
        assert!(prove(&seq("a, a => b |- b")));
        assert!(prove(&seq("|- a => a")));
        assert!(!prove(&seq(PEIRCE)));
        assert!(prove(&seq("|- T")));
        assert!(prove(&seq("a & b |- b & a")));
        assert!(!prove(&seq("a => b |- a")));
        assert!(prove(&seq("(a => b) => c, b |- c")));
        assert!(prove(&seq("|- ((a => b) => b) => (a => b) => b")));
        assert!(!prove(&seq("|- ((a => b) => b) => a")));
    }

    #[test]
    fn equivalences() {
        let f = |s: &str| Formula::parse(s).unwrap();
        assert!(equivalent(&f("a & b"), &f("b & a")));
        assert!(equivalent(&f("a => b => c"), &f("a & b => c")));
        assert!(!equivalent(&f("a => b"), &f("b => a")));
    }

    #[test]
    fn frames_up_to_three_worlds() {
        let fs = rooted_frames(3);
        assert_eq!(fs.len(), 4);
        assert_eq!(rooted_frames(4).len(), 4 + 5);
        let m = Models::new(vec![Atom::new("a"), Atom::new("b")], 3);
        assert_eq!(m.model_count(), 4 + 9 + 16 + 25);
    }

    #[test]
    fn kripke_examples() {
        assert!(kripke_check(&seq("a, a => b |- b"), 3));
        assert!(kripke_check(&seq("|- T"), 1));
        assert!(!kripke_check(&seq(PEIRCE), 2));
        let cm = kripke_countermodel(&seq(PEIRCE), 2).unwrap();
        assert_eq!(cm.worlds, 2);
        assert_eq!(cm.order, vec![(0, 1)]);
        assert!(kripke_check(&seq(PEIRCE), 1));
    }

    #[test]
    fn small_cross_check() {
        let atoms = [Atom::new("a"), Atom::new("b")];
        let got = cross_check(&atoms, 3, 3, Exec::Sequential);
        assert_eq!(got.formulas, 2 + 8 + 64 + 640);
        assert!(got.failures.is_empty());
        assert_eq!(got, cross_check(&atoms, 3, 3, Exec::Parallel));
        assert_eq!(cross_check(&atoms, 0, 2, Exec::Sequential).formulas, 2);
    }
}
