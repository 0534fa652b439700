//! Simply typed λ-terms, their translation to scroll nets, and β-reduction
//! simulated by detour reduction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::derivation::{apply_traced, fresh_prefix, Fresh, Step, Trace};
use crate::detour::{find_detours, reduce_detour, DetourKind, DetourReport};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::id::{is_atom_name, Atom, NodeId};
use crate::net::ScrollNet;
use crate::structure::ScrollStructure;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SimpleType {
    Base(Atom),
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn base(name: &str) -> SimpleType {
        SimpleType::Base(Atom::new(name))
    }

    pub fn arrow(a: SimpleType, b: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(a), Box::new(b))
    }

    pub fn parse(src: &str) -> Result<SimpleType> {
        let mut p = Parser::new(src)?;
        let t = p.ty()?;
        p.end()?;
        Ok(t)
    }

    /// Atoms for base types, `[A ; B]` for `A -> B`.
    pub fn to_structure(&self) -> ScrollStructure {
        fn text(t: &SimpleType, out: &mut String) {
            match t {
                SimpleType::Base(a) => out.push_str(a.as_str()),
                SimpleType::Arrow(a, b) => {
                    out.push('[');
                    text(a, out);
                    out.push_str(" ; ");
                    text(b, out);
                    out.push(']');
                }
            }
        }
        let mut s = String::new();
        text(self, &mut s);
        ScrollStructure::parse(&s).expect("type text is well formed")
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            SimpleType::Base(a) => Formula::Atom(a.clone()),
            SimpleType::Arrow(a, b) => Formula::imp(a.to_formula(), b.to_formula()),
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Base(a) => write!(f, "{a}"),
            SimpleType::Arrow(a, b) => match **a {
                SimpleType::Arrow(..) => write!(f, "({a}) -> {b}"),
                SimpleType::Base(_) => write!(f, "{a} -> {b}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LambdaTerm {
    Var(String),
    Abs(String, SimpleType, Box<LambdaTerm>),
    App(Box<LambdaTerm>, Box<LambdaTerm>),
}

impl LambdaTerm {
    pub fn var(x: &str) -> LambdaTerm {
        LambdaTerm::Var(x.to_string())
    }

    pub fn abs(x: &str, ty: SimpleType, body: LambdaTerm) -> LambdaTerm {
        LambdaTerm::Abs(x.to_string(), ty, Box::new(body))
    }

    pub fn app(t: LambdaTerm, u: LambdaTerm) -> LambdaTerm {
        LambdaTerm::App(Box::new(t), Box::new(u))
    }

    pub fn parse(src: &str) -> Result<LambdaTerm> {
        let mut p = Parser::new(src)?;
        let t = p.term()?;
        p.end()?;
        Ok(t)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            LambdaTerm::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            LambdaTerm::Abs(x, _, b) => {
                bound.push(x.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
            LambdaTerm::App(t, u) => {
                t.collect_free(bound, out);
                u.collect_free(bound, out);
            }
        }
    }

    /// Equality up to renaming of bound variables.
    pub fn alpha_eq(&self, other: &LambdaTerm) -> bool {
        fn go<'a>(a: &'a LambdaTerm, b: &'a LambdaTerm, env: &mut Vec<(&'a str, &'a str)>) -> bool {
            match (a, b) {
                (LambdaTerm::Var(x), LambdaTerm::Var(y)) => {
                    match (env.iter().rev().find(|(l, _)| l == x), env.iter().rev().find(|(_, r)| r == y)) {
                        (None, None) => x == y,
                        (Some(p), Some(q)) => p == q,
                        _ => false,
                    }
                }
                (LambdaTerm::Abs(x, s, t), LambdaTerm::Abs(y, s2, t2)) => {
                    if s != s2 {
                        return false;
                    }
                    env.push((x, y));
                    let ok = go(t, t2, env);
                    env.pop();
                    ok
                }
                (LambdaTerm::App(f, u), LambdaTerm::App(g, w)) => go(f, g, env) && go(u, w, env),
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    pub fn size(&self) -> usize {
        match self {
            LambdaTerm::Var(_) => 1,
            LambdaTerm::Abs(_, _, b) => 1 + b.size(),
            LambdaTerm::App(t, u) => 1 + t.size() + u.size(),
        }
    }
}

impl fmt::Display for LambdaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaTerm::Var(x) => f.write_str(x),
            LambdaTerm::Abs(x, ty, b) => write!(f, "\\{x}:{ty}. {b}"),
            LambdaTerm::App(t, u) => {
                match **t {
                    LambdaTerm::Abs(..) => write!(f, "({t})")?,
                    _ => write!(f, "{t}")?,
                }
                match **u {
                    LambdaTerm::Var(_) => write!(f, " {u}"),
                    _ => write!(f, " ({u})"),
                }
            }
        }
    }
}

/// An ordered typing context with distinct names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Context(pub Vec<(String, SimpleType)>);

impl Context {
    pub fn lookup(&self, x: &str) -> Option<&SimpleType> {
        self.0.iter().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    /// The juxtaposition of the entries' translations. Entry `x` gets ids
    /// prefixed `x/`.
    pub fn to_structure(&self) -> ScrollStructure {
        let mut out = ScrollStructure::new();
        for (x, t) in &self.0 {
            out.absorb(&t.to_structure().map_ids(|v| v.with_prefix(&format!("{x}/"))));
        }
        out
    }

    fn root_of(&self, x: &str) -> NodeId {
        let t = self.lookup(x).expect("bound");
        let s = t.to_structure();
        let root = s.roots().next().expect("single root").with_prefix(&format!("{x}/"));
        root
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (x, t)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}:{t}")?;
        }
        Ok(())
    }
}

/// Parses `x:A, y:B |- t`, or a bare term with an empty context.
pub fn parse_judgment(src: &str) -> Result<(Context, LambdaTerm)> {
    let mut p = Parser::new(src)?;
    let mut ctx = Context::default();
    if p.toks.iter().any(|(t, _)| *t == Tok::Turnstile) && !p.eat(&Tok::Turnstile) {
        loop {
            let (x, pos) = p.ident()?;
            if ctx.lookup(&x).is_some() {
                return Err(Error::Syntax { pos, msg: format!("`{x}` is declared twice") });
            }
            p.expect(&Tok::Colon)?;
            let t = p.ty()?;
            ctx.0.push((x, t));
            if p.eat(&Tok::Turnstile) {
                break;
            }
            p.expect(&Tok::Comma)?;
        }
    }
    let t = p.term()?;
    p.end()?;
    Ok((ctx, t))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Lambda,
    Colon,
    Dot,
    Comma,
    Arrow,
    Turnstile,
    Open,
    Close,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser> {
        let mut toks = Vec::new();
        let mut it = src.char_indices().peekable();
        while let Some((i, c)) = it.next() {
            let tok = match c {
                c if c.is_whitespace() => continue,
                '\\' | 'λ' => Tok::Lambda,
                ':' => Tok::Colon,
                '.' => Tok::Dot,
                ',' => Tok::Comma,
                '(' => Tok::Open,
                ')' => Tok::Close,
                '⊢' => Tok::Turnstile,
                '→' => Tok::Arrow,
                '-' if it.peek().map(|p| p.1) == Some('>') => {
                    it.next();
                    Tok::Arrow
                }
                '|' if it.peek().map(|p| p.1) == Some('-') => {
                    it.next();
                    Tok::Turnstile
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let mut name = c.to_string();
                    while let Some(&(_, d)) = it.peek() {
                        if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                            name.push(d);
                            it.next();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(name)
                }
                _ => return Err(Error::Syntax { pos: i, msg: format!("unexpected `{c}`") }),
            };
            toks.push((tok, i));
        }
        Ok(Parser { toks, at: 0, len: src.len() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.len, |t| t.1)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Syntax { pos: self.pos(), msg: msg.to_string() })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(&format!("expected {t:?}"))
        }
    }

    fn end(&self) -> Result<()> {
        if self.at < self.toks.len() {
            return self.err("trailing input");
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<(String, usize)> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Ident(x)) => {
                let x = x.clone();
                self.at += 1;
                Ok((x, pos))
            }
            _ => self.err("expected a name"),
        }
    }

    fn ty(&mut self) -> Result<SimpleType> {
        let a = if self.eat(&Tok::Open) {
            let t = self.ty()?;
            self.expect(&Tok::Close)?;
            t
        } else {
            let (name, pos) = self.ident()?;
            if !is_atom_name(&name) {
                return Err(Error::Syntax { pos, msg: format!("`{name}` is not a base type name") });
            }
            SimpleType::base(&name)
        };
        if self.eat(&Tok::Arrow) {
            Ok(SimpleType::arrow(a, self.ty()?))
        } else {
            Ok(a)
        }
    }

    fn term(&mut self) -> Result<LambdaTerm> {
        let mut head: Option<LambdaTerm> = None;
        loop {
            let next = match self.peek() {
                Some(Tok::Lambda) => {
                    self.at += 1;
                    let (x, _) = self.ident()?;
                    self.expect(&Tok::Colon)?;
                    let ty = self.ty()?;
                    self.expect(&Tok::Dot)?;
                    let body = self.term()?;
                    let abs = LambdaTerm::abs(&x, ty, body);
                    return Ok(match head {
                        Some(h) => LambdaTerm::app(h, abs),
                        None => abs,
                    });
                }
                Some(Tok::Open) => {
                    self.at += 1;
                    let t = self.term()?;
                    self.expect(&Tok::Close)?;
                    t
                }
                Some(Tok::Ident(_)) => LambdaTerm::Var(self.ident()?.0),
                _ => break,
            };
            head = Some(match head {
                Some(h) => LambdaTerm::app(h, next),
                None => next,
            });
        }
        match head {
            Some(h) => Ok(h),
            None => self.err("expected a term"),
        }
    }
}

/// The type of `t` under `ctx`.
pub fn infer(ctx: &Context, t: &LambdaTerm) -> Result<SimpleType> {
    fn go(env: &mut Vec<(String, SimpleType)>, t: &LambdaTerm) -> Result<SimpleType> {
        match t {
            LambdaTerm::Var(x) => env
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, ty)| ty.clone())
                .ok_or_else(|| Error::Type(format!("unbound variable `{x}`"))),
            LambdaTerm::Abs(x, a, b) => {
                env.push((x.clone(), a.clone()));
                let bt = go(env, b);
                env.pop();
                Ok(SimpleType::arrow(a.clone(), bt?))
            }
            LambdaTerm::App(f, u) => {
                let ft = go(env, f)?;
                let ut = go(env, u)?;
                match ft {
                    SimpleType::Arrow(a, b) if *a == ut => Ok(*b),
                    SimpleType::Arrow(a, _) => {
                        Err(Error::Type(format!("in `{t}`: argument `{u}` has type {ut}, expected {a}")))
                    }
                    other => Err(Error::Type(format!("in `{t}`: `{f}` has type {other}, not a function type"))),
                }
            }
        }
    }
    go(&mut ctx.0.clone(), t)
}

fn fresh_name(x: &str, avoid: &BTreeSet<String>) -> String {
    (1..).map(|k| format!("{x}{k}")).find(|y| !avoid.contains(y)).expect("some name is free")
}

/// `t[x := s]`, renaming binders that would capture.
pub fn substitute(t: &LambdaTerm, x: &str, s: &LambdaTerm) -> LambdaTerm {
    match t {
        LambdaTerm::Var(y) if y == x => s.clone(),
        LambdaTerm::Var(_) => t.clone(),
        LambdaTerm::App(f, u) => LambdaTerm::app(substitute(f, x, s), substitute(u, x, s)),
        LambdaTerm::Abs(y, ty, b) => {
            if y == x {
                return t.clone();
            }
            let fs = s.free_vars();
            if fs.contains(y) && b.free_vars().contains(x) {
                let mut avoid = fs;
                avoid.extend(b.free_vars());
                avoid.insert(x.to_string());
                let z = fresh_name(y, &avoid);
                let b2 = substitute(b, y, &LambdaTerm::Var(z.clone()));
                LambdaTerm::Abs(z, ty.clone(), Box::new(substitute(&b2, x, s)))
            } else {
                LambdaTerm::Abs(y.clone(), ty.clone(), Box::new(substitute(b, x, s)))
            }
        }
    }
}

fn whnf(t: LambdaTerm) -> LambdaTerm {
    match t {
        LambdaTerm::App(f, u) => match whnf(*f) {
            LambdaTerm::Abs(x, _, b) => whnf(substitute(&b, &x, &u)),
            g => LambdaTerm::App(Box::new(g), u),
        },
        other => other,
    }
}

fn normal_order(t: LambdaTerm) -> LambdaTerm {
    match whnf(t) {
        LambdaTerm::Abs(x, ty, b) => LambdaTerm::Abs(x, ty, Box::new(normal_order(*b))),
        LambdaTerm::App(f, u) => LambdaTerm::app(normal_order(*f), normal_order(*u)),
        v => v,
    }
}

/// The β-normal form, by normal-order reduction. Ill-typed terms are
/// rejected, so reduction terminates.
pub fn reference_normalize(ctx: &Context, t: &LambdaTerm) -> Result<LambdaTerm> {
    infer(ctx, t)?;
    Ok(normal_order(t.clone()))
}

struct Binding {
    node: NodeId,
    from_context: bool,
}

struct Builder<'a> {
    net: ScrollNet,
    ctx: &'a Context,
    /// Free occurrences of each context variable.
    uses: BTreeMap<String, usize>,
}

impl Builder<'_> {
    fn step(&mut self, st: Step) -> Result<Vec<NodeId>> {
        let (n, made) = apply_traced(&self.net, &st)?;
        self.net = n;
        Ok(made)
    }

    fn fresh(&self) -> Fresh {
        Fresh::Prefix(fresh_prefix(self.net.structure()))
    }

    fn live_children(&self, v: &NodeId) -> Result<Vec<NodeId>> {
        Ok(self.net.conclusion()?.children(v).cloned().collect())
    }

    /// Emits `t` into `area` (the sheet when `None`) and returns the root of
    /// its conclusion there.
    fn emit(&mut self, area: Option<&NodeId>, env: &BTreeMap<String, Binding>, t: &LambdaTerm) -> Result<NodeId> {
        match t {
            LambdaTerm::Var(x) => {
                let b = &env[x];
                if b.from_context && area.is_none() && self.uses[x] == 1 {
                    return Ok(b.node.clone());
                }
                let source = b.node.clone();
                let fresh = self.fresh();
                let made = match area {
                    None => self.step(Step::IterateRoot { source, fresh })?,
                    Some(p) => self.step(Step::IterateDeep { source, parent: p.clone(), fresh })?,
                };
                Ok(made[0].clone())
            }
            LambdaTerm::Abs(x, a, body) => {
                let made = self.step(Step::OpenPos { targets: vec![], parent: area.cloned(), fresh: self.fresh() })?;
                let (v, inloop) = (made[0].clone(), made[1].clone());
                let hyp = self.step(Step::Insert { parent: v.clone(), payload: a.to_structure(), fresh: self.fresh() })?;
                let mut inner = BTreeMap::new();
                for (y, b) in env {
                    if y != x {
                        inner.insert(y.clone(), Binding { node: b.node.clone(), from_context: b.from_context });
                    }
                }
                inner.insert(x.clone(), Binding { node: hyp[0].clone(), from_context: false });
                self.emit(Some(&inloop), &inner, body)?;
                Ok(v)
            }
            LambdaTerm::App(f, u) => {
                let rf = self.emit(area, env, f)?;
                // A variable argument is matched straight from its binder.
                let (ru, copied) = match &**u {
                    LambdaTerm::Var(y) if !(env[y].from_context && area.is_none() && self.uses[y] == 1) => {
                        (env[y].node.clone(), false)
                    }
                    _ => (self.emit(area, env, u)?, true),
                };
                let inloop = self.net.structure().inloop_of(&rf).cloned().expect("a function translates to a scroll");
                let hyp: Vec<NodeId> = self.live_children(&rf)?.into_iter().filter(|c| *c != inloop).collect();
                let result = self.live_children(&inloop)?;
                if hyp.len() != 1 || result.len() != 1 {
                    return Err(Error::Type(format!("`{f}` does not translate to a single scroll")));
                }
                self.step(Step::Deiterate { source: ru.clone(), target: hyp[0].clone() })?;
                self.step(Step::ClosePos { target: rf })?;
                if copied {
                    self.step(Step::Delete { target: ru })?;
                }
                Ok(result[0].clone())
            }
        }
    }
}

fn count_uses(t: &LambdaTerm, bound: &mut Vec<String>, out: &mut BTreeMap<String, usize>) {
    match t {
        LambdaTerm::Var(x) => {
            if !bound.contains(x) {
                *out.entry(x.clone()).or_default() += 1;
            }
        }
        LambdaTerm::Abs(x, _, b) => {
            bound.push(x.clone());
            count_uses(b, bound, out);
            bound.pop();
        }
        LambdaTerm::App(f, u) => {
            count_uses(f, bound, out);
            count_uses(u, bound, out);
        }
    }
}

/// The net of `ctx ⊢ t`: premiss the context's translation, conclusion the
/// type's, with the building derivation as certificate.
pub fn translate(ctx: &Context, t: &LambdaTerm) -> Result<ScrollNet> {
    infer(ctx, t)?;
    let origin = ctx.to_structure();
    let mut net = ScrollNet::new(origin.clone());
    net.set_certificate(Some(Trace::new(origin, Vec::new())));
    let mut uses = BTreeMap::new();
    count_uses(t, &mut Vec::new(), &mut uses);
    for (x, _) in &ctx.0 {
        uses.entry(x.clone()).or_insert(0);
    }
    let mut b = Builder { net, ctx, uses };
    let env: BTreeMap<String, Binding> =
        ctx.0.iter().map(|(x, _)| (x.clone(), Binding { node: ctx.root_of(x), from_context: true })).collect();
    let root = b.emit(None, &env, t)?;
    for (x, _) in &b.ctx.0 {
        let r = b.ctx.root_of(x);
        if r != root && b.net.conclusion()?.contains(&r) {
            b.step(Step::Delete { target: r })?;
        }
    }
    Ok(b.net)
}

/// Abstraction scrolls applied to an argument: outloops with an ii detour
/// whose hypothesis carries an aa detour.
pub fn redexes(n: &ScrollNet) -> Result<Vec<NodeId>> {
    let ds = find_detours(n)?;
    let aa: BTreeSet<&NodeId> =
        ds.iter().filter(|d| matches!(d.kind, DetourKind::AaAtom | DetourKind::AaScroll)).map(|d| &d.node).collect();
    let s = n.structure();
    Ok(ds
        .iter()
        .filter(|d| d.kind == DetourKind::Ii && s.outloop_contents(&d.node).iter().any(|h| aa.contains(h)))
        .map(|d| d.node.clone())
        .collect())
}

/// One β-step at the abstraction scroll `redex`: the aa detour on the
/// hypothesis, then the ii detour on the scroll.
pub fn simulate_beta(n: &ScrollNet, redex: &NodeId) -> Result<ScrollNet> {
    if !redexes(n)?.contains(redex) {
        return Err(Error::Detour(format!("`{redex}` is not a redex")));
    }
    let ds = find_detours(n)?;
    let hyp = ds
        .iter()
        .find(|d| {
            matches!(d.kind, DetourKind::AaAtom | DetourKind::AaScroll)
                && n.structure().outloop_contents(redex).contains(&d.node)
        })
        .expect("redex has an aa detour")
        .clone();
    let m = reduce_detour(n, &hyp)?;
    reduce_detour(&m, &DetourReport { node: redex.clone(), kind: DetourKind::Ii })
}

/// Items of the form `Γ ⊢ (λx.t) u` covering I, K, S and Church numerals.
pub const CORPUS: &[(&str, &str)] = &[
    ("I", "y:a |- (\\x:a. x) y"),
    ("K", "y:a |- (\\x:a. \\w:b. x) y"),
    ("S", "g:a -> b -> c |- (\\x:a -> b -> c. \\y:a -> b. \\z:a. x z (y z)) g"),
    ("church0", "f:a -> a |- (\\s:a -> a. \\z:a. z) f"),
    ("church1", "f:a -> a |- (\\s:a -> a. \\z:a. s z) f"),
    ("church2", "f:a -> a |- (\\s:a -> a. \\z:a. s (s z)) f"),
    ("church3", "f:a -> a |- (\\s:a -> a. \\z:a. s (s (s z))) f"),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correctness::{check_certificate, is_correct};
    use crate::derivation::tests::text;
    use crate::detour::normalize;
    use crate::iso::isomorphic;

    fn judgment(src: &str) -> (Context, LambdaTerm) {
        parse_judgment(src).unwrap()
    }

    #[test]
    fn parse_and_print() {
        let t = LambdaTerm::parse("\\x:a.\\f:a->b. (f x)").unwrap();
        assert_eq!(t.to_string(), "\\x:a. \\f:a -> b. f x");
        assert_eq!(LambdaTerm::parse(&t.to_string()).unwrap(), t);
        assert_eq!(SimpleType::parse("(a -> b) -> a -> b").unwrap().to_string(), "(a -> b) -> a -> b");
        let app = LambdaTerm::parse("f x y").unwrap();
        assert_eq!(app, LambdaTerm::app(LambdaTerm::app(LambdaTerm::var("f"), LambdaTerm::var("x")), LambdaTerm::var("y")));
        assert!(matches!(LambdaTerm::parse("\\x. x"), Err(Error::Syntax { .. })));
        let (ctx, _) = judgment("x:a, f:a -> b |- f x");
        assert_eq!(ctx.to_string(), "x:a, f:a -> b");
    }

    #[test]
    fn typing() {
        let ctx = Context::default();
        assert_eq!(infer(&ctx, &LambdaTerm::parse("\\x:a. x").unwrap()).unwrap().to_string(), "a -> a");
        let t = LambdaTerm::parse("\\x:a.\\f:a->b. (f x)").unwrap();
        assert_eq!(infer(&ctx, &t).unwrap().to_string(), "a -> (a -> b) -> b");
        assert!(matches!(infer(&ctx, &LambdaTerm::parse("(x x)").unwrap()), Err(Error::Type(_))));
        let (c2, t2) = judgment("x:a |- x x");
        assert!(matches!(infer(&c2, &t2), Err(Error::Type(m)) if m.contains("not a function")));
    }

    #[test]
    fn reference_normal_forms() {
        let (ctx, t) = judgment("y:a |- (\\x:a. x) y");
        assert_eq!(reference_normalize(&ctx, &t).unwrap(), LambdaTerm::var("y"));
        let id = LambdaTerm::parse("\\x:a. x").unwrap();
        assert_eq!(reference_normalize(&Context::default(), &id).unwrap(), id);
        let two_two = LambdaTerm::parse(
            "(\\s:(a -> a) -> a -> a. \\z:a -> a. s (s z)) (\\s:a -> a. \\z:a. s (s z))",
        )
        .unwrap();
        let four = LambdaTerm::parse("\\z:a -> a. \\w:a. z (z (z (z w)))").unwrap();
        assert!(reference_normalize(&Context::default(), &two_two).unwrap().alpha_eq(&four));
    }

    #[test]
    fn substitution_avoids_capture() {
        let t = LambdaTerm::parse("\\y:a. x").unwrap();
        let s = substitute(&t, "x", &LambdaTerm::var("y"));
        assert!(s.alpha_eq(&LambdaTerm::parse("\\z:a. y").unwrap()));
    }

    #[test]
    fn identity_translation() {
        let n = translate(&Context::default(), &LambdaTerm::parse("\\x:a. x").unwrap()).unwrap();
        assert!(n.is_complete().unwrap());
        assert_eq!(n.conclusion().unwrap().to_text().unwrap(), "[a ; a]");
        assert!(is_correct(&n) && check_certificate(&n));
    }

    #[test]
    fn variable_translation() {
        let (ctx, t) = judgment("x:a |- x");
        let n = translate(&ctx, &t).unwrap();
        assert!(isomorphic(&n.premiss().unwrap(), &text("a")));
        assert!(isomorphic(&n.conclusion().unwrap(), &text("a")));
    }

    #[test]
    fn application_is_modus_ponens() {
        let (ctx, t) = judgment("f:a -> b, x:a |- f x");
        let n = translate(&ctx, &t).unwrap();
        assert!(isomorphic(&n.premiss().unwrap(), &text("a [a ; b]")));
        assert!(isomorphic(&n.conclusion().unwrap(), &text("b")));
        assert_eq!((n.justifications().len(), n.self_justifications().len(), n.collapses().len()), (1, 1, 1));
        assert!(n.expansions().is_empty());
    }

    #[test]
    fn identity_redex_has_two_detours() {
        let (ctx, t) = judgment("y:a |- (\\x:a. x) y");
        let n = translate(&ctx, &t).unwrap();
        let mut kinds: Vec<DetourKind> = find_detours(&n).unwrap().iter().map(|d| d.kind).collect();
        kinds.sort();
        assert_eq!(kinds, vec![DetourKind::Ii, DetourKind::AaAtom]);
        let r = redexes(&n).unwrap();
        assert_eq!(r.len(), 1);
        let m = simulate_beta(&n, &r[0]).unwrap();
        assert!(isomorphic(&m.conclusion().unwrap(), &text("a")));
        assert!(isomorphic(&m.premiss().unwrap(), &text("a")));
        assert!(m.structure().len() < n.structure().len());
        let full = normalize(&n, 100).unwrap();
        assert!(full.normal);
        assert!(isomorphic(&full.net.conclusion().unwrap(), &text("a")));
        assert!(simulate_beta(&m, &r[0]).is_err());
    }

    #[test]
    fn successor_of_one() {
        let (ctx, t) = judgment("|- (\\n:(a -> a) -> a -> a. \\s:a -> a. \\z:a. s (n s z)) (\\s:a -> a. \\z:a. s z)");
        let n = translate(&ctx, &t).unwrap();
        let ty = infer(&ctx, &t).unwrap();
        assert!(n.is_complete().unwrap());
        assert!(isomorphic(&n.conclusion().unwrap(), &ty.to_structure()));
        let r = redexes(&n).unwrap();
        let m = simulate_beta(&n, &r[0]).unwrap();
        assert!(isomorphic(&m.conclusion().unwrap(), &ty.to_structure()));
        let full = normalize(&n, 1000).unwrap();
        assert!(isomorphic(&full.net.conclusion().unwrap(), &ty.to_structure()));
    }

    #[test]
    fn corpus_boundary_contract() {
        for (name, src) in CORPUS {
            let (ctx, t) = judgment(src);
            let ty = infer(&ctx, &t).unwrap();
            let n = translate(&ctx, &t).unwrap();
            assert!(isomorphic(&n.premiss().unwrap(), &ctx.to_structure()), "{name}");
            assert!(isomorphic(&n.conclusion().unwrap(), &ty.to_structure()), "{name}");
            assert!(check_certificate(&n), "{name}");
            assert!(n.structure().len() <= 40, "{name}: {} nodes", n.structure().len());
            let r = redexes(&n).unwrap();
            assert_eq!(r.len(), 1, "{name}");
        }
    }
}
