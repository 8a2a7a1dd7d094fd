//! Exact arithmetic for automorphisms of the `m`-adic tree, `m = p^n`.
//!
//! Elements are immutable expression DAGs over the generators `a` (the rooted
//! full cycle) and `b` (the recursively defined generator of a GGS-group),
//! closed under product, inverse and two auxiliary constructors used by the
//! conjugation lemma: general rooted automorphisms and the "apply a fixed
//! letter permutation at every level" automorphism.
//!
//! All nodes are hash-consed inside an [`Engine`], and sections at single
//! letters are memoized per `(node, letter)` pair, so portraits of deeply
//! nested commutator words stay cheap to evaluate. Elements are plain ids and
//! may be copied freely; they are only meaningful together with the engine
//! that created them. An engine is a single-threaded session: run one engine
//! per worker when fanning out.
//!
//! Composition is left to right: `compose(f, g)` applies `f` first. Sections
//! obey `f(uz) = f(u) f_u(z)`, and consequently
//! `(fg)_u = f_u g_{f(u)}` and `(f^{-1})_u = (f_{f^{-1}(u)})^{-1}`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::arith::valuation;
use crate::error::{GgsError, Result};
use crate::perm::Perm;
use crate::vector::DefiningVector;

/// Shape of the tree: alphabet size `m = p^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeShape {
    pub p: u64,
    pub n: u32,
}

impl TreeShape {
    pub fn m(&self) -> u64 {
        self.p.pow(self.n)
    }
}

/// A vertex of the tree: a word over the letters `{1, ..., m}`. The empty
/// word is the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Vertex(Vec<u32>);

impl Vertex {
    pub fn root() -> Self {
        Vertex(Vec::new())
    }

    pub fn from_letters(letters: Vec<u32>) -> Self {
        Vertex(letters)
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, letter: u32) -> Vertex {
        let mut w = self.0.clone();
        w.push(letter);
        Vertex(w)
    }

    /// Parses dot-joined 1-based letters; the empty string is the root.
    pub fn parse(s: &str) -> Result<Vertex> {
        if s.is_empty() {
            return Ok(Vertex::root());
        }
        let letters = s
            .split('.')
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| GgsError::MalformedVertex(format!("bad letter {t:?}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(Vertex(letters))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

type NodeId = u32;

/// Handle to a hash-consed expression node, valid only with its engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Element {
    engine: u64,
    node: NodeId,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Node {
    Identity,
    /// Rooted automorphism: permutes the top-level subtrees rigidly.
    Rooted(Rc<Perm>),
    /// Recursively defined generator: sections `(a^{v_1}, ..., a^{v_{m-1}}, self)`.
    Spinal(Rc<Vec<u64>>),
    /// Applies the same letter permutation at every level; all sections equal
    /// the element itself.
    Recursive(Rc<Perm>),
    Inverse(NodeId),
    Product(NodeId, NodeId),
}

struct Inner {
    p: u64,
    n: u32,
    m: usize,
    nodes: Vec<Node>,
    dedup: HashMap<Node, NodeId>,
    root_perms: Vec<Option<Rc<Perm>>>,
    sections: HashMap<(NodeId, u32), NodeId>,
    level_maps: HashMap<(NodeId, u32), Rc<Vec<u32>>>,
}

static ENGINE_IDS: AtomicU64 = AtomicU64::new(1);

/// Hard bound on `m^level` for induced level permutations; quotient builders
/// apply their own configurable caps below this.
const LEVEL_MAP_HARD_CAP: u64 = 1 << 22;

/// A single-threaded evaluation session for one defining vector.
pub struct Engine {
    id: u64,
    shape: TreeShape,
    vector: DefiningVector,
    depth_cap: u32,
    inner: RefCell<Inner>,
}

pub const DEFAULT_DEPTH_CAP: u32 = 6;

impl Engine {
    pub fn new(vector: DefiningVector) -> Engine {
        Engine::with_depth_cap(vector, DEFAULT_DEPTH_CAP)
    }

    pub fn with_depth_cap(vector: DefiningVector, depth_cap: u32) -> Engine {
        let shape = TreeShape {
            p: vector.p(),
            n: vector.n(),
        };
        let m = shape.m() as usize;
        Engine {
            id: ENGINE_IDS.fetch_add(1, Ordering::Relaxed),
            shape,
            vector,
            depth_cap,
            inner: RefCell::new(Inner {
                p: shape.p,
                n: shape.n,
                m,
                nodes: Vec::new(),
                dedup: HashMap::new(),
                root_perms: Vec::new(),
                sections: HashMap::new(),
                level_maps: HashMap::new(),
            }),
        }
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn vector(&self) -> &DefiningVector {
        &self.vector
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    pub fn alphabet(&self) -> u32 {
        self.shape.m() as u32
    }

    fn wrap(&self, node: NodeId) -> Element {
        Element {
            engine: self.id,
            node,
        }
    }

    fn unwrap(&self, e: Element) -> Result<NodeId> {
        if e.engine != self.id {
            return Err(GgsError::ShapeMismatch);
        }
        Ok(e.node)
    }

    pub fn identity(&self) -> Element {
        let mut inner = self.inner.borrow_mut();
        self.wrap(inner.intern(Node::Identity))
    }

    /// The rooted automorphism for the full cycle `x_1 -> x_2 -> ... -> x_m -> x_1`.
    pub fn gen_a(&self) -> Element {
        let m = self.shape.m() as usize;
        let mut inner = self.inner.borrow_mut();
        self.wrap(inner.intern(Node::Rooted(Rc::new(Perm::cycle(m)))))
    }

    /// The recursively defined generator of the engine's vector.
    pub fn gen_b(&self) -> Element {
        let entries = self.vector.entries().to_vec();
        let mut inner = self.inner.borrow_mut();
        let node = inner.spinal(entries);
        self.wrap(node)
    }

    /// A recursively defined element with prescribed exponent tuple:
    /// sections `(a^{v_1}, ..., a^{v_{m-1}}, itself)`.
    pub fn spinal(&self, exponents: Vec<u64>) -> Result<Element> {
        if exponents.len() != self.shape.m() as usize - 1 {
            return Err(GgsError::InvalidVector(format!(
                "expected {} exponents",
                self.shape.m() - 1
            )));
        }
        let mut inner = self.inner.borrow_mut();
        let node = inner.spinal(exponents);
        Ok(self.wrap(node))
    }

    /// General rooted automorphism for a permutation of the alphabet.
    pub fn rooted(&self, perm: Perm) -> Result<Element> {
        if perm.degree() != self.shape.m() as usize {
            return Err(GgsError::ShapeMismatch);
        }
        let mut inner = self.inner.borrow_mut();
        Ok(self.wrap(inner.intern(Node::Rooted(Rc::new(perm)))))
    }

    /// The automorphism that applies `perm` to every letter of every word.
    /// Its section at every vertex is itself.
    pub fn recursive_rooted(&self, perm: Perm) -> Result<Element> {
        if perm.degree() != self.shape.m() as usize {
            return Err(GgsError::ShapeMismatch);
        }
        let mut inner = self.inner.borrow_mut();
        Ok(self.wrap(inner.intern(Node::Recursive(Rc::new(perm)))))
    }

    pub fn compose(&self, f: Element, g: Element) -> Result<Element> {
        let (f, g) = (self.unwrap(f)?, self.unwrap(g)?);
        let mut inner = self.inner.borrow_mut();
        let node = inner.product(f, g);
        Ok(self.wrap(node))
    }

    pub fn compose_all(&self, parts: &[Element]) -> Result<Element> {
        let mut acc = self.identity();
        for &p in parts {
            acc = self.compose(acc, p)?;
        }
        Ok(acc)
    }

    pub fn invert(&self, f: Element) -> Result<Element> {
        let f = self.unwrap(f)?;
        let mut inner = self.inner.borrow_mut();
        let node = inner.inverse(f);
        Ok(self.wrap(node))
    }

    /// `f^k` as a balanced product tree. Exponents of the distinguished
    /// generators are reduced by their orders before the tree is built.
    pub fn pow(&self, f: Element, k: i64) -> Result<Element> {
        let f = self.unwrap(f)?;
        let mut inner = self.inner.borrow_mut();
        let node = inner.power(f, k);
        Ok(self.wrap(node))
    }

    /// `g^{-1} f g`.
    pub fn conjugate(&self, f: Element, g: Element) -> Result<Element> {
        let gi = self.invert(g)?;
        let fg = self.compose(f, g)?;
        self.compose(gi, fg)
    }

    /// Left-normed commutator `[x_1, x_2, ..., x_r]` with `[x, y] = x^{-1} y^{-1} x y`.
    pub fn commutator(&self, xs: &[Element]) -> Result<Element> {
        if xs.len() < 2 {
            return Err(GgsError::Precondition(
                "a commutator needs at least two arguments".into(),
            ));
        }
        let mut acc = xs[0];
        for &y in &xs[1..] {
            let ai = self.invert(acc)?;
            let yi = self.invert(y)?;
            let front = self.compose(ai, yi)?;
            let back = self.compose(acc, y)?;
            acc = self.compose(front, back)?;
        }
        Ok(acc)
    }

    /// `b_i = b^{a^i}`, defined for any integer `i`.
    pub fn b_conj(&self, i: i64) -> Result<Element> {
        let a = self.gen_a();
        let ai = self.pow(a, i)?;
        self.conjugate(self.gen_b(), ai)
    }

    /// Permutation induced on the first level, as a permutation of `{0..m-1}`.
    pub fn root_perm(&self, f: Element) -> Result<Rc<Perm>> {
        let f = self.unwrap(f)?;
        let mut inner = self.inner.borrow_mut();
        Ok(inner.root_perm(f))
    }

    pub fn stabilizes_level1(&self, f: Element) -> Result<bool> {
        Ok(self.root_perm(f)?.is_identity())
    }

    /// Image of a vertex under `f`.
    pub fn apply(&self, f: Element, v: &Vertex) -> Result<Vertex> {
        let mut node = self.unwrap(f)?;
        let m = self.shape.m() as u32;
        let mut out = Vec::with_capacity(v.level());
        let mut inner = self.inner.borrow_mut();
        for &x in v.letters() {
            if x < 1 || x > m {
                return Err(GgsError::MalformedVertex(format!(
                    "letter {x} outside 1..={m}"
                )));
            }
            let rp = inner.root_perm(node);
            out.push(rp.apply(x - 1) + 1);
            node = inner.section1(node, x);
        }
        Ok(Vertex::from_letters(out))
    }

    /// Section of `f` at a vertex, satisfying `f(vz) = f(v) f_v(z)`.
    pub fn section(&self, f: Element, v: &Vertex) -> Result<Element> {
        let mut node = self.unwrap(f)?;
        let m = self.shape.m() as u32;
        let mut inner = self.inner.borrow_mut();
        for &x in v.letters() {
            if x < 1 || x > m {
                return Err(GgsError::MalformedVertex(format!(
                    "letter {x} outside 1..={m}"
                )));
            }
            node = inner.section1(node, x);
        }
        Ok(self.wrap(node))
    }

    /// Depth-bounded concrete description: the permutation induced on the
    /// children of every vertex of level `< depth`.
    pub fn portrait(&self, f: Element, depth: u32) -> Result<Portrait> {
        self.check_depth(depth)?;
        let f = self.unwrap(f)?;
        let m = self.shape.m() as u32;
        let mut inner = self.inner.borrow_mut();
        let mut table = Vec::new();
        let mut frontier: Vec<(Vertex, NodeId)> = vec![(Vertex::root(), f)];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (v, node) in frontier {
                table.push((v.clone(), (*inner.root_perm(node)).clone()));
                for x in 1..=m {
                    next.push((v.child(x), inner.section1(node, x)));
                }
            }
            frontier = next;
        }
        Ok(Portrait {
            m,
            depth,
            table,
        })
    }

    /// Whether `f` and `g` agree on every vertex of level `<= depth`.
    pub fn equal_at_depth(&self, f: Element, g: Element, depth: u32) -> Result<bool> {
        self.check_depth(depth)?;
        let (f, g) = (self.unwrap(f)?, self.unwrap(g)?);
        let m = self.shape.m() as u32;
        let mut inner = self.inner.borrow_mut();
        let mut seen: HashSet<(NodeId, NodeId, u32)> = HashSet::new();
        fn eq(
            inner: &mut Inner,
            seen: &mut HashSet<(NodeId, NodeId, u32)>,
            m: u32,
            f: NodeId,
            g: NodeId,
            depth: u32,
        ) -> bool {
            if f == g || depth == 0 {
                return true;
            }
            if !seen.insert((f, g, depth)) {
                return true;
            }
            if inner.root_perm(f) != inner.root_perm(g) {
                return false;
            }
            (1..=m).all(|x| {
                let sf = inner.section1(f, x);
                let sg = inner.section1(g, x);
                eq(inner, seen, m, sf, sg, depth - 1)
            })
        }
        Ok(eq(&mut inner, &mut seen, m, f, g, depth))
    }

    pub fn is_identity_at_depth(&self, f: Element, depth: u32) -> Result<bool> {
        self.equal_at_depth(f, self.identity(), depth)
    }

    /// Permutation induced on the `m^level` vertices of a level, in
    /// lexicographic order.
    pub fn perm_on_level(&self, f: Element, level: u32) -> Result<Perm> {
        let f = self.unwrap(f)?;
        let size = (self.shape.m() as u64)
            .checked_pow(level)
            .filter(|&s| s <= LEVEL_MAP_HARD_CAP)
            .ok_or(GgsError::DegreeCapExceeded {
                degree: u64::MAX,
                cap: LEVEL_MAP_HARD_CAP,
            })?;
        let _ = size;
        let mut inner = self.inner.borrow_mut();
        let map = inner.level_map(f, level);
        Perm::from_images((*map).clone())
    }

    fn check_depth(&self, depth: u32) -> Result<()> {
        if depth > self.depth_cap {
            return Err(GgsError::DepthExceeded {
                requested: depth,
                cap: self.depth_cap,
            });
        }
        Ok(())
    }

    /// Rough size diagnostics: number of interned nodes.
    pub fn node_count(&self) -> usize {
        self.inner.borrow().nodes.len()
    }
}

impl Inner {
    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node.clone());
        self.root_perms.push(None);
        self.dedup.insert(node, id);
        id
    }

    fn spinal(&mut self, exponents: Vec<u64>) -> NodeId {
        let pn = self.p.pow(self.n);
        let reduced: Vec<u64> = exponents.into_iter().map(|e| e % pn).collect();
        if reduced.iter().all(|&e| e == 0) {
            // All sections trivial: this is the identity automorphism.
            return self.intern(Node::Identity);
        }
        self.intern(Node::Spinal(Rc::new(reduced)))
    }

    fn inverse(&mut self, f: NodeId) -> NodeId {
        match self.nodes[f as usize].clone() {
            Node::Identity => f,
            Node::Inverse(g) => g,
            _ => self.intern(Node::Inverse(f)),
        }
    }

    fn product(&mut self, f: NodeId, g: NodeId) -> NodeId {
        if matches!(self.nodes[f as usize], Node::Identity) {
            return g;
        }
        if matches!(self.nodes[g as usize], Node::Identity) {
            return f;
        }
        self.intern(Node::Product(f, g))
    }

    /// Order of the node when cheaply known, for exponent reduction.
    fn known_order(&self, f: NodeId) -> Option<u64> {
        match &self.nodes[f as usize] {
            Node::Identity => Some(1),
            Node::Rooted(p) | Node::Recursive(p) => p.order(),
            Node::Spinal(v) => {
                let minval = v
                    .iter()
                    .filter(|&&e| e != 0)
                    .map(|&e| valuation(e, self.p))
                    .min()
                    .expect("spinal nodes are nonzero");
                Some(self.p.pow(self.n - minval))
            }
            _ => None,
        }
    }

    fn power(&mut self, f: NodeId, k: i64) -> NodeId {
        let mut k = k as i128;
        if let Some(ord) = self.known_order(f) {
            k = k.rem_euclid(ord as i128);
        }
        if k == 0 {
            return self.intern(Node::Identity);
        }
        let base = if k < 0 {
            k = -k;
            self.inverse(f)
        } else {
            f
        };
        // Square-and-multiply over interned nodes keeps the DAG logarithmic.
        let mut acc: Option<NodeId> = None;
        let mut sq = base;
        let mut e = k as u64;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => sq,
                    Some(a) => self.product(a, sq),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            sq = self.product(sq, sq);
        }
        acc.unwrap()
    }

    fn root_perm(&mut self, f: NodeId) -> Rc<Perm> {
        if let Some(p) = &self.root_perms[f as usize] {
            return Rc::clone(p);
        }
        let perm = match self.nodes[f as usize].clone() {
            Node::Identity | Node::Spinal(_) => Rc::new(Perm::identity(self.m)),
            Node::Rooted(p) | Node::Recursive(p) => p,
            Node::Inverse(c) => Rc::new(self.root_perm(c).inverse()),
            Node::Product(l, r) => {
                let pl = self.root_perm(l);
                let pr = self.root_perm(r);
                Rc::new(pl.then(&pr))
            }
        };
        self.root_perms[f as usize] = Some(Rc::clone(&perm));
        perm
    }

    /// Section at a single letter (1-based).
    fn section1(&mut self, f: NodeId, letter: u32) -> NodeId {
        if let Some(&id) = self.sections.get(&(f, letter)) {
            return id;
        }
        let result = match self.nodes[f as usize].clone() {
            Node::Identity | Node::Rooted(_) => self.intern(Node::Identity),
            Node::Recursive(_) => f,
            Node::Spinal(v) => {
                if letter as usize == self.m {
                    f
                } else {
                    let a = self.intern(Node::Rooted(Rc::new(Perm::cycle(self.m))));
                    self.power(a, v[letter as usize - 1] as i64)
                }
            }
            Node::Inverse(c) => {
                // (c^{-1})_x = (c_{c^{-1}(x)})^{-1}
                let pre = self.root_perm(c).inverse().apply(letter - 1) + 1;
                let s = self.section1(c, pre);
                self.inverse(s)
            }
            Node::Product(l, r) => {
                let sl = self.section1(l, letter);
                let mid = self.root_perm(l).apply(letter - 1) + 1;
                let sr = self.section1(r, mid);
                self.product(sl, sr)
            }
        };
        self.sections.insert((f, letter), result);
        result
    }

    /// Image table of the level-`r` action, as indices into the
    /// lexicographically ordered vertex list of that level.
    fn level_map(&mut self, f: NodeId, r: u32) -> Rc<Vec<u32>> {
        if let Some(map) = self.level_maps.get(&(f, r)) {
            return Rc::clone(map);
        }
        let result: Rc<Vec<u32>> = if r == 0 {
            Rc::new(vec![0])
        } else {
            let m = self.m as u32;
            let block = (m as u64).pow(r - 1) as u32;
            let rp = self.root_perm(f);
            let mut out = vec![0u32; (m as usize) * (block as usize)];
            for x in 1..=m {
                let y = rp.apply(x - 1) + 1;
                let child = self.section1(f, x);
                let sub = self.level_map(child, r - 1);
                let src = (x - 1) * block;
                let dst = (y - 1) * block;
                for (i, &t) in sub.iter().enumerate() {
                    out[src as usize + i] = dst + t;
                }
            }
            Rc::new(out)
        };
        self.level_maps.insert((f, r), Rc::clone(&result));
        result
    }
}

/// Depth-bounded description of an element: one alphabet permutation per
/// vertex above the cutoff. Two elements with equal portraits of depth `d`
/// act identically on every level `<= d`.
#[derive(Clone, PartialEq, Eq)]
pub struct Portrait {
    m: u32,
    depth: u32,
    table: Vec<(Vertex, Perm)>,
}

impl Portrait {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn entries(&self) -> &[(Vertex, Perm)] {
        &self.table
    }

    pub fn entry(&self, v: &Vertex) -> Option<&Perm> {
        self.table.iter().find(|(u, _)| u == v).map(|(_, p)| p)
    }

    pub fn is_trivial(&self) -> bool {
        self.table.iter().all(|(_, p)| p.is_identity())
    }

    /// JSON form: vertices as dot-joined 1-based letters, permutations in
    /// one-line image notation.
    pub fn to_json(&self) -> serde_json::Value {
        let mut table = BTreeMap::new();
        for (v, p) in &self.table {
            table.insert(v.to_string(), p.one_line_one_based());
        }
        serde_json::json!({
            "depth": self.depth,
            "alphabet": self.m,
            "table": table,
        })
    }
}

impl fmt::Debug for Portrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}
