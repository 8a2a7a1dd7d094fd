//! Finite congruence quotients of a GGS-group as permutation groups.
//!
//! The quotient at depth `ell` acts on the `m^ell` leaves, but internally the
//! permutation domain is the disjoint union of all levels `1..=ell` (level 1
//! first, each level in lexicographic order). With that stratified domain the
//! stabilizer chain's base runs through level-1 vertices before level-2
//! vertices and so on, which makes every level stabilizer a plain suffix of
//! the chain.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::chain::Chain;
use crate::error::{GgsError, Result};
use crate::perm::Perm;
use crate::tree::{Element, Engine};
use crate::vector::DefiningVector;

/// Default cap on the number of leaves of a quotient.
pub const DEFAULT_DEGREE_CAP: u64 = 10_000;

pub struct QuotientCore {
    vector: DefiningVector,
    depth: u32,
    m: usize,
    leaf_count: usize,
    /// Start of each level's segment in the extended domain; entry `j-1`
    /// belongs to level `j`.
    offsets: Vec<usize>,
    domain: usize,
}

impl QuotientCore {
    fn offset(&self, level: u32) -> usize {
        self.offsets[level as usize - 1]
    }

    fn level_size(&self, level: u32) -> usize {
        self.m.pow(level)
    }
}

/// The image of the group on the first `depth` levels, with generator images
/// and a lazily built stabilizer chain.
pub struct LevelQuotient {
    core: Rc<QuotientCore>,
    gen_a: Perm,
    gen_b: Perm,
    full: SubgroupHandle,
}

impl LevelQuotient {
    pub fn depth(&self) -> u32 {
        self.core.depth
    }

    pub fn leaf_count(&self) -> usize {
        self.core.leaf_count
    }

    pub fn vector(&self) -> &DefiningVector {
        &self.core.vector
    }

    pub fn group(&self) -> &SubgroupHandle {
        &self.full
    }

    pub fn order(&self) -> BigUint {
        self.full.order()
    }

    /// Leaf permutations of the generators, lexicographic leaf order.
    pub fn generator_leaf_images(&self) -> (Perm, Perm) {
        (
            self.core.restrict_to_leaves(&self.gen_a),
            self.core.restrict_to_leaves(&self.gen_b),
        )
    }

    /// Extended-domain image of an element evaluated in `engine`, which must
    /// carry the same defining vector.
    pub fn image(&self, engine: &Engine, f: Element) -> Result<Perm> {
        self.core.image(engine, f)
    }

    pub fn leaf_image(&self, engine: &Engine, f: Element) -> Result<Perm> {
        Ok(self.core.restrict_to_leaves(&self.core.image(engine, f)?))
    }

    /// Subgroup generated by the images of the given elements.
    pub fn subgroup_from_elements(
        &self,
        engine: &Engine,
        gens: &[Element],
    ) -> Result<SubgroupHandle> {
        let perms = gens
            .iter()
            .map(|&g| self.core.image(engine, g))
            .collect::<Result<Vec<Perm>>>()?;
        Ok(SubgroupHandle::from_gens(Rc::clone(&self.core), perms))
    }

    /// The level-1 stabilizer through its conjugate generating set: the
    /// images of `b^{a^i}` for `i = 0, ..., m-1`. Equal to
    /// `stabilizer_subgroup(1)` as a subgroup but with far fewer generators,
    /// which keeps derived-series computations cheap.
    pub fn level_one_stabilizer(&self, engine: &Engine) -> Result<SubgroupHandle> {
        let m = self.core.m as i64;
        let gens = (0..m)
            .map(|i| engine.b_conj(i))
            .collect::<Result<Vec<Element>>>()?;
        self.subgroup_from_elements(engine, &gens)
    }

    /// Pointwise stabilizer of level `j` inside the quotient, `1 <= j < depth`.
    pub fn stabilizer_subgroup(&self, j: u32) -> Result<SubgroupHandle> {
        if j < 1 || j >= self.core.depth {
            return Err(GgsError::Precondition(format!(
                "level stabilizer needs 1 <= j < depth, got j = {j}, depth = {}",
                self.core.depth
            )));
        }
        let rank = self.core.offset(j + 1) as u32;
        let gens = self.full.chain().stabilizer_generators(rank);
        Ok(SubgroupHandle::from_gens(Rc::clone(&self.core), gens))
    }

    /// Single orbit on every level up to the quotient depth.
    pub fn level_transitive(&self) -> bool {
        let gens = [
            self.gen_a.clone(),
            self.gen_b.clone(),
            self.gen_a.inverse(),
            self.gen_b.inverse(),
        ];
        for j in 1..=self.core.depth {
            let start = self.core.offset(j) as u32;
            let size = self.core.level_size(j);
            let mut seen = vec![false; self.core.domain];
            let mut queue = VecDeque::from([start]);
            seen[start as usize] = true;
            let mut count = 1usize;
            while let Some(v) = queue.pop_front() {
                for g in &gens {
                    let w = g.apply(v);
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        count += 1;
                        queue.push_back(w);
                    }
                }
            }
            if count != size {
                return false;
            }
        }
        true
    }

    /// Extended permutation acting as `w` on the subtree hanging from the
    /// first-level vertex `position` (1-based) and trivially elsewhere.
    pub fn embed_element_at(
        &self,
        engine: &Engine,
        w: Element,
        position: u32,
    ) -> Result<Perm> {
        let core = &self.core;
        let m = core.m as u32;
        if position < 1 || position > m {
            return Err(GgsError::MalformedVertex(format!(
                "position {position} outside 1..={m}"
            )));
        }
        let mut images: Vec<u32> = (0..core.domain as u32).collect();
        for j in 1..=core.depth {
            let sub = engine.perm_on_level(w, j - 1)?;
            let block = core.m.pow(j - 1);
            let off = core.offset(j) + (position as usize - 1) * block;
            for i in 0..block {
                images[off + i] = (off + sub.apply(i as u32) as usize) as u32;
            }
        }
        Perm::from_images(images)
    }

    /// Subgroup of the quotient fixing every vertex outside the subtree of
    /// the first-level vertex `letter`. This is computed with a stabilizer
    /// chain whose base visits all outside vertices first.
    pub fn outside_subtree_stabilizer(&self, letter: u32) -> Result<SubgroupHandle> {
        let core = &self.core;
        let m = core.m as u32;
        if letter < 1 || letter > m {
            return Err(GgsError::MalformedVertex(format!(
                "letter {letter} outside 1..={m}"
            )));
        }
        let mut outside = Vec::new();
        let mut inside = Vec::new();
        for j in 1..=core.depth {
            let block = core.m.pow(j - 1);
            let off = core.offset(j);
            let lo = off + (letter as usize - 1) * block;
            let hi = lo + block;
            for v in off..off + core.level_size(j) {
                if v >= lo && v < hi {
                    inside.push(v as u32);
                } else {
                    outside.push(v as u32);
                }
            }
        }
        let cutoff = outside.len() as u32;
        let mut priority = outside;
        priority.extend(inside);
        let mut chain = Chain::with_priority(core.domain, priority);
        chain.add_generator(self.gen_a.clone());
        chain.add_generator(self.gen_b.clone());
        let gens = chain.stabilizer_generators(cutoff);
        Ok(SubgroupHandle::from_gens(Rc::clone(core), gens))
    }
}

impl QuotientCore {
    fn image(&self, engine: &Engine, f: Element) -> Result<Perm> {
        if engine.vector() != &self.vector {
            return Err(GgsError::ShapeMismatch);
        }
        let mut images = vec![0u32; self.domain];
        for j in 1..=self.depth {
            let level_perm = engine.perm_on_level(f, j)?;
            let off = self.offset(j);
            for i in 0..self.level_size(j) {
                images[off + i] = (off + level_perm.apply(i as u32) as usize) as u32;
            }
        }
        Perm::from_images(images)
    }

    fn restrict_to_leaves(&self, ext: &Perm) -> Perm {
        let off = self.offset(self.depth);
        let images: Vec<u32> = (0..self.leaf_count)
            .map(|i| ext.apply((off + i) as u32) - off as u32)
            .collect();
        Perm::from_images(images).expect("restriction of a stratified permutation")
    }

    /// Lift a leaf permutation to the extended domain. Returns `None` when
    /// the permutation is not compatible with the tree structure.
    fn extend_from_leaves(&self, leaf: &Perm) -> Option<Perm> {
        if leaf.degree() != self.leaf_count {
            return None;
        }
        let mut images = vec![0u32; self.domain];
        for j in 1..=self.depth {
            let block = self.m.pow(self.depth - j);
            let off = self.offset(j);
            for v in 0..self.level_size(j) {
                let target = leaf.apply((v * block) as u32) as usize / block;
                for i in 1..block {
                    if leaf.apply((v * block + i) as u32) as usize / block != target {
                        return None;
                    }
                }
                images[off + v] = (off + target) as u32;
            }
        }
        Perm::from_images(images).ok()
    }
}

/// A subgroup of a level quotient: generating permutations plus a lazily
/// built stabilizer chain.
pub struct SubgroupHandle {
    core: Rc<QuotientCore>,
    gens: Vec<Perm>,
    chain: RefCell<Option<Rc<Chain>>>,
}

impl Clone for SubgroupHandle {
    fn clone(&self) -> Self {
        SubgroupHandle {
            core: Rc::clone(&self.core),
            gens: self.gens.clone(),
            chain: RefCell::new(self.chain.borrow().clone()),
        }
    }
}

impl SubgroupHandle {
    fn from_gens(core: Rc<QuotientCore>, gens: Vec<Perm>) -> SubgroupHandle {
        let mut uniq: Vec<Perm> = Vec::new();
        for g in gens {
            if !g.is_identity() && !uniq.contains(&g) {
                uniq.push(g);
            }
        }
        SubgroupHandle {
            core,
            gens: uniq,
            chain: RefCell::new(None),
        }
    }

    fn with_chain(core: Rc<QuotientCore>, gens: Vec<Perm>, chain: Chain) -> SubgroupHandle {
        SubgroupHandle {
            core,
            gens,
            chain: RefCell::new(Some(Rc::new(chain))),
        }
    }

    pub fn generators(&self) -> &[Perm] {
        &self.gens
    }

    pub fn generator_leaf_images(&self) -> Vec<Perm> {
        self.gens
            .iter()
            .map(|g| self.core.restrict_to_leaves(g))
            .collect()
    }

    pub fn chain(&self) -> Rc<Chain> {
        if let Some(c) = &*self.chain.borrow() {
            return Rc::clone(c);
        }
        let mut chain = Chain::new(self.core.domain);
        for g in &self.gens {
            chain.add_generator(g.clone());
        }
        let rc = Rc::new(chain);
        *self.chain.borrow_mut() = Some(Rc::clone(&rc));
        rc
    }

    pub fn order(&self) -> BigUint {
        self.chain().order()
    }

    pub fn contains_ext(&self, g: &Perm) -> bool {
        self.chain().contains(g)
    }

    /// Membership test for a leaf permutation. A permutation that does not
    /// respect the tree's block structure cannot lie in the quotient.
    pub fn contains_leaf(&self, leaf: &Perm) -> bool {
        match self.core.extend_from_leaves(leaf) {
            Some(ext) => self.contains_ext(&ext),
            None => false,
        }
    }

    pub fn contains_element(&self, engine: &Engine, f: Element) -> Result<bool> {
        Ok(self.contains_ext(&self.core.image(engine, f)?))
    }

    pub fn is_subgroup_of(&self, other: &SubgroupHandle) -> bool {
        self.gens.iter().all(|g| other.contains_ext(g))
    }

    /// Exact index `[self : sub]`; `sub` must actually be contained.
    pub fn index_of(&self, sub: &SubgroupHandle) -> Result<BigUint> {
        if !sub.is_subgroup_of(self) {
            return Err(GgsError::ContainmentViolation(
                "index requested for a non-subgroup".into(),
            ));
        }
        let num = self.order();
        let den = sub.order();
        debug_assert!((&num % &den) == BigUint::from(0u32));
        Ok(num / den)
    }

    pub fn equals(&self, other: &SubgroupHandle) -> bool {
        self.order() == other.order() && other.is_subgroup_of(self)
    }

    /// Subgroup generated by this handle together with `other`.
    pub fn join(&self, other: &SubgroupHandle) -> SubgroupHandle {
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().cloned());
        SubgroupHandle::from_gens(Rc::clone(&self.core), gens)
    }

    /// Normal closure of `seeds` inside this subgroup.
    pub fn normal_closure(&self, seeds: Vec<Perm>) -> SubgroupHandle {
        let mut conjugators: Vec<Perm> = Vec::new();
        for g in &self.gens {
            conjugators.push(g.clone());
            conjugators.push(g.inverse());
        }
        let mut chain = Chain::new(self.core.domain);
        let mut kept: Vec<Perm> = Vec::new();
        let mut queue: VecDeque<Perm> = seeds.into();
        while let Some(t) = queue.pop_front() {
            if t.is_identity() || chain.contains(&t) {
                continue;
            }
            chain.add_generator(t.clone());
            for s in &conjugators {
                queue.push_back(s.inverse().then(&t).then(s));
            }
            kept.push(t);
        }
        SubgroupHandle::with_chain(Rc::clone(&self.core), kept, chain)
    }

    /// Derived subgroup: normal closure of the generator commutators.
    pub fn derived_subgroup(&self) -> SubgroupHandle {
        let mut seeds = Vec::new();
        for (i, x) in self.gens.iter().enumerate() {
            for y in &self.gens[i + 1..] {
                seeds.push(commutator(x, y));
            }
        }
        self.normal_closure(seeds)
    }

    /// Lower central term `gamma_i`, with `gamma_1` the handle itself.
    pub fn lower_central_term(&self, i: u32) -> SubgroupHandle {
        let mut current = self.clone();
        for _ in 1..i {
            let mut seeds = Vec::new();
            for x in &current.gens {
                for y in &self.gens {
                    seeds.push(commutator(x, y));
                }
            }
            current = self.normal_closure(seeds);
        }
        current
    }

    /// Nilpotency class: largest `c` with `gamma_c` nontrivial. Errors out if
    /// the series has not terminated within `max` steps.
    pub fn nilpotency_class(&self, max: u32) -> Result<u32> {
        let mut current = self.clone();
        let mut c = 0;
        loop {
            if current.gens.is_empty() {
                return Ok(c);
            }
            c += 1;
            if c > max {
                return Err(GgsError::Precondition(format!(
                    "lower central series did not reach 1 within {max} terms"
                )));
            }
            let mut seeds = Vec::new();
            for x in &current.gens {
                for y in &self.gens {
                    seeds.push(commutator(x, y));
                }
            }
            current = self.normal_closure(seeds);
        }
    }

    /// Invariant factors of the abelianization `self / self'`, returned as a
    /// descending multiset of prime powers.
    ///
    /// The coset group is explored through exponent tuples of the generators
    /// modulo the derived subgroup, so the cost is the product of the coset
    /// orders of the generators; callers keep that small.
    pub fn abelian_invariants(&self) -> Result<Vec<u64>> {
        let derived = self.derived_subgroup();
        self.abelian_invariants_mod(&derived)
    }

    /// Invariant factors of `self / (self' N)` for a normal subgroup `N`
    /// given by `modulus`; pass the derived subgroup for plain
    /// abelianization.
    fn abelian_invariants_mod(&self, modulus: &SubgroupHandle) -> Result<Vec<u64>> {
        let index = self
            .index_of_unchecked(modulus)
            .to_u64()
            .ok_or_else(|| GgsError::Precondition("abelian quotient too large".into()))?;
        if index == 1 {
            return Ok(Vec::new());
        }
        let mchain = modulus.chain();

        // Coset order of each generator.
        let mut orders: Vec<u64> = Vec::new();
        for g in &self.gens {
            let full = g.order().ok_or_else(|| {
                GgsError::Precondition("generator order overflow".into())
            })?;
            let mut o = full;
            for d in divisors(full) {
                if mchain.contains(&g.pow(d as i64)) {
                    o = d;
                    break;
                }
            }
            orders.push(o);
        }
        let total: u64 = orders.iter().try_fold(1u64, |acc, &o| {
            acc.checked_mul(o).filter(|&t| t <= 1_000_000)
        })
            .ok_or_else(|| {
                GgsError::Precondition(
                    "too many generators for exponent-tuple enumeration".into(),
                )
            })?;
        if total % index != 0 {
            return Err(GgsError::Precondition(
                "exponent tuples do not cover the abelian quotient evenly".into(),
            ));
        }
        let fiber = total / index;

        // Coset order of every exponent tuple.
        let exponent_bound = orders.iter().fold(1u64, |acc, &o| lcm(acc, o));
        let divs = divisors(exponent_bound);
        let mut coset_orders: Vec<u64> = Vec::with_capacity(total as usize);
        let mut tuple = vec![0u64; orders.len()];
        loop {
            let mut x = Perm::identity(self.core.domain);
            for (g, &t) in self.gens.iter().zip(&tuple) {
                x = x.then(&g.pow(t as i64));
            }
            let o = *divs
                .iter()
                .find(|&&d| mchain.contains(&x.pow(d as i64)))
                .expect("exponent bound divides some divisor");
            coset_orders.push(o);
            // odometer over mixed radices
            let mut pos = 0;
            while pos < tuple.len() {
                tuple[pos] += 1;
                if tuple[pos] < orders[pos] {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if pos == tuple.len() {
                break;
            }
            if tuple.iter().all(|&t| t == 0) {
                break;
            }
        }
        debug_assert_eq!(coset_orders.len() as u64, total);

        // Per prime: counts of elements killed by q^j give the partition.
        let mut out: Vec<u64> = Vec::new();
        for (q, q_exp) in factorize(index) {
            let mut prev_count = 1u64; // elements with x^{q^0} = 1
            let mut prev_factors = 0u64;
            let q_part = q.pow(q_exp);
            let mut factors_at: Vec<u64> = Vec::new();
            for j in 1.. {
                let qj = q.pow(j);
                let count = coset_orders
                    .iter()
                    .filter(|&&o| is_prime_power_dividing(o, q, qj))
                    .count() as u64
                    / fiber;
                let lambda = log_exact(count / prev_count, q);
                factors_at.push(lambda);
                if j == 1 {
                    prev_factors = lambda;
                } else {
                    prev_factors = prev_factors.min(lambda);
                }
                let _ = prev_factors;
                prev_count = count;
                if count == q_part || lambda == 0 {
                    break;
                }
            }
            // factors_at[j-1] = number of cyclic factors of exponent >= j.
            for j in (1..=factors_at.len()).rev() {
                let here = factors_at[j - 1];
                let deeper = if j < factors_at.len() { factors_at[j] } else { 0 };
                for _ in 0..(here - deeper) {
                    out.push(q.pow(j as u32));
                }
            }
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        Ok(out)
    }

    fn index_of_unchecked(&self, sub: &SubgroupHandle) -> BigUint {
        let num = self.order();
        let den = sub.order();
        num / den
    }
}

fn commutator(x: &Perm, y: &Perm) -> Perm {
    x.inverse().then(&y.inverse()).then(x).then(y)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

fn lcm(a: u64, b: u64) -> u64 {
    a / crate::perm::gcd(a, b) * b
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Whether `o` is a power of `q` dividing `bound`.
fn is_prime_power_dividing(o: u64, q: u64, bound: u64) -> bool {
    if o > bound || bound % o != 0 {
        return false;
    }
    let mut x = o;
    while x % q == 0 {
        x /= q;
    }
    x == 1
}

fn log_exact(mut n: u64, q: u64) -> u64 {
    let mut e = 0;
    while n > 1 {
        debug_assert_eq!(n % q, 0);
        n /= q;
        e += 1;
    }
    e
}

/// Builds the depth-`ell` quotient of the GGS-group with vector `e`.
pub fn build_quotient(e: &DefiningVector, ell: u32, cap: u64) -> Result<LevelQuotient> {
    if ell < 1 {
        return Err(GgsError::Precondition("depth must be at least 1".into()));
    }
    let m = e.modulus();
    let leaves = m
        .checked_pow(ell)
        .ok_or(GgsError::DegreeCapExceeded {
            degree: u64::MAX,
            cap,
        })?;
    if leaves > cap {
        return Err(GgsError::DegreeCapExceeded {
            degree: leaves,
            cap,
        });
    }
    let mut offsets = Vec::with_capacity(ell as usize);
    let mut domain = 0usize;
    for j in 1..=ell {
        offsets.push(domain);
        domain += (m as usize).pow(j);
    }
    let core = Rc::new(QuotientCore {
        vector: e.clone(),
        depth: ell,
        m: m as usize,
        leaf_count: (m as usize).pow(ell),
        offsets,
        domain,
    });
    let engine = Engine::new(e.clone());
    let gen_a = core.image(&engine, engine.gen_a())?;
    let gen_b = core.image(&engine, engine.gen_b())?;
    let full = SubgroupHandle::from_gens(
        Rc::clone(&core),
        vec![gen_a.clone(), gen_b.clone()],
    );
    Ok(LevelQuotient {
        core,
        gen_a,
        gen_b,
        full,
    })
}

/// Fractality probe at finite depth: the first-level sections of the
/// level-1 stabilizer generators must generate the whole group's image one
/// level up. Needs `ell >= 2`.
pub fn fractal_check(e: &DefiningVector, ell: u32, cap: u64) -> Result<bool> {
    if ell < 2 {
        return Err(GgsError::NotApplicable(
            "fractality needs depth at least 2".into(),
        ));
    }
    let engine = Engine::new(e.clone());
    let m = e.modulus() as i64;
    // The stabilizer of the first vertex equals the first level stabilizer,
    // generated by the conjugates b_i; take all their sections at vertex 1.
    let mut sections = Vec::new();
    for i in 0..m {
        let bi = engine.b_conj(i)?;
        sections.push(engine.section(bi, &crate::tree::Vertex::from_letters(vec![1]))?);
    }
    let q = build_quotient(e, ell - 1, cap)?;
    let sub = q.subgroup_from_elements(&engine, &sections)?;
    Ok(sub.order() == q.order())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use std::collections::HashSet;

    fn v(p: u64, n: u32, e: &[u64]) -> DefiningVector {
        DefiningVector::new(p, n, e.to_vec()).unwrap()
    }

    fn closure_order(gens: &[Perm], degree: usize) -> usize {
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut frontier = vec![Perm::identity(degree)];
        seen.insert(frontier[0].images().to_vec());
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y = x.then(g);
                if seen.insert(y.images().to_vec()) {
                    frontier.push(y);
                }
            }
        }
        seen.len()
    }

    #[test]
    fn dihedral_level_two() {
        let q = build_quotient(&v(2, 1, &[1]), 2, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(q.leaf_count(), 4);
        assert_eq!(q.order(), BigUint::from(8u32));
        let (a, b) = q.generator_leaf_images();
        assert_eq!(a.degree(), 4);
        assert_eq!(closure_order(&[a, b], 4), 8);
    }

    #[test]
    fn small_level_one_quotients() {
        let q = build_quotient(&v(3, 1, &[1, 2]), 1, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(q.order(), BigUint::from(3u32));
        let q = build_quotient(&v(2, 2, &[1, 1, 1]), 1, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(q.order(), BigUint::from(4u32));
    }

    #[test]
    fn chain_order_matches_breadth_first_closure() {
        let e = v(2, 2, &[1, 0, 1]);
        let q = build_quotient(&e, 2, DEFAULT_DEGREE_CAP).unwrap();
        let (a, b) = q.generator_leaf_images();
        let brute = closure_order(&[a, b], q.leaf_count());
        assert_eq!(q.order(), BigUint::from(brute));
    }

    #[test]
    fn index_of_level_one_stabilizer_is_alphabet_size() {
        for e in [v(2, 2, &[1, 0, 1]), v(2, 2, &[2, 0, 2]), v(3, 1, &[1, 2])] {
            let q = build_quotient(&e, 3, DEFAULT_DEGREE_CAP).unwrap();
            let st1 = q.stabilizer_subgroup(1).unwrap();
            assert_eq!(
                q.group().index_of(&st1).unwrap(),
                BigUint::from(e.modulus())
            );
        }
    }

    #[test]
    fn stabilizer_matches_b_conjugate_closure() {
        let e = v(3, 1, &[1, 2]);
        let q = build_quotient(&e, 3, DEFAULT_DEGREE_CAP).unwrap();
        let engine = Engine::new(e.clone());
        let bis: Vec<Element> = (0..3).map(|i| engine.b_conj(i).unwrap()).collect();
        let by_gens = q.subgroup_from_elements(&engine, &bis).unwrap();
        let st1 = q.stabilizer_subgroup(1).unwrap();
        assert!(st1.equals(&by_gens));
    }

    #[test]
    fn last_level_stabilizer_of_dihedral_quotient() {
        // Brute force over all 8 elements of the depth-2 quotient: exactly
        // the four block-preserving ones stabilize level 1.
        let q = build_quotient(&v(2, 1, &[1]), 2, DEFAULT_DEGREE_CAP).unwrap();
        let st = q.stabilizer_subgroup(1).unwrap();
        let (a, b) = q.generator_leaf_images();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut frontier = vec![Perm::identity(4)];
        seen.insert(frontier[0].images().to_vec());
        while let Some(x) = frontier.pop() {
            for g in [&a, &b] {
                let y = x.then(g);
                if seen.insert(y.images().to_vec()) {
                    frontier.push(y);
                }
            }
        }
        let fixing = seen
            .iter()
            .filter(|imgs| imgs[0] / 2 == 0 && imgs[1] / 2 == 0 && imgs[2] / 2 == 1)
            .count();
        assert_eq!(fixing, 4);
        assert_eq!(st.order(), BigUint::from(fixing));
    }

    #[test]
    fn derived_and_lower_central_terms() {
        // Level-1 image is abelian.
        let q1 = build_quotient(&v(3, 1, &[1, 2]), 1, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(q1.group().derived_subgroup().order(), BigUint::one());

        // The depth-2 quotient of the binary-tree group is dihedral of
        // order 8: class exactly 2.
        let q2 = build_quotient(&v(2, 1, &[1]), 2, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(q2.group().lower_central_term(3).order(), BigUint::one());
        assert!(q2.group().lower_central_term(2).order() > BigUint::one());
        assert_eq!(q2.group().nilpotency_class(10).unwrap(), 2);

        // Derived quotient of order 9 at depth 2 for the periodic vector.
        let q = build_quotient(&v(3, 1, &[1, 2]), 2, DEFAULT_DEGREE_CAP).unwrap();
        let derived = q.group().derived_subgroup();
        assert_eq!(q.group().index_of(&derived).unwrap(), BigUint::from(9u32));
    }

    #[test]
    fn abelian_invariants_examples() {
        let q = build_quotient(&v(3, 1, &[1, 2]), 3, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(q.group().abelian_invariants().unwrap(), vec![3, 3]);

        let q = build_quotient(&v(2, 2, &[2, 0, 2]), 3, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(q.group().abelian_invariants().unwrap(), vec![4, 2]);

        let trivial = q.group().derived_subgroup().derived_subgroup();
        assert!(trivial.abelian_invariants().unwrap().len() <= 1);
    }

    #[test]
    fn transitivity_examples() {
        let q = build_quotient(&v(2, 2, &[1, 0, 1]), 3, DEFAULT_DEGREE_CAP).unwrap();
        assert!(q.level_transitive());
        let q = build_quotient(&v(2, 2, &[2, 0, 2]), 2, DEFAULT_DEGREE_CAP).unwrap();
        assert!(!q.level_transitive());
        // Depth 1 is a single cycle orbit for every vector.
        let q = build_quotient(&v(2, 2, &[2, 0, 2]), 1, DEFAULT_DEGREE_CAP).unwrap();
        assert!(q.level_transitive());
    }

    #[test]
    fn fractality_examples() {
        assert!(fractal_check(&v(2, 2, &[1, 0, 1]), 3, DEFAULT_DEGREE_CAP).unwrap());
        assert!(!fractal_check(&v(2, 2, &[2, 0, 2]), 3, DEFAULT_DEGREE_CAP).unwrap());
        assert!(matches!(
            fractal_check(&v(2, 2, &[1, 0, 1]), 1, DEFAULT_DEGREE_CAP),
            Err(GgsError::NotApplicable(_))
        ));
    }

    #[test]
    fn kernel_consistency_with_equal_at_depth() {
        let e = v(2, 1, &[1]);
        let q = build_quotient(&e, 3, DEFAULT_DEGREE_CAP).unwrap();
        let eng = Engine::new(e);
        let (a, b) = (eng.gen_a(), eng.gen_b());
        let x = eng.compose(a, b).unwrap();
        let y = eng.compose(b, a).unwrap();
        let same_depth = eng.equal_at_depth(x, y, 3).unwrap();
        let same_image = q.image(&eng, x).unwrap() == q.image(&eng, y).unwrap();
        assert_eq!(same_depth, same_image);
        let sq = eng.compose(x, x).unwrap();
        let same_depth = eng.equal_at_depth(sq, eng.identity(), 3).unwrap();
        let same_image = q.image(&eng, sq).unwrap().is_identity();
        assert_eq!(same_depth, same_image);
    }

    #[test]
    fn leaf_membership_rejects_non_tree_permutations() {
        let q = build_quotient(&v(2, 1, &[1]), 2, DEFAULT_DEGREE_CAP).unwrap();
        // A 3-cycle on 4 leaves cannot respect the two blocks.
        let bad = Perm::from_images(vec![1, 2, 0, 3]).unwrap();
        assert!(!q.group().contains_leaf(&bad));
        let (a, _) = q.generator_leaf_images();
        assert!(q.group().contains_leaf(&a));
    }

    #[test]
    fn degree_cap_refuses_large_requests() {
        assert!(matches!(
            build_quotient(&v(3, 2, &[1, 0, 0, 0, 0, 0, 0, 0]), 5, DEFAULT_DEGREE_CAP),
            Err(GgsError::DegreeCapExceeded { .. })
        ));
    }

    #[test]
    fn index_rejects_non_subgroups() {
        let q2 = build_quotient(&v(2, 1, &[1]), 2, DEFAULT_DEGREE_CAP).unwrap();
        let q3 = build_quotient(&v(2, 1, &[1]), 3, DEFAULT_DEGREE_CAP).unwrap();
        let st = q3.stabilizer_subgroup(2).unwrap();
        // A handle from a different domain is never a subgroup.
        assert!(q2.group().index_of(&st).is_err() || st.generators().is_empty());
    }

    #[test]
    fn outside_subtree_stabilizer_brute_force() {
        let e = v(2, 1, &[1]);
        let q = build_quotient(&e, 3, DEFAULT_DEGREE_CAP).unwrap();
        let rst = q.outside_subtree_stabilizer(1).unwrap();
        // Brute force: all elements fixing every vertex outside subtree 1.
        let (a, b) = q.generator_leaf_images();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut frontier = vec![Perm::identity(8)];
        seen.insert(frontier[0].images().to_vec());
        while let Some(x) = frontier.pop() {
            for g in [&a, &b] {
                let y = x.then(g);
                if seen.insert(y.images().to_vec()) {
                    frontier.push(y);
                }
            }
        }
        // Outside the subtree of vertex 1 means leaves 4..8 (second half),
        // and the level-1/level-2 vertices above them must also be fixed,
        // which for leaf permutations of tree automorphisms is implied.
        let fixing = seen
            .iter()
            .filter(|imgs| (4..8).all(|i| imgs[i] == i as u32))
            .filter(|imgs| (0..4).all(|i| imgs[i] < 4))
            .count();
        assert_eq!(rst.order(), BigUint::from(fixing));
    }
}
