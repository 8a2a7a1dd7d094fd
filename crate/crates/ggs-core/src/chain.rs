//! Deterministic stabilizer chains for finite permutation groups.
//!
//! Base points follow a fixed priority order of the domain, and the level for
//! a base point stores exactly the strong generators whose first moved point
//! (in priority order) is that base point. The generating set acting on the
//! orbit of a base point is therefore the union of the generators stored at
//! that level and at all deeper levels. Generators receive increasing ids as
//! they are admitted, orbits are grown in slot order with generator ids
//! ascending, and every Schreier element is sifted, so the structure is fully
//! reproducible for a given insertion sequence.

use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::One;

use crate::perm::Perm;

struct Level {
    point: u32,
    /// Strong generators first moving `point`, with their global ids.
    gens: Vec<(u32, Rc<Perm>)>,
    /// Orbit of `point` in discovery order.
    orbit: Vec<u32>,
    /// `transversal[q]` maps `point` to `q` and fixes every point of smaller
    /// priority.
    transversal: HashMap<u32, Rc<Perm>>,
    /// Per orbit slot: how many of the relevant generators (in id order)
    /// have been expanded from it.
    processed: Vec<usize>,
}

impl Level {
    fn new(point: u32, degree: usize) -> Level {
        let mut transversal = HashMap::new();
        transversal.insert(point, Rc::new(Perm::identity(degree)));
        Level {
            point,
            gens: Vec::new(),
            orbit: vec![point],
            transversal,
            processed: vec![0],
        }
    }
}

/// Base-and-strong-generating-set structure over a fixed priority order.
pub struct Chain {
    degree: usize,
    /// `rank_of[point]` = priority; lower ranks are stabilized first.
    rank_of: Vec<u32>,
    /// Levels sorted by rank of their base point.
    levels: Vec<Level>,
    next_gen_id: u32,
    pending: VecDeque<Perm>,
}

impl Chain {
    /// Chain over the natural point order `0 < 1 < ...`.
    pub fn new(degree: usize) -> Chain {
        Chain::with_priority(degree, (0..degree as u32).collect())
    }

    /// Chain whose base follows `order`, a permutation of the domain listing
    /// points from highest to lowest priority.
    pub fn with_priority(degree: usize, order: Vec<u32>) -> Chain {
        assert_eq!(order.len(), degree);
        let mut rank_of = vec![u32::MAX; degree];
        for (rank, &pt) in order.iter().enumerate() {
            rank_of[pt as usize] = rank as u32;
        }
        debug_assert!(rank_of.iter().all(|&r| r != u32::MAX));
        Chain {
            degree,
            rank_of,
            levels: Vec::new(),
            next_gen_id: 0,
            pending: VecDeque::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> BigUint {
        let mut ord = BigUint::one();
        for level in &self.levels {
            ord *= BigUint::from(level.orbit.len() as u64);
        }
        ord
    }

    pub fn base(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.point).collect()
    }

    /// Strong generators fixing every point of rank `< rank`. Owned copies.
    pub fn stabilizer_generators(&self, rank: u32) -> Vec<Perm> {
        let mut out = Vec::new();
        for level in &self.levels {
            if self.rank_of[level.point as usize] >= rank {
                out.extend(level.gens.iter().map(|(_, g)| (**g).clone()));
            }
        }
        out
    }

    pub fn contains(&self, g: &Perm) -> bool {
        self.sift(g.clone()).is_identity()
    }

    /// Residue of `g` after stripping through all levels.
    pub fn sift(&self, g: Perm) -> Perm {
        let mut h = g;
        if h.is_identity() {
            return h;
        }
        for level in &self.levels {
            let image = h.apply(level.point);
            if image == level.point {
                continue;
            }
            match level.transversal.get(&image) {
                Some(u) => {
                    h = h.then(&u.inverse());
                    if h.is_identity() {
                        return h;
                    }
                }
                None => return h,
            }
        }
        h
    }

    pub fn add_generator(&mut self, g: Perm) {
        self.pending.push_back(g);
        loop {
            // Keep every orbit closed before sifting the next candidate;
            // admitting against stale orbits floods the chain with redundant
            // strong generators.
            while self.expand_all() {}
            let Some(h) = self.pending.pop_front() else {
                break;
            };
            let h = self.sift(h);
            if h.is_identity() {
                continue;
            }
            let point = h
                .first_moved_by(&self.rank_of)
                .expect("non-identity residue moves a point");
            let pos = self.level_position(point);
            let id = self.next_gen_id;
            self.next_gen_id += 1;
            self.levels[pos].gens.push((id, Rc::new(h)));
        }
    }

    /// Index of the level for `point`, inserting an empty one if absent.
    fn level_position(&mut self, point: u32) -> usize {
        let rank = self.rank_of[point as usize];
        let pos = self
            .levels
            .partition_point(|lvl| self.rank_of[lvl.point as usize] < rank);
        if self.levels.get(pos).map(|lvl| lvl.point) != Some(point) {
            self.levels.insert(pos, Level::new(point, self.degree));
        }
        pos
    }

    /// One watermark pass over every level; returns whether anything new was
    /// processed. Schreier elements are sifted eagerly and only nontrivial
    /// residues are queued, so the queue stays small.
    fn expand_all(&mut self) -> bool {
        // Suffix counts let untouched levels be skipped without collecting
        // their generator lists.
        let mut suffix = vec![0usize; self.levels.len() + 1];
        for pos in (0..self.levels.len()).rev() {
            suffix[pos] = suffix[pos + 1] + self.levels[pos].gens.len();
        }
        let mut progressed = false;
        for pos in 0..self.levels.len() {
            let relevant_count = suffix[pos];
            let stale = self.levels[pos]
                .processed
                .iter()
                .any(|&d| d < relevant_count);
            if stale {
                progressed |= self.expand_orbit(pos);
            }
        }
        progressed
    }

    fn expand_orbit(&mut self, pos: usize) -> bool {
        // Generators relevant to this orbit: this level's and all deeper
        // ones'. Ids only ever grow, so the id-sorted list is append-only
        // and per-slot watermarks stay valid across calls.
        let mut relevant: Vec<(u32, Rc<Perm>)> = Vec::new();
        for level in &self.levels[pos..] {
            relevant.extend(level.gens.iter().map(|(id, g)| (*id, Rc::clone(g))));
        }
        relevant.sort_by_key(|(id, _)| *id);

        let mut progressed = false;
        let mut slot = 0;
        while slot < self.levels[pos].orbit.len() {
            let done = self.levels[pos].processed[slot];
            if done < relevant.len() {
                progressed = true;
                let from = self.levels[pos].orbit[slot];
                let mut schreiers: Vec<Perm> = Vec::new();
                for (_, gen) in &relevant[done..] {
                    let to = gen.apply(from);
                    let u_from = Rc::clone(&self.levels[pos].transversal[&from]);
                    if let Some(u_to) = self.levels[pos].transversal.get(&to) {
                        let schreier = u_from.then(gen).then(&u_to.inverse());
                        if !schreier.is_identity() {
                            schreiers.push(schreier);
                        }
                    } else {
                        let rep = Rc::new(u_from.then(gen));
                        let level = &mut self.levels[pos];
                        level.transversal.insert(to, rep);
                        level.orbit.push(to);
                        level.processed.push(0);
                    }
                }
                self.levels[pos].processed[slot] = relevant.len();
                for s in schreiers {
                    let r = self.sift(s);
                    if !r.is_identity() {
                        self.pending.push_back(r);
                    }
                }
            }
            slot += 1;
        }
        progressed
    }
}
