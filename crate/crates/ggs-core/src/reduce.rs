//! Normalization of defining vectors by conjugation.
//!
//! When some entry `e_k` is invertible modulo `p`, the group is conjugate in
//! the full automorphism group to a GGS-group whose defining vector has entry
//! `1` at position `p^s`, where `p^s` is the largest power of `p` dividing
//! `k`. The conjugator is `f = d h` with `d` rooted for the index permutation
//! `delta(i) = r i mod p^n` and `h` defined by sections `(f, ..., f)`; as an
//! automorphism, `f` applies `delta` to every letter.

use crate::arith::{inv_mod, mul_mod, valuation};
use crate::error::{GgsError, Result};
use crate::perm::Perm;
use crate::tree::{Element, Engine};
use crate::vector::DefiningVector;

/// Output of the conjugation lemma for one anchor index.
#[derive(Debug, Clone)]
pub struct ReductionData {
    /// Anchor index: `e_k` is invertible and `p^s` exactly divides `k`.
    pub k: usize,
    pub s: u32,
    /// Unit with `(k / p^s) * r = 1 mod p^{n-s}`, lifted to `[0, p^n)`.
    pub r: u64,
    /// Index permutation `delta(i) = r i mod p^n` on `{1, ..., p^n}`,
    /// stored 0-based.
    pub delta: Perm,
    /// `alpha = delta^{-1}`; satisfies `alpha(p^s) = k` and
    /// `alpha(p^n - i) = p^n - alpha(i)`.
    pub alpha: Perm,
    /// `e' = e_k^{-1} (e_{alpha(1)}, ..., e_{alpha(p^n - 1)})`; has
    /// `e'_{p^s} = 1`.
    pub reduced: DefiningVector,
}

impl ReductionData {
    /// `alpha(i)` on 1-based indices; fixes `p^n`.
    pub fn alpha_index(&self, i: usize) -> usize {
        self.alpha.apply(i as u32 - 1) as usize + 1
    }

    /// The conjugating automorphism realized in `engine` (which must carry
    /// the original vector's shape).
    pub fn conjugator(&self, engine: &Engine) -> Result<Element> {
        engine.recursive_rooted(self.delta.clone())
    }
}

/// Canonical reduction: anchors at the smallest invertible index of minimal
/// p-valuation, so `s = t` and the reduced vector has `e'_{p^t} = 1`.
pub fn reduce_vector(e: &DefiningVector) -> Result<ReductionData> {
    let t = e.t_value().map_err(|_| {
        GgsError::NotApplicable("reduction needs an invertible entry".into())
    })?;
    let k = *e
        .invertible_set()
        .iter()
        .find(|&&i| valuation(i as u64, e.p()) == t)
        .expect("t is attained");
    reduce_vector_at(e, k)
}

/// Reduction anchored at an arbitrary invertible index `k`.
pub fn reduce_vector_at(e: &DefiningVector, k: usize) -> Result<ReductionData> {
    let pn = e.modulus();
    if k == 0 || k >= pn as usize || e.entry(k) % e.p() == 0 {
        return Err(GgsError::NotApplicable(format!(
            "entry at index {k} is not invertible modulo {}",
            e.p()
        )));
    }
    let s = valuation(k as u64, e.p());
    let h = k as u64 / e.p().pow(s);
    let pns = e.p().pow(e.n() - s);
    let r = inv_mod(h % pns, pns).expect("h is a unit mod p^{n-s}");
    // r as the least nonnegative representative of its class mod p^{n-s}.

    let delta_images: Vec<u32> = (0..pn as u32)
        .map(|j| ((r * (j as u64 + 1) + pn - 1) % pn) as u32)
        .collect();
    let delta = Perm::from_images(delta_images).expect("r is a unit");
    let alpha = delta.inverse();

    let ek_inv = inv_mod(e.entry(k), pn).expect("e_k is a unit mod p^n");
    let entries: Vec<u64> = (1..pn as usize)
        .map(|i| {
            let src = alpha.apply(i as u32 - 1) as usize + 1;
            mul_mod(ek_inv, e.entry(src), pn)
        })
        .collect();
    let reduced = DefiningVector::new(e.p(), e.n(), entries)?;
    debug_assert_eq!(reduced.entry(e.p().pow(s) as usize), 1);

    Ok(ReductionData {
        k,
        s,
        r,
        delta,
        alpha,
        reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Engine;

    #[test]
    fn worked_example_mod_five() {
        let e = DefiningVector::new(5, 1, vec![0, 2, 0, 1]).unwrap();
        let rd = reduce_vector(&e).unwrap();
        assert_eq!(rd.k, 2);
        assert_eq!(rd.s, 0);
        assert_eq!(rd.r, 3);
        for i in 1..5usize {
            assert_eq!(rd.alpha_index(i), (2 * i) % 5);
        }
        assert_eq!(rd.reduced.entries(), &[1, 3, 0, 0]);
    }

    #[test]
    fn identity_reduction_when_already_normalized() {
        let e = DefiningVector::new(3, 1, vec![1, 2]).unwrap();
        let rd = reduce_vector(&e).unwrap();
        assert_eq!(rd.k, 1);
        assert_eq!(rd.r, 1);
        assert_eq!(rd.reduced, e);
    }

    #[test]
    fn alpha_symmetry_and_anchor() {
        let e = DefiningVector::new(2, 2, vec![0, 1, 0]).unwrap();
        let rd = reduce_vector(&e).unwrap();
        let pn = 4usize;
        assert_eq!(rd.alpha_index(e.p().pow(rd.s) as usize), rd.k);
        for i in 1..pn {
            assert_eq!(rd.alpha_index(pn - i), pn - rd.alpha_index(i));
        }
    }

    #[test]
    fn conjugator_sends_a_to_a_r() {
        let e = DefiningVector::new(5, 1, vec![0, 2, 0, 1]).unwrap();
        let rd = reduce_vector(&e).unwrap();
        let eng = Engine::new(e);
        let f = rd.conjugator(&eng).unwrap();
        let a = eng.gen_a();
        let a_f = eng.conjugate(a, f).unwrap();
        let a_r = eng.pow(a, rd.r as i64).unwrap();
        assert!(eng.equal_at_depth(a_f, a_r, 3).unwrap());
    }

    #[test]
    fn conjugated_b_matches_rescaled_permuted_vector() {
        // psi(b^f) = (a^{r e_{alpha(1)}}, ..., a^{r e_{alpha(m-1)}}, b^f),
        // so b^f equals the recursively defined element for that tuple.
        for (p, n, entries) in [
            (5u64, 1u32, vec![0u64, 2, 0, 1]),
            (3, 2, vec![0, 2, 0, 0, 0, 1, 0, 0]),
            (2, 2, vec![0, 1, 0]),
        ] {
            let e = DefiningVector::new(p, n, entries).unwrap();
            let rd = reduce_vector(&e).unwrap();
            let eng = Engine::new(e.clone());
            let f = rd.conjugator(&eng).unwrap();
            let b_f = eng.conjugate(eng.gen_b(), f).unwrap();
            let pn = e.modulus();
            let tuple: Vec<u64> = (1..pn as usize)
                .map(|i| mul_mod(rd.r, e.entry(rd.alpha_index(i)), pn))
                .collect();
            let expected = eng.spinal(tuple).unwrap();
            assert!(eng.equal_at_depth(b_f, expected, 3).unwrap(), "vector {e}");
        }
    }

    #[test]
    fn not_applicable_outside_f() {
        let e = DefiningVector::new(2, 2, vec![2, 0, 2]).unwrap();
        assert!(matches!(
            reduce_vector(&e),
            Err(GgsError::NotApplicable(_))
        ));
    }

    #[test]
    fn reduction_invariants_on_sampled_large_shapes() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for (p, n) in [(7u64, 1u32), (2, 3), (3, 2)] {
            let m = p.pow(n);
            let mut done = 0;
            while done < 8 {
                let entries: Vec<u64> = (0..m - 1).map(|_| rng.random_range(0..m)).collect();
                let Ok(e) = DefiningVector::new(p, n, entries) else {
                    continue;
                };
                if !e.in_f() {
                    continue;
                }
                let rd = reduce_vector(&e).unwrap();
                let anchor = p.pow(rd.s) as usize;
                assert_eq!(rd.reduced.entry(anchor), 1, "vector {e}");
                assert!(rd.reduced.in_f());
                assert_eq!(rd.alpha_index(anchor), rd.k);
                for i in 1..m as usize {
                    assert_eq!(rd.alpha_index(m as usize - i), m as usize - rd.alpha_index(i));
                }
                done += 1;
            }
        }
    }
}
