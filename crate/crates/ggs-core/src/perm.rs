use crate::error::{GgsError, Result};

/// A permutation of `{0, ..., n-1}` stored in one-line image form.
///
/// Composition is written left to right throughout the crate: `f.then(g)`
/// applies `f` first and `g` second.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    images: Box<[u32]>,
}

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm {
            images: (0..n as u32).collect(),
        }
    }

    /// Validates that `images` is a bijection of `{0, .., n-1}`.
    pub fn from_images(images: Vec<u32>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if (x as usize) >= n || seen[x as usize] {
                return Err(GgsError::MalformedVertex(format!(
                    "not a permutation of 0..{n}"
                )));
            }
            seen[x as usize] = true;
        }
        Ok(Perm {
            images: images.into(),
        })
    }

    /// The full cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn cycle(n: usize) -> Self {
        Perm {
            images: (0..n as u32).map(|i| (i + 1) % n as u32).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn apply(&self, x: u32) -> u32 {
        self.images[x as usize]
    }

    /// Apply `self` first, then `other`.
    pub fn then(&self, other: &Perm) -> Perm {
        debug_assert_eq!(self.degree(), other.degree());
        Perm {
            images: self.images.iter().map(|&x| other.images[x as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0u32; self.degree()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x as usize] = i as u32;
        }
        Perm { images: inv.into() }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    /// First point moved, in the given priority ranking (lower rank first).
    pub fn first_moved_by(&self, rank_of: &[u32]) -> Option<u32> {
        let mut best: Option<(u32, u32)> = None;
        for (i, &x) in self.images.iter().enumerate() {
            if i as u32 != x {
                let r = rank_of[i];
                if best.map_or(true, |(br, _)| r < br) {
                    best = Some((r, i as u32));
                }
            }
        }
        best.map(|(_, p)| p)
    }

    pub fn pow(&self, k: i64) -> Perm {
        let n = self.degree();
        if k == 0 {
            return Perm::identity(n);
        }
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Perm::identity(n);
        let mut sq = base;
        loop {
            if e & 1 == 1 {
                acc = acc.then(&sq);
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            sq = sq.then(&sq);
        }
        acc
    }

    /// Multiplicative order, as lcm of cycle lengths. `None` on overflow.
    pub fn order(&self) -> Option<u64> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut ord: u64 = 1;
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let mut len: u64 = 0;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = self.images[j] as usize;
                len += 1;
            }
            let g = gcd(ord, len);
            ord = ord.checked_mul(len / g)?;
        }
        Some(ord)
    }

    /// One-line notation on `{1, ..., n}`; used by the portrait serialization.
    pub fn one_line_one_based(&self) -> Vec<u32> {
        self.images.iter().map(|&x| x + 1).collect()
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }
}

impl std::fmt::Debug for Perm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Perm{:?}", self.one_line_one_based())
    }
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_is_left_to_right() {
        // f = (0 1), g = (1 2); f then g sends 0 -> 1 -> 2.
        let f = Perm::from_images(vec![1, 0, 2]).unwrap();
        let g = Perm::from_images(vec![0, 2, 1]).unwrap();
        let fg = f.then(&g);
        assert_eq!(fg.apply(0), 2);
        assert_eq!(fg.apply(2), 1);
    }

    #[test]
    fn inverse_and_order() {
        let c = Perm::cycle(6);
        assert_eq!(c.order(), Some(6));
        assert!(c.then(&c.inverse()).is_identity());
        assert!(c.pow(6).is_identity());
        assert_eq!(c.pow(-1), c.inverse());
    }

    #[test]
    fn rejects_non_bijection() {
        assert!(Perm::from_images(vec![0, 0, 1]).is_err());
        assert!(Perm::from_images(vec![3, 0, 1]).is_err());
    }
}
