//! Batch drivers over families of defining vectors.
//!
//! Classification sweeps, battery runs and quotient probes are embarrassingly
//! parallel across vectors; each worker builds its own engine. With the
//! `parallel` feature (default) the batch entry points fan out over a rayon
//! pool; the `*_seq` variants always run sequentially and exist so the two
//! paths can be compared directly. Output order is the input order either
//! way.

use crate::error::Result;
use crate::report::CheckRecord;
use crate::vector::{ClassificationReport, DefiningVector};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when the feature is enabled.
pub fn map_vectors<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Every nonzero defining vector for the given shape, in odometer order
/// (first entry fastest).
pub fn enumerate_vectors(p: u64, n: u32) -> Result<Vec<DefiningVector>> {
    // Constructing one vector validates p and n for the whole sweep.
    let probe = DefiningVector::ones(p, n)?;
    let m = probe.modulus();
    let len = (m - 1) as usize;
    let mut out = Vec::new();
    let mut counter = vec![0u64; len];
    loop {
        let mut pos = 0;
        loop {
            if pos == len {
                return Ok(out);
            }
            counter[pos] += 1;
            if counter[pos] < m {
                break;
            }
            counter[pos] = 0;
            pos += 1;
        }
        out.push(DefiningVector::new(p, n, counter.clone())?);
    }
}

pub fn classify_many(vectors: &[DefiningVector]) -> Vec<ClassificationReport> {
    map_vectors(vectors, |e| e.classify())
}

pub fn classify_many_seq(vectors: &[DefiningVector]) -> Vec<ClassificationReport> {
    vectors.iter().map(|e| e.classify()).collect()
}

pub fn battery_many(
    vectors: &[DefiningVector],
    depth: u32,
) -> Vec<Result<Vec<CheckRecord>>> {
    map_vectors(vectors, |e| crate::battery::identity_battery(e, depth))
}

pub fn battery_many_seq(
    vectors: &[DefiningVector],
    depth: u32,
) -> Vec<Result<Vec<CheckRecord>>> {
    vectors
        .iter()
        .map(|e| crate::battery::identity_battery(e, depth))
        .collect()
}

/// Abelian invariants of the depth-`ell` quotient for each vector.
pub fn abelianization_many(
    vectors: &[DefiningVector],
    ell: u32,
    cap: u64,
) -> Vec<Result<Vec<u64>>> {
    map_vectors(vectors, |e| {
        crate::quotient::build_quotient(e, ell, cap)?.group().abelian_invariants()
    })
}

pub fn abelianization_many_seq(
    vectors: &[DefiningVector],
    ell: u32,
    cap: u64,
) -> Vec<Result<Vec<u64>>> {
    vectors
        .iter()
        .map(|e| {
            crate::quotient::build_quotient(e, ell, cap)?
                .group()
                .abelian_invariants()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_vectors(2, 1).unwrap().len(), 1);
        assert_eq!(enumerate_vectors(3, 1).unwrap().len(), 8);
        assert_eq!(enumerate_vectors(2, 2).unwrap().len(), 63);
        assert_eq!(enumerate_vectors(5, 1).unwrap().len(), 624);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let vs = enumerate_vectors(2, 2).unwrap();
        let par: Vec<String> = classify_many(&vs)
            .into_iter()
            .map(|r| r.route.as_str().to_string())
            .collect();
        let seq: Vec<String> = classify_many_seq(&vs)
            .into_iter()
            .map(|r| r.route.as_str().to_string())
            .collect();
        assert_eq!(par, seq);
    }
}
