//! Defining vectors over `Z/p^n Z` and their classification.
//!
//! A GGS-group over the `p^n`-adic tree is specified by a nonzero tuple
//! `e = (e_1, ..., e_{p^n - 1})` of residues modulo `p^n`. The predicates in
//! this module read off, from `e` alone, which branch-structure statement
//! applies to the group, and the classifier routes each vector to a single
//! verdict.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::arith::{inv_mod, is_prime, mul_mod, valuation};
use crate::error::{GgsError, Result};

/// Largest alphabet size accepted when constructing a vector. Level quotients
/// impose their own (smaller) caps; this bound just keeps the arithmetic sane.
const MAX_ALPHABET: u64 = 1 << 20;

/// The defining vector of a GGS-group: `p`, `n`, and entries
/// `e_1, ..., e_{p^n - 1}` stored as canonical representatives in `[0, p^n)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DefiningVector {
    p: u64,
    n: u32,
    entries: Vec<u64>,
}

impl DefiningVector {
    /// Entries are reduced modulo `p^n`; the all-zero tuple is rejected.
    pub fn new(p: u64, n: u32, entries: Vec<u64>) -> Result<Self> {
        if !is_prime(p) {
            return Err(GgsError::InvalidVector(format!("p = {p} is not prime")));
        }
        if n == 0 {
            return Err(GgsError::InvalidVector("n must be at least 1".into()));
        }
        let m = p
            .checked_pow(n)
            .filter(|&m| m <= MAX_ALPHABET)
            .ok_or_else(|| GgsError::InvalidVector(format!("p^n = {p}^{n} is too large")))?;
        let expected = (m - 1) as usize;
        if entries.len() != expected {
            return Err(GgsError::InvalidVector(format!(
                "expected {expected} entries for p^n = {m}, got {}",
                entries.len()
            )));
        }
        let entries: Vec<u64> = entries.into_iter().map(|e| e % m).collect();
        if entries.iter().all(|&e| e == 0) {
            return Err(GgsError::InvalidVector(
                "the zero tuple does not define a GGS-group".into(),
            ));
        }
        Ok(DefiningVector { p, n, entries })
    }

    /// The constant vector `(1, ..., 1)`.
    pub fn ones(p: u64, n: u32) -> Result<Self> {
        let m = p
            .checked_pow(n)
            .ok_or_else(|| GgsError::InvalidVector("p^n overflow".into()))?;
        Self::new(p, n, vec![1; (m - 1) as usize])
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Alphabet size `m = p^n`.
    pub fn modulus(&self) -> u64 {
        self.p.pow(self.n)
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    /// Entry `e_i` with the customary 1-based index `1 <= i <= p^n - 1`.
    pub fn entry(&self, i: usize) -> u64 {
        self.entries[i - 1]
    }

    /// Largest `R` such that `p^R` divides every entry.
    pub fn r0(&self) -> u32 {
        self.entries
            .iter()
            .filter(|&&e| e != 0)
            .map(|&e| valuation(e, self.p))
            .min()
            .expect("nonzero vector")
    }

    /// Whether some entry is invertible modulo `p`.
    pub fn in_f(&self) -> bool {
        self.r0() == 0
    }

    /// Indices (1-based) whose entries are invertible modulo `p`.
    pub fn invertible_set(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &e)| e % self.p != 0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Largest `t` with `p^t` dividing every index in the invertible set.
    pub fn t_value(&self) -> Result<u32> {
        let y = self.invertible_set();
        if y.is_empty() {
            return Err(GgsError::NotApplicable(
                "t is defined only for vectors with an invertible entry".into(),
            ));
        }
        Ok(y.iter().map(|&i| valuation(i as u64, self.p)).min().unwrap())
    }

    /// `k = p^t`.
    pub fn k_value(&self) -> Result<usize> {
        Ok(self.p.pow(self.t_value()?) as usize)
    }

    /// Whether the invertible set is all of `{k, 2k, ..., p^n - k}`.
    pub fn y_maximal(&self) -> bool {
        match self.k_value() {
            Ok(k) => {
                let m = self.modulus() as usize;
                let y = self.invertible_set();
                y.len() == m / k - 1 && y.iter().all(|&i| i % k == 0)
            }
            Err(_) => false,
        }
    }

    /// Invertible-symmetric: `i` is in the invertible set iff `p^n - i` is.
    pub fn is_is(&self) -> bool {
        let m = self.modulus() as usize;
        let y: std::collections::BTreeSet<usize> = self.invertible_set().into_iter().collect();
        y.iter().all(|&i| y.contains(&(m - i)))
    }

    /// Periodicity criterion: for every `i = 0, ..., n-1` the sum of the
    /// entries at indices that are multiples of `p^i` must vanish modulo
    /// `p^{i+1}`.
    pub fn is_periodic(&self) -> bool {
        let m = self.modulus();
        for i in 0..self.n {
            let step = self.p.pow(i);
            let modulus = self.p.pow(i + 1);
            let mut sum: u64 = 0;
            let mut idx = step;
            while idx < m {
                sum = (sum + self.entry(idx as usize)) % modulus;
                idx += step;
            }
            if sum % modulus != 0 {
                return false;
            }
        }
        true
    }

    /// Constant on a maximal invertible set, modulo `p`.
    pub fn in_e(&self) -> bool {
        if !self.y_maximal() {
            return false;
        }
        let y = self.invertible_set();
        let c = self.entry(y[0]) % self.p;
        y.iter().all(|&i| self.entry(i) % self.p == c)
    }

    /// For `p = 2` only: the single odd entry sits at index `2^{n-1}`.
    pub fn in_eprime(&self) -> bool {
        self.p == 2 && self.in_f() && self.t_value().map_or(false, |t| t == self.n - 1)
    }

    /// All entries equal, with the common value invertible modulo `p`.
    ///
    /// A constant tuple whose value is divisible by `p` is excluded here: such
    /// a vector already fails spherical transitivity and is routed on that
    /// ground alone.
    pub fn is_constant(&self) -> bool {
        self.in_f() && self.entries.iter().all(|&e| e == self.entries[0])
    }

    /// Constant (as exact residues) on the invertible set, zero outside of it,
    /// without being constant overall.
    pub fn partially_constant(&self) -> bool {
        if !self.in_f() || self.is_constant() {
            return false;
        }
        let y: std::collections::BTreeSet<usize> = self.invertible_set().into_iter().collect();
        let c = self.entry(*y.iter().next().unwrap());
        (1..self.modulus() as usize).all(|i| {
            if y.contains(&i) {
                self.entry(i) == c
            } else {
                self.entry(i) == 0
            }
        })
    }

    /// The 2x2 determinant `e_{m-k} e_{m+k} - e_m^2` modulo `p`, defined when
    /// the invertible set is maximal and `m` lies strictly between `k` and
    /// `p^n - k` in it.
    pub fn delta(&self, m_idx: usize) -> Result<u64> {
        Ok(self.delta_full(m_idx)? % self.p)
    }

    /// Same determinant reduced modulo `p^n` rather than `p`; this is the
    /// exponent that actually shows up in section computations.
    pub fn delta_full(&self, m_idx: usize) -> Result<u64> {
        if !self.y_maximal() {
            return Err(GgsError::NotApplicable(
                "delta is defined only for a maximal invertible set".into(),
            ));
        }
        let k = self.k_value()?;
        let m = self.modulus() as usize;
        let admissible = m_idx % k == 0 && m_idx > k && m_idx < m - k;
        if !admissible {
            return Err(GgsError::NotApplicable(format!(
                "index {m_idx} is not an interior multiple of k = {k}"
            )));
        }
        let pn = self.modulus();
        let prod = mul_mod(self.entry(m_idx - k), self.entry(m_idx + k), pn);
        let sq = mul_mod(self.entry(m_idx), self.entry(m_idx), pn);
        Ok((prod + pn - sq) % pn)
    }

    /// All admissible determinant values, keyed by index.
    pub fn delta_values(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        if let Ok(k) = self.k_value() {
            if self.y_maximal() {
                let m = self.modulus() as usize;
                let mut idx = 2 * k;
                while idx < m - k {
                    if let Ok(d) = self.delta(idx) {
                        out.insert(idx, d);
                    }
                    idx += k;
                }
            }
        }
        out
    }

    /// Multiply every entry by a unit `lambda` modulo `p^n`. The rescaled
    /// vector defines the same group.
    pub fn rescale(&self, lambda: u64) -> Result<DefiningVector> {
        let pn = self.modulus();
        if inv_mod(lambda, pn).is_none() {
            return Err(GgsError::InvalidVector(format!(
                "{lambda} is not invertible modulo {pn}"
            )));
        }
        DefiningVector::new(
            self.p,
            self.n,
            self.entries.iter().map(|&e| mul_mod(e, lambda, pn)).collect(),
        )
    }

    pub fn classify(&self) -> ClassificationReport {
        classify(self)
    }
}

impl fmt::Debug for DefiningVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for DefiningVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let entries: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "p={} n={} e={}", self.p, self.n, entries.join(","))
    }
}

impl FromStr for DefiningVector {
    type Err = GgsError;

    /// Parses the line format `p=3 n=2 e=0,0,1,0,0,2,0,0`.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = None;
        let mut n = None;
        let mut e = None;
        for tok in s.split_whitespace() {
            if let Some(v) = tok.strip_prefix("p=") {
                p = Some(v.parse::<u64>().map_err(|_| bad_field("p", v))?);
            } else if let Some(v) = tok.strip_prefix("n=") {
                n = Some(v.parse::<u32>().map_err(|_| bad_field("n", v))?);
            } else if let Some(v) = tok.strip_prefix("e=") {
                let entries = v
                    .split(',')
                    .map(|t| t.trim().parse::<u64>().map_err(|_| bad_field("e", t)))
                    .collect::<Result<Vec<u64>>>()?;
                e = Some(entries);
            } else {
                return Err(GgsError::InvalidVector(format!("unexpected token {tok:?}")));
            }
        }
        match (p, n, e) {
            (Some(p), Some(n), Some(e)) => DefiningVector::new(p, n, e),
            _ => Err(GgsError::InvalidVector(
                "expected the form \"p=<prime> n=<int> e=<comma separated entries>\"".into(),
            )),
        }
    }
}

fn bad_field(name: &str, value: &str) -> GgsError {
    GgsError::InvalidVector(format!("cannot parse {name} field from {value:?}"))
}

/// Final verdict for a defining vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    #[serde(rename = "NOT_TRANSITIVE")]
    NotTransitive,
    #[serde(rename = "REGULAR_BRANCH_G1")]
    RegularBranchG1,
    #[serde(rename = "REGULAR_BRANCH_GAMMA3")]
    RegularBranchGamma3,
    #[serde(rename = "WEAKLY_BRANCH_G2_ONLY")]
    WeaklyBranchG2Only,
    #[serde(rename = "CONSTANT_NOT_BRANCH")]
    ConstantNotBranch,
    #[serde(rename = "OPEN_EPRIME")]
    OpenEprime,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::NotTransitive => "NOT_TRANSITIVE",
            Route::RegularBranchG1 => "REGULAR_BRANCH_G1",
            Route::RegularBranchGamma3 => "REGULAR_BRANCH_GAMMA3",
            Route::WeaklyBranchG2Only => "WEAKLY_BRANCH_G2_ONLY",
            Route::ConstantNotBranch => "CONSTANT_NOT_BRANCH",
            Route::OpenEprime => "OPEN_EPRIME",
        }
    }
}

/// Everything the classifier can say about one vector.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub p: u64,
    pub n: u32,
    pub entries: Vec<u64>,
    pub r0: u32,
    /// Invertible set, 1-based indices.
    pub y: Vec<usize>,
    pub t: Option<u32>,
    pub k: Option<usize>,
    pub in_f: bool,
    pub y_maximal: bool,
    pub is_is: bool,
    pub in_e: bool,
    /// Meaningful for p = 2 only.
    pub in_eprime: Option<bool>,
    pub is_constant: bool,
    pub is_periodic: bool,
    pub partially_constant: bool,
    /// Interior determinants modulo p, keyed by 1-based index.
    pub delta_values: BTreeMap<usize, u64>,
    pub route: Route,
    /// Every statement whose hypothesis this vector satisfies.
    pub applicable_theorems: Vec<String>,
    pub branch_status: String,
}

fn classify(e: &DefiningVector) -> ClassificationReport {
    let in_f = e.in_f();
    let y = e.invertible_set();
    let t = e.t_value().ok();
    let k = e.k_value().ok();
    let y_maximal = e.y_maximal();
    let is_is = e.is_is();
    let in_e = e.in_e();
    let in_eprime = if e.p() == 2 { Some(e.in_eprime()) } else { None };
    let is_constant = e.is_constant();
    let is_periodic = e.is_periodic();
    let partially_constant = e.partially_constant();
    let delta_values = e.delta_values();
    let some_delta_invertible = delta_values.values().any(|&d| d != 0);

    let route = if !in_f {
        Route::NotTransitive
    } else if is_constant {
        Route::ConstantNotBranch
    } else if !is_is {
        Route::RegularBranchG1
    } else if !y_maximal {
        Route::RegularBranchGamma3
    } else if some_delta_invertible {
        Route::RegularBranchGamma3
    } else if !in_e {
        Route::RegularBranchGamma3
    } else if partially_constant {
        Route::RegularBranchGamma3
    } else if in_eprime == Some(true) {
        Route::OpenEprime
    } else {
        Route::WeaklyBranchG2Only
    };

    let mut tags: Vec<String> = Vec::new();
    if !in_f {
        tags.push("not-spherically-transitive".into());
    }
    if in_f && is_constant {
        tags.push("constant-not-branch".into());
    }
    if in_f && !is_constant && !is_is {
        tags.push("non-IS-regular-branch-over-derived".into());
    }
    if in_f && !is_constant && is_is && !y_maximal {
        tags.push("IS-not-maximal-gamma3".into());
    }
    if in_f && !is_constant && y_maximal && some_delta_invertible {
        tags.push("maximal-delta-invertible-gamma3".into());
    }
    if in_f && !is_constant && y_maximal && !some_delta_invertible && !in_e {
        tags.push("maximal-delta-zero-outside-E-gamma3".into());
    }
    if in_e && partially_constant {
        tags.push("partially-constant-gamma3".into());
    }
    if in_f && in_eprime != Some(true) {
        tags.push("weakly-regular-branch-over-second-derived".into());
    }
    if in_f && is_periodic {
        tags.push("periodic-gamma3".into());
    }
    if route == Route::OpenEprime {
        tags.push("open-weakly-branch-question".into());
    }
    tags.sort();
    tags.dedup();

    let branch_status = match route {
        Route::NotTransitive => "not spherically transitive, hence not weakly branch".into(),
        Route::RegularBranchG1 => "regular branch over the derived subgroup".into(),
        Route::RegularBranchGamma3 => "regular branch over the third lower central term".into(),
        Route::WeaklyBranchG2Only => {
            "weakly regular branch over the second derived subgroup; branch status: unknown".into()
        }
        Route::ConstantNotBranch => "not a branch group".into(),
        Route::OpenEprime => {
            "whether this family is weakly branch is an open question; no verdict is guessed".into()
        }
    };

    ClassificationReport {
        p: e.p(),
        n: e.n(),
        entries: e.entries().to_vec(),
        r0: e.r0(),
        y,
        t,
        k,
        in_f,
        y_maximal,
        is_is,
        in_e,
        in_eprime,
        is_constant,
        is_periodic,
        partially_constant,
        delta_values,
        route,
        applicable_theorems: tags,
        branch_status,
    }
}
