//! Exact integer matrices: fraction-free determinants, Smith normal form,
//! and the companion-matrix model for the constant-vector group.
//!
//! The model is the semidirect product of a cyclic group of order `p^n`
//! acting on the lattice `Z^{p^n - 1}` by the companion matrix `M` of
//! `X^{p^n-1} + ... + X + 1`. Row-vector convention throughout: the action
//! sends `v` to `v * M`, and the rows of `M` are the images of the basis
//! vectors. Transposing `M` would silently change the model; don't.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::error::{GgsError, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> IntMatrix {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> IntMatrix {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<IntMatrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(GgsError::Precondition("ragged matrix rows".into()));
        }
        Ok(IntMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().map(BigInt::from).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a * &other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x -= y;
        }
        out
    }

    pub fn pow(&self, k: u32) -> IntMatrix {
        assert_eq!(self.rows, self.cols);
        let mut acc = IntMatrix::identity(self.rows);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.data.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k * n + k].is_zero() {
                // pivot search within the column
                match (k + 1..n).find(|&i| !a[i * n + k].is_zero()) {
                    Some(i) => {
                        for j in 0..n {
                            a.swap(k * n + j, i * n + j);
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                    a[i * n + j] = num / &prev;
                }
                a[i * n + k] = BigInt::zero();
            }
            prev = a[k * n + k].clone();
        }
        sign * a[n * n - 1].clone()
    }

    /// Invariant factors `d_1 | d_2 | ...` (nonzero ones only), by row and
    /// column reduction over the integers.
    pub fn smith_invariant_factors(&self) -> Vec<BigUint> {
        let mut m = self.clone();
        let (rows, cols) = (m.rows, m.cols);
        let mut out = Vec::new();
        let steps = rows.min(cols);
        for k in 0..steps {
            loop {
                // Find the nonzero entry of minimal absolute value in the
                // trailing block.
                let mut pivot: Option<(usize, usize)> = None;
                for i in k..rows {
                    for j in k..cols {
                        if !m[(i, j)].is_zero()
                            && pivot.map_or(true, |(pi, pj)| {
                                m[(i, j)].abs() < m[(pi, pj)].abs()
                            })
                        {
                            pivot = Some((i, j));
                        }
                    }
                }
                let Some((pi, pj)) = pivot else {
                    return out;
                };
                m.swap_rows(k, pi);
                m.swap_cols(k, pj);
                if m[(k, k)].is_negative() {
                    m.negate_row(k);
                }
                // Clear the pivot row and column by exact quotients.
                let mut dirty = false;
                for i in k + 1..rows {
                    if !m[(i, k)].is_zero() {
                        let q = div_round(&m[(i, k)], &m[(k, k)]);
                        m.row_axpy(i, k, &q);
                        if !m[(i, k)].is_zero() {
                            dirty = true;
                        }
                    }
                }
                for j in k + 1..cols {
                    if !m[(k, j)].is_zero() {
                        let q = div_round(&m[(k, j)], &m[(k, k)]);
                        m.col_axpy(j, k, &q);
                        if !m[(k, j)].is_zero() {
                            dirty = true;
                        }
                    }
                }
                if dirty {
                    continue;
                }
                // Enforce divisibility of the rest by the pivot.
                let mut fixed = true;
                'scan: for i in k + 1..rows {
                    for j in k + 1..cols {
                        if (&m[(i, j)] % &m[(k, k)]) != BigInt::zero() {
                            let one = BigInt::one();
                            m.row_axpy_add(k, i, &one);
                            fixed = false;
                            break 'scan;
                        }
                    }
                }
                if fixed {
                    break;
                }
            }
            out.push(m[(k, k)].magnitude().clone());
        }
        out
    }

    /// Row-major, space-separated plain text, one row per line.
    pub fn to_plain_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self[(r, j)].clone();
            self[(r, j)] = v;
        }
    }

    /// row_i -= q * row_k
    fn row_axpy(&mut self, i: usize, k: usize, q: &BigInt) {
        for j in 0..self.cols {
            let t = q * &self[(k, j)];
            self[(i, j)] -= t;
        }
    }

    /// row_i += q * row_src (used to pull non-divisible entries into the pivot row)
    fn row_axpy_add(&mut self, i: usize, src: usize, q: &BigInt) {
        for j in 0..self.cols {
            let t = q * &self[(src, j)];
            self[(i, j)] += t;
        }
    }

    /// col_j -= q * col_k
    fn col_axpy(&mut self, j: usize, k: usize, q: &BigInt) {
        for i in 0..self.rows {
            let t = q * &self[(i, k)];
            self[(i, j)] -= t;
        }
    }
}

/// Quotient rounded toward the nearest integer keeps entries small during the
/// Smith reduction.
fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    let (q, r) = (a / b, a % b);
    if (&r * &two).abs() > b.abs() {
        if (r.is_negative()) == (b.is_negative()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl std::fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_plain_text())
    }
}

/// `<x> ⋉ Z^{p^n - 1}` with `x` of order `p^n` acting by the companion matrix
/// of `X^{p^n-1} + X^{p^n-2} + ... + X + 1` (right action on row vectors).
pub struct CompanionModel {
    pub p: u64,
    pub n: u32,
    pub dim: usize,
    pub matrix: IntMatrix,
}

impl CompanionModel {
    pub fn new(p: u64, n: u32) -> Result<CompanionModel> {
        if !crate::arith::is_prime(p) || n == 0 {
            return Err(GgsError::InvalidVector("need a prime p and n >= 1".into()));
        }
        let dim = (p.pow(n) - 1) as usize;
        let mut m = IntMatrix::zero(dim, dim);
        for i in 0..dim - 1 {
            m[(i, i + 1)] = BigInt::one();
        }
        for j in 0..dim {
            m[(dim - 1, j)] = BigInt::from(-1);
        }
        Ok(CompanionModel {
            p,
            n,
            dim,
            matrix: m,
        })
    }

    /// `det(M - I)`; its absolute value is `p^n`.
    pub fn det_m_minus_i(&self) -> BigInt {
        self.matrix.sub(&IntMatrix::identity(self.dim)).det()
    }

    /// Index of the `i`-th lower central term:
    /// `p^n * |det((M - I)^{i-1})|`. The rows of `(M - I)^{i-1}` generate the
    /// intersection of that term with the lattice.
    pub fn lcs_index(&self, i: u32) -> Result<BigUint> {
        if i < 1 {
            return Err(GgsError::Precondition("lower central index needs i >= 1".into()));
        }
        let pn = BigUint::from(self.p.pow(self.n));
        let m_minus_i = self.matrix.sub(&IntMatrix::identity(self.dim));
        let d = m_minus_i.pow(i - 1).det();
        Ok(pn * d.magnitude())
    }

    /// Same index computed through the Smith invariant factors of
    /// `(M - I)^{i-1}`, as an independent route to the lattice index.
    pub fn lcs_index_via_smith(&self, i: u32) -> Result<BigUint> {
        if i < 1 {
            return Err(GgsError::Precondition("lower central index needs i >= 1".into()));
        }
        let pn = BigUint::from(self.p.pow(self.n));
        let m_minus_i = self.matrix.sub(&IntMatrix::identity(self.dim));
        let factors = m_minus_i.pow(i - 1).smith_invariant_factors();
        if factors.len() < self.dim {
            return Err(GgsError::Precondition(
                "lattice rows do not span a finite-index sublattice".into(),
            ));
        }
        let mut idx = pn;
        for f in factors {
            idx *= f;
        }
        Ok(idx)
    }
}

pub fn model_lcs_index(p: u64, n: u32, i: u32) -> Result<BigUint> {
    CompanionModel::new(p, n)?.lcs_index(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_examples() {
        let m = IntMatrix::from_rows(vec![vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(m.det(), BigInt::from(-2));
        let m = IntMatrix::from_rows(vec![
            vec![2, 0, 0],
            vec![0, 0, 3],
            vec![0, 5, 0],
        ])
        .unwrap();
        assert_eq!(m.det(), BigInt::from(-30));
        assert_eq!(IntMatrix::identity(0).det(), BigInt::one());
    }

    #[test]
    fn smith_form_example() {
        let m = IntMatrix::from_rows(vec![
            vec![2, 4, 4],
            vec![-6, 6, 12],
            vec![10, 4, 16],
        ])
        .unwrap();
        // Known invariant factors 2, 2, 156.
        assert_eq!(
            m.smith_invariant_factors(),
            vec![BigUint::from(2u32), BigUint::from(2u32), BigUint::from(156u32)]
        );
    }

    #[test]
    fn smith_agrees_with_bareiss_on_random_like_matrices() {
        let samples = vec![
            vec![vec![3, 1, -2], vec![0, 4, 5], vec![7, -1, 2]],
            vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]],
            vec![vec![-2, 0], vec![9, 5]],
        ];
        for rows in samples {
            let m = IntMatrix::from_rows(rows).unwrap();
            let det = m.det().magnitude().clone();
            let product: BigUint = m
                .smith_invariant_factors()
                .into_iter()
                .product();
            assert_eq!(det, product);
        }
    }

    #[test]
    fn companion_determinant_is_alphabet_size() {
        for (p, n) in [(2u64, 1u32), (3, 1), (2, 2), (5, 1), (3, 2)] {
            let model = CompanionModel::new(p, n).unwrap();
            assert_eq!(
                model.det_m_minus_i().magnitude(),
                &BigUint::from(p.pow(n))
            );
        }
    }

    #[test]
    fn lcs_index_examples() {
        // 1x1 companion of X + 1: M - I = (-2).
        assert_eq!(model_lcs_index(2, 1, 2).unwrap(), BigUint::from(4u32));
        // 2x2 companion of X^2 + X + 1: det((M-I)^2) = 9.
        assert_eq!(model_lcs_index(3, 1, 3).unwrap(), BigUint::from(27u32));
        // i = 1 is the plain index of the lattice.
        for (p, n) in [(2u64, 1u32), (3, 1), (2, 2), (5, 1)] {
            assert_eq!(
                model_lcs_index(p, n, 1).unwrap(),
                BigUint::from(p.pow(n))
            );
        }
    }

    #[test]
    fn smith_route_matches_determinant_route() {
        for (p, n) in [(2u64, 1u32), (3, 1), (2, 2), (5, 1), (3, 2)] {
            let model = CompanionModel::new(p, n).unwrap();
            for i in 1..=6 {
                assert_eq!(
                    model.lcs_index(i).unwrap(),
                    model.lcs_index_via_smith(i).unwrap(),
                    "p={p} n={n} i={i}"
                );
            }
        }
    }

    #[test]
    fn plain_text_export() {
        let model = CompanionModel::new(2, 1).unwrap();
        assert_eq!(model.matrix.to_plain_text(), "-1\n");
        let m = IntMatrix::from_rows(vec![vec![0, 1], vec![-1, -1]]).unwrap();
        assert_eq!(m.to_plain_text(), "0 1\n-1 -1\n");
    }
}
