//! Integer linear algebra: extended gcd, two-variable Diophantine solution
//! families, Smith normal form with unimodular transforms, integer rank,
//! fraction-free determinants, integer solutions of linear systems and LLL
//! lattice basis reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::matrix::IntMatrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntLinError {
    #[error("gcd(0, 0) is undefined")]
    BothZero,
    #[error("the zero matrix has no Smith normal form decomposition")]
    ZeroMatrix,
}

/// One particular solution of `λ·x + μ·y = rhs` together with the steps that
/// generate every other one: `(x + ℓ·step_x, y + ℓ·step_y)` for integer ℓ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BezoutSolution {
    pub x: BigInt,
    pub y: BigInt,
    /// `μ / g`
    pub step_x: BigInt,
    /// `−λ / g`
    pub step_y: BigInt,
    /// `gcd(λ, μ)`, always positive.
    pub g: BigInt,
}

impl BezoutSolution {
    pub fn at(&self, ell: &BigInt) -> (BigInt, BigInt) {
        (&self.x + ell * &self.step_x, &self.y + ell * &self.step_y)
    }
}

/// Extended Euclid: returns `(x, y, g)` with `λ·x + μ·y = g = gcd(λ, μ)`.
pub fn extended_gcd(lambda: &BigInt, mu: &BigInt) -> Result<BezoutSolution, IntLinError> {
    if lambda.is_zero() && mu.is_zero() {
        return Err(IntLinError::BothZero);
    }
    let (mut old_r, mut r) = (lambda.clone(), mu.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() {
        let q = &old_r / &r;
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, next_s);
        let next_t = &old_t - &q * &t;
        old_t = std::mem::replace(&mut t, next_t);
    }
    if old_r.is_negative() {
        old_r = -old_r;
        old_s = -old_s;
        old_t = -old_t;
    }
    Ok(BezoutSolution {
        step_x: mu / &old_r,
        step_y: -(lambda / &old_r),
        x: old_s,
        y: old_t,
        g: old_r,
    })
}

/// Solves `λ·x + μ·y = c`. `Ok(None)` when `gcd(λ, μ)` does not divide `c`.
pub fn solve_two_var_diophantine(
    lambda: &BigInt,
    mu: &BigInt,
    c: &BigInt,
) -> Result<Option<BezoutSolution>, IntLinError> {
    let base = extended_gcd(lambda, mu)?;
    let (scale, rem) = c.div_rem(&base.g);
    if !rem.is_zero() {
        return Ok(None);
    }
    Ok(Some(BezoutSolution {
        x: &base.x * &scale,
        y: &base.y * &scale,
        ..base
    }))
}

/// `U·A·V = S` with `U`, `V` unimodular and `S` diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfDecomposition {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
    pub rank: usize,
}

impl SnfDecomposition {
    /// The nonzero diagonal entries α₁ | α₂ | … | α_rank.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.rank).map(|i| self.s[(i, i)].clone()).collect()
    }
}

fn find_pivot(s: &IntMatrix, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for r in k..s.rows() {
        for c in k..s.cols() {
            let v = &s[(r, c)];
            if v.is_zero() {
                continue;
            }
            let a = v.abs();
            if best.as_ref().map_or(true, |(_, _, b)| a < *b) {
                best = Some((r, c, a));
            }
        }
    }
    best.map(|(r, c, _)| (r, c))
}

/// Smith normal form by gcd-driven row/column elimination. The pivot is the
/// smallest nonzero magnitude in the active submatrix (first in row-major
/// order on ties), so the output is deterministic.
pub fn smith_normal_form(a: &IntMatrix) -> Result<SnfDecomposition, IntLinError> {
    if a.is_zero() {
        return Err(IntLinError::ZeroMatrix);
    }
    let (rows, cols) = (a.rows(), a.cols());
    let mut s = a.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut rank = 0;

    for k in 0..rows.min(cols) {
        if find_pivot(&s, k).is_none() {
            break;
        }
        loop {
            let (pr, pc) = find_pivot(&s, k).expect("active submatrix became zero");
            s.swap_rows(k, pr);
            u.swap_rows(k, pr);
            s.swap_cols(k, pc);
            v.swap_cols(k, pc);

            let pivot = s[(k, k)].clone();
            let mut clean = true;
            for i in k + 1..rows {
                if s[(i, k)].is_zero() {
                    continue;
                }
                let q = -(&s[(i, k)] / &pivot);
                s.add_row_multiple(i, k, &q);
                u.add_row_multiple(i, k, &q);
                clean &= s[(i, k)].is_zero();
            }
            for j in k + 1..cols {
                if s[(k, j)].is_zero() {
                    continue;
                }
                let q = -(&s[(k, j)] / &pivot);
                s.add_col_multiple(j, k, &q);
                v.add_col_multiple(j, k, &q);
                clean &= s[(k, j)].is_zero();
            }
            if !clean {
                continue;
            }
            // Pivot must divide the whole remaining block; otherwise pull the
            // offending row up so the next round produces a smaller remainder.
            let offender = (k + 1..rows).find(|&i| {
                (k + 1..cols).any(|j| !s[(i, j)].is_multiple_of(&pivot))
            });
            match offender {
                Some(i) => {
                    s.add_row_multiple(k, i, &BigInt::one());
                    u.add_row_multiple(k, i, &BigInt::one());
                }
                None => break,
            }
        }
        if s[(k, k)].is_negative() {
            s.negate_row(k);
            u.negate_row(k);
        }
        rank += 1;
    }
    Ok(SnfDecomposition { u, s, v, rank })
}

/// Rank over the rationals, read off the Smith normal form.
pub fn integer_rank(a: &IntMatrix) -> usize {
    match smith_normal_form(a) {
        Ok(snf) => snf.rank,
        Err(_) => 0,
    }
}

/// All integer solutions of `A·x = b`: `particular + Σ λⱼ·kernel[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerSolutions {
    pub particular: Vec<BigInt>,
    /// Basis of the integer kernel lattice of `A`.
    pub kernel: Vec<Vec<BigInt>>,
}

/// Integer solutions of `A·x = b`, or `None` when there are none.
pub fn solve_integer_system(a: &IntMatrix, b: &[BigInt]) -> Option<IntegerSolutions> {
    assert_eq!(a.rows(), b.len(), "right-hand side length");
    let cols = a.cols();
    let Ok(snf) = smith_normal_form(a) else {
        // zero matrix
        return b.iter().all(Zero::is_zero).then(|| IntegerSolutions {
            particular: vec![BigInt::zero(); cols],
            kernel: IntMatrix::identity(cols).to_rows(),
        });
    };
    // S·(V⁻¹x) = U·b
    let ub = snf.u.mul_vec(b);
    if ub[snf.rank..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut w = vec![BigInt::zero(); cols];
    for i in 0..snf.rank {
        let (q, r) = ub[i].div_rem(&snf.s[(i, i)]);
        if !r.is_zero() {
            return None;
        }
        w[i] = q;
    }
    Some(IntegerSolutions {
        particular: snf.v.mul_vec(&w),
        kernel: (snf.rank..cols).map(|j| snf.v.column(j)).collect(),
    })
}

fn gram_schmidt(b: &[Vec<BigInt>]) -> (Vec<BigRational>, Vec<Vec<BigRational>>) {
    let k = b.len();
    let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(k);
    let mut norms: Vec<BigRational> = Vec::with_capacity(k);
    let mut mu = vec![vec![BigRational::zero(); k]; k];
    for i in 0..k {
        let mut v: Vec<BigRational> = b[i].iter().cloned().map(BigRational::from_integer).collect();
        for j in 0..i {
            let dot = b[i]
                .iter()
                .zip(&star[j])
                .fold(BigRational::zero(), |acc, (x, y)| acc + y * x);
            mu[i][j] = dot / &norms[j];
            for (vt, st) in v.iter_mut().zip(&star[j]) {
                *vt -= &mu[i][j] * st;
            }
        }
        norms.push(v.iter().fold(BigRational::zero(), |acc, x| acc + x * x));
        star.push(v);
    }
    (norms, mu)
}

/// LLL reduction (δ = 3/4) of linearly independent integer vectors. The
/// result spans the same lattice with short, nearly orthogonal vectors.
pub fn lll_reduce(basis: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut b = basis.to_vec();
    if b.len() < 2 {
        return b;
    }
    let delta = BigRational::new(3.into(), 4.into());
    let (mut norms, mut mu) = gram_schmidt(&b);
    let mut k = 1;
    while k < b.len() {
        for j in (0..k).rev() {
            let q = mu[k][j].round().to_integer();
            if q.is_zero() {
                continue;
            }
            let (head, tail) = b.split_at_mut(k);
            for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                *x -= &q * y;
            }
            (norms, mu) = gram_schmidt(&b);
        }
        let lovasz = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1];
        if norms[k] >= lovasz {
            k += 1;
        } else {
            b.swap(k, k - 1);
            (norms, mu) = gram_schmidt(&b);
            k = (k - 1).max(1);
        }
    }
    b
}

/// Fraction-free (Bareiss) determinant of a square matrix.
pub fn bareiss_determinant(m: &IntMatrix) -> BigInt {
    assert_eq!(m.rows(), m.cols(), "determinant of a non-square matrix");
    let n = m.rows();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[(k, k)].is_zero() {
            match (k + 1..n).find(|&r| !a[(r, k)].is_zero()) {
                Some(r) => {
                    a.swap_rows(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                a[(i, j)] = num / &prev;
            }
        }
        prev = a[(k, k)].clone();
    }
    sign * &a[(n - 1, n - 1)]
}

/// `⌊a / b⌋` for `b ≠ 0`.
pub fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

/// `⌈a / b⌉` for `b ≠ 0`.
pub fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}
