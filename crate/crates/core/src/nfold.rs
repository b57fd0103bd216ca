//! Linear-time n-fold solver for `t_A = s_A + 1` with `rank(A) = s_A`.
//!
//! With `U A V = S` in Smith normal form, substituting `xⁱ = V yⁱ` fixes
//! every `yⁱⱼ` with `j ≤ s_A` from `S yⁱ = U bⁱ`, leaving one free integer
//! `yⁱ_t` per brick: `xⁱ = cⁱ + θ yⁱ_t` with `θ` the last column of `V`.
//! The box of each brick becomes an interval for `yⁱ_t`, the linking rows
//! fix the total `Σ yⁱ_t`, and a greedy fill by reduced weight is optimal.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::intlin::{ceil_div, floor_div, integer_rank, smith_normal_form, SnfDecomposition};
use crate::matrix::{dot, IntMatrix};
use crate::model::{FourBlockInstance, NFoldInstance, Solution, SolverTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// `αⱼ ∤ (U bⁱ)ⱼ` for some brick.
    DivisibilityFail,
    /// Linking rows disagree on `Σ yⁱ_t` or give no integer value.
    AggregateInconsistent,
    /// A brick's box leaves no integer `yⁱ_t`.
    EmptyInterval,
    /// A coordinate with zero step lies outside its box.
    ConstantRowViolated,
    /// The required total lies outside `[Σ ℓ̃ⁱ, Σ ũⁱ]`.
    AggregateOutOfRange,
}

impl fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InfeasibleReason::DivisibilityFail => "divisibility_fail",
            InfeasibleReason::AggregateInconsistent => "aggregate_inconsistent",
            InfeasibleReason::EmptyInterval => "empty_interval",
            InfeasibleReason::ConstantRowViolated => "constant_row_violated",
            InfeasibleReason::AggregateOutOfRange => "aggregate_out_of_range",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NFoldError {
    #[error("instance is not an eligible n-fold program (need B = C = 0, t_A = s_A + 1, rank(A) = s_A)")]
    NotEligible,
    #[error("infeasible: {reason} (brick {brick:?})")]
    Infeasible {
        reason: InfeasibleReason,
        /// 1-based brick that triggered the verdict, when there is one.
        brick: Option<usize>,
    },
}

fn infeasible(reason: InfeasibleReason, brick: Option<usize>) -> NFoldError {
    NFoldError::Infeasible { reason, brick }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntervalError {
    Empty,
    ConstantRowViolated { coordinate: usize },
}

/// Integer interval of `y` such that `l ≤ c + θ·y ≤ u` holds coordinatewise.
/// Coordinates with `θ_h = 0` only check `l_h ≤ c_h ≤ u_h`. When `θ = 0`
/// the interval is unbounded and returned as `None` on both ends.
pub fn reduce_box_to_interval(
    theta: &[BigInt],
    offset: &[BigInt],
    l: &[BigInt],
    u: &[BigInt],
) -> Result<(Option<BigInt>, Option<BigInt>), IntervalError> {
    let mut lo: Option<BigInt> = None;
    let mut hi: Option<BigInt> = None;
    for h in 0..theta.len() {
        let (t, c) = (&theta[h], &offset[h]);
        let (beta_lo, beta_hi) = (&l[h] - c, &u[h] - c);
        if t.is_zero() {
            if beta_lo.is_positive() || beta_hi.is_negative() {
                return Err(IntervalError::ConstantRowViolated { coordinate: h });
            }
            continue;
        }
        let (a, b) = if t.is_positive() {
            (ceil_div(&beta_lo, t), floor_div(&beta_hi, t))
        } else {
            (ceil_div(&beta_hi, t), floor_div(&beta_lo, t))
        };
        lo = Some(lo.map_or(a.clone(), |v| v.max(a)));
        hi = Some(hi.map_or(b.clone(), |v| v.min(b)));
    }
    if let (Some(a), Some(b)) = (&lo, &hi) {
        if a > b {
            return Err(IntervalError::Empty);
        }
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("target {target} outside [0, {capacity}]")]
pub struct TargetOutOfRange {
    pub target: BigInt,
    pub capacity: BigInt,
}

/// Maximizes `Σ wᵢ pᵢ` subject to `Σ pᵢ = target`, `0 ≤ pᵢ ≤ capᵢ`: fill by
/// descending weight, equal weights in ascending index.
pub fn greedy_ip8(
    caps: &[BigInt],
    weights: &[BigInt],
    target: &BigInt,
) -> Result<Vec<BigInt>, TargetOutOfRange> {
    let capacity: BigInt = caps.iter().sum();
    if target.is_negative() || *target > capacity {
        return Err(TargetOutOfRange {
            target: target.clone(),
            capacity,
        });
    }
    let mut order: Vec<usize> = (0..caps.len()).collect();
    order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
    let mut p = vec![BigInt::zero(); caps.len()];
    let mut left = target.clone();
    for i in order {
        if left.is_zero() {
            break;
        }
        let take = (&caps[i]).min(&left).clone();
        left -= &take;
        p[i] = take;
    }
    Ok(p)
}

/// Per-brick data after eliminating the fixed `y` components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NfoldSnfContext {
    pub snf: SnfDecomposition,
    /// Last column of `V`.
    pub theta: Vec<BigInt>,
    /// `yⁱⱼ` for `j ≤ s_A`, per brick.
    pub fixed_y: Vec<Vec<BigInt>>,
    /// `cⁱ = Σ_{j ≤ s_A} V_{·,j} yⁱⱼ`, per brick.
    pub offsets: Vec<Vec<BigInt>>,
    /// `[ℓ̃ⁱ, ũⁱ]` for `yⁱ_t`.
    pub intervals: Vec<(BigInt, BigInt)>,
    /// `w̃ⁱ = wⁱ·θ`.
    pub weights: Vec<BigInt>,
    /// Required `Σ yⁱ_t`, or `None` when the linking rows leave it free.
    pub d0: Option<BigInt>,
}

fn eligible(a: &IntMatrix) -> bool {
    let (s_a, t_a) = (a.rows(), a.cols());
    t_a == s_a + 1 && integer_rank(a) == s_a
}

/// Eliminates the fixed components and derives every brick interval and the
/// aggregate total.
pub fn build_context(inst: &NFoldInstance) -> Result<NfoldSnfContext, NFoldError> {
    if !eligible(&inst.a) {
        return Err(NFoldError::NotEligible);
    }
    let snf = smith_normal_form(&inst.a).map_err(|_| NFoldError::NotEligible)?;
    let (s_a, t_a) = (inst.a.rows(), inst.a.cols());
    let alphas = snf.invariant_factors();
    let theta = snf.v.column(t_a - 1);
    let n = inst.n;

    let mut fixed_y = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    let mut intervals = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let bt = snf.u.mul_vec(&inst.rhs[i]);
        let mut y = Vec::with_capacity(s_a);
        for j in 0..s_a {
            let (q, r) = bt[j].div_rem(&alphas[j]);
            if !r.is_zero() {
                return Err(infeasible(InfeasibleReason::DivisibilityFail, Some(i + 1)));
            }
            y.push(q);
        }
        let c: Vec<BigInt> = (0..t_a)
            .map(|h| dot(&snf.v.row(h)[..s_a], &y))
            .collect();
        let r = i * t_a..(i + 1) * t_a;
        let (lo, hi) = match reduce_box_to_interval(&theta, &c, &inst.l[r.clone()], &inst.u[r.clone()]) {
            Ok((Some(lo), Some(hi))) => (lo, hi),
            Ok(_) => unreachable!("the last column of a unimodular matrix is nonzero"),
            Err(IntervalError::Empty) => {
                return Err(infeasible(InfeasibleReason::EmptyInterval, Some(i + 1)))
            }
            Err(IntervalError::ConstantRowViolated { .. }) => {
                return Err(infeasible(InfeasibleReason::ConstantRowViolated, Some(i + 1)))
            }
        };
        weights.push(dot(&inst.w[r], &theta));
        fixed_y.push(y);
        offsets.push(c);
        intervals.push((lo, hi));
    }

    // D Σcⁱ + (Dθ)·Y = b⁰
    let mut csum = vec![BigInt::zero(); t_a];
    for c in &offsets {
        for (acc, v) in csum.iter_mut().zip(c) {
            *acc += v;
        }
    }
    let coeff = inst.d.mul_vec(&theta);
    let base = inst.d.mul_vec(&csum);
    let mut d0: Option<BigInt> = None;
    for r in 0..inst.d.rows() {
        let rhs = &inst.b0[r] - &base[r];
        if coeff[r].is_zero() {
            if !rhs.is_zero() {
                return Err(infeasible(InfeasibleReason::AggregateInconsistent, None));
            }
            continue;
        }
        let (q, rem) = rhs.div_rem(&coeff[r]);
        if !rem.is_zero() || d0.as_ref().is_some_and(|v| *v != q) {
            return Err(infeasible(InfeasibleReason::AggregateInconsistent, None));
        }
        d0 = Some(q);
    }

    Ok(NfoldSnfContext {
        snf,
        theta,
        fixed_y,
        offsets,
        intervals,
        weights,
        d0,
    })
}

pub fn solve_nfold_snf(inst: &NFoldInstance) -> Result<Solution, NFoldError> {
    let ctx = build_context(inst)?;
    let n = inst.n;
    let free: Vec<BigInt> = match &ctx.d0 {
        Some(d0) => {
            let lows: BigInt = ctx.intervals.iter().map(|(lo, _)| lo).sum();
            let caps: Vec<BigInt> = ctx.intervals.iter().map(|(lo, hi)| hi - lo).collect();
            let p = greedy_ip8(&caps, &ctx.weights, &(d0 - lows))
                .map_err(|_| infeasible(InfeasibleReason::AggregateOutOfRange, None))?;
            ctx.intervals.iter().zip(p).map(|((lo, _), p)| lo + p).collect()
        }
        // no linking row sees the free direction: each brick on its own
        None => ctx
            .intervals
            .iter()
            .zip(&ctx.weights)
            .map(|((lo, hi), w)| if w.is_positive() { hi.clone() } else { lo.clone() })
            .collect(),
    };
    let t_a = inst.a.cols();
    let mut x = Vec::with_capacity(n * t_a);
    for i in 0..n {
        for h in 0..t_a {
            x.push(&ctx.offsets[i][h] + &ctx.theta[h] * &free[i]);
        }
    }
    let objective = dot(&inst.w, &x);
    Ok(Solution {
        x,
        objective,
        solver_tag: SolverTag::NfoldSnf,
    })
}

/// Four-block instance with `B = C = 0`: `x⁰` touches no constraint, so it
/// sits at whichever bound its weight prefers and the rest is n-fold.
pub fn solve_nfold_snf_four_block(inst: &FourBlockInstance) -> Result<Solution, NFoldError> {
    if !inst.is_nfold() {
        return Err(NFoldError::NotEligible);
    }
    let t_b = inst.t_b();
    let nf = NFoldInstance {
        n: inst.n,
        a: inst.a.clone(),
        d: inst.d.clone(),
        b0: inst.b0.clone(),
        rhs: inst.rhs.clone(),
        l: inst.l[t_b..].to_vec(),
        u: inst.u[t_b..].to_vec(),
        w: inst.w[t_b..].to_vec(),
    };
    let inner = solve_nfold_snf(&nf)?;
    let mut x: Vec<BigInt> = (0..t_b)
        .map(|j| {
            if inst.w[j].is_positive() {
                inst.u[j].clone()
            } else {
                inst.l[j].clone()
            }
        })
        .collect();
    x.extend(inner.x);
    Ok(Solution {
        objective: inst.objective(&x),
        x,
        solver_tag: SolverTag::NfoldSnf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn identity_step_keeps_box() {
        let r = reduce_box_to_interval(&v(&[1]), &v(&[0]), &v(&[-3]), &v(&[4])).unwrap();
        assert_eq!(r, (Some(BigInt::from(-3)), Some(BigInt::from(4))));
    }

    #[test]
    fn upper_row_rounds_down() {
        // 2y ≤ 5 → y ≤ 2
        let r = reduce_box_to_interval(&v(&[2]), &v(&[0]), &v(&[-10]), &v(&[5])).unwrap();
        assert_eq!(r.1, Some(BigInt::from(2)));
        // -2y ≤ 5 → y ≥ -2
        let r = reduce_box_to_interval(&v(&[-2]), &v(&[0]), &v(&[-10]), &v(&[5])).unwrap();
        assert_eq!(r, (Some(BigInt::from(-2)), Some(BigInt::from(5))));
    }

    #[test]
    fn constant_row_checked() {
        let r = reduce_box_to_interval(&v(&[0, 1]), &v(&[7, 0]), &v(&[0, 0]), &v(&[5, 5]));
        assert_eq!(r, Err(IntervalError::ConstantRowViolated { coordinate: 0 }));
    }

    #[test]
    fn greedy_examples() {
        let p = greedy_ip8(&v(&[2, 2]), &v(&[5, 1]), &BigInt::from(3)).unwrap();
        assert_eq!(p, v(&[2, 1]));
        let p = greedy_ip8(&v(&[2, 2, 2]), &v(&[1, 1, 1]), &BigInt::from(3)).unwrap();
        assert_eq!(p, v(&[2, 1, 0]));
        let p = greedy_ip8(&v(&[1, 3]), &v(&[0, 9]), &BigInt::from(4)).unwrap();
        assert_eq!(p, v(&[1, 3]));
        assert!(greedy_ip8(&v(&[1]), &v(&[1]), &BigInt::from(2)).is_err());
    }

    #[test]
    fn odd_rhs_fails_divisibility() {
        // A = (2, 0): 2x₁ = bⁱ
        let inst = NFoldInstance {
            n: 1,
            a: IntMatrix::from_i64(&[&[2, 0]]),
            d: IntMatrix::from_i64(&[&[0, 1]]),
            b0: v(&[0]),
            rhs: vec![v(&[3])],
            l: v(&[0, 0]),
            u: v(&[5, 5]),
            w: v(&[0, 0]),
        };
        assert_eq!(
            solve_nfold_snf(&inst),
            Err(infeasible(InfeasibleReason::DivisibilityFail, Some(1)))
        );
    }

    #[test]
    fn degenerate_intervals_give_unique_point() {
        // A = (1, -1): x₁ = x₂ + bⁱ, boxes pin every brick
        let inst = NFoldInstance {
            n: 2,
            a: IntMatrix::from_i64(&[&[1, -1]]),
            d: IntMatrix::from_i64(&[&[1, 1]]),
            b0: v(&[1 + 0 + 3 + 2]),
            rhs: vec![v(&[1]), v(&[1])],
            l: v(&[1, 0, 3, 2]),
            u: v(&[1, 0, 3, 2]),
            w: v(&[1, 1, 1, 1]),
        };
        let sol = solve_nfold_snf(&inst).unwrap();
        assert_eq!(sol.x, inst.l);
    }
}
