//! Ground truth for tiny instances.
//!
//! [`enumerate_optimum`] covers the whole box lattice exactly. It iterates
//! `x⁰` in odometer order and, for each brick, every point of the brick box
//! that satisfies the block rows; bricks are then combined by a dynamic
//! program over partial linking sums `Σ D xⁱ`, which visits the same lattice
//! without materializing the cross product. Ties keep the first optimum in
//! that order.

use std::collections::{BTreeMap, HashSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::matrix::{dot, IntMatrix};
use crate::model::{FourBlockInstance, GeneralizedNFoldInstance, Solution, SolverTag};
use crate::reductions::SubsetSumInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_points: BigUint,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_points: BigUint::from(10_000_000u32),
        }
    }
}

impl OracleBudget {
    pub fn new(max_points: impl Into<BigUint>) -> Self {
        OracleBudget {
            max_points: max_points.into().max(BigUint::one()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("the box has {points} lattice points, over the budget of {budget}")]
    BudgetExceeded { points: BigUint, budget: BigUint },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Optimal(Solution),
    Infeasible,
}

impl OracleOutcome {
    pub fn objective(&self) -> Option<&BigInt> {
        match self {
            OracleOutcome::Optimal(s) => Some(&s.objective),
            OracleOutcome::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, OracleOutcome::Optimal(_))
    }
}

/// Number of lattice points in the box `[l, u]`.
pub fn box_points(l: &[BigInt], u: &[BigInt]) -> BigUint {
    l.iter()
        .zip(u)
        .map(|(lo, hi)| {
            if hi < lo {
                BigUint::zero()
            } else {
                (hi - lo + 1u32).magnitude().clone()
            }
        })
        .product()
}

fn check_budget(l: &[BigInt], u: &[BigInt], budget: &OracleBudget) -> Result<(), OracleError> {
    let points = box_points(l, u);
    if points > budget.max_points {
        return Err(OracleError::BudgetExceeded {
            points,
            budget: budget.max_points.clone(),
        });
    }
    Ok(())
}

/// Calls `f` on every point of the box in odometer order (last coordinate
/// fastest). An empty box yields nothing; zero dimensions yield one point.
fn for_each_point(l: &[BigInt], u: &[BigInt], mut f: impl FnMut(&[BigInt])) {
    if l.iter().zip(u).any(|(lo, hi)| lo > hi) {
        return;
    }
    let mut x = l.to_vec();
    loop {
        f(&x);
        let mut k = x.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if x[k] < u[k] {
                x[k] += 1;
                break;
            }
            x[k] = l[k].clone();
        }
    }
}

struct Brick<'a> {
    a: &'a IntMatrix,
    d: &'a IntMatrix,
    rhs: Vec<BigInt>,
    l: &'a [BigInt],
    u: &'a [BigInt],
    w: &'a [BigInt],
}

/// Best brick point per distinct linking contribution `D xⁱ`.
fn brick_options(b: &Brick) -> BTreeMap<Vec<BigInt>, (BigInt, Vec<BigInt>)> {
    let mut best: BTreeMap<Vec<BigInt>, (BigInt, Vec<BigInt>)> = BTreeMap::new();
    for_each_point(b.l, b.u, |x| {
        if (0..b.a.rows()).any(|r| dot(b.a.row(r), x) != b.rhs[r]) {
            return;
        }
        let key = b.d.mul_vec(x);
        let val = dot(b.w, x);
        match best.get(&key) {
            Some((v, _)) if *v >= val => {}
            _ => {
                best.insert(key, (val, x.to_vec()));
            }
        }
    });
    best
}

/// Maximizes `Σ wⁱ·xⁱ` over brick choices with `Σ D xⁱ = target`.
fn combine_bricks(bricks: &[Brick], target: &[BigInt]) -> Option<(BigInt, Vec<Vec<BigInt>>)> {
    let options: Vec<_> = bricks.iter().map(brick_options).collect();
    // layer[i] maps a partial sum to (value, key chosen for brick i, previous partial sum)
    type Layer = BTreeMap<Vec<BigInt>, (BigInt, Vec<BigInt>, Vec<BigInt>)>;
    let mut layers: Vec<Layer> = Vec::with_capacity(bricks.len());
    let mut frontier: BTreeMap<Vec<BigInt>, BigInt> = BTreeMap::new();
    frontier.insert(vec![BigInt::zero(); target.len()], BigInt::zero());
    for opts in &options {
        let mut layer: Layer = BTreeMap::new();
        for (sum, val) in &frontier {
            for (key, (v, _)) in opts {
                let next: Vec<BigInt> = sum.iter().zip(key).map(|(a, b)| a + b).collect();
                let total = val + v;
                match layer.get(&next) {
                    Some((best, _, _)) if *best >= total => {}
                    _ => {
                        layer.insert(next, (total, key.clone(), sum.clone()));
                    }
                }
            }
        }
        frontier = layer.iter().map(|(k, (v, _, _))| (k.clone(), v.clone())).collect();
        layers.push(layer);
        if frontier.is_empty() {
            return None;
        }
    }
    let value = frontier.get(target)?.clone();
    let mut xs = vec![Vec::new(); bricks.len()];
    let mut sum = target.to_vec();
    for i in (0..bricks.len()).rev() {
        let (_, key, prev) = &layers[i][&sum];
        xs[i] = options[i][key].1.clone();
        sum = prev.clone();
    }
    Some((value, xs))
}

/// Exact optimum by exhaustive search. Fails with `BudgetExceeded` when the
/// box has more than `budget.max_points` lattice points.
pub fn enumerate_optimum(
    inst: &FourBlockInstance,
    budget: &OracleBudget,
) -> Result<OracleOutcome, OracleError> {
    check_budget(&inst.l, &inst.u, budget)?;
    let t_b = inst.t_b();
    let r0 = inst.brick(0);
    let mut best: Option<(BigInt, Vec<BigInt>)> = None;
    for_each_point(&inst.l[r0.clone()], &inst.u[r0], |x0| {
        let bricks: Vec<Brick> = (1..=inst.n)
            .map(|i| {
                let r = inst.brick(i);
                let bx0 = inst.b.mul_vec(x0);
                Brick {
                    a: &inst.a,
                    d: &inst.d,
                    rhs: inst.rhs[i - 1].iter().zip(&bx0).map(|(b, v)| b - v).collect(),
                    l: &inst.l[r.clone()],
                    u: &inst.u[r.clone()],
                    w: &inst.w[r],
                }
            })
            .collect();
        let cx0 = inst.c.mul_vec(x0);
        let target: Vec<BigInt> = inst.b0.iter().zip(&cx0).map(|(b, v)| b - v).collect();
        if let Some((val, xs)) = combine_bricks(&bricks, &target) {
            let total = val + dot(&inst.w[..t_b], x0);
            if best.as_ref().map_or(true, |(b, _)| total > *b) {
                let mut x = x0.to_vec();
                x.extend(xs.into_iter().flatten());
                best = Some((total, x));
            }
        }
    });
    Ok(match best {
        Some((objective, x)) => OracleOutcome::Optimal(Solution {
            x,
            objective,
            solver_tag: SolverTag::Bruteforce,
        }),
        None => OracleOutcome::Infeasible,
    })
}

/// Exhaustive optimum of an n-fold program with per-brick blocks.
pub fn enumerate_generalized(
    inst: &GeneralizedNFoldInstance,
    budget: &OracleBudget,
) -> Result<OracleOutcome, OracleError> {
    check_budget(&inst.l, &inst.u, budget)?;
    let t = inst.brick_width();
    let bricks: Vec<Brick> = (0..inst.n)
        .map(|i| Brick {
            a: &inst.a_blocks[i],
            d: &inst.d_blocks[i],
            rhs: inst.rhs[i].clone(),
            l: &inst.l[i * t..(i + 1) * t],
            u: &inst.u[i * t..(i + 1) * t],
            w: &inst.w[i * t..(i + 1) * t],
        })
        .collect();
    Ok(match combine_bricks(&bricks, &inst.b0) {
        Some((objective, xs)) => OracleOutcome::Optimal(Solution {
            x: xs.into_iter().flatten().collect(),
            objective,
            solver_tag: SolverTag::Bruteforce,
        }),
        None => OracleOutcome::Infeasible,
    })
}

/// Largest target handled by the table-based subset-sum decision.
pub const DP_TARGET_LIMIT: u64 = 1_000_000;
/// Largest item count handled by meet-in-the-middle.
pub const MITM_ITEM_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubsetSumError {
    #[error("target above {DP_TARGET_LIMIT} with more than {MITM_ITEM_LIMIT} items")]
    BudgetExceeded,
}

fn small_target(s: &SubsetSumInstance) -> Option<usize> {
    s.target
        .to_u64()
        .filter(|&t| t <= DP_TARGET_LIMIT)
        .map(|t| t as usize)
}

/// Does some subset of `betas` sum to `target`?
pub fn subset_sum_dp(s: &SubsetSumInstance) -> Result<bool, SubsetSumError> {
    if s.target.is_zero() {
        return Ok(true);
    }
    if s.target.is_negative() {
        return Ok(false);
    }
    if let Some(t) = small_target(s) {
        return Ok(subset_sum_table(&s.betas, t));
    }
    if s.betas.len() <= MITM_ITEM_LIMIT {
        return Ok(subset_sum_mitm(&s.betas, &s.target));
    }
    Err(SubsetSumError::BudgetExceeded)
}

/// Reachability table over sums `0..=target`.
pub fn subset_sum_table(betas: &[BigInt], target: usize) -> bool {
    let mut reach = vec![false; target + 1];
    reach[0] = true;
    for b in betas {
        let Some(b) = b.to_usize().filter(|&b| b <= target) else {
            continue;
        };
        for s in (b..=target).rev() {
            if reach[s - b] {
                reach[s] = true;
            }
        }
    }
    reach[target]
}

fn half_sums(betas: &[BigInt]) -> Vec<(BigInt, u32)> {
    let mut out = Vec::with_capacity(1 << betas.len());
    for mask in 0u32..(1u32 << betas.len()) {
        let sum = betas
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, b)| b)
            .sum();
        out.push((sum, mask.count_ones()));
    }
    out
}

/// Meet-in-the-middle over the two halves of the item list.
pub fn subset_sum_mitm(betas: &[BigInt], target: &BigInt) -> bool {
    let (left, right) = betas.split_at(betas.len() / 2);
    let right: HashSet<BigInt> = half_sums(right).into_iter().map(|(s, _)| s).collect();
    half_sums(left)
        .into_iter()
        .any(|(s, _)| right.contains(&(target - s)))
}

/// Does some subset of exactly `count` items sum to `target`?
pub fn subset_sum_with_count(
    s: &SubsetSumInstance,
    count: usize,
) -> Result<bool, SubsetSumError> {
    let n = s.betas.len();
    if count > n {
        return Ok(false);
    }
    if let (Some(t), true) = (small_target(s), n < 64) {
        // reach[s] is a bitmask of achievable item counts
        let mut reach = vec![0u64; t + 1];
        reach[0] = 1;
        for b in &s.betas {
            let Some(b) = b.to_usize().filter(|&b| b <= t) else {
                continue;
            };
            for v in (b..=t).rev() {
                reach[v] |= reach[v - b] << 1;
            }
        }
        return Ok(reach[t] >> count & 1 == 1);
    }
    if n <= MITM_ITEM_LIMIT {
        let (left, right) = s.betas.split_at(n / 2);
        let right: HashSet<(BigInt, u32)> = half_sums(right).into_iter().collect();
        return Ok(half_sums(left).into_iter().any(|(v, c)| {
            (c as usize) <= count && right.contains(&(&s.target - v, (count - c as usize) as u32))
        }));
    }
    Err(SubsetSumError::BudgetExceeded)
}
