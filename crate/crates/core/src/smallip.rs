//! Exact branch-and-bound for mixed-integer programs with few integer
//! variables.
//!
//! Equality rows over integer variables only are first solved exactly: the
//! integer variables become `z₀ + K·λ` with an LLL-reduced lattice basis `K`
//! and the search branches on `λ`. Nodes are explored best-bound first over
//! warm-started exact LP relaxations. The branching variable is the masked
//! variable whose relaxation value is farthest from an integer, ties by
//! lowest index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::intlin::{integer_rank, lll_reduce, solve_integer_system};
use crate::matrix::IntMatrix;
use crate::ratlp::{LpError, LpProblem, LpResult, LpStatus, WarmLp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MipProblem {
    pub lp: LpProblem,
    pub integer_mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MipOutcome {
    pub result: LpResult,
    /// LP relaxations solved.
    pub nodes: u64,
}

struct Node {
    bound: BigRational,
    id: u64,
    point: Vec<BigRational>,
    warm: WarmLp,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: larger bound first, then older node
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn fractional_distance(v: &BigRational) -> BigRational {
    let f = v - v.floor();
    let g = BigRational::one() - &f;
    f.min(g)
}

enum Lattice {
    Unchanged,
    Infeasible,
    Reformulated(MipProblem),
}

fn invert(mut m: Vec<Vec<BigRational>>) -> Vec<Vec<BigRational>> {
    let k = m.len();
    let mut inv: Vec<Vec<BigRational>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for c in 0..k {
        let p = (c..k).find(|&r| !m[r][c].is_zero()).expect("nonsingular");
        m.swap(c, p);
        inv.swap(c, p);
        let d = m[c][c].clone();
        for j in 0..k {
            m[c][j] = &m[c][j] / &d;
            inv[c][j] = &inv[c][j] / &d;
        }
        for r in 0..k {
            if r == c || m[r][c].is_zero() {
                continue;
            }
            let f = m[r][c].clone();
            for j in 0..k {
                let (a, b) = (&m[c][j] * &f, &inv[c][j] * &f);
                m[r][j] -= a;
                inv[r][j] -= b;
            }
        }
    }
    inv
}

/// Replaces the equality rows that only involve integer variables by
/// `z = z₀ + K·λ`. The integer variables become continuous and `λ` is
/// appended as the new integer variables, boxed through a nonsingular
/// square block of `K`.
fn lattice_form(p: &MipProblem, lower: &[BigRational], upper: &[BigRational]) -> Lattice {
    let n = p.lp.num_vars();
    let ints: Vec<usize> = (0..n).filter(|&j| p.integer_mask[j]).collect();
    let int_rows: Vec<usize> = (0..p.lp.eq_matrix.len())
        .filter(|&i| {
            let row = &p.lp.eq_matrix[i];
            row.iter().any(|a| !a.is_zero())
                && row.iter().enumerate().all(|(j, a)| a.is_zero() || p.integer_mask[j])
        })
        .collect();
    if int_rows.is_empty() {
        return Lattice::Unchanged;
    }
    let mut rows = Vec::with_capacity(int_rows.len());
    let mut rhs = Vec::with_capacity(int_rows.len());
    for &i in &int_rows {
        let row = &p.lp.eq_matrix[i];
        let scale = ints
            .iter()
            .map(|&j| row[j].denom())
            .chain([p.lp.eq_rhs[i].denom()])
            .fold(BigInt::one(), |acc, d| num_integer::Integer::lcm(&acc, d));
        rows.push(ints.iter().map(|&j| (&row[j] * &scale).to_integer()).collect());
        rhs.push((&p.lp.eq_rhs[i] * &scale).to_integer());
    }
    let m = IntMatrix::from_rows(rows, ints.len()).expect("rows share one width");
    let Some(sol) = solve_integer_system(&m, &rhs) else {
        return Lattice::Infeasible;
    };
    let kernel = lll_reduce(&sol.kernel);
    let k = kernel.len();
    let z0: Vec<BigRational> = sol.particular.into_iter().map(BigRational::from_integer).collect();

    // λ = K_S⁻¹·(z_S − z₀_S) on a nonsingular row block S
    let mut block: Vec<usize> = Vec::with_capacity(k);
    for r in 0..ints.len() {
        if block.len() == k {
            break;
        }
        let trial: Vec<Vec<BigInt>> = block
            .iter()
            .chain([&r])
            .map(|&s| kernel.iter().map(|col| col[s].clone()).collect())
            .collect();
        if integer_rank(&IntMatrix::from_rows(trial, k).expect("width k")) > block.len() {
            block.push(r);
        }
    }
    let inv = invert(
        block
            .iter()
            .map(|&s| kernel.iter().map(|col| BigRational::from_integer(col[s].clone())).collect())
            .collect(),
    );

    let mut lp = p.lp.clone();
    lp.lower = lower.to_vec();
    lp.upper = upper.to_vec();
    let mut keep = vec![true; lp.eq_matrix.len()];
    for &i in &int_rows {
        keep[i] = false;
    }
    let mut it = keep.iter();
    lp.eq_matrix.retain(|_| *it.next().expect("one flag per row"));
    let mut it = keep.iter();
    lp.eq_rhs.retain(|_| *it.next().expect("one flag per row"));
    for row in &mut lp.eq_matrix {
        row.resize(n + k, BigRational::zero());
    }
    lp.objective.resize(n + k, BigRational::zero());
    for (pos, &j) in ints.iter().enumerate() {
        let mut row = vec![BigRational::zero(); n + k];
        row[j] = BigRational::one();
        for (m, col) in kernel.iter().enumerate() {
            row[n + m] = -BigRational::from_integer(col[pos].clone());
        }
        lp.eq_matrix.push(row);
        lp.eq_rhs.push(z0[pos].clone());
    }
    for m in 0..k {
        let (mut lo, mut hi) = (BigRational::zero(), BigRational::zero());
        for (t, &s) in block.iter().enumerate() {
            let c = &inv[m][t];
            let j = ints[s];
            let a = c * (&lower[j] - &z0[s]);
            let b = c * (&upper[j] - &z0[s]);
            if a <= b {
                lo += a;
                hi += b;
            } else {
                lo += b;
                hi += a;
            }
        }
        lp.lower.push(lo.ceil());
        lp.upper.push(hi.floor());
    }
    let mut integer_mask = vec![false; n];
    integer_mask.resize(n + k, true);
    Lattice::Reformulated(MipProblem { lp, integer_mask })
}

pub fn solve_mip(p: &MipProblem) -> Result<LpResult, LpError> {
    solve_mip_with_cutoff(p, None).map(|o| o.result)
}

/// Branch-and-bound that only accepts points with value strictly above
/// `cutoff`. With a cutoff, `Infeasible` means no such point exists.
pub fn solve_mip_with_cutoff(
    p: &MipProblem,
    cutoff: Option<&BigRational>,
) -> Result<MipOutcome, LpError> {
    p.lp.check()?;
    if p.integer_mask.len() != p.lp.num_vars() {
        return Err(LpError::Malformed(format!(
            "integer mask has {} entries for {} variables",
            p.integer_mask.len(),
            p.lp.num_vars()
        )));
    }

    let mut lower = p.lp.lower.clone();
    let mut upper = p.lp.upper.clone();
    for (j, &int) in p.integer_mask.iter().enumerate() {
        if int {
            lower[j] = lower[j].ceil();
            upper[j] = upper[j].floor();
        }
    }

    let n = p.lp.num_vars();
    let reformulated = match lattice_form(p, &lower, &upper) {
        Lattice::Unchanged => None,
        Lattice::Infeasible => {
            return Ok(MipOutcome {
                result: LpResult::infeasible(),
                nodes: 0,
            })
        }
        Lattice::Reformulated(q) => Some(q),
    };
    let (p, lower, upper) = match &reformulated {
        Some(q) => (q, q.lp.lower.clone(), q.lp.upper.clone()),
        None => (p, lower, upper),
    };

    let mut nodes = 0u64;
    let mut next_id = 0u64;
    let mut incumbent: Option<(BigRational, Vec<BigRational>)> = None;
    let mut heap = BinaryHeap::new();
    let mut node_of = |r: LpResult, warm: Option<WarmLp>| -> Option<Node> {
        if r.status != LpStatus::Optimal {
            return None;
        }
        next_id += 1;
        Some(Node {
            bound: r.value.expect("optimal value"),
            id: next_id,
            point: r.point.expect("optimal point"),
            warm: warm.expect("optimal tableau"),
        })
    };

    let root = LpProblem {
        lower,
        upper,
        ..p.lp.clone()
    };
    nodes += 1;
    let (r, warm) = WarmLp::solve(&root)?;
    if let Some(root) = node_of(r, warm) {
        heap.push(root);
    }
    while let Some(node) = heap.pop() {
        let floor = incumbent.as_ref().map(|(v, _)| v).or(cutoff);
        if floor.is_some_and(|f| node.bound <= *f) {
            break;
        }
        let branch = p
            .integer_mask
            .iter()
            .enumerate()
            .filter(|(j, &int)| int && !node.point[*j].is_integer())
            .map(|(j, _)| (j, fractional_distance(&node.point[j])))
            .fold(None::<(usize, BigRational)>, |best, (j, d)| match best {
                Some((_, ref bd)) if *bd >= d => best,
                _ => Some((j, d)),
            });
        let Some((j, _)) = branch else {
            // best bound and integral: nothing left can beat it
            incumbent = Some((node.bound, node.point));
            break;
        };
        let v = &node.point[j];
        let (lo, hi) = node.warm.bounds(j);
        nodes += 2;
        let down = node.warm.with_bounds(j, lo.clone(), v.floor());
        let up = node.warm.with_bounds(j, v.ceil(), hi);
        for child in [down, up].into_iter().filter_map(|(r, w)| node_of(r, w)) {
            if !cutoff.is_some_and(|c| child.bound <= *c) {
                heap.push(child);
            }
        }
    }

    let result = match incumbent {
        Some((value, mut point)) => {
            point.truncate(n);
            LpResult {
                status: LpStatus::Optimal,
                point: Some(point),
                value: Some(value),
            }
        }
        None => LpResult::infeasible(),
    };
    Ok(MipOutcome { result, nodes })
}

/// Integer part of a rational known to be integral.
pub fn to_int(v: &BigRational) -> BigInt {
    debug_assert!(v.is_integer());
    v.to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlp::{rat, solve_lp};

    fn half(v: i64) -> BigRational {
        BigRational::new(v.into(), 2.into())
    }

    #[test]
    fn pure_lp_matches_solve_lp() {
        let lp = LpProblem {
            objective: vec![rat(1), rat(2)],
            eq_matrix: vec![vec![rat(2), rat(2)]],
            eq_rhs: vec![rat(3)],
            lower: vec![rat(0), rat(0)],
            upper: vec![rat(1), rat(1)],
        };
        let mip = MipProblem {
            lp: lp.clone(),
            integer_mask: vec![false, false],
        };
        assert_eq!(solve_mip(&mip).unwrap(), solve_lp(&lp).unwrap());
    }

    #[test]
    fn rounds_down_fractional_bound() {
        let mip = MipProblem {
            lp: LpProblem {
                objective: vec![rat(1)],
                eq_matrix: vec![],
                eq_rhs: vec![],
                lower: vec![rat(0)],
                upper: vec![half(5)],
            },
            integer_mask: vec![true],
        };
        assert_eq!(solve_mip(&mip).unwrap().value, Some(rat(2)));
    }

    #[test]
    fn branches_to_integer_optimum() {
        // max x + y, 2x + 2y + z = 5, z in [0, 1] continuous, x, y in [0, 3] integer
        let mip = MipProblem {
            lp: LpProblem {
                objective: vec![rat(1), rat(1), rat(0)],
                eq_matrix: vec![vec![rat(2), rat(2), rat(1)]],
                eq_rhs: vec![rat(5)],
                lower: vec![rat(0), rat(0), rat(0)],
                upper: vec![rat(3), rat(3), rat(1)],
            },
            integer_mask: vec![true, true, false],
        };
        let r = solve_mip(&mip).unwrap();
        assert_eq!(r.value, Some(rat(2)));
        assert!(mip.lp.is_feasible(r.point.as_ref().unwrap()));
    }

    #[test]
    fn integer_infeasible() {
        // 2x = 3
        let mip = MipProblem {
            lp: LpProblem {
                objective: vec![rat(0)],
                eq_matrix: vec![vec![rat(2)]],
                eq_rhs: vec![rat(3)],
                lower: vec![rat(0)],
                upper: vec![rat(5)],
            },
            integer_mask: vec![true],
        };
        assert_eq!(solve_mip(&mip).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn cutoff_prunes_non_improving() {
        let mip = MipProblem {
            lp: LpProblem {
                objective: vec![rat(1)],
                eq_matrix: vec![],
                eq_rhs: vec![],
                lower: vec![rat(0)],
                upper: vec![rat(4)],
            },
            integer_mask: vec![true],
        };
        let o = solve_mip_with_cutoff(&mip, Some(&rat(4))).unwrap();
        assert_eq!(o.result.status, LpStatus::Infeasible);
        let o = solve_mip_with_cutoff(&mip, Some(&rat(3))).unwrap();
        assert_eq!(o.result.value, Some(rat(4)));
    }
}
