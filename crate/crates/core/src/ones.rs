//! Solver for `A = (1, …, 1)`.
//!
//! The bricks only interact through their sum `y = Σ xⁱ`, so the program
//! relaxes to a mixed-integer program whose integer variables are `x⁰` and
//! `y` alone. With `(x⁰, y)` fixed, the bricks form a transportation
//! polytope (totally unimodular), and a min-cost flow returns integral
//! bricks with the same objective as the fractional optimum.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::flow::{solve_transport, TransportProblem, TransportSolution};
use crate::matrix::dot;
use crate::model::{FourBlockInstance, Solution, SolverTag, StructureClass};
use crate::ratlp::{int_rat, LpError, LpProblem, LpStatus};
use crate::smallip::{solve_mip_with_cutoff, MipProblem};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OnesError {
    #[error("A is not a single all-ones row")]
    NotAllOnes,
    #[error("infeasible")]
    Infeasible,
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Integral part of an optimal relaxed solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnesContext {
    pub x0: Vec<BigInt>,
    /// `Σᵢ xⁱ`
    pub y: Vec<BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnesRun {
    pub solution: Solution,
    pub context: OnesContext,
    pub relaxed_value: BigRational,
    pub bricks: TransportSolution,
    pub nodes: u64,
}

/// Variables: `x⁰` (integer), `y` (integer), then the bricks (continuous).
pub fn build_mip2(inst: &FourBlockInstance) -> MipProblem {
    let (n, t_a, t_b) = (inst.n, inst.t_a(), inst.t_b());
    let nv = t_b + t_a + n * t_a;
    let y0 = t_b;
    let brick = |i: usize, h: usize| t_b + t_a + i * t_a + h;

    let mut objective = vec![BigRational::zero(); nv];
    let mut lower = vec![BigRational::zero(); nv];
    let mut upper = vec![BigRational::zero(); nv];
    for j in 0..t_b {
        objective[j] = int_rat(&inst.w[j]);
        lower[j] = int_rat(&inst.l[j]);
        upper[j] = int_rat(&inst.u[j]);
    }
    for h in 0..t_a {
        let (mut lo, mut hi) = (BigInt::zero(), BigInt::zero());
        for i in 0..n {
            let k = t_b + i * t_a + h;
            lo += &inst.l[k];
            hi += &inst.u[k];
            objective[brick(i, h)] = int_rat(&inst.w[k]);
            lower[brick(i, h)] = int_rat(&inst.l[k]);
            upper[brick(i, h)] = int_rat(&inst.u[k]);
        }
        lower[y0 + h] = BigRational::from_integer(lo);
        upper[y0 + h] = BigRational::from_integer(hi);
    }

    let mut eq_matrix = Vec::new();
    let mut eq_rhs = Vec::new();
    for h in 0..t_a {
        let mut row = vec![BigRational::zero(); nv];
        for i in 0..n {
            row[brick(i, h)] = BigRational::one();
        }
        row[y0 + h] = -BigRational::one();
        eq_matrix.push(row);
        eq_rhs.push(BigRational::zero());
    }
    for r in 0..inst.s_d() {
        let mut row = vec![BigRational::zero(); nv];
        for j in 0..t_b {
            row[j] = int_rat(&inst.c[(r, j)]);
        }
        for h in 0..t_a {
            row[y0 + h] = int_rat(&inst.d[(r, h)]);
        }
        eq_matrix.push(row);
        eq_rhs.push(int_rat(&inst.b0[r]));
    }
    for i in 0..n {
        let mut row = vec![BigRational::zero(); nv];
        for j in 0..t_b {
            row[j] = int_rat(&inst.b[(0, j)]);
        }
        for h in 0..t_a {
            row[brick(i, h)] = BigRational::one();
        }
        eq_matrix.push(row);
        eq_rhs.push(int_rat(&inst.rhs[i][0]));
    }

    // sum of the brick rows: n·B·x⁰ + Σ_h y_h = Σᵢ bⁱ, stated over the
    // integer variables alone
    let mut row = vec![BigRational::zero(); nv];
    for j in 0..t_b {
        row[j] = int_rat(&(&inst.b[(0, j)] * BigInt::from(n)));
    }
    for h in 0..t_a {
        row[y0 + h] = BigRational::one();
    }
    eq_matrix.push(row);
    eq_rhs.push(int_rat(&inst.rhs.iter().map(|r| &r[0]).sum::<BigInt>()));

    let mut integer_mask = vec![false; nv];
    integer_mask[..t_b + t_a].fill(true);
    MipProblem {
        lp: LpProblem {
            objective,
            eq_matrix,
            eq_rhs,
            lower,
            upper,
        },
        integer_mask,
    }
}

fn transport_for(inst: &FourBlockInstance, ctx: &OnesContext) -> TransportProblem {
    let (t_a, t_b) = (inst.t_a(), inst.t_b());
    let bx0 = dot(inst.b.row(0), &ctx.x0);
    let cells = |v: &[BigInt]| -> Vec<Vec<BigInt>> {
        (0..inst.n)
            .map(|i| v[t_b + i * t_a..t_b + (i + 1) * t_a].to_vec())
            .collect()
    };
    TransportProblem {
        row_totals: inst.rhs.iter().map(|b| &b[0] - &bx0).collect(),
        col_totals: ctx.y.clone(),
        cell_lower: cells(&inst.l),
        cell_upper: cells(&inst.u),
        cell_profit: cells(&inst.w),
    }
}

/// The brick polytope for fixed `(x⁰, y)` as an LP over the `n·t_A` brick
/// variables, for auditing the flow rounding.
pub fn build_lp3(inst: &FourBlockInstance, ctx: &OnesContext) -> LpProblem {
    let p = transport_for(inst, ctx);
    let (n, t_a) = (inst.n, inst.t_a());
    let nv = n * t_a;
    let flat = |m: &[Vec<BigInt>]| -> Vec<BigRational> { m.iter().flatten().map(int_rat).collect() };
    let mut eq_matrix = Vec::with_capacity(n + t_a);
    let mut eq_rhs = Vec::with_capacity(n + t_a);
    for (i, total) in p.row_totals.iter().enumerate() {
        let mut row = vec![BigRational::zero(); nv];
        row[i * t_a..(i + 1) * t_a].fill(BigRational::one());
        eq_matrix.push(row);
        eq_rhs.push(int_rat(total));
    }
    for (h, total) in p.col_totals.iter().enumerate() {
        let mut row = vec![BigRational::zero(); nv];
        for i in 0..n {
            row[i * t_a + h] = BigRational::one();
        }
        eq_matrix.push(row);
        eq_rhs.push(int_rat(total));
    }
    LpProblem {
        objective: flat(&p.cell_profit),
        eq_matrix,
        eq_rhs,
        lower: flat(&p.cell_lower),
        upper: flat(&p.cell_upper),
    }
}

/// Integral bricks for fixed `(x⁰, y)`.
pub fn round_bricks(
    inst: &FourBlockInstance,
    ctx: &OnesContext,
) -> Result<TransportSolution, OnesError> {
    solve_transport(&transport_for(inst, ctx)).ok_or_else(|| {
        OnesError::InternalInconsistency("brick transportation problem is empty".into())
    })
}

pub fn solve_ones(inst: &FourBlockInstance) -> Result<Solution, OnesError> {
    solve_ones_detailed(inst).map(|run| run.solution)
}

pub fn solve_ones_detailed(inst: &FourBlockInstance) -> Result<OnesRun, OnesError> {
    if inst.classify() != StructureClass::AllOnesRow {
        return Err(OnesError::NotAllOnes);
    }
    let (t_a, t_b) = (inst.t_a(), inst.t_b());
    let mip = build_mip2(inst);
    let outcome = solve_mip_with_cutoff(&mip, None)?;
    if outcome.result.status != LpStatus::Optimal {
        return Err(OnesError::Infeasible);
    }
    let point = outcome.result.point.expect("optimal point");
    let relaxed_value = outcome.result.value.expect("optimal value");
    let ctx = OnesContext {
        x0: point[..t_b].iter().map(BigRational::to_integer).collect(),
        y: point[t_b..t_b + t_a].iter().map(BigRational::to_integer).collect(),
    };
    let bricks = round_bricks(inst, &ctx)?;

    let mut x = ctx.x0.clone();
    x.extend(bricks.cells.iter().flatten().cloned());
    let objective = inst.objective(&x);
    if BigRational::from_integer(objective.clone()) != relaxed_value {
        return Err(OnesError::InternalInconsistency(format!(
            "rounded objective {objective} differs from relaxed optimum {relaxed_value}"
        )));
    }
    Ok(OnesRun {
        solution: Solution {
            x,
            objective,
            solver_tag: SolverTag::Ones,
        },
        context: ctx,
        relaxed_value,
        bricks,
        nodes: outcome.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::IntMatrix;

    fn v(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn two_brick() -> FourBlockInstance {
        // x⁰ ∈ [0,2]; bricks of width 2; x⁰ + x¹₁ + x¹₂ = 4 per brick;
        // 1·x⁰ + (1, 2)·Σxⁱ = 9
        FourBlockInstance {
            n: 2,
            a: IntMatrix::from_i64(&[&[1, 1]]),
            b: IntMatrix::from_i64(&[&[1]]),
            c: IntMatrix::from_i64(&[&[1]]),
            d: IntMatrix::from_i64(&[&[1, 2]]),
            b0: v(&[9]),
            rhs: vec![v(&[4]), v(&[4])],
            l: v(&[0, 0, 0, 0, 0]),
            u: v(&[2, 3, 3, 3, 3]),
            w: v(&[1, 2, -1, 1, 0]),
        }
    }

    #[test]
    fn mask_counts_integer_variables() {
        let inst = two_brick();
        let mip = build_mip2(&inst);
        assert_eq!(mip.integer_mask.iter().filter(|&&b| b).count(), 3);
    }

    #[test]
    fn solves_small_instance() {
        let inst = two_brick();
        let run = solve_ones_detailed(&inst).unwrap();
        let eval = inst.evaluate(&run.solution.x).unwrap();
        assert!(eval.feasible, "{:?}", eval.violations);
        assert_eq!(eval.objective, run.solution.objective);
    }

    #[test]
    fn forced_box() {
        let mut inst = two_brick();
        inst.l = v(&[1, 2, 1, 1, 2]);
        inst.u = inst.l.clone();
        inst.b0 = v(&[1 + 3 + 2 * 3]);
        let sol = solve_ones(&inst).unwrap();
        assert_eq!(sol.x, inst.l);
    }

    #[test]
    fn parity_infeasible() {
        let mut inst = two_brick();
        inst.c = IntMatrix::from_i64(&[&[2]]);
        inst.d = IntMatrix::from_i64(&[&[2, 2]]);
        inst.b0 = v(&[9]);
        assert_eq!(solve_ones(&inst), Err(OnesError::Infeasible));
    }

    #[test]
    fn rejects_other_structures() {
        let mut inst = two_brick();
        inst.a = IntMatrix::from_i64(&[&[1, 2]]);
        assert_eq!(solve_ones(&inst), Err(OnesError::NotAllOnes));
    }
}
