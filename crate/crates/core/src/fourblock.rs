//! Solver for four-block programs with `t_A = s_A + 1` and `rank(A) = s_A`.
//!
//! Every brick differs from brick 1 by a multiple of the kernel generator
//! `θ` of `A`: `xⁱ = x¹ + θ̃ⁱ + θ·yⁱ`. Writing `x¹_h = ξ_h + θ_h z_h` with
//! `0 ≤ ξ_h < |θ_h|`, the admissible interval of each `yⁱ` is
//! `[max_h(dⁱ_h − z_h), min_h(d̄ⁱ_h − z_h)]`, where `dⁱ_h`, `d̄ⁱ_h` only depend
//! on which residue sub-interval `ξ_h` lies in. Fixing those sub-intervals,
//! the range of every difference `z_{h1} − z_{h2}` relative to the critical
//! values, and the greedy position of the aggregate slack `p` makes every
//! brick interval and the greedy value linear. Each such cell is a small
//! integer program in `(x⁰, ξ, z, p)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::intlin::{
    ceil_div, extended_gcd, floor_div, integer_rank, smith_normal_form,
    solve_two_var_diophantine,
};
use crate::matrix::dot;
use crate::model::{FourBlockInstance, Solution, SolverTag};
use crate::nfold::greedy_ip8;
use crate::ratlp::{int_rat, LpBuilder, LpError, LpStatus};
use crate::smallip::{solve_mip_with_cutoff, to_int, MipProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourBlockInfeasible {
    /// `A z = bⁱ − b¹` has no integer solution for this 1-based brick.
    DivisibilityFail { brick: usize },
    /// A coordinate with zero step has an empty common box.
    EmptyBox { coordinate: usize },
    /// No cell admits a feasible point.
    NoFeasibleCell,
}

impl fmt::Display for FourBlockInfeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FourBlockInfeasible::DivisibilityFail { brick } => {
                write!(f, "divisibility_fail (brick {brick})")
            }
            FourBlockInfeasible::EmptyBox { coordinate } => {
                write!(f, "empty_box (coordinate {coordinate})")
            }
            FourBlockInfeasible::NoFeasibleCell => f.write_str("no_feasible_cell"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FourBlockError {
    #[error("A must satisfy t_A = s_A + 1 and rank(A) = s_A")]
    NotEligible,
    #[error("Bezout elimination needs A of shape 1x2")]
    BezoutShape,
    #[error("infeasible: {0}")]
    Infeasible(FourBlockInfeasible),
    #[error("lifted point disagrees with its cell: {0}")]
    LiftInconsistency(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// `xⁱ = x¹ + offsets[i−1] + θ·yⁱ`; `offsets[0]` is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub theta: Vec<BigInt>,
    pub offsets: Vec<Vec<BigInt>>,
}

fn check_eligible(inst: &FourBlockInstance) -> Result<(), FourBlockError> {
    let (s_a, t_a) = (inst.s_a(), inst.t_a());
    if t_a != s_a + 1 || integer_rank(&inst.a) != s_a {
        return Err(FourBlockError::NotEligible);
    }
    Ok(())
}

fn rhs_diff(inst: &FourBlockInstance, i: usize) -> Vec<BigInt> {
    inst.rhs[i].iter().zip(&inst.rhs[0]).map(|(a, b)| a - b).collect()
}

/// Offsets from the Smith normal form `U A V = S`: `θ̃ⁱ = V·(S⁺ U (bⁱ − b¹))`,
/// `θ` the last column of `V`.
pub fn eliminate_snf(inst: &FourBlockInstance) -> Result<Elimination, FourBlockError> {
    check_eligible(inst)?;
    let snf = smith_normal_form(&inst.a).map_err(|_| FourBlockError::NotEligible)?;
    let (s_a, t_a) = (inst.s_a(), inst.t_a());
    let alphas = snf.invariant_factors();
    let mut offsets = Vec::with_capacity(inst.n);
    for i in 0..inst.n {
        let bt = snf.u.mul_vec(&rhs_diff(inst, i));
        let mut y = vec![BigInt::zero(); t_a];
        for j in 0..s_a {
            let (q, r) = bt[j].div_rem(&alphas[j]);
            if !r.is_zero() {
                return Err(FourBlockError::Infeasible(
                    FourBlockInfeasible::DivisibilityFail { brick: i + 1 },
                ));
            }
            y[j] = q;
        }
        offsets.push(snf.v.mul_vec(&y));
    }
    Ok(Elimination {
        theta: snf.v.column(t_a - 1),
        offsets,
    })
}

/// Offsets for `A = (λ, μ)` from the extended Euclidean algorithm:
/// `θ = (μ/g, −λ/g)`.
pub fn eliminate_bezout(inst: &FourBlockInstance) -> Result<Elimination, FourBlockError> {
    check_eligible(inst)?;
    if inst.s_a() != 1 || inst.t_a() != 2 {
        return Err(FourBlockError::BezoutShape);
    }
    let (lambda, mu) = (&inst.a[(0, 0)], &inst.a[(0, 1)]);
    let base = extended_gcd(lambda, mu).map_err(|_| FourBlockError::NotEligible)?;
    let theta = vec![base.step_x, base.step_y];
    let mut offsets = Vec::with_capacity(inst.n);
    for i in 0..inst.n {
        let c = &rhs_diff(inst, i)[0];
        let sol = solve_two_var_diophantine(lambda, mu, c)
            .map_err(|_| FourBlockError::NotEligible)?
            .ok_or(FourBlockError::Infeasible(
                FourBlockInfeasible::DivisibilityFail { brick: i + 1 },
            ))?;
        offsets.push(vec![sol.x, sol.y]);
    }
    Ok(Elimination { theta, offsets })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourBlockOptions {
    /// Worker threads for cell batches; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Pass the incumbent as a cutoff to every cell.
    pub prune: bool,
    /// Cells solved against the same cutoff.
    pub batch: usize,
}

impl Default for FourBlockOptions {
    fn default() -> Self {
        FourBlockOptions {
            threads: None,
            prune: true,
            batch: 32,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FourBlockReport {
    /// Cells considered, including those discarded before any solve.
    pub cells_enumerated: u64,
    pub cells_solved: u64,
    /// LP relaxations over all cell solves.
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourBlockRun {
    pub solution: Solution,
    pub report: FourBlockReport,
}

pub fn solve_fourblock(inst: &FourBlockInstance) -> Result<Solution, FourBlockError> {
    let elim = eliminate_snf(inst)?;
    solve_fourblock_with(inst, &elim, &FourBlockOptions::default()).map(|r| r.solution)
}

/// Affine integer expression over builder variables.
#[derive(Debug, Clone, Default)]
struct Lin {
    terms: BTreeMap<usize, BigInt>,
    c: BigInt,
}

impl Lin {
    fn var(j: usize) -> Lin {
        let mut l = Lin::default();
        l.terms.insert(j, BigInt::one());
        l
    }

    fn constant(c: BigInt) -> Lin {
        Lin {
            terms: BTreeMap::new(),
            c,
        }
    }

    fn add(&mut self, other: &Lin, k: &BigInt) {
        for (j, a) in &other.terms {
            *self.terms.entry(*j).or_default() += a * k;
        }
        self.c += &other.c * k;
    }

    fn add_var(&mut self, j: usize, k: &BigInt) {
        *self.terms.entry(j).or_default() += k;
    }

    fn rat_terms(&self) -> Vec<(usize, BigRational)> {
        self.terms
            .iter()
            .filter(|(_, a)| !a.is_zero())
            .map(|(j, a)| (*j, int_rat(a)))
            .collect()
    }

    fn eval(&self, point: &[BigInt]) -> BigInt {
        self.terms.iter().map(|(j, a)| a * &point[*j]).sum::<BigInt>() + &self.c
    }
}

fn add_lin_eq(b: &mut LpBuilder, lin: &Lin, rhs: &BigInt) {
    b.add_eq(lin.rat_terms(), int_rat(&(rhs - &lin.c)));
}

fn add_lin_range(b: &mut LpBuilder, lin: &Lin, lo: Option<BigInt>, hi: Option<BigInt>) {
    b.add_range(
        lin.rat_terms(),
        lo.map(|v| int_rat(&(v - &lin.c))),
        hi.map(|v| int_rat(&(v - &lin.c))),
    );
}

/// Residue sub-interval `[start, end]` of `ξ_h` with the per-brick bounds
/// `d`, `d̄` on `yⁱ + z_h` (brick 1 included, where they bound `z_h`).
#[derive(Debug, Clone)]
struct SubInterval {
    start: BigInt,
    end: BigInt,
    d: Vec<BigInt>,
    dbar: Vec<BigInt>,
}

/// Sub-intervals on which every `dⁱ_h(ξ)`, `d̄ⁱ_h(ξ)` is constant; built from
/// box bounds `L = lⁱ_h − θ̃ⁱ_h`, `U = uⁱ_h − θ̃ⁱ_h`.
fn build_grid(theta: &BigInt, bounds: &[(BigInt, BigInt)]) -> Vec<SubInterval> {
    let tau = theta.abs();
    let mut starts = vec![BigInt::zero()];
    for (lo, hi) in bounds {
        starts.push(lo.mod_floor(&tau));
        starts.push((hi + 1u32).mod_floor(&tau));
    }
    starts.sort();
    starts.dedup();
    let mut out = Vec::with_capacity(starts.len());
    for (k, s) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(&tau - 1u32, |e| e - 1u32);
        let (d, dbar) = bounds
            .iter()
            .map(|(lo, hi)| {
                let (lo, hi) = (lo - s, hi - s);
                if theta.is_positive() {
                    (ceil_div(&lo, theta), floor_div(&hi, theta))
                } else {
                    (ceil_div(&hi, theta), floor_div(&lo, theta))
                }
            })
            .unzip();
        out.push(SubInterval {
            start: s.clone(),
            end,
            d,
            dbar,
        });
    }
    out
}

/// Difference-bound matrix over `z_H` plus a zero node (index 0):
/// `ub[a][b]` bounds `z_a − z_b` from above.
#[derive(Debug, Clone)]
struct Dbm {
    ub: Vec<Vec<Option<BigInt>>>,
}

impl Dbm {
    fn new(k: usize) -> Dbm {
        let mut ub = vec![vec![None; k + 1]; k + 1];
        for (a, row) in ub.iter_mut().enumerate() {
            row[a] = Some(BigInt::zero());
        }
        Dbm { ub }
    }

    fn tighten(&mut self, a: usize, b: usize, v: BigInt) {
        let cur = &mut self.ub[a][b];
        if cur.as_ref().map_or(true, |c| v < *c) {
            *cur = Some(v);
        }
    }

    /// Floyd–Warshall closure; `false` when the system has no integer point.
    fn close(&mut self) -> bool {
        let k = self.ub.len();
        for m in 0..k {
            for a in 0..k {
                let Some(am) = self.ub[a][m].clone() else { continue };
                for b in 0..k {
                    if let Some(mb) = &self.ub[m][b] {
                        let v = &am + mb;
                        self.tighten(a, b, v);
                    }
                }
            }
        }
        (0..k).all(|a| !self.ub[a][a].as_ref().expect("diagonal").is_negative())
    }

    fn hi(&self, a: usize, b: usize) -> BigInt {
        self.ub[a][b].clone().expect("bounded by the z box")
    }
}

#[derive(Debug, Clone)]
struct Cell {
    /// Chosen sub-interval per member of `H`.
    grid: Vec<usize>,
    /// Range of `z_{h1} − z_{h2}` per pair of `H` positions.
    pairs: Vec<(usize, usize, BigInt, BigInt)>,
    /// Per brick `i ≥ 2`: the `H` position attaining the lower end of `yⁱ`,
    /// and the one attaining the upper end.
    argmax: Vec<usize>,
    argmin: Vec<usize>,
    /// Greedy position of `p`; 0 means `p = 0`.
    position: usize,
}

struct Layout {
    t_b: usize,
    /// Per coordinate `h`: `(ξ_h, z_h)` variables or the `x¹_h` variable.
    coords: Vec<Coord>,
    p: usize,
    num_vars: usize,
}

#[derive(Debug, Clone, Copy)]
enum Coord {
    Stepped { xi: usize, z: usize, pos: usize },
    Fixed { x1: usize },
}

struct Setup<'a> {
    inst: &'a FourBlockInstance,
    elim: &'a Elimination,
    /// Coordinates with `θ_h ≠ 0`.
    h_set: Vec<usize>,
    grids: Vec<Vec<SubInterval>>,
    /// Common box of `x¹_h` for `θ_h = 0`.
    fixed_box: BTreeMap<usize, (BigInt, BigInt)>,
    /// `vᵢ = wⁱ·θ` for every brick.
    v: Vec<BigInt>,
    /// Bricks `2..n` (0-based `1..n`) sorted by `v` descending, ties by index.
    order: Vec<usize>,
}

impl Setup<'_> {
    fn weights(&self, i: usize) -> &[BigInt] {
        &self.inst.w[self.inst.brick(i + 1)]
    }

    fn sub(&self, cell: &Cell, pos: usize) -> &SubInterval {
        &self.grids[pos][cell.grid[pos]]
    }

    fn layout(&self) -> Layout {
        let t_b = self.inst.t_b();
        let mut next = t_b;
        let mut coords = Vec::with_capacity(self.inst.t_a());
        for h in 0..self.inst.t_a() {
            match self.h_set.iter().position(|&g| g == h) {
                Some(pos) => {
                    coords.push(Coord::Stepped {
                        xi: next,
                        z: next + 1,
                        pos,
                    });
                    next += 2;
                }
                None => {
                    coords.push(Coord::Fixed { x1: next });
                    next += 1;
                }
            }
        }
        Layout {
            t_b,
            coords,
            p: next,
            num_vars: next + 1,
        }
    }

    fn z_var(&self, layout: &Layout, pos: usize) -> usize {
        match layout.coords[self.h_set[pos]] {
            Coord::Stepped { z, .. } => z,
            Coord::Fixed { .. } => unreachable!("H positions are stepped"),
        }
    }

    fn x1(&self, layout: &Layout, h: usize) -> Lin {
        match layout.coords[h] {
            Coord::Stepped { xi, z, .. } => {
                let mut l = Lin::var(xi);
                l.add_var(z, &self.elim.theta[h]);
                l
            }
            Coord::Fixed { x1 } => Lin::var(x1),
        }
    }

    /// `ℓⁱ = dⁱ_a − z_a`
    fn low(&self, layout: &Layout, cell: &Cell, i: usize) -> Lin {
        let a = cell.argmax[i - 1];
        let mut l = Lin::constant(self.sub(cell, a).d[i].clone());
        l.add_var(self.z_var(layout, a), &-BigInt::one());
        l
    }

    /// `capᵢ = d̄ⁱ_b − z_b − ℓⁱ`
    fn cap(&self, layout: &Layout, cell: &Cell, i: usize) -> Lin {
        let b = cell.argmin[i - 1];
        let mut l = Lin::constant(self.sub(cell, b).dbar[i].clone());
        l.add_var(self.z_var(layout, b), &-BigInt::one());
        l.add(&self.low(layout, cell, i), &-BigInt::one());
        l
    }

    fn build_mip(&self, cell: &Cell) -> (MipProblem, Lin, Layout) {
        let inst = self.inst;
        let n = inst.n;
        let layout = self.layout();
        let mut b = LpBuilder::new();
        for j in 0..layout.t_b {
            b.add_var(int_rat(&inst.l[j]), int_rat(&inst.u[j]), BigRational::zero());
        }
        for (h, coord) in layout.coords.iter().enumerate() {
            match coord {
                Coord::Stepped { pos, .. } => {
                    let s = self.sub(cell, *pos);
                    b.add_var(int_rat(&s.start), int_rat(&s.end), BigRational::zero());
                    b.add_var(int_rat(&s.d[0]), int_rat(&s.dbar[0]), BigRational::zero());
                }
                Coord::Fixed { .. } => {
                    let (lo, hi) = &self.fixed_box[&h];
                    b.add_var(int_rat(lo), int_rat(hi), BigRational::zero());
                }
            }
        }
        let p_max: BigInt = if cell.position == 0 {
            BigInt::zero()
        } else {
            (1..n)
                .map(|i| {
                    (0..self.h_set.len())
                        .map(|pos| {
                            let s = self.sub(cell, pos);
                            &s.dbar[i] - &s.d[i]
                        })
                        .min()
                        .expect("H is nonempty")
                })
                .sum()
        };
        b.add_var(BigRational::zero(), int_rat(&p_max), BigRational::zero());
        let num_int = b.num_vars();
        debug_assert_eq!(num_int, layout.num_vars);

        let x1: Vec<Lin> = (0..inst.t_a()).map(|h| self.x1(&layout, h)).collect();
        let lows: Vec<Lin> = (1..n).map(|i| self.low(&layout, cell, i)).collect();
        let caps: Vec<Lin> = (1..n).map(|i| self.cap(&layout, cell, i)).collect();

        for r in 0..inst.s_a() {
            let mut row = Lin::default();
            for j in 0..layout.t_b {
                row.add_var(j, &inst.b[(r, j)]);
            }
            for (h, x) in x1.iter().enumerate() {
                row.add(x, &inst.a[(r, h)]);
            }
            add_lin_eq(&mut b, &row, &inst.rhs[0][r]);
        }

        // Σᵢ xⁱ = n·x¹ + Σ θ̃ⁱ + θ·(Σ ℓⁱ + p)
        let mut y_sum = Lin::var(layout.p);
        for low in &lows {
            y_sum.add(low, &BigInt::one());
        }
        let nn = BigInt::from(n);
        let brick_sum: Vec<Lin> = (0..inst.t_a())
            .map(|h| {
                let mut s = Lin::constant(self.elim.offsets.iter().map(|o| &o[h]).sum());
                s.add(&x1[h], &nn);
                s.add(&y_sum, &self.elim.theta[h]);
                s
            })
            .collect();
        for r in 0..inst.s_d() {
            let mut row = Lin::default();
            for j in 0..layout.t_b {
                row.add_var(j, &inst.c[(r, j)]);
            }
            for (h, s) in brick_sum.iter().enumerate() {
                row.add(s, &inst.d[(r, h)]);
            }
            add_lin_eq(&mut b, &row, &inst.b0[r]);
        }

        for (p1, p2, lo, hi) in &cell.pairs {
            let mut diff = Lin::var(self.z_var(&layout, *p1));
            diff.add_var(self.z_var(&layout, *p2), &-BigInt::one());
            add_lin_range(&mut b, &diff, Some(lo.clone()), Some(hi.clone()));
        }
        for cap in &caps {
            add_lin_range(&mut b, cap, Some(BigInt::zero()), None);
        }

        let mut objective = Lin::default();
        for j in 0..layout.t_b {
            objective.add_var(j, &inst.w[j]);
        }
        for (h, x) in x1.iter().enumerate() {
            let total: BigInt = (0..n).map(|i| &self.weights(i)[h]).sum();
            objective.add(x, &total);
        }
        for i in 0..n {
            objective.c += dot(self.weights(i), &self.elim.offsets[i]);
        }
        for (k, low) in lows.iter().enumerate() {
            objective.add(low, &self.v[k + 1]);
        }
        if cell.position > 0 {
            // Λ(j−1) + 1 ≤ p ≤ Λ(j), value W(j−1) + v_σ(j)·(p − Λ(j−1))
            let mut filled = Lin::default();
            for &i in &self.order[..cell.position - 1] {
                filled.add(&caps[i - 1], &BigInt::one());
                objective.add(&caps[i - 1], &self.v[i]);
            }
            let top = self.order[cell.position - 1];
            let mut rest = Lin::var(layout.p);
            rest.add(&filled, &-BigInt::one());
            objective.add(&rest, &self.v[top]);
            add_lin_range(&mut b, &rest, Some(BigInt::one()), None);
            let mut over = rest.clone();
            over.add(&caps[top - 1], &-BigInt::one());
            add_lin_range(&mut b, &over, None, Some(BigInt::zero()));
        }
        for (j, a) in &objective.terms {
            b.set_cost(*j, int_rat(a));
        }

        let lp = b.build();
        let mut integer_mask = vec![false; lp.num_vars()];
        integer_mask[..num_int].fill(true);
        (MipProblem { lp, integer_mask }, objective, layout)
    }

    /// Brick points from a cell optimum.
    fn lift(&self, cell: &Cell, point: &[BigInt]) -> Result<Vec<BigInt>, FourBlockError> {
        let inst = self.inst;
        let layout = self.layout();
        let x1: Vec<BigInt> = (0..inst.t_a()).map(|h| self.x1(&layout, h).eval(point)).collect();
        let lows: Vec<BigInt> = (1..inst.n).map(|i| self.low(&layout, cell, i).eval(point)).collect();
        let caps: Vec<BigInt> = (1..inst.n).map(|i| self.cap(&layout, cell, i).eval(point)).collect();
        let split = greedy_ip8(&caps, &self.v[1..], &point[layout.p])
            .map_err(|e| FourBlockError::LiftInconsistency(e.to_string()))?;
        let mut x = point[..layout.t_b].to_vec();
        for i in 0..inst.n {
            let y = if i == 0 { BigInt::zero() } else { &lows[i - 1] + &split[i - 1] };
            for h in 0..inst.t_a() {
                x.push(&x1[h] + &self.elim.offsets[i][h] + &self.elim.theta[h] * &y);
            }
        }
        Ok(x)
    }

    fn cells(&self, report: &mut FourBlockReport) -> Vec<Cell> {
        let k = self.h_set.len();
        let mut out = Vec::new();
        let mut grid = vec![0usize; k];
        loop {
            report.cells_enumerated += 1;
            if self.grid_ok(&grid) {
                self.pair_cells(&grid, &mut out, report);
            }
            // odometer over sub-interval choices
            let mut pos = k;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                grid[pos] += 1;
                if grid[pos] < self.grids[pos].len() {
                    break;
                }
                grid[pos] = 0;
            }
        }
    }

    fn grid_ok(&self, grid: &[usize]) -> bool {
        grid.iter().enumerate().all(|(pos, &g)| {
            let s = &self.grids[pos][g];
            s.d.iter().zip(&s.dbar).all(|(a, b)| a <= b)
        })
    }

    fn pair_cells(&self, grid: &[usize], out: &mut Vec<Cell>, report: &mut FourBlockReport) {
        let k = self.h_set.len();
        let mut dbm = Dbm::new(k);
        for (pos, &g) in grid.iter().enumerate() {
            let s = &self.grids[pos][g];
            dbm.tighten(pos + 1, 0, s.dbar[0].clone());
            dbm.tighten(0, pos + 1, -&s.d[0]);
        }
        if !dbm.close() {
            return;
        }
        let pairs: Vec<(usize, usize)> =
            (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
        let ranges: Vec<Vec<(BigInt, BigInt)>> = pairs
            .iter()
            .map(|&(a, b)| self.pair_ranges(grid, &dbm, a, b))
            .collect();
        let mut chosen = Vec::with_capacity(pairs.len());
        self.pair_dfs(grid, &pairs, &ranges, &dbm, &mut chosen, out, report);
    }

    /// Ranges of `z_a − z_b` cut at every critical value `dⁱ_a − dⁱ_b` and
    /// `d̄ⁱ_a − d̄ⁱ_b` (bricks `i ≥ 2`), clipped to the closed z box.
    fn pair_ranges(&self, grid: &[usize], dbm: &Dbm, a: usize, b: usize) -> Vec<(BigInt, BigInt)> {
        let (sa, sb) = (&self.grids[a][grid[a]], &self.grids[b][grid[b]]);
        let mut crit: Vec<BigInt> = (1..self.inst.n)
            .flat_map(|i| [&sa.d[i] - &sb.d[i], &sa.dbar[i] - &sb.dbar[i]])
            .collect();
        crit.sort();
        crit.dedup();
        let lo_box = -dbm.hi(b + 1, a + 1);
        let hi_box = dbm.hi(a + 1, b + 1);
        let mut bounds: Vec<(Option<BigInt>, Option<BigInt>)> = Vec::with_capacity(crit.len() + 1);
        let mut prev: Option<BigInt> = None;
        for c in &crit {
            bounds.push((prev.take(), Some(c - 1u32)));
            prev = Some(c.clone());
        }
        bounds.push((prev, None));
        bounds
            .into_iter()
            .filter_map(|(lo, hi)| {
                let lo = lo.map_or(lo_box.clone(), |v| v.max(lo_box.clone()));
                let hi = hi.map_or(hi_box.clone(), |v| v.min(hi_box.clone()));
                (lo <= hi).then_some((lo, hi))
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn pair_dfs(
        &self,
        grid: &[usize],
        pairs: &[(usize, usize)],
        ranges: &[Vec<(BigInt, BigInt)>],
        dbm: &Dbm,
        chosen: &mut Vec<(usize, usize, BigInt, BigInt)>,
        out: &mut Vec<Cell>,
        report: &mut FourBlockReport,
    ) {
        let depth = chosen.len();
        if depth == pairs.len() {
            self.finish_cell(grid, dbm, chosen, out, report);
            return;
        }
        let (a, b) = pairs[depth];
        for (lo, hi) in &ranges[depth] {
            let mut next = dbm.clone();
            next.tighten(a + 1, b + 1, hi.clone());
            next.tighten(b + 1, a + 1, -lo);
            if !next.close() {
                continue;
            }
            chosen.push((a, b, lo.clone(), hi.clone()));
            self.pair_dfs(grid, pairs, ranges, &next, chosen, out, report);
            chosen.pop();
        }
    }

    fn finish_cell(
        &self,
        grid: &[usize],
        dbm: &Dbm,
        pairs: &[(usize, usize, BigInt, BigInt)],
        out: &mut Vec<Cell>,
        report: &mut FourBlockReport,
    ) {
        let k = self.h_set.len();
        let n = self.inst.n;
        let sub = |pos: usize| &self.grids[pos][grid[pos]];
        let mut argmax = Vec::with_capacity(n.saturating_sub(1));
        let mut argmin = Vec::with_capacity(n.saturating_sub(1));
        for i in 1..n {
            // a dominates c on the whole cell: dⁱ_a − z_a ≥ dⁱ_c − z_c
            let low_wins = |a: usize, c: usize| dbm.hi(a + 1, c + 1) <= &sub(a).d[i] - &sub(c).d[i];
            // b dominates c: d̄ⁱ_b − z_b ≤ d̄ⁱ_c − z_c
            let high_wins =
                |b: usize, c: usize| -dbm.hi(c + 1, b + 1) >= &sub(b).dbar[i] - &sub(c).dbar[i];
            let Some(a) = (0..k).find(|&a| (0..k).all(|c| c == a || low_wins(a, c))) else {
                return;
            };
            let Some(b) = (0..k).find(|&b| (0..k).all(|c| c == b || high_wins(b, c))) else {
                return;
            };
            argmax.push(a);
            argmin.push(b);
        }
        // capᵢ ≥ 0 is z_b − z_a ≤ d̄ⁱ_b − dⁱ_a
        let mut dbm = dbm.clone();
        for i in 1..n {
            let (a, b) = (argmax[i - 1], argmin[i - 1]);
            dbm.tighten(b + 1, a + 1, &sub(b).dbar[i] - &sub(a).d[i]);
        }
        if !dbm.close() {
            return;
        }
        let cell = Cell {
            grid: grid.to_vec(),
            pairs: pairs.to_vec(),
            argmax,
            argmin,
            position: 0,
        };
        let cap_max = |i: usize| {
            let (a, b) = (cell.argmax[i - 1], cell.argmin[i - 1]);
            &sub(b).dbar[i] - &sub(a).d[i] + dbm.hi(a + 1, b + 1)
        };
        for position in 0..n {
            report.cells_enumerated += 1;
            if position > 0 && cap_max(self.order[position - 1]) < BigInt::one() {
                continue;
            }
            out.push(Cell {
                position,
                ..cell.clone()
            });
        }
    }
}

/// Optimum of the `n = 0` program: only `C x⁰ = b⁰` over the box of `x⁰`.
fn solve_linking_only(inst: &FourBlockInstance) -> Result<FourBlockRun, FourBlockError> {
    let mut b = LpBuilder::new();
    for j in 0..inst.t_b() {
        b.add_var(int_rat(&inst.l[j]), int_rat(&inst.u[j]), int_rat(&inst.w[j]));
    }
    for r in 0..inst.s_d() {
        let terms = (0..inst.t_b()).map(|j| (j, int_rat(&inst.c[(r, j)]))).collect();
        b.add_eq(terms, int_rat(&inst.b0[r]));
    }
    let lp = b.build();
    let mip = MipProblem {
        integer_mask: vec![true; lp.num_vars()],
        lp,
    };
    let outcome = solve_mip_with_cutoff(&mip, None)?;
    if outcome.result.status != LpStatus::Optimal {
        return Err(FourBlockError::Infeasible(FourBlockInfeasible::NoFeasibleCell));
    }
    let x: Vec<BigInt> = outcome.result.point.expect("optimal point").iter().map(to_int).collect();
    Ok(FourBlockRun {
        solution: Solution {
            objective: inst.objective(&x),
            x,
            solver_tag: SolverTag::FourblockSnf,
        },
        report: FourBlockReport {
            cells_enumerated: 1,
            cells_solved: 1,
            nodes: outcome.nodes,
        },
    })
}

fn run_batch(
    setup: &Setup<'_>,
    cells: &[Cell],
    cutoff: Option<&BigInt>,
) -> Vec<Result<(Option<(BigInt, Vec<BigInt>)>, u64), LpError>> {
    cells
        .par_iter()
        .map(|cell| {
            let (mip, objective, _) = setup.build_mip(cell);
            let local = cutoff.map(|c| int_rat(&(c - &objective.c)));
            let outcome = solve_mip_with_cutoff(&mip, local.as_ref())?;
            if outcome.result.status != LpStatus::Optimal {
                return Ok((None, outcome.nodes));
            }
            let point: Vec<BigInt> = outcome.result.point.expect("optimal point").iter().map(to_int).collect();
            let value = objective.eval(&point);
            Ok((Some((value, point)), outcome.nodes))
        })
        .collect()
}

/// Cell enumeration with an explicit elimination, so different ways of
/// computing `θ`, `θ̃ⁱ` can be compared.
pub fn solve_fourblock_with(
    inst: &FourBlockInstance,
    elim: &Elimination,
    opts: &FourBlockOptions,
) -> Result<FourBlockRun, FourBlockError> {
    check_eligible(inst)?;
    let n = inst.n;
    if n == 0 {
        return solve_linking_only(inst);
    }
    let t_a = inst.t_a();
    let h_set: Vec<usize> = (0..t_a).filter(|&h| !elim.theta[h].is_zero()).collect();
    let mut fixed_box = BTreeMap::new();
    let mut grids = Vec::with_capacity(h_set.len());
    for h in 0..t_a {
        let bounds: Vec<(BigInt, BigInt)> = (0..n)
            .map(|i| {
                let k = inst.brick(i + 1).start + h;
                (&inst.l[k] - &elim.offsets[i][h], &inst.u[k] - &elim.offsets[i][h])
            })
            .collect();
        if elim.theta[h].is_zero() {
            let lo = bounds.iter().map(|b| &b.0).max().expect("n > 0").clone();
            let hi = bounds.iter().map(|b| &b.1).min().expect("n > 0").clone();
            if lo > hi {
                return Err(FourBlockError::Infeasible(FourBlockInfeasible::EmptyBox {
                    coordinate: h,
                }));
            }
            fixed_box.insert(h, (lo, hi));
        } else {
            grids.push(build_grid(&elim.theta[h], &bounds));
        }
    }
    let v: Vec<BigInt> = (0..n)
        .map(|i| dot(&inst.w[inst.brick(i + 1)], &elim.theta))
        .collect();
    let mut order: Vec<usize> = (1..n).collect();
    order.sort_by(|&a, &b| v[b].cmp(&v[a]).then(a.cmp(&b)));
    let setup = Setup {
        inst,
        elim,
        h_set,
        grids,
        fixed_box,
        v,
        order,
    };

    let mut report = FourBlockReport::default();
    let cells = setup.cells(&mut report);
    let pool = match opts.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| FourBlockError::LiftInconsistency(e.to_string()))?,
        ),
        None => None,
    };
    let mut best: Option<(BigInt, usize, Vec<BigInt>)> = None;
    for (chunk_no, chunk) in cells.chunks(opts.batch.max(1)).enumerate() {
        let cutoff = if opts.prune { best.as_ref().map(|b| &b.0) } else { None };
        let results = match &pool {
            Some(p) => p.install(|| run_batch(&setup, chunk, cutoff)),
            None => run_batch(&setup, chunk, cutoff),
        };
        for (k, res) in results.into_iter().enumerate() {
            let (found, nodes) = res?;
            report.cells_solved += 1;
            report.nodes += nodes;
            if let Some((value, point)) = found {
                if best.as_ref().map_or(true, |b| value > b.0) {
                    best = Some((value, chunk_no * opts.batch.max(1) + k, point));
                }
            }
        }
    }

    let Some((value, idx, point)) = best else {
        return Err(FourBlockError::Infeasible(FourBlockInfeasible::NoFeasibleCell));
    };
    let x = setup.lift(&cells[idx], &point)?;
    let eval = inst
        .evaluate(&x)
        .map_err(|e| FourBlockError::LiftInconsistency(e.to_string()))?;
    if !eval.feasible {
        return Err(FourBlockError::LiftInconsistency(format!(
            "lifted point violates {:?}",
            eval.violations
        )));
    }
    if eval.objective != value {
        return Err(FourBlockError::LiftInconsistency(format!(
            "lifted objective {} differs from cell value {value}",
            eval.objective
        )));
    }
    Ok(FourBlockRun {
        solution: Solution {
            x,
            objective: value,
            solver_tag: SolverTag::FourblockSnf,
        },
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::IntMatrix;

    fn v(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn bounds(xs: &[(i64, i64)]) -> Vec<(BigInt, BigInt)> {
        xs.iter().map(|&(a, b)| (BigInt::from(a), BigInt::from(b))).collect()
    }

    #[test]
    fn grid_splits_where_bounds_change() {
        let g = build_grid(&BigInt::from(3), &bounds(&[(4, 7)]));
        let spans: Vec<(BigInt, BigInt)> = g.iter().map(|s| (s.start.clone(), s.end.clone())).collect();
        assert_eq!(spans, bounds(&[(0, 0), (1, 1), (2, 2)]));
        // ξ = 0: 4 ≤ 3z ≤ 7 → z = 2; ξ = 1: 3 ≤ 3z ≤ 6 → z ∈ [1, 2];
        // ξ = 2: 2 ≤ 3z ≤ 5 → z = 1
        assert_eq!(g[0].d, v(&[2]));
        assert_eq!(g[0].dbar, v(&[2]));
        assert_eq!((g[1].d.clone(), g[1].dbar.clone()), (v(&[1]), v(&[2])));
        assert_eq!((g[2].d.clone(), g[2].dbar.clone()), (v(&[1]), v(&[1])));
    }

    #[test]
    fn grid_values_hold_across_each_span() {
        for theta in [-4i64, -3, 2, 5] {
            let b = bounds(&[(-7, 3), (2, 9), (0, 0)]);
            let t = BigInt::from(theta);
            for s in build_grid(&t, &b) {
                let mut xi = s.start.clone();
                while xi <= s.end {
                    for (i, (lo, hi)) in b.iter().enumerate() {
                        // brute-force the z-range of lo ≤ ξ + θz ≤ hi
                        let zs: Vec<i64> = (-20..=20)
                            .filter(|&z| {
                                let x = &xi + &t * z;
                                *lo <= x && x <= *hi
                            })
                            .collect();
                        if let (Some(a), Some(b)) = (zs.first(), zs.last()) {
                            assert_eq!(s.d[i], BigInt::from(*a));
                            assert_eq!(s.dbar[i], BigInt::from(*b));
                        } else {
                            assert!(s.d[i] > s.dbar[i]);
                        }
                    }
                    xi += 1;
                }
            }
        }
    }

    fn coupled() -> FourBlockInstance {
        // A = (2, 3), B = (1), C = (1), D = (1, 1)
        FourBlockInstance {
            n: 3,
            a: IntMatrix::from_i64(&[&[2, 3]]),
            b: IntMatrix::from_i64(&[&[1]]),
            c: IntMatrix::from_i64(&[&[1]]),
            d: IntMatrix::from_i64(&[&[1, 1]]),
            b0: v(&[7]),
            rhs: vec![v(&[8]), v(&[8]), v(&[8])],
            l: v(&[0, -3, -3, -3, -3, -3, -3]),
            u: v(&[2, 4, 4, 4, 4, 4, 4]),
            w: v(&[1, 1, -1, 2, 0, -1, 3]),
        }
    }

    #[test]
    fn snf_and_bezout_agree() {
        let inst = coupled();
        let snf = eliminate_snf(&inst).unwrap();
        let bez = eliminate_bezout(&inst).unwrap();
        let opts = FourBlockOptions::default();
        let a = solve_fourblock_with(&inst, &snf, &opts).unwrap();
        let b = solve_fourblock_with(&inst, &bez, &opts).unwrap();
        assert_eq!(a.solution.objective, b.solution.objective);
        assert!(inst.evaluate(&a.solution.x).unwrap().feasible);
    }

    #[test]
    fn pruning_does_not_change_the_optimum() {
        let inst = coupled();
        let elim = eliminate_snf(&inst).unwrap();
        let on = solve_fourblock_with(&inst, &elim, &FourBlockOptions::default()).unwrap();
        let off = FourBlockOptions {
            prune: false,
            ..FourBlockOptions::default()
        };
        let off = solve_fourblock_with(&inst, &elim, &off).unwrap();
        assert_eq!(on.solution.objective, off.solution.objective);
        assert_eq!(on.report.cells_solved, off.report.cells_solved);
        assert!(on.report.nodes <= off.report.nodes);
    }

    #[test]
    fn parity_mismatch_is_divisibility_failure() {
        let mut inst = coupled();
        inst.a = IntMatrix::from_i64(&[&[2, 4]]);
        inst.rhs[2] = v(&[9]);
        assert_eq!(
            eliminate_snf(&inst),
            Err(FourBlockError::Infeasible(FourBlockInfeasible::DivisibilityFail { brick: 3 }))
        );
        assert_eq!(
            eliminate_bezout(&inst),
            Err(FourBlockError::Infeasible(FourBlockInfeasible::DivisibilityFail { brick: 3 }))
        );
    }

    #[test]
    fn no_bricks_solves_linking_rows() {
        let mut inst = coupled();
        inst.n = 0;
        inst.rhs.clear();
        inst.l.truncate(1);
        inst.u.truncate(1);
        inst.w.truncate(1);
        inst.b0 = v(&[1]);
        let sol = solve_fourblock(&inst).unwrap();
        assert_eq!(sol.x, v(&[1]));
    }
}
