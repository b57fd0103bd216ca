//! Exact linear programming over the rationals.
//!
//! `max c·x  s.t.  A x = b,  lower ≤ x ≤ upper` with finite bounds, solved by
//! a bounded-variable primal simplex on a dense tableau whose rows are
//! integer vectors over a shared denominator. Phase 1 minimizes
//! the sum of one artificial variable per row; Bland's rule picks both the
//! entering and the leaving variable, so the method terminates.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub objective: Vec<BigRational>,
    pub eq_matrix: Vec<Vec<BigRational>>,
    pub eq_rhs: Vec<BigRational>,
    pub lower: Vec<BigRational>,
    pub upper: Vec<BigRational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Present iff `status` is `Optimal`.
    pub point: Option<Vec<BigRational>>,
    pub value: Option<BigRational>,
}

impl LpResult {
    pub fn infeasible() -> Self {
        LpResult {
            status: LpStatus::Infeasible,
            point: None,
            value: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Malformed(String),
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed(format!(
                "{n} objective entries but {} lower / {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() {
            return Err(LpError::Malformed(format!(
                "{} equality rows but {} right-hand sides",
                self.eq_matrix.len(),
                self.eq_rhs.len()
            )));
        }
        if let Some(r) = self.eq_matrix.iter().position(|row| row.len() != n) {
            return Err(LpError::Malformed(format!(
                "row {r} has {} coefficients, expected {n}",
                self.eq_matrix[r].len()
            )));
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[BigRational]) -> BigRational {
        self.objective
            .iter()
            .zip(x)
            .fold(BigRational::zero(), |acc, (c, v)| acc + c * v)
    }

    /// Exact feasibility test of a point.
    pub fn is_feasible(&self, x: &[BigRational]) -> bool {
        x.len() == self.num_vars()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
            && self.eq_matrix.iter().zip(&self.eq_rhs).all(|(row, rhs)| {
                &row.iter()
                    .zip(x)
                    .fold(BigRational::zero(), |acc, (a, v)| acc + a * v)
                    == rhs
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

/// Tableau row `num / den` with one positive denominator shared by the
/// whole row, kept free of common factors. Updates then need integer
/// products and one content gcd per row instead of a gcd per entry.
#[derive(Debug, Clone)]
struct Row {
    num: Vec<BigInt>,
    den: BigInt,
}

impl Row {
    fn from_rationals(v: &[BigRational]) -> Row {
        let den = v
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let num = v.iter().map(|x| x.numer() * (&den / x.denom())).collect();
        Row { num, den }
    }

    fn entry(&self, j: usize) -> BigRational {
        BigRational::new(self.num[j].clone(), self.den.clone())
    }

    fn normalize(&mut self) {
        if self.den.is_negative() {
            self.den = -std::mem::take(&mut self.den);
            for v in &mut self.num {
                *v = -std::mem::take(v);
            }
        }
        let mut g = self.den.clone();
        for v in &self.num {
            if g.is_one() {
                return;
            }
            if !v.is_zero() {
                // one division first keeps the binary gcd on small operands
                g = g.gcd(&(v % &g));
            }
        }
        if !g.is_one() {
            self.den /= &g;
            for v in &mut self.num {
                if !v.is_zero() {
                    *v /= &g;
                }
            }
        }
    }

    /// `self −= (f_num / self.den)·other`
    fn sub_scaled(&mut self, f_num: &BigInt, other: &Row) {
        // (a·D − f·b) / (d·D) with gcd(f, D) cancelled up front
        let g = other.den.gcd(f_num);
        let (dg, fg) = if g.is_one() {
            (other.den.clone(), f_num.clone())
        } else {
            (&other.den / &g, f_num / &g)
        };
        let unit = dg.is_one();
        for (a, b) in self.num.iter_mut().zip(&other.num) {
            if b.is_zero() {
                if !unit && !a.is_zero() {
                    *a *= &dg;
                }
            } else if unit {
                *a -= &fg * b;
            } else {
                *a = &*a * &dg - &fg * b;
            }
        }
        self.den *= &dg;
        self.normalize();
    }
}

#[derive(Debug, Clone)]
struct Simplex {
    rows: Vec<Row>,
    /// Reduced costs of the current phase.
    reduced: Row,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<BigRational>,
    lower: Vec<BigRational>,
    /// `None` only for artificial variables during phase 1.
    upper: Vec<Option<BigRational>>,
    /// Columns from here on are artificial.
    structural: usize,
}

/// Unreduced nonnegative fraction `(p, q)` with `q > 0`.
type Frac = (BigInt, BigInt);

fn gap(a: &BigRational, b: &BigRational) -> Frac {
    if a.denom() == b.denom() {
        (a.numer() - b.numer(), a.denom().clone())
    } else {
        (a.numer() * b.denom() - b.numer() * a.denom(), a.denom() * b.denom())
    }
}

fn frac_cmp(a: &Frac, b: &Frac) -> Ordering {
    (&a.0 * &b.1).cmp(&(&b.0 * &a.1))
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Simplex {
    fn iterate(&mut self) -> Step {
        let ncols = self.x.len();
        let entering = (0..ncols).find(|&j| match self.state[j] {
            VarState::Basic => false,
            VarState::AtLower => {
                self.reduced.num[j].is_positive()
                    && self.upper[j].as_ref().map_or(true, |u| u > &self.lower[j])
            }
            VarState::AtUpper => {
                self.reduced.num[j].is_negative()
                    && self.upper[j].as_ref().map_or(true, |u| u > &self.lower[j])
            }
        });
        let Some(q) = entering else {
            return Step::Optimal;
        };
        let increasing = self.state[q] == VarState::AtLower;

        // Ratio test over unreduced fractions; candidates are (step,
        // variable index, row, hits upper).
        let mut best: Option<(Frac, usize, Option<usize>, bool)> = self.upper[q]
            .as_ref()
            .map(|u| (gap(u, &self.lower[q]), q, None, increasing));
        for (r, row) in self.rows.iter().enumerate() {
            let a = &row.num[q];
            if a.is_zero() {
                continue;
            }
            let k = self.basis[r];
            // d x_k / d t = -a when increasing, +a when decreasing
            let falls = a.is_positive() == increasing;
            let room = if falls {
                Some((gap(&self.x[k], &self.lower[k]), false))
            } else {
                self.upper[k].as_ref().map(|u| (gap(u, &self.x[k]), true))
            };
            if let Some(((p, d), hits_upper)) = room {
                let step = (p * &row.den, d * a.abs());
                let better = match &best {
                    None => true,
                    Some((s, idx, _, _)) => match frac_cmp(&step, s) {
                        Ordering::Less => true,
                        Ordering::Equal => k < *idx,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((step, k, Some(r), hits_upper));
                }
            }
        }
        let Some(((p, d), _, pivot_row, hits_upper)) = best else {
            return Step::Unbounded;
        };

        if !p.is_zero() {
            let step = BigRational::new(p, d);
            let delta = if increasing { step } else { -step };
            self.shift_nonbasic(q, &self.x[q] + &delta);
        }

        match pivot_row {
            None => {
                self.state[q] = if increasing {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                self.x[q] = if increasing {
                    self.upper[q].clone().expect("bound flip needs a finite upper bound")
                } else {
                    self.lower[q].clone()
                };
            }
            Some(r) => {
                let leaving = self.basis[r];
                if hits_upper {
                    self.state[leaving] = VarState::AtUpper;
                    self.x[leaving] = self.upper[leaving].clone().expect("finite upper bound");
                } else {
                    self.state[leaving] = VarState::AtLower;
                    self.x[leaving] = self.lower[leaving].clone();
                }
                self.pivot(r, q);
            }
        }
        Step::Moved
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let mut pivot_row = std::mem::replace(
            &mut self.rows[r],
            Row {
                num: Vec::new(),
                den: BigInt::one(),
            },
        );
        // divide by the pivot entry num[q] / den: the row becomes num / num[q]
        pivot_row.den = pivot_row.num[q].clone();
        pivot_row.normalize();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row.num[q].is_zero() {
                continue;
            }
            let f = row.num[q].clone();
            row.sub_scaled(&f, &pivot_row);
        }
        if !self.reduced.num[q].is_zero() {
            let f = self.reduced.num[q].clone();
            self.reduced.sub_scaled(&f, &pivot_row);
        }
        self.rows[r] = pivot_row;
        let leaving = std::mem::replace(&mut self.basis[r], q);
        self.state[q] = VarState::Basic;
        if leaving >= self.structural {
            self.retire(leaving);
        }
    }

    /// Fixes a nonbasic artificial at zero for good and drops its column.
    fn retire(&mut self, j: usize) {
        self.upper[j] = Some(BigRational::zero());
        for row in self.rows.iter_mut().chain([&mut self.reduced]) {
            row.num[j] = BigInt::zero();
        }
    }

    fn run(&mut self) -> bool {
        loop {
            match self.iterate() {
                Step::Optimal => return true,
                Step::Unbounded => return false,
                Step::Moved => {}
            }
        }
    }

    /// Moves nonbasic `j` to `value` and updates the basic variables.
    fn shift_nonbasic(&mut self, j: usize, value: BigRational) {
        let delta = &value - &self.x[j];
        self.x[j] = value;
        if delta.is_zero() {
            return;
        }
        for (row, &k) in self.rows.iter().zip(&self.basis) {
            let a = &row.num[j];
            if a.is_zero() {
                continue;
            }
            // x_k −= (a / den)·delta with a single reduction
            let x = &self.x[k];
            let n = a * delta.numer();
            let d = &row.den * delta.denom();
            self.x[k] = BigRational::new(x.numer() * &d - n * x.denom(), x.denom() * d);
        }
    }

    fn violated(&self, k: usize) -> Option<bool> {
        if self.x[k] < self.lower[k] {
            Some(true)
        } else if self.upper[k].as_ref().is_some_and(|u| &self.x[k] > u) {
            Some(false)
        } else {
            None
        }
    }

    /// Dual simplex from a dual feasible basis. Returns `false` when the
    /// bounds admit no feasible point.
    fn dual_run(&mut self) -> bool {
        loop {
            // leaving: the basic variable of lowest index outside its bounds
            let Some((r, raise)) = (0..self.rows.len())
                .filter_map(|r| self.violated(self.basis[r]).map(|raise| (r, raise)))
                .min_by_key(|&(r, _)| self.basis[r])
            else {
                return true;
            };
            let row = &self.rows[r];
            // entering: smallest |d_j| / |a_rj| among columns that move x_k
            // the right way, ties by lowest index
            let mut best: Option<usize> = None;
            for j in 0..self.x.len() {
                let a = &row.num[j];
                if a.is_zero() || self.upper[j].as_ref() == Some(&self.lower[j]) {
                    continue;
                }
                // x_k changes by -a per unit increase of x_j
                let ok = match self.state[j] {
                    VarState::Basic => false,
                    VarState::AtLower => a.is_negative() == raise,
                    VarState::AtUpper => a.is_positive() == raise,
                };
                if !ok {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        let lhs = self.reduced.num[j].abs() * row.num[b].abs();
                        let rhs = self.reduced.num[b].abs() * a.abs();
                        lhs < rhs
                    }
                };
                if better {
                    best = Some(j);
                }
            }
            let Some(q) = best else {
                return false;
            };
            let k = self.basis[r];
            let target = if raise {
                self.lower[k].clone()
            } else {
                self.upper[k].clone().expect("violated upper bound is finite")
            };
            let step = (&self.x[k] - &target) / row.entry(q);
            let value = &self.x[q] + step;
            self.shift_nonbasic(q, value);
            self.x[k] = target;
            self.state[k] = if raise {
                VarState::AtLower
            } else {
                VarState::AtUpper
            };
            self.pivot(r, q);
        }
    }

    fn set_costs(&mut self, costs: &[BigRational]) {
        let mut reduced = Row::from_rationals(costs);
        for (row, &k) in self.rows.iter().zip(&self.basis) {
            let ck = &costs[k];
            if ck.is_zero() {
                continue;
            }
            // reduced −= c_k·row, with c_k rescaled onto the reduced denominator
            let mut scaled = row.clone();
            for v in &mut scaled.num {
                if !v.is_zero() {
                    *v *= ck.numer();
                }
            }
            scaled.den *= ck.denom();
            scaled.normalize();
            let f = reduced.den.clone();
            reduced.sub_scaled(&f, &scaled);
        }
        self.reduced = reduced;
    }
}

/// Solves the LP exactly. Crossed bounds (`lower > upper`) report
/// `Infeasible`.
pub fn solve_lp(p: &LpProblem) -> Result<LpResult, LpError> {
    Ok(solve_tableau(p)?.0)
}

/// Optimal tableau kept for re-solving after bound changes.
#[derive(Debug, Clone)]
pub struct WarmLp {
    simplex: Simplex,
    objective: Vec<BigRational>,
}

impl WarmLp {
    /// Solves `p` and keeps the final tableau when it is optimal.
    pub fn solve(p: &LpProblem) -> Result<(LpResult, Option<WarmLp>), LpError> {
        let (r, sx) = solve_tableau(p)?;
        let warm = sx.map(|simplex| WarmLp {
            simplex,
            objective: p.objective.clone(),
        });
        Ok((r, warm))
    }

    /// Current bounds of structural variable `j`.
    pub fn bounds(&self, j: usize) -> (BigRational, BigRational) {
        let hi = self.simplex.upper[j].clone().expect("structural bounds are finite");
        (self.simplex.lower[j].clone(), hi)
    }

    /// Re-solves with the bounds of structural variable `j` replaced, starting
    /// from this optimal basis.
    pub fn with_bounds(
        &self,
        j: usize,
        lower: BigRational,
        upper: BigRational,
    ) -> (LpResult, Option<WarmLp>) {
        let n = self.objective.len();
        assert!(j < n, "variable {j} out of range");
        if lower > upper {
            return (LpResult::infeasible(), None);
        }
        let mut sx = self.simplex.clone();
        if sx.state[j] != VarState::Basic {
            let at = if sx.x[j] < lower {
                lower.clone()
            } else if sx.x[j] > upper {
                upper.clone()
            } else {
                sx.x[j].clone()
            };
            sx.state[j] = if at == upper && lower < upper {
                VarState::AtUpper
            } else {
                VarState::AtLower
            };
            sx.shift_nonbasic(j, at);
        }
        sx.lower[j] = lower;
        sx.upper[j] = Some(upper);
        if !sx.dual_run() {
            return (LpResult::infeasible(), None);
        }
        // the basis is primal and dual feasible here; the primal pass only
        // tidies up nonbasic columns that were fixed
        if !sx.run() {
            return (
                LpResult {
                    status: LpStatus::Unbounded,
                    point: None,
                    value: None,
                },
                None,
            );
        }
        let point: Vec<BigRational> = sx.x[..n].to_vec();
        let value = self
            .objective
            .iter()
            .zip(&point)
            .fold(BigRational::zero(), |acc, (c, v)| acc + c * v);
        let r = LpResult {
            status: LpStatus::Optimal,
            point: Some(point),
            value: Some(value),
        };
        (r, Some(WarmLp { simplex: sx, objective: self.objective.clone() }))
    }
}

fn solve_tableau(p: &LpProblem) -> Result<(LpResult, Option<Simplex>), LpError> {
    p.check()?;
    let n = p.num_vars();
    let m = p.eq_matrix.len();
    if p.lower.iter().zip(&p.upper).any(|(lo, hi)| lo > hi) {
        return Ok((LpResult::infeasible(), None));
    }

    // Structural variables start at their lower bounds; artificials absorb
    // the residual with a nonnegative value.
    let mut x: Vec<BigRational> = p.lower.clone();
    let mut rows = Vec::with_capacity(m);
    for (i, (coeffs, rhs)) in p.eq_matrix.iter().zip(&p.eq_rhs).enumerate() {
        let activity = coeffs
            .iter()
            .zip(&p.lower)
            .filter(|(a, _)| !a.is_zero())
            .fold(BigRational::zero(), |acc, (a, l)| acc + a * l);
        let residual = rhs - activity;
        let flip = residual.is_negative();
        let mut row: Vec<BigRational> = if flip {
            coeffs.iter().map(|a| -a).collect()
        } else {
            coeffs.clone()
        };
        row.resize(n + m, BigRational::zero());
        row[n + i] = BigRational::one();
        rows.push(Row::from_rationals(&row));
        x.push(residual.abs());
    }

    let mut lower = p.lower.clone();
    lower.resize(n + m, BigRational::zero());
    let mut upper: Vec<Option<BigRational>> = p.upper.iter().cloned().map(Some).collect();
    upper.resize(n + m, None);
    let mut state = vec![VarState::AtLower; n];
    state.resize(n + m, VarState::Basic);

    let mut sx = Simplex {
        rows,
        reduced: Row {
            num: Vec::new(),
            den: BigInt::one(),
        },
        basis: (n..n + m).collect(),
        state,
        x,
        lower,
        upper,
        structural: n,
    };

    let mut phase1 = vec![BigRational::zero(); n];
    phase1.resize(n + m, -BigRational::one());
    sx.set_costs(&phase1);
    sx.run();
    if sx.x[n..].iter().any(|v| !v.is_zero()) {
        return Ok((LpResult::infeasible(), None));
    }

    for j in n..n + m {
        sx.upper[j] = Some(BigRational::zero());
    }
    let mut costs = p.objective.clone();
    costs.resize(n + m, BigRational::zero());
    sx.set_costs(&costs);
    if !sx.run() {
        let r = LpResult {
            status: LpStatus::Unbounded,
            point: None,
            value: None,
        };
        return Ok((r, None));
    }

    let point = sx.x[..n].to_vec();
    let value = p.objective_at(&point);
    let r = LpResult {
        status: LpStatus::Optimal,
        point: Some(point),
        value: Some(value),
    };
    Ok((r, Some(sx)))
}

pub fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn int_rat(v: &BigInt) -> BigRational {
    BigRational::from_integer(v.clone())
}

/// Incremental construction of an [`LpProblem`] from sparse rows. Range rows
/// `lo ≤ a·x ≤ hi` become `a·x − s = 0` with a bounded slack `s`; a missing
/// end is filled in from the current variable bounds, so every variable a
/// row mentions must be added before the row.
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    objective: Vec<BigRational>,
    lower: Vec<BigRational>,
    upper: Vec<BigRational>,
    rows: Vec<(Vec<(usize, BigRational)>, BigRational)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, lower: BigRational, upper: BigRational, cost: BigRational) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn set_cost(&mut self, var: usize, cost: BigRational) {
        self.objective[var] = cost;
    }

    pub fn add_eq(&mut self, terms: Vec<(usize, BigRational)>, rhs: BigRational) {
        self.rows.push((terms, rhs));
    }

    /// Interval of `a·x` over the variable box.
    pub fn activity_range(&self, terms: &[(usize, BigRational)]) -> (BigRational, BigRational) {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for (j, a) in terms {
            let (x, y) = (a * &self.lower[*j], a * &self.upper[*j]);
            if x <= y {
                lo += x;
                hi += y;
            } else {
                lo += y;
                hi += x;
            }
        }
        (lo, hi)
    }

    /// `lo ≤ a·x ≤ hi`; returns the slack variable index.
    pub fn add_range(
        &mut self,
        mut terms: Vec<(usize, BigRational)>,
        lo: Option<BigRational>,
        hi: Option<BigRational>,
    ) -> usize {
        let (act_lo, act_hi) = self.activity_range(&terms);
        let lo = lo.map_or(act_lo.clone(), |v| v.max(act_lo));
        let hi = hi.map_or(act_hi.clone(), |v| v.min(act_hi));
        let s = self.add_var(lo, hi, BigRational::zero());
        terms.push((s, -BigRational::one()));
        self.rows.push((terms, BigRational::zero()));
        s
    }

    pub fn build(&self) -> LpProblem {
        let n = self.num_vars();
        let mut eq_matrix = Vec::with_capacity(self.rows.len());
        let mut eq_rhs = Vec::with_capacity(self.rows.len());
        for (terms, rhs) in &self.rows {
            let mut row = vec![BigRational::zero(); n];
            for (j, a) in terms {
                row[*j] += a;
            }
            eq_matrix.push(row);
            eq_rhs.push(rhs.clone());
        }
        LpProblem {
            objective: self.objective.clone(),
            eq_matrix,
            eq_rhs,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}
