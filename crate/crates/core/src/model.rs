//! Instances, solutions and structure detection for 4-block n-fold integer
//! programs
//!
//! ```text
//!     max  w·x
//!     s.t. C x⁰ + D x¹ + … + D xⁿ = b⁰
//!          B x⁰ + A xⁱ            = bⁱ     (i = 1..n)
//!          l ≤ x ≤ u,  x integral
//! ```
//!
//! Every vector over the variables is brick-major: `x⁰` (length `t_B`)
//! first, then `x¹ … xⁿ` (length `t_A` each).

use std::fmt;
use std::ops::Range;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::intlin::integer_rank;
use crate::matrix::{dot, IntMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourBlockInstance {
    pub n: usize,
    pub a: IntMatrix,
    pub b: IntMatrix,
    pub c: IntMatrix,
    pub d: IntMatrix,
    pub b0: Vec<BigInt>,
    /// One right-hand side per repeated block, each of length `s_A`.
    pub rhs: Vec<Vec<BigInt>>,
    pub l: Vec<BigInt>,
    pub u: Vec<BigInt>,
    pub w: Vec<BigInt>,
}

/// n-fold instance: a [`FourBlockInstance`] without the `x⁰` brick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NFoldInstance {
    pub n: usize,
    pub a: IntMatrix,
    pub d: IntMatrix,
    pub b0: Vec<BigInt>,
    pub rhs: Vec<Vec<BigInt>>,
    pub l: Vec<BigInt>,
    pub u: Vec<BigInt>,
    pub w: Vec<BigInt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTag {
    Ones,
    NfoldSnf,
    FourblockSnf,
    Bruteforce,
}

impl SolverTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverTag::Ones => "ones",
            SolverTag::NfoldSnf => "nfold_snf",
            SolverTag::FourblockSnf => "fourblock_snf",
            SolverTag::Bruteforce => "bruteforce",
        }
    }
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub x: Vec<BigInt>,
    pub objective: BigInt,
    pub solver_tag: SolverTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureClass {
    AllOnesRow,
    SnfEligible,
    NFoldSnfEligible,
    HardTaGeSaPlus2,
    General,
}

impl StructureClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureClass::AllOnesRow => "all_ones_row",
            StructureClass::SnfEligible => "snf_eligible",
            StructureClass::NFoldSnfEligible => "nfold_snf_eligible",
            StructureClass::HardTaGeSaPlus2 => "hard_ta_ge_sa_plus_2",
            StructureClass::General => "general",
        }
    }
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("variable {index} has an infinite bound")]
    InfiniteBound { index: usize },
    #[error("variable {index}: lower bound {lower} exceeds upper bound {upper}")]
    LowerExceedsUpper {
        index: usize,
        lower: BigInt,
        upper: BigInt,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A single violated constraint found by [`FourBlockInstance::evaluate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Linking {
        row: usize,
        lhs: BigInt,
        rhs: BigInt,
    },
    /// `block` is 1-based, matching the brick index.
    Block {
        block: usize,
        row: usize,
        lhs: BigInt,
        rhs: BigInt,
    },
    Bound {
        index: usize,
        brick: usize,
        value: BigInt,
        lower: BigInt,
        upper: BigInt,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Linking { row, lhs, rhs } => {
                write!(f, "linking row {row}: lhs {lhs} != rhs {rhs}")
            }
            Violation::Block {
                block,
                row,
                lhs,
                rhs,
            } => write!(f, "block {block} row {row}: lhs {lhs} != rhs {rhs}"),
            Violation::Bound {
                index,
                brick,
                value,
                lower,
                upper,
            } => write!(
                f,
                "variable {index} (brick {brick}): value {value} outside [{lower}, {upper}]"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub feasible: bool,
    pub objective: BigInt,
    pub violations: Vec<Violation>,
}

impl FourBlockInstance {
    pub fn s_a(&self) -> usize {
        self.a.rows()
    }

    pub fn t_a(&self) -> usize {
        self.a.cols()
    }

    pub fn t_b(&self) -> usize {
        self.b.cols()
    }

    pub fn s_d(&self) -> usize {
        self.d.rows()
    }

    /// `N = t_B + n·t_A`
    pub fn num_vars(&self) -> usize {
        self.t_b() + self.n * self.t_a()
    }

    /// `M = s_C + n·s_B`
    pub fn num_rows(&self) -> usize {
        self.c.rows() + self.n * self.b.rows()
    }

    /// Index range of brick `i` (0 is `x⁰`).
    pub fn brick(&self, i: usize) -> Range<usize> {
        if i == 0 {
            0..self.t_b()
        } else {
            let start = self.t_b() + (i - 1) * self.t_a();
            start..start + self.t_a()
        }
    }

    pub fn brick_of(&self, index: usize) -> usize {
        if index < self.t_b() {
            0
        } else {
            1 + (index - self.t_b()) / self.t_a().max(1)
        }
    }

    pub fn is_nfold(&self) -> bool {
        self.b.is_zero() && self.c.is_zero()
    }

    /// Every violated shape or bound invariant.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errs = Vec::new();
        let mut shape = |ok: bool, msg: String| {
            if !ok {
                errs.push(ValidationError::ShapeMismatch(msg));
            }
        };
        shape(
            self.c.rows() == self.d.rows(),
            format!("s_C = {} but s_D = {}", self.c.rows(), self.d.rows()),
        );
        shape(
            self.a.rows() == self.b.rows(),
            format!("s_A = {} but s_B = {}", self.a.rows(), self.b.rows()),
        );
        shape(
            self.b.cols() == self.c.cols(),
            format!("t_B = {} but t_C = {}", self.b.cols(), self.c.cols()),
        );
        shape(
            self.a.cols() == self.d.cols(),
            format!("t_A = {} but t_D = {}", self.a.cols(), self.d.cols()),
        );
        shape(
            self.b0.len() == self.d.rows(),
            format!("b0 has length {}, expected s_D = {}", self.b0.len(), self.d.rows()),
        );
        shape(
            self.rhs.len() == self.n,
            format!("{} block right-hand sides for n = {}", self.rhs.len(), self.n),
        );
        for (i, bi) in self.rhs.iter().enumerate() {
            shape(
                bi.len() == self.a.rows(),
                format!(
                    "right-hand side of block {} has length {}, expected s_A = {}",
                    i + 1,
                    bi.len(),
                    self.a.rows()
                ),
            );
        }
        let nv = self.num_vars();
        for (name, v) in [("l", &self.l), ("u", &self.u), ("w", &self.w)] {
            shape(
                v.len() == nv,
                format!("{name} has length {}, expected N = {nv}", v.len()),
            );
        }
        for (index, (lo, hi)) in self.l.iter().zip(&self.u).enumerate() {
            if lo > hi {
                errs.push(ValidationError::LowerExceedsUpper {
                    index,
                    lower: lo.clone(),
                    upper: hi.clone(),
                });
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Routing class, first match in priority order.
    pub fn classify(&self) -> StructureClass {
        let (s_a, t_a) = (self.s_a(), self.t_a());
        if s_a == 1 && t_a > 0 && self.a.row(0).iter().all(One::is_one) {
            return StructureClass::AllOnesRow;
        }
        if t_a == s_a + 1 && integer_rank(&self.a) == s_a {
            return if self.is_nfold() {
                StructureClass::NFoldSnfEligible
            } else {
                StructureClass::SnfEligible
            };
        }
        if t_a >= s_a + 2 {
            return StructureClass::HardTaGeSaPlus2;
        }
        StructureClass::General
    }

    pub fn objective(&self, x: &[BigInt]) -> BigInt {
        dot(&self.w, x)
    }

    /// Checks every equality and box constraint exactly.
    pub fn evaluate(&self, x: &[BigInt]) -> Result<Evaluation, ModelError> {
        let nv = self.num_vars();
        if x.len() != nv {
            return Err(ModelError::DimensionMismatch {
                expected: nv,
                found: x.len(),
            });
        }
        let mut violations = Vec::new();
        let x0 = &x[self.brick(0)];

        let mut linking = self.c.mul_vec(x0);
        for i in 1..=self.n {
            for (acc, v) in linking.iter_mut().zip(self.d.mul_vec(&x[self.brick(i)])) {
                *acc += v;
            }
        }
        for (row, (lhs, rhs)) in linking.into_iter().zip(&self.b0).enumerate() {
            if &lhs != rhs {
                violations.push(Violation::Linking {
                    row,
                    lhs,
                    rhs: rhs.clone(),
                });
            }
        }

        let bx0 = self.b.mul_vec(x0);
        for i in 1..=self.n {
            let ax = self.a.mul_vec(&x[self.brick(i)]);
            for (row, ((lhs0, lhs1), rhs)) in bx0.iter().zip(ax).zip(&self.rhs[i - 1]).enumerate() {
                let lhs = lhs0 + lhs1;
                if &lhs != rhs {
                    violations.push(Violation::Block {
                        block: i,
                        row,
                        lhs,
                        rhs: rhs.clone(),
                    });
                }
            }
        }

        for (index, v) in x.iter().enumerate() {
            if v < &self.l[index] || v > &self.u[index] {
                violations.push(Violation::Bound {
                    index,
                    brick: self.brick_of(index),
                    value: v.clone(),
                    lower: self.l[index].clone(),
                    upper: self.u[index].clone(),
                });
            }
        }

        Ok(Evaluation {
            feasible: violations.is_empty(),
            objective: self.objective(x),
            violations,
        })
    }

    /// Drops the `x⁰` brick. Only meaningful when `t_B = 0`.
    pub fn to_nfold(&self) -> Option<NFoldInstance> {
        if self.t_b() != 0 {
            return None;
        }
        Some(NFoldInstance {
            n: self.n,
            a: self.a.clone(),
            d: self.d.clone(),
            b0: self.b0.clone(),
            rhs: self.rhs.clone(),
            l: self.l.clone(),
            u: self.u.clone(),
            w: self.w.clone(),
        })
    }

    /// Largest absolute entry of the constraint matrix.
    pub fn delta(&self) -> BigInt {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|m| m.max_abs())
            .max()
            .unwrap_or_default()
    }

    /// Same instance with the bricks `x¹ … xⁿ` reordered so that new brick
    /// `k` is old brick `perm[k]` (0-based over the repeated bricks).
    pub fn permute_bricks(&self, perm: &[usize]) -> FourBlockInstance {
        assert_eq!(perm.len(), self.n);
        let mut out = self.clone();
        let t_b = self.t_b();
        for (k, &old) in perm.iter().enumerate() {
            let src = self.brick(old + 1);
            let dst = self.brick(k + 1);
            out.rhs[k] = self.rhs[old].clone();
            for (s, d) in src.zip(dst) {
                out.l[d] = self.l[s].clone();
                out.u[d] = self.u[s].clone();
                out.w[d] = self.w[s].clone();
            }
        }
        debug_assert_eq!(out.brick(0).len(), t_b);
        out
    }
}

impl NFoldInstance {
    pub fn to_four_block(&self) -> FourBlockInstance {
        FourBlockInstance {
            n: self.n,
            a: self.a.clone(),
            b: IntMatrix::zeros(self.a.rows(), 0),
            c: IntMatrix::zeros(self.d.rows(), 0),
            d: self.d.clone(),
            b0: self.b0.clone(),
            rhs: self.rhs.clone(),
            l: self.l.clone(),
            u: self.u.clone(),
            w: self.w.clone(),
        }
    }
}

impl From<NFoldInstance> for FourBlockInstance {
    fn from(inst: NFoldInstance) -> Self {
        inst.to_four_block()
    }
}

/// n-fold program whose blocks may differ: brick `i` has its own `Aᵢ` in the
/// diagonal and `Dᵢ` in the linking rows. Standard solvers do not accept it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizedNFoldInstance {
    pub n: usize,
    pub a_blocks: Vec<IntMatrix>,
    pub d_blocks: Vec<IntMatrix>,
    pub b0: Vec<BigInt>,
    pub rhs: Vec<Vec<BigInt>>,
    pub l: Vec<BigInt>,
    pub u: Vec<BigInt>,
    pub w: Vec<BigInt>,
}

impl GeneralizedNFoldInstance {
    pub fn brick_width(&self) -> usize {
        self.a_blocks.first().map_or(0, IntMatrix::cols)
    }

    pub fn num_vars(&self) -> usize {
        self.n * self.brick_width()
    }

    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errs = Vec::new();
        let t = self.brick_width();
        if self.a_blocks.len() != self.n || self.d_blocks.len() != self.n || self.rhs.len() != self.n {
            errs.push(ValidationError::ShapeMismatch(format!(
                "expected {} blocks of A, D and b",
                self.n
            )));
        }
        for (i, (a, d)) in self.a_blocks.iter().zip(&self.d_blocks).enumerate() {
            if a.cols() != t || d.cols() != t || d.rows() != self.b0.len() {
                errs.push(ValidationError::ShapeMismatch(format!(
                    "block {} has incompatible A/D shapes",
                    i + 1
                )));
            }
            if self.rhs.get(i).map_or(true, |b| b.len() != a.rows()) {
                errs.push(ValidationError::ShapeMismatch(format!(
                    "right-hand side of block {} does not match its A",
                    i + 1
                )));
            }
        }
        let nv = self.num_vars();
        for (name, v) in [("l", &self.l), ("u", &self.u), ("w", &self.w)] {
            if v.len() != nv {
                errs.push(ValidationError::ShapeMismatch(format!(
                    "{name} has length {}, expected N = {nv}",
                    v.len()
                )));
            }
        }
        for (index, (lo, hi)) in self.l.iter().zip(&self.u).enumerate() {
            if lo > hi {
                errs.push(ValidationError::LowerExceedsUpper {
                    index,
                    lower: lo.clone(),
                    upper: hi.clone(),
                });
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn is_feasible_point(&self, x: &[BigInt]) -> bool {
        let t = self.brick_width();
        if x.len() != self.num_vars() {
            return false;
        }
        if x
            .iter()
            .zip(self.l.iter().zip(&self.u))
            .any(|(v, (lo, hi))| v < lo || v > hi)
        {
            return false;
        }
        let mut linking = vec![BigInt::zero(); self.b0.len()];
        for i in 0..self.n {
            let xi = &x[i * t..(i + 1) * t];
            if self.a_blocks[i].mul_vec(xi) != self.rhs[i] {
                return false;
            }
            for (acc, v) in linking.iter_mut().zip(self.d_blocks[i].mul_vec(xi)) {
                *acc += v;
            }
        }
        linking == self.b0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// One block `A = (1, 2)`, `B = (1)`, linking `C = (1)`, `D = (1, 1)`.
    fn tiny() -> FourBlockInstance {
        FourBlockInstance {
            n: 2,
            a: IntMatrix::from_i64(&[&[1, 2]]),
            b: IntMatrix::from_i64(&[&[1]]),
            c: IntMatrix::from_i64(&[&[1]]),
            d: IntMatrix::from_i64(&[&[1, 1]]),
            b0: ints(&[4]),
            rhs: vec![ints(&[3]), ints(&[4])],
            l: ints(&[0, 0, 0, 0, 0]),
            u: ints(&[2, 3, 3, 3, 3]),
            w: ints(&[1, 1, 1, 1, 1]),
        }
    }

    #[test]
    fn shapes() {
        let inst = tiny();
        assert_eq!(inst.num_vars(), 5);
        assert_eq!(inst.num_rows(), 3);
        assert_eq!(inst.brick(0), 0..1);
        assert_eq!(inst.brick(2), 3..5);
        assert_eq!(inst.brick_of(4), 2);
        assert!(inst.validate().is_ok());
    }

    #[test]
    fn shape_mismatch_reported() {
        let mut inst = tiny();
        inst.b = IntMatrix::from_i64(&[&[1], &[1]]);
        let errs = inst.validate().unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ValidationError::ShapeMismatch(m) if m.contains("s_B"))));
    }

    #[test]
    fn lower_exceeds_upper_reported() {
        let inst = FourBlockInstance {
            n: 1,
            a: IntMatrix::from_i64(&[&[1]]),
            b: IntMatrix::zeros(1, 0),
            c: IntMatrix::zeros(1, 0),
            d: IntMatrix::from_i64(&[&[1]]),
            b0: ints(&[0]),
            rhs: vec![ints(&[0])],
            l: ints(&[0]),
            u: ints(&[-1]),
            w: ints(&[0]),
        };
        assert_eq!(
            inst.validate().unwrap_err(),
            vec![ValidationError::LowerExceedsUpper {
                index: 0,
                lower: BigInt::from(0),
                upper: BigInt::from(-1)
            }]
        );
    }

    #[test]
    fn classification() {
        let mut inst = tiny();
        assert_eq!(inst.classify(), StructureClass::SnfEligible);
        inst.a = IntMatrix::from_i64(&[&[1, 1]]);
        assert_eq!(inst.classify(), StructureClass::AllOnesRow);
        inst.a = IntMatrix::from_i64(&[&[0, 0]]);
        assert_eq!(inst.classify(), StructureClass::General);
        inst.a = IntMatrix::from_i64(&[&[2, 3], &[0, 5]]);
        inst.b = IntMatrix::from_i64(&[&[1], &[0]]);
        assert_eq!(inst.classify(), StructureClass::General);
        inst.a = IntMatrix::from_i64(&[&[1, 1, 100]]);
        inst.b = IntMatrix::from_i64(&[&[1]]);
        inst.d = IntMatrix::from_i64(&[&[1, 0, 0]]);
        assert_eq!(inst.classify(), StructureClass::HardTaGeSaPlus2);
        inst.a = IntMatrix::from_i64(&[&[1, 1, 1]]);
        assert_eq!(inst.classify(), StructureClass::AllOnesRow);
        inst.a = IntMatrix::from_i64(&[&[2, 3]]);
        inst.d = IntMatrix::from_i64(&[&[1, 0]]);
        inst.b = IntMatrix::zeros(1, 1);
        inst.c = IntMatrix::zeros(1, 1);
        assert_eq!(inst.classify(), StructureClass::NFoldSnfEligible);
    }

    #[test]
    fn evaluate_feasible_point() {
        let inst = tiny();
        // x0 = 1; brick 1: 1 + x1 + 2 x2 = 3; brick 2: 1 + x1 + 2 x2 = 4;
        // linking 1 + (x1+x2) + (x1+x2) = 4.
        let x = ints(&[1, 0, 1, 1, 1]);
        let ev = inst.evaluate(&x).unwrap();
        assert!(ev.feasible, "{:?}", ev.violations);
        assert_eq!(ev.objective, BigInt::from(4));
    }

    #[test]
    fn evaluate_names_violated_block_row() {
        let inst = tiny();
        let x = ints(&[1, 0, 1, 2, 1]);
        let ev = inst.evaluate(&x).unwrap();
        assert!(!ev.feasible);
        assert!(ev
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Block { block: 2, row: 0, .. })));
        assert!(ev.violations[0].to_string().contains("linking row 0"));
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        assert_eq!(
            tiny().evaluate(&ints(&[1, 2])),
            Err(ModelError::DimensionMismatch {
                expected: 5,
                found: 2
            })
        );
    }

    #[test]
    fn classify_stable_under_permutations_of_b_c_d() {
        let mut inst = tiny();
        inst.d = IntMatrix::from_i64(&[&[1, 1], &[2, 0]]);
        inst.c = IntMatrix::from_i64(&[&[1], &[3]]);
        inst.b0 = ints(&[4, 1]);
        let before = inst.classify();
        inst.d.swap_rows(0, 1);
        inst.c.swap_rows(0, 1);
        inst.d.swap_cols(0, 1);
        assert_eq!(inst.classify(), before);
    }
}
