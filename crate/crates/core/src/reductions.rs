//! Subset-sum encodings as block-structured programs.
//!
//! Each generator returns a pure feasibility instance (zero objective) that
//! is feasible exactly when the subset-sum question has a yes answer. They
//! double as fixtures on the hard side of the structure classes.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::matrix::IntMatrix;
use crate::model::{GeneralizedNFoldInstance, NFoldInstance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    pub betas: Vec<BigInt>,
    pub target: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("subset-sum items and target must be positive")]
    InvalidSubsetSum,
    #[error("item {index} ({beta}) exceeds the target {target}")]
    BetaExceedsTarget {
        index: usize,
        beta: BigInt,
        target: BigInt,
    },
    #[error("k = {k} exceeds the number of items {n}")]
    TooManyLongJobs { k: usize, n: usize },
}

impl SubsetSumInstance {
    pub fn new(betas: Vec<BigInt>, target: BigInt) -> Result<Self, ReductionError> {
        let s = SubsetSumInstance { betas, target };
        s.check()?;
        Ok(s)
    }

    pub fn from_i64(betas: &[i64], target: i64) -> Result<Self, ReductionError> {
        Self::new(
            betas.iter().map(|&b| BigInt::from(b)).collect(),
            BigInt::from(target),
        )
    }

    pub fn check(&self) -> Result<(), ReductionError> {
        if !self.target.is_positive() || self.betas.iter().any(|b| !b.is_positive()) {
            return Err(ReductionError::InvalidSubsetSum);
        }
        Ok(())
    }

    fn check_betas_fit(&self) -> Result<(), ReductionError> {
        self.check()?;
        match self.betas.iter().position(|b| *b > self.target) {
            Some(index) => Err(ReductionError::BetaExceedsTarget {
                index,
                beta: self.betas[index].clone(),
                target: self.target.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// Bricks `(x₁, x₂, x₃)` with `x₁ + x₂ + Δ x₃ = Δ` and boxes `[0, βᵢ]`,
/// `[0, Δ − βᵢ]`, `[0, 1]`: each brick either takes `x₁ = βᵢ` or switches
/// to `x₃ = 1`.
fn machine_bricks(s: &SubsetSumInstance) -> (Vec<BigInt>, Vec<BigInt>) {
    let mut l = Vec::with_capacity(3 * s.betas.len());
    let mut u = Vec::with_capacity(3 * s.betas.len());
    for beta in &s.betas {
        l.extend([BigInt::zero(), BigInt::zero(), BigInt::zero()]);
        u.extend([beta.clone(), &s.target - beta, BigInt::one()]);
    }
    (l, u)
}

/// `A = (1, 1, Δ)`, `D = (1, 0, 0)`, `Σ xⁱ₁ = Δ`.
pub fn encode_theorem1(s: &SubsetSumInstance) -> Result<NFoldInstance, ReductionError> {
    s.check_betas_fit()?;
    let n = s.betas.len();
    let delta = &s.target;
    let (l, u) = machine_bricks(s);
    Ok(NFoldInstance {
        n,
        a: IntMatrix::from_rows(vec![vec![BigInt::one(), BigInt::one(), delta.clone()]], 3)
            .expect("one row"),
        d: IntMatrix::from_i64(&[&[1, 0, 0]]),
        b0: vec![delta.clone()],
        rhs: vec![vec![delta.clone()]; n],
        w: vec![BigInt::zero(); l.len()],
        l,
        u,
    })
}

/// Shared `A = (Δ, 1)`, per-brick `Dᵢ = (βᵢ, 0)`, `Σ βᵢ xⁱ₁ = Δ`.
pub fn encode_theorem2a(
    s: &SubsetSumInstance,
) -> Result<GeneralizedNFoldInstance, ReductionError> {
    s.check()?;
    let n = s.betas.len();
    let delta = &s.target;
    let a = IntMatrix::from_rows(vec![vec![delta.clone(), BigInt::one()]], 2).expect("one row");
    Ok(GeneralizedNFoldInstance {
        n,
        a_blocks: vec![a; n],
        d_blocks: s
            .betas
            .iter()
            .map(|b| IntMatrix::from_rows(vec![vec![b.clone(), BigInt::zero()]], 2).expect("one row"))
            .collect(),
        b0: vec![delta.clone()],
        rhs: vec![vec![delta.clone()]; n],
        l: vec![BigInt::zero(); 2 * n],
        u: (0..n).flat_map(|_| [BigInt::one(), delta.clone()]).collect(),
        w: vec![BigInt::zero(); 2 * n],
    })
}

/// Per-brick `Aᵢ = (1, βᵢ)`, shared `D = (1, 0)`, `Σ xⁱ₁ = Δ`.
pub fn encode_theorem2b(
    s: &SubsetSumInstance,
) -> Result<GeneralizedNFoldInstance, ReductionError> {
    s.check()?;
    let n = s.betas.len();
    Ok(GeneralizedNFoldInstance {
        n,
        a_blocks: s
            .betas
            .iter()
            .map(|b| IntMatrix::from_rows(vec![vec![BigInt::one(), b.clone()]], 2).expect("one row"))
            .collect(),
        d_blocks: vec![IntMatrix::from_i64(&[&[1, 0]]); n],
        b0: vec![s.target.clone()],
        rhs: s.betas.iter().map(|b| vec![b.clone()]).collect(),
        l: vec![BigInt::zero(); 2 * n],
        u: s.betas.iter().flat_map(|b| [b.clone(), BigInt::one()]).collect(),
        w: vec![BigInt::zero(); 2 * n],
    })
}

/// Machines `i = 1..n` accept at most `βᵢ` unit jobs of type 1, `Δ − βᵢ`
/// unit jobs of type 2 and one job of length `Δ`. There are `Δ` type-1
/// jobs, `(n − k − 1)Δ` type-2 jobs and `k` long jobs. The total load is
/// `nΔ`, so makespan `Δ` forces every machine to be exactly full and the
/// machine rows are equalities.
pub fn encode_scheduling(
    s: &SubsetSumInstance,
    k: usize,
) -> Result<NFoldInstance, ReductionError> {
    let n = s.betas.len();
    if k > n {
        return Err(ReductionError::TooManyLongJobs { k, n });
    }
    let mut inst = encode_theorem1(s)?;
    let delta = &s.target;
    inst.d = IntMatrix::identity(3);
    let type2 = BigInt::from(n as i64 - k as i64 - 1) * delta;
    inst.b0 = vec![delta.clone(), type2, BigInt::from(k)];
    Ok(inst)
}
