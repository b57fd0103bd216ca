//! Seeded random instances for the solvable structure classes.
//!
//! Instances are planted: a point is drawn from the box and the right-hand
//! sides are computed from it, so the result is feasible unless `perturb`
//! shifts one right-hand side entry by ±1 afterwards.

use num_bigint::{BigInt, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use crate::intlin::integer_rank;
use crate::matrix::IntMatrix;
use crate::model::FourBlockInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSpec {
    pub n: usize,
    pub t_a: usize,
    pub t_b: usize,
    /// Number of linking rows.
    pub s_d: usize,
    /// Matrix and objective entries are drawn from `[-entry_mag, entry_mag]`.
    pub entry_mag: BigInt,
    /// Lower bounds are drawn from `[-bound_mag, bound_mag]`.
    pub bound_mag: BigInt,
    /// Box widths `u - l` are drawn from `[0, width]`.
    pub width: BigInt,
    pub perturb: bool,
}

impl RandomSpec {
    pub fn small(n: usize, t_a: usize, t_b: usize, mag: i64, width: i64) -> Self {
        RandomSpec {
            n,
            t_a,
            t_b,
            s_d: 1,
            entry_mag: BigInt::from(mag),
            bound_mag: BigInt::from(mag),
            width: BigInt::from(width),
            perturb: false,
        }
    }
}

fn entry<R: Rng + ?Sized>(rng: &mut R, mag: &BigInt) -> BigInt {
    rng.gen_bigint_range(&-mag, &(mag + 1u32))
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, mag: &BigInt) -> IntMatrix {
    let mut m = IntMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = entry(rng, mag);
        }
    }
    m
}

/// Fills bounds, objective and planted right-hand sides around the given
/// matrices.
fn plant<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &RandomSpec,
    a: IntMatrix,
    b: IntMatrix,
    c: IntMatrix,
    d: IntMatrix,
) -> FourBlockInstance {
    let nv = spec.t_b + spec.n * spec.t_a;
    let mut l = Vec::with_capacity(nv);
    let mut u = Vec::with_capacity(nv);
    let mut x = Vec::with_capacity(nv);
    for _ in 0..nv {
        let lo = entry(rng, &spec.bound_mag);
        let w = rng.gen_bigint_range(&BigInt::zero(), &(&spec.width + 1u32));
        let hi = &lo + w;
        x.push(rng.gen_bigint_range(&lo, &(&hi + 1u32)));
        l.push(lo);
        u.push(hi);
    }
    let w = (0..nv).map(|_| entry(rng, &spec.entry_mag)).collect();
    let mut inst = FourBlockInstance {
        n: spec.n,
        a,
        b,
        c,
        d,
        b0: Vec::new(),
        rhs: Vec::new(),
        l,
        u,
        w,
    };
    let x0 = &x[inst.brick(0)];
    let mut b0 = inst.c.mul_vec(x0);
    let bx0 = inst.b.mul_vec(x0);
    for i in 1..=spec.n {
        let xi = &x[inst.brick(i)];
        for (acc, v) in b0.iter_mut().zip(inst.d.mul_vec(xi)) {
            *acc += v;
        }
        let rhs: Vec<BigInt> = inst.a.mul_vec(xi).into_iter().zip(&bx0).map(|(v, b)| v + b).collect();
        inst.rhs.push(rhs);
    }
    inst.b0 = b0;
    if spec.perturb {
        let slots = inst.b0.len() + inst.rhs.iter().map(Vec::len).sum::<usize>();
        if slots > 0 {
            let delta = if rng.gen_bool(0.5) { BigInt::one() } else { -BigInt::one() };
            let mut k = rng.gen_range(0..slots);
            if k < inst.b0.len() {
                inst.b0[k] += delta;
            } else {
                k -= inst.b0.len();
                let s_a = inst.a.rows();
                inst.rhs[k / s_a][k % s_a] += delta;
            }
        }
    }
    inst
}

/// `A = (1, …, 1)`; classifies as `AllOnesRow`.
pub fn random_ones<R: Rng + ?Sized>(rng: &mut R, spec: &RandomSpec) -> FourBlockInstance {
    let t_a = spec.t_a.max(1);
    let spec = RandomSpec { t_a, ..spec.clone() };
    let a = IntMatrix::from_rows(vec![vec![BigInt::one(); t_a]], t_a).expect("one row");
    let b = random_matrix(rng, 1, spec.t_b, &spec.entry_mag);
    let c = random_matrix(rng, spec.s_d, spec.t_b, &spec.entry_mag);
    let d = random_matrix(rng, spec.s_d, t_a, &spec.entry_mag);
    plant(rng, &spec, a, b, c, d)
}

/// Full-row-rank `A` with `t_A = s_A + 1`. With `t_b = 0` the instance is
/// an n-fold program (`B`, `C` empty); otherwise `B` and `C` are not both
/// zero.
pub fn random_snf<R: Rng + ?Sized>(rng: &mut R, spec: &RandomSpec) -> FourBlockInstance {
    let t_a = spec.t_a.max(2);
    let s_a = t_a - 1;
    let spec = RandomSpec { t_a, ..spec.clone() };
    let a = loop {
        let a = random_matrix(rng, s_a, t_a, &spec.entry_mag);
        // an all-ones row routes to a different solver
        if integer_rank(&a) == s_a && !(s_a == 1 && a.row(0).iter().all(One::is_one)) {
            break a;
        }
    };
    let (b, c) = loop {
        let b = random_matrix(rng, s_a, spec.t_b, &spec.entry_mag);
        let c = random_matrix(rng, spec.s_d, spec.t_b, &spec.entry_mag);
        // B = C = 0 would make it an n-fold program
        if spec.t_b == 0 || spec.entry_mag.is_zero() || !(b.is_zero() && c.is_zero()) {
            break (b, c);
        }
    };
    let d = random_matrix(rng, spec.s_d, t_a, &spec.entry_mag);
    plant(rng, &spec, a, b, c, d)
}
