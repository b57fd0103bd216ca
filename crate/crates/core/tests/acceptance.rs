//! Acceptance battery. Each criterion prints one `PASS`/`FAIL` line; the
//! linear-time ratio is reported but not asserted.

use std::io::Write;
use std::time::{Duration, Instant};

use blockip::fourblock::{
    eliminate_bezout, eliminate_snf, solve_fourblock_with, FourBlockError, FourBlockOptions,
};
use blockip::generate::{random_ones, random_snf, RandomSpec};
use blockip::intlin::{bareiss_determinant, smith_normal_form};
use blockip::matrix::IntMatrix;
use blockip::model::{FourBlockInstance, StructureClass};
use blockip::nfold::{solve_nfold_snf_four_block, NFoldError};
use blockip::ones::{build_lp3, solve_ones_detailed, OnesError};
use blockip::oracle::{
    enumerate_generalized, enumerate_optimum, subset_sum_dp, OracleBudget, OracleError,
    OracleOutcome,
};
use blockip::ratlp::solve_lp;
use blockip::reductions::{encode_theorem1, encode_theorem2a, encode_theorem2b, SubsetSumInstance};
use num_bigint::{BigInt, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn budget() -> OracleBudget {
    OracleBudget::new(BigInt::from(10u32).pow(80).magnitude().clone())
}

struct Outcome {
    pass: bool,
    detail: String,
}

/// Flow-vs-LP₃ tallies shared by every run of the all-ones solver.
#[derive(Default)]
struct OnesAudit {
    runs: usize,
    mismatches: usize,
    inconsistencies: usize,
}

impl OnesAudit {
    fn run(&mut self, inst: &FourBlockInstance) -> Result<BigInt, OnesError> {
        self.runs += 1;
        match solve_ones_detailed(inst) {
            Ok(run) => {
                let lp3 = solve_lp(&build_lp3(inst, &run.context))?;
                if lp3.value != Some(BigRational::from_integer(run.bricks.objective.clone())) {
                    self.mismatches += 1;
                }
                Ok(run.solution.objective)
            }
            Err(e) => {
                if matches!(e, OnesError::InternalInconsistency(_)) {
                    self.inconsistencies += 1;
                }
                Err(e)
            }
        }
    }
}

fn verdict<E: std::fmt::Debug>(
    got: Result<BigInt, E>,
    infeasible: impl Fn(&E) -> bool,
    oracle: &OracleOutcome,
) -> bool {
    match (got, oracle) {
        (Ok(v), OracleOutcome::Optimal(best)) => v == best.objective,
        (Err(e), OracleOutcome::Infeasible) => infeasible(&e),
        _ => false,
    }
}

fn battery(
    trials: usize,
    limit: Option<Duration>,
    mut trial: impl FnMut(usize) -> bool,
) -> Outcome {
    let start = Instant::now();
    let agree = (0..trials).filter(|&t| trial(t)).count();
    let elapsed = start.elapsed();
    let limit_text = limit.map_or(String::new(), |l| format!(" (limit {l:?})"));
    Outcome {
        pass: agree == trials && limit.map_or(true, |l| elapsed < l),
        detail: format!("{agree}/{trials} agree in {elapsed:.2?}{limit_text}"),
    }
}

fn ones_vs_oracle(audit: &mut OnesAudit) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    battery(300, Some(Duration::from_secs(300)), |_| {
        let mut spec = RandomSpec::small(
            rng.gen_range(0..=4),
            rng.gen_range(1..=3),
            rng.gen_range(0..=2),
            5,
            4,
        );
        spec.s_d = rng.gen_range(1..=2);
        spec.perturb = rng.gen_bool(0.3);
        let inst = random_ones(&mut rng, &spec);
        let oracle = enumerate_optimum(&inst, &budget()).unwrap();
        verdict(audit.run(&inst), |e| matches!(e, OnesError::Infeasible), &oracle)
    })
}

fn fourblock_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    battery(300, Some(Duration::from_secs(600)), |_| {
        let mut spec = RandomSpec::small(
            rng.gen_range(0..=4),
            rng.gen_range(2..=3),
            rng.gen_range(0..=2),
            5,
            3,
        );
        spec.s_d = rng.gen_range(1..=2);
        spec.perturb = rng.gen_bool(0.2);
        let inst = random_snf(&mut rng, &spec);
        let oracle = enumerate_optimum(&inst, &budget()).unwrap();
        let got = eliminate_snf(&inst)
            .and_then(|e| solve_fourblock_with(&inst, &e, &FourBlockOptions::default()))
            .map(|run| run.solution.objective);
        verdict(got, |e| matches!(e, FourBlockError::Infeasible(_)), &oracle)
    })
}

fn nfold_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    battery(300, Some(Duration::from_secs(120)), |_| {
        let mut spec = RandomSpec::small(rng.gen_range(0..=6), rng.gen_range(2..=3), 0, 4, 5);
        spec.s_d = rng.gen_range(1..=2);
        spec.perturb = rng.gen_bool(0.3);
        let inst = random_snf(&mut rng, &spec);
        let oracle = enumerate_optimum(&inst, &budget()).unwrap();
        let got = solve_nfold_snf_four_block(&inst).map(|s| s.objective);
        verdict(got, |e| matches!(e, NFoldError::Infeasible { .. }), &oracle)
    })
}

fn magnitude_spec(n: usize, t_b: usize, exponent: u32) -> RandomSpec {
    let mag = BigInt::from(10u32).pow(exponent);
    RandomSpec {
        n,
        t_a: 2,
        t_b,
        s_d: 1,
        entry_mag: mag.clone(),
        bound_mag: mag.clone(),
        width: mag,
        perturb: false,
    }
}

fn median_time(repeat: usize, mut f: impl FnMut()) -> Duration {
    let mut times: Vec<Duration> = (0..repeat)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed()
        })
        .collect();
    times.sort();
    times[repeat / 2]
}

fn linear_time() -> Outcome {
    let start = Instant::now();
    let time_at = |n: usize| {
        let inst = random_snf(&mut ChaCha8Rng::seed_from_u64(104), &magnitude_spec(n, 0, 1));
        median_time(3, || {
            solve_nfold_snf_four_block(&inst).unwrap();
        })
    };
    let small = time_at(10_000);
    let large = time_at(100_000);
    let ratio = large.as_secs_f64() / small.as_secs_f64();
    Outcome {
        pass: ratio <= 2.5,
        detail: format!(
            "n=1e4 {small:.2?}, n=1e5 {large:.2?}, ratio {ratio:.2} (limit 2.5; linear scaling gives 10), total {:.2?}",
            start.elapsed()
        ),
    }
}

fn log_delta(audit: &mut OnesAudit) -> Outcome {
    const SEEDS: u64 = 5;
    let default_budget = OracleBudget::default();
    let mut over_budget = 0;
    let mut solved = 0;
    let mut total = |exponent: u32, audit: &mut OnesAudit| {
        let (mut nfold, mut ones) = (Duration::ZERO, Duration::ZERO);
        for seed in 0..SEEDS {
            let inst = random_snf(&mut ChaCha8Rng::seed_from_u64(seed), &magnitude_spec(100, 0, exponent));
            let start = Instant::now();
            solved += solve_nfold_snf_four_block(&inst).is_ok() as usize;
            nfold += start.elapsed();
            over_budget += matches!(
                enumerate_optimum(&inst, &default_budget),
                Err(OracleError::BudgetExceeded { .. })
            ) as usize;

            let inst = random_ones(&mut ChaCha8Rng::seed_from_u64(seed), &magnitude_spec(100, 1, exponent));
            let start = Instant::now();
            solved += audit.run(&inst).is_ok() as usize;
            ones += start.elapsed();
            over_budget += matches!(
                enumerate_optimum(&inst, &default_budget),
                Err(OracleError::BudgetExceeded { .. })
            ) as usize;
        }
        (nfold, ones)
    };
    let (nfold3, ones3) = total(3, audit);
    let (nfold40, ones40) = total(40, audit);
    let ratio = |a: Duration, b: Duration| a.as_secs_f64() / b.as_secs_f64().max(1e-9);
    let (rn, ro) = (ratio(nfold40, nfold3), ratio(ones40, ones3));
    let runs = 4 * SEEDS as usize;
    Outcome {
        pass: rn <= 10.0 && ro <= 10.0 && solved == runs && over_budget == runs,
        detail: format!(
            "nfold 1e3 {nfold3:.2?} vs 1e40 {nfold40:.2?} (x{rn:.2}), ones 1e3 {ones3:.2?} vs 1e40 {ones40:.2?} (x{ro:.2}), {solved}/{runs} solved, brute force over budget {over_budget}/{runs}"
        ),
    }
}

fn random_subset_sum(rng: &mut ChaCha8Rng, fit: bool) -> SubsetSumInstance {
    let n = rng.gen_range(1..=12);
    let betas: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=30)).collect();
    let sum: i64 = betas.iter().sum();
    let low = if fit { *betas.iter().max().unwrap() } else { 1 };
    SubsetSumInstance::from_i64(&betas, rng.gen_range(low..=sum + 1)).unwrap()
}

fn hardness_frontier() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let budget = budget();
    let mut all_ones = 0;
    let mut outcome = battery(200, Some(Duration::from_secs(120)), |_| {
        let s = random_subset_sum(&mut rng, true);
        let truth = subset_sum_dp(&s).unwrap();
        let inst = encode_theorem1(&s).unwrap().to_four_block();
        // Δ = 1 gives A = (1, 1, 1), which the all-ones class takes first
        let want = if s.target.is_one() {
            all_ones += 1;
            StructureClass::AllOnesRow
        } else {
            StructureClass::HardTaGeSaPlus2
        };
        let hard = inst.classify() == want;
        let t1 = enumerate_optimum(&inst, &budget).unwrap().is_feasible() == truth;

        let s = random_subset_sum(&mut rng, false);
        let truth = subset_sum_dp(&s).unwrap();
        let t2a = enumerate_generalized(&encode_theorem2a(&s).unwrap(), &budget)
            .unwrap()
            .is_feasible()
            == truth;
        let t2b = enumerate_generalized(&encode_theorem2b(&s).unwrap(), &budget)
            .unwrap()
            .is_feasible()
            == truth;
        hard && t1 && t2a && t2b
    });
    outcome.detail += &format!(", {all_ones} with Δ = 1 classified AllOnesRow");
    outcome
}

fn snf_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mag = BigInt::from(10u32).pow(30);
    battery(1000, Some(Duration::from_secs(60)), |_| {
        let (rows, cols) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let mut a = IntMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                // sparse and low-rank shapes as well as dense ones
                if rng.gen_bool(0.8) {
                    a[(r, c)] = rng.gen_bigint_range(&-&mag, &(&mag + 1u32));
                }
            }
        }
        if a.is_zero() {
            a[(0, 0)] = BigInt::one();
        }
        let snf = smith_normal_form(&a).unwrap();
        let alpha = snf.invariant_factors();
        let diagonal = (0..rows).all(|r| {
            (0..cols).all(|c| (r == c && r < snf.rank) || snf.s[(r, c)].is_zero())
        });
        snf.u.mul(&a).mul(&snf.v) == snf.s
            && bareiss_determinant(&snf.u).abs().is_one()
            && bareiss_determinant(&snf.v).abs().is_one()
            && diagonal
            && alpha.iter().all(Signed::is_positive)
            && alpha.windows(2).all(|p| (&p[1] % &p[0]).is_zero())
    })
}

fn tu_rounding(audit: &OnesAudit) -> Outcome {
    Outcome {
        pass: audit.runs > 0 && audit.mismatches == 0 && audit.inconsistencies == 0,
        detail: format!(
            "{} solver runs, {} flow/LP mismatches, {} internal inconsistencies",
            audit.runs, audit.mismatches, audit.inconsistencies
        ),
    }
}

fn bezout_vs_snf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let opts = FourBlockOptions::default();
    battery(100, None, |_| {
        let mut spec = RandomSpec::small(rng.gen_range(0..=4), 2, rng.gen_range(0..=2), 6, 4);
        spec.perturb = rng.gen_bool(0.3);
        let inst = random_snf(&mut rng, &spec);
        let objective = |e: Result<_, FourBlockError>| {
            e.and_then(|e| solve_fourblock_with(&inst, &e, &opts))
                .map(|run| run.solution.objective)
                .map_err(|e| matches!(e, FourBlockError::Infeasible(_)))
        };
        match (objective(eliminate_bezout(&inst)), objective(eliminate_snf(&inst))) {
            (Ok(a), Ok(b)) => a == b,
            (Err(true), Err(true)) => true,
            _ => false,
        }
    })
}

#[test]
fn acceptance() {
    let mut audit = OnesAudit::default();
    let results = [
        ("1 ones solver matches enumeration", ones_vs_oracle(&mut audit), true),
        ("2 4-block solver matches enumeration", fourblock_vs_oracle(), true),
        ("3 n-fold solver matches enumeration", nfold_vs_oracle(), true),
        ("4 n-fold wall-time ratio n=1e5 vs 1e4", linear_time(), false),
        ("5 magnitude 1e40 within 10x of 1e3", log_delta(&mut audit), true),
        ("6 hardness encodings agree with subset sum", hardness_frontier(), true),
        ("7 Smith normal form invariants", snf_invariants(), true),
        ("8 flow rounding equals LP optimum", tu_rounding(&audit), true),
        ("9 Bezout and SNF eliminations agree", bezout_vs_snf(), true),
    ];
    let mut failed = Vec::new();
    for (name, outcome, enforced) in &results {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        // written past the test harness capture so the summary always shows
        writeln!(std::io::stderr(), "[{tag}] {name}: {}", outcome.detail).unwrap();
        if !outcome.pass && *enforced {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
