use blockip::generate::{random_ones, RandomSpec};
use blockip::ones::{build_lp3, solve_ones_detailed, OnesError};
use blockip::oracle::{enumerate_optimum, OracleBudget, OracleOutcome};
use blockip::ratlp::solve_lp;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn budget() -> OracleBudget {
    OracleBudget::new(BigInt::from(10u32).pow(15).magnitude().clone())
}

#[test]
fn agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..120 {
        let mut spec = RandomSpec::small(rng.gen_range(0..=4), rng.gen_range(1..=3), rng.gen_range(0..=2), 5, 4);
        spec.s_d = rng.gen_range(1..=2);
        spec.perturb = rng.gen_bool(0.3);
        let inst = random_ones(&mut rng, &spec);
        let oracle = enumerate_optimum(&inst, &budget()).unwrap();
        match (solve_ones_detailed(&inst), &oracle) {
            (Ok(run), OracleOutcome::Optimal(best)) => {
                assert_eq!(run.solution.objective, best.objective, "trial {trial}");
                assert!(inst.evaluate(&run.solution.x).unwrap().feasible);
                let lp3 = solve_lp(&build_lp3(&inst, &run.context)).unwrap();
                assert_eq!(
                    lp3.value.unwrap(),
                    BigRational::from_integer(run.bricks.objective.clone())
                );
            }
            (Err(OnesError::Infeasible), OracleOutcome::Infeasible) => {}
            (got, want) => panic!("trial {trial}: solver {got:?}, oracle {want:?}"),
        }
    }
}
