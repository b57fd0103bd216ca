use std::fs;
use std::path::Path;
use std::time::Instant;

use blockip::json::{parse_any, parse_solution, solution_to_json, AnyInstance};
use blockip::model::{GeneralizedNFoldInstance, Solution};
use blockip::oracle::{enumerate_generalized, enumerate_optimum, OracleBudget, OracleError, OracleOutcome};
use blockip::solve::{solve as solve_instance, solver_tag, SolveError, SolveOptions, SolverChoice};
use num_bigint::BigUint;

use crate::report::RunReport;
use crate::{OracleArgs, SolveArgs, EXIT_INFEASIBLE, EXIT_INTERNAL, EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_VERIFY};

const GENERALIZED_MESSAGE: &str =
    "generalized n-fold with per-brick blocks: NP-hard class (use --solver bruteforce)";

pub fn read(path: &Path) -> Result<String, u8> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_PARSE
    })
}

fn load(path: &Path) -> Result<AnyInstance, u8> {
    parse_any(&read(path)?).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_PARSE
    })
}

pub fn parse_budget(text: &str) -> Result<OracleBudget, u8> {
    match text.parse::<BigUint>() {
        Ok(b) if b >= BigUint::from(1u32) => Ok(OracleBudget::new(b)),
        _ => {
            eprintln!("error: --budget must be a positive integer, got {text:?}");
            Err(EXIT_PARSE)
        }
    }
}

pub fn write_output(out: Option<&Path>, text: &str) -> Result<(), u8> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            EXIT_INTERNAL
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn finish(report: &mut RunReport, start: Instant, solution: Option<&Solution>, out: Option<&Path>) -> u8 {
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let code = match solution {
        Some(sol) => {
            report.objective = Some(sol.objective.to_string());
            match write_output(out, &solution_to_json(sol)) {
                Ok(()) => 0,
                Err(code) => code,
            }
        }
        None => match report.status.as_str() {
            "infeasible" => EXIT_INFEASIBLE,
            "unsupported" | "budget_exceeded" => EXIT_UNSUPPORTED,
            _ => EXIT_INTERNAL,
        },
    };
    report.print();
    code
}

fn oracle_generalized(
    inst: &GeneralizedNFoldInstance,
    budget: &OracleBudget,
    report: &mut RunReport,
) -> Option<Solution> {
    match enumerate_generalized(inst, budget) {
        Ok(OracleOutcome::Optimal(sol)) => {
            report.status = "optimal".into();
            Some(sol)
        }
        Ok(OracleOutcome::Infeasible) => {
            report.status = "infeasible".into();
            None
        }
        Err(e @ OracleError::BudgetExceeded { .. }) => {
            report.status = "budget_exceeded".into();
            report.message = Some(e.to_string());
            None
        }
    }
}

pub fn solve(args: &SolveArgs) -> u8 {
    let inst = match load(&args.instance) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let budget = match parse_budget(&args.budget) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let choice: SolverChoice = args.solver.into();
    let start = Instant::now();
    let out = args.out.as_deref();
    match inst {
        AnyInstance::Generalized(g) => {
            let mut report = RunReport::new("generalized_nfold", "bruteforce", "unsupported");
            if choice != SolverChoice::Bruteforce {
                report.solver = choice.to_string();
                report.message = Some(GENERALIZED_MESSAGE.into());
                eprintln!("error: {GENERALIZED_MESSAGE}");
                return finish(&mut report, start, None, out);
            }
            let sol = oracle_generalized(&g, &budget, &mut report);
            finish(&mut report, start, sol.as_ref(), out)
        }
        AnyInstance::FourBlock(inst) => {
            let class = inst.classify();
            let opts = SolveOptions {
                solver: choice,
                threads: Some(args.threads.max(1)),
                budget,
            };
            let solver = solver_tag(choice).map_or("auto", |t| t.as_str());
            let mut report = RunReport::new(class.as_str(), solver, "error");
            match solve_instance(&inst, &opts) {
                Ok(run) => {
                    report.status = "optimal".into();
                    report.solver = run.solution.solver_tag.as_str().into();
                    report.cells_enumerated = run.counters.cells_enumerated;
                    report.cells_solved = run.counters.cells_solved;
                    report.nodes = run.counters.nodes;
                    finish(&mut report, start, Some(&run.solution), out)
                }
                Err(e) => {
                    match &e {
                        SolveError::Unsupported { .. } => report.status = "unsupported".into(),
                        SolveError::Infeasible { solver, .. } => {
                            report.status = "infeasible".into();
                            report.solver = solver.as_str().into();
                        }
                        SolveError::Budget(_) => report.status = "budget_exceeded".into(),
                        SolveError::Inconsistent { .. } | SolveError::Lp(_) => {}
                    }
                    report.message = Some(e.to_string());
                    eprintln!("error: {e}");
                    finish(&mut report, start, None, out)
                }
            }
        }
    }
}

pub fn oracle(args: &OracleArgs) -> u8 {
    let inst = match load(&args.instance) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let budget = match parse_budget(&args.budget) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let start = Instant::now();
    let out = args.out.as_deref();
    match inst {
        AnyInstance::Generalized(g) => {
            let mut report = RunReport::new("generalized_nfold", "bruteforce", "error");
            let sol = oracle_generalized(&g, &budget, &mut report);
            finish(&mut report, start, sol.as_ref(), out)
        }
        AnyInstance::FourBlock(inst) => {
            let mut report = RunReport::new(inst.classify().as_str(), "bruteforce", "error");
            let sol = match enumerate_optimum(&inst, &budget) {
                Ok(OracleOutcome::Optimal(sol)) => {
                    report.status = "optimal".into();
                    Some(sol)
                }
                Ok(OracleOutcome::Infeasible) => {
                    report.status = "infeasible".into();
                    None
                }
                Err(e) => {
                    report.status = "budget_exceeded".into();
                    report.message = Some(e.to_string());
                    eprintln!("error: {e}");
                    None
                }
            };
            finish(&mut report, start, sol.as_ref(), out)
        }
    }
}

pub fn verify(instance: &Path, solution: &Path) -> u8 {
    let inst = match load(instance) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let sol = match read(solution).and_then(|t| {
        parse_solution(&t).map_err(|e| {
            eprintln!("error: {}: {e}", solution.display());
            EXIT_PARSE
        })
    }) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let (feasible, objective, first) = match &inst {
        AnyInstance::FourBlock(inst) => match inst.evaluate(&sol.x) {
            Ok(eval) => (
                eval.feasible,
                eval.objective,
                eval.violations.first().map(ToString::to_string),
            ),
            Err(e) => {
                eprintln!("verify failed: {e}");
                return EXIT_VERIFY;
            }
        },
        AnyInstance::Generalized(g) => {
            if sol.x.len() != g.num_vars() {
                eprintln!(
                    "verify failed: expected a vector of length {}, got {}",
                    g.num_vars(),
                    sol.x.len()
                );
                return EXIT_VERIFY;
            }
            let objective = blockip::matrix::dot(&g.w, &sol.x);
            let ok = g.is_feasible_point(&sol.x);
            (ok, objective, (!ok).then(|| "a block, linking or bound constraint".to_string()))
        }
    };
    if !feasible {
        eprintln!("verify failed: violated {}", first.unwrap_or_default());
        return EXIT_VERIFY;
    }
    if objective != sol.objective {
        eprintln!(
            "verify failed: objective mismatch (file {}, computed {objective})",
            sol.objective
        );
        return EXIT_VERIFY;
    }
    println!("ok: feasible, objective {objective}");
    0
}
