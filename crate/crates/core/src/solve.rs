//! Routes an instance to a solver by its structure class, or to the one the
//! caller names.

use std::fmt;
use std::str::FromStr;

use crate::fourblock::{eliminate_snf, solve_fourblock_with, FourBlockError, FourBlockOptions};
use crate::model::{FourBlockInstance, Solution, SolverTag, StructureClass};
use crate::nfold::{solve_nfold_snf_four_block, NFoldError};
use crate::ones::{solve_ones_detailed, OnesError};
use crate::oracle::{enumerate_optimum, OracleBudget, OracleError, OracleOutcome};
use crate::ratlp::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverChoice {
    #[default]
    Auto,
    Ones,
    Nfold,
    Fourblock,
    Bruteforce,
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(SolverChoice::Auto),
            "ones" => Ok(SolverChoice::Ones),
            "nfold" => Ok(SolverChoice::Nfold),
            "fourblock" => Ok(SolverChoice::Fourblock),
            "bruteforce" => Ok(SolverChoice::Bruteforce),
            other => Err(format!("unknown solver {other:?}")),
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverChoice::Auto => "auto",
            SolverChoice::Ones => "ones",
            SolverChoice::Nfold => "nfold",
            SolverChoice::Fourblock => "fourblock",
            SolverChoice::Bruteforce => "bruteforce",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SolveOptions {
    pub solver: SolverChoice,
    pub threads: Option<usize>,
    pub budget: OracleBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("unsupported: {message}")]
    Unsupported {
        class: StructureClass,
        message: String,
    },
    #[error("infeasible ({reason})")]
    Infeasible { solver: SolverTag, reason: String },
    #[error(transparent)]
    Budget(#[from] OracleError),
    #[error("internal inconsistency in {solver}: {message}")]
    Inconsistent { solver: SolverTag, message: String },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters {
    pub cells_enumerated: u64,
    pub cells_solved: u64,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveRun {
    pub class: StructureClass,
    pub solution: Solution,
    pub counters: Counters,
}

/// Message shown when no polynomial solver covers the class.
pub fn unsupported_message(class: StructureClass) -> String {
    match class {
        StructureClass::HardTaGeSaPlus2 => {
            "t_A ≥ s_A+2: NP-hard class (use --solver bruteforce for small instances)".into()
        }
        StructureClass::General => {
            "general class (t_A ≤ s_A or rank(A) < s_A): no dedicated solver (use --solver bruteforce)"
                .into()
        }
        other => format!("class {} is not accepted by the requested solver", other.as_str()),
    }
}

/// The solver `auto` picks for a class, if any.
pub fn route(class: StructureClass) -> Option<SolverChoice> {
    match class {
        StructureClass::AllOnesRow => Some(SolverChoice::Ones),
        StructureClass::NFoldSnfEligible => Some(SolverChoice::Nfold),
        StructureClass::SnfEligible => Some(SolverChoice::Fourblock),
        StructureClass::HardTaGeSaPlus2 | StructureClass::General => None,
    }
}

pub fn solver_tag(choice: SolverChoice) -> Option<SolverTag> {
    match choice {
        SolverChoice::Auto => None,
        SolverChoice::Ones => Some(SolverTag::Ones),
        SolverChoice::Nfold => Some(SolverTag::NfoldSnf),
        SolverChoice::Fourblock => Some(SolverTag::FourblockSnf),
        SolverChoice::Bruteforce => Some(SolverTag::Bruteforce),
    }
}

fn unsupported(class: StructureClass) -> SolveError {
    SolveError::Unsupported {
        class,
        message: unsupported_message(class),
    }
}

pub fn solve(inst: &FourBlockInstance, opts: &SolveOptions) -> Result<SolveRun, SolveError> {
    let class = inst.classify();
    let choice = match opts.solver {
        SolverChoice::Auto => route(class).ok_or_else(|| unsupported(class))?,
        other => other,
    };
    let mut counters = Counters::default();
    let solution = match choice {
        SolverChoice::Auto => unreachable!("resolved above"),
        SolverChoice::Ones => {
            let run = solve_ones_detailed(inst).map_err(|e| match e {
                OnesError::NotAllOnes => unsupported(class),
                OnesError::Infeasible => SolveError::Infeasible {
                    solver: SolverTag::Ones,
                    reason: "relaxation has no integral (x⁰, Σxⁱ)".into(),
                },
                OnesError::InternalInconsistency(message) => SolveError::Inconsistent {
                    solver: SolverTag::Ones,
                    message,
                },
                OnesError::Lp(e) => SolveError::Lp(e),
            })?;
            counters.nodes = run.nodes;
            run.solution
        }
        SolverChoice::Nfold => solve_nfold_snf_four_block(inst).map_err(|e| match e {
            NFoldError::NotEligible => unsupported(class),
            NFoldError::Infeasible { reason, brick } => SolveError::Infeasible {
                solver: SolverTag::NfoldSnf,
                reason: match brick {
                    Some(b) => format!("{reason} (brick {b})"),
                    None => reason.to_string(),
                },
            },
        })?,
        SolverChoice::Fourblock => {
            let opts = FourBlockOptions {
                threads: opts.threads,
                ..FourBlockOptions::default()
            };
            let run = eliminate_snf(inst)
                .and_then(|elim| solve_fourblock_with(inst, &elim, &opts))
                .map_err(|e| match e {
                    FourBlockError::NotEligible | FourBlockError::BezoutShape => unsupported(class),
                    FourBlockError::Infeasible(reason) => SolveError::Infeasible {
                        solver: SolverTag::FourblockSnf,
                        reason: reason.to_string(),
                    },
                    FourBlockError::LiftInconsistency(message) => SolveError::Inconsistent {
                        solver: SolverTag::FourblockSnf,
                        message,
                    },
                    FourBlockError::Lp(e) => SolveError::Lp(e),
                })?;
            counters = Counters {
                cells_enumerated: run.report.cells_enumerated,
                cells_solved: run.report.cells_solved,
                nodes: run.report.nodes,
            };
            run.solution
        }
        SolverChoice::Bruteforce => match enumerate_optimum(inst, &opts.budget)? {
            OracleOutcome::Optimal(sol) => sol,
            OracleOutcome::Infeasible => {
                return Err(SolveError::Infeasible {
                    solver: SolverTag::Bruteforce,
                    reason: "no lattice point of the box is feasible".into(),
                })
            }
        },
    };
    Ok(SolveRun {
        class,
        solution,
        counters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_ones, random_snf, RandomSpec};
    use crate::reductions::{encode_theorem1, SubsetSumInstance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn auto_routes_by_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cases = [
            (random_ones(&mut rng, &RandomSpec::small(3, 2, 1, 4, 3)), SolverTag::Ones),
            (random_snf(&mut rng, &RandomSpec::small(3, 2, 0, 4, 3)), SolverTag::NfoldSnf),
            (random_snf(&mut rng, &RandomSpec::small(3, 2, 1, 4, 3)), SolverTag::FourblockSnf),
        ];
        for (inst, tag) in cases {
            let run = solve(&inst, &SolveOptions::default()).unwrap();
            assert_eq!(run.solution.solver_tag, tag);
        }
    }

    #[test]
    fn hard_class_is_unsupported_without_override() {
        let s = SubsetSumInstance::from_i64(&[3, 5, 8], 8).unwrap();
        let inst = encode_theorem1(&s).unwrap().to_four_block();
        let err = solve(&inst, &SolveOptions::default()).unwrap_err();
        assert!(err.to_string().contains("t_A ≥ s_A+2: NP-hard class"));
        let brute = SolveOptions {
            solver: SolverChoice::Bruteforce,
            ..SolveOptions::default()
        };
        let run = solve(&inst, &brute).unwrap();
        assert_eq!(run.solution.solver_tag, SolverTag::Bruteforce);
    }

    #[test]
    fn choice_names_round_trip() {
        for c in [
            SolverChoice::Auto,
            SolverChoice::Ones,
            SolverChoice::Nfold,
            SolverChoice::Fourblock,
            SolverChoice::Bruteforce,
        ] {
            assert_eq!(c.to_string().parse::<SolverChoice>(), Ok(c));
        }
    }
}
