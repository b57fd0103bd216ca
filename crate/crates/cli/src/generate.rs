use std::fs;
use std::path::{Path, PathBuf};

use blockip::generate::{random_ones, random_snf, RandomSpec};
use blockip::json::{generalized_to_json, instance_to_json};
use blockip::oracle::{subset_sum_dp, subset_sum_with_count};
use blockip::reductions::{
    encode_scheduling, encode_theorem1, encode_theorem2a, encode_theorem2b, SubsetSumInstance,
};
use clap::{Args, ValueEnum};
use num_bigint::{BigInt, RandBigInt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::commands::write_output;
use crate::{EXIT_INTERNAL, EXIT_PARSE};

/// Largest item count for which the answer sidecar is written.
const SIDECAR_MAX_ITEMS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Theorem1,
    Theorem2a,
    Theorem2b,
    Scheduling,
    RandomOnes,
    RandomSnf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Subset-sum items, comma separated; drawn from the seed when absent.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<String>>,
    /// Subset-sum target Δ.
    #[arg(long)]
    pub target: Option<String>,
    /// Long jobs for `scheduling`.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Number of bricks (or subset-sum items when drawn at random).
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Largest random subset-sum item.
    #[arg(long, default_value_t = 30)]
    pub max_beta: u64,
    #[arg(long, default_value_t = 2)]
    pub t_a: usize,
    #[arg(long, default_value_t = 1)]
    pub t_b: usize,
    #[arg(long, default_value_t = 1)]
    pub s_d: usize,
    /// Matrix, objective and bound magnitude of random instances.
    #[arg(long, default_value = "5")]
    pub mag: String,
    /// Largest box width of random instances.
    #[arg(long, default_value = "3")]
    pub width: String,
    /// Shift one right-hand side entry by ±1.
    #[arg(long)]
    pub perturb: bool,
    /// Instance file; the sidecar goes next to it as `<out>.answer.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn bad(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_PARSE
}

fn int(field: &str, text: &str) -> Result<BigInt, u8> {
    text.trim()
        .parse()
        .map_err(|_| bad(format!("--{field}: {text:?} is not an integer")))
}

fn subset_sum(args: &GenerateArgs, rng: &mut ChaCha8Rng) -> Result<SubsetSumInstance, u8> {
    let betas: Vec<BigInt> = match &args.betas {
        Some(bs) => bs.iter().map(|b| int("betas", b)).collect::<Result<_, _>>()?,
        None => (0..args.n)
            .map(|_| BigInt::from(rng.gen_range(1..=args.max_beta.max(1))))
            .collect(),
    };
    let target = match &args.target {
        Some(t) => int("target", t)?,
        None => {
            let max = betas.iter().max().cloned().unwrap_or_else(|| BigInt::from(1));
            let sum: BigInt = betas.iter().sum();
            let hi = sum.max(max.clone());
            rng.gen_bigint_range(&max, &(hi + 1u32))
        }
    };
    SubsetSumInstance::new(betas, target).map_err(bad)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".answer.json");
    PathBuf::from(name)
}

pub fn run(args: &GenerateArgs) -> u8 {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (text, answer) = match build(args, &mut rng) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Err(code) = write_output(args.out.as_deref(), &text) {
        return code;
    }
    if let (Some(out), Some(answer)) = (&args.out, answer) {
        let body = serde_json::to_string_pretty(&answer).expect("sidecar serializes");
        if let Err(e) = fs::write(sidecar_path(out), format!("{body}\n")) {
            eprintln!("error: cannot write sidecar: {e}");
            return EXIT_INTERNAL;
        }
    }
    0
}

fn build(
    args: &GenerateArgs,
    rng: &mut ChaCha8Rng,
) -> Result<(String, Option<serde_json::Value>), u8> {
    let random_spec = || -> Result<RandomSpec, u8> {
        let mag = int("mag", &args.mag)?;
        let width = int("width", &args.width)?;
        if mag < BigInt::from(0) || width < BigInt::from(0) {
            return Err(bad("--mag and --width must be nonnegative"));
        }
        Ok(RandomSpec {
            n: args.n,
            t_a: args.t_a,
            t_b: args.t_b,
            s_d: args.s_d,
            entry_mag: mag.clone(),
            bound_mag: mag,
            width,
            perturb: args.perturb,
        })
    };
    match args.kind {
        Kind::RandomOnes => Ok((instance_to_json(&random_ones(rng, &random_spec()?)), None)),
        Kind::RandomSnf => {
            if args.t_a < 2 {
                return Err(bad("random-snf needs --t-a ≥ 2"));
            }
            Ok((instance_to_json(&random_snf(rng, &random_spec()?)), None))
        }
        kind => {
            let s = subset_sum(args, rng)?;
            let text = match kind {
                Kind::Theorem1 => instance_to_json(&encode_theorem1(&s).map_err(bad)?.to_four_block()),
                Kind::Theorem2a => generalized_to_json(&encode_theorem2a(&s).map_err(bad)?),
                Kind::Theorem2b => generalized_to_json(&encode_theorem2b(&s).map_err(bad)?),
                Kind::Scheduling => {
                    instance_to_json(&encode_scheduling(&s, args.k).map_err(bad)?.to_four_block())
                }
                Kind::RandomOnes | Kind::RandomSnf => unreachable!("handled above"),
            };
            let n = s.betas.len();
            let answer = if n <= SIDECAR_MAX_ITEMS {
                let feasible = match kind {
                    // machines without the long job hold exactly βᵢ type-1 jobs
                    Kind::Scheduling => subset_sum_with_count(&s, n - args.k),
                    _ => subset_sum_dp(&s),
                };
                feasible.ok().map(|feasible| {
                    json!({
                        "kind": kind.to_possible_value().expect("named").get_name(),
                        "betas": s.betas.iter().map(ToString::to_string).collect::<Vec<_>>(),
                        "target": s.target.to_string(),
                        "feasible": feasible,
                    })
                })
            } else {
                None
            };
            Ok((text, answer))
        }
    }
}
