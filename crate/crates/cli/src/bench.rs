use std::time::{Duration, Instant};

use blockip::generate::{random_ones, random_snf, RandomSpec};
use blockip::model::FourBlockInstance;
use blockip::nfold::solve_nfold_snf_four_block;
use blockip::ones::solve_ones;
use blockip::oracle::{box_points, OracleBudget};
use clap::Args;
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::EXIT_PARSE;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// `nfold-linear` or `logdelta`.
    pub suite: String,
    /// Brick counts for `nfold-linear`.
    #[arg(long, value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000])]
    pub sizes: Vec<usize>,
    /// Decimal exponents of the magnitudes for `logdelta`.
    #[arg(long, value_delimiter = ',', default_values_t = [10u32, 20, 40])]
    pub exponents: Vec<u32>,
    /// Brick count for `logdelta`.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit CSV instead of an aligned table.
    #[arg(long)]
    pub csv: bool,
}

pub struct Row {
    pub suite: &'static str,
    pub solver: &'static str,
    pub n: usize,
    pub exponent: u32,
    pub time: Duration,
    pub status: String,
    pub bruteforce: &'static str,
}

/// Random eligible n-fold instance with `t_A = 2` and entries, bounds and
/// widths of magnitude `10^exponent`.
pub fn nfold_instance(n: usize, exponent: u32, seed: u64) -> FourBlockInstance {
    random_snf(&mut ChaCha8Rng::seed_from_u64(seed), &spec(n, 0, exponent))
}

pub fn ones_instance(n: usize, exponent: u32, seed: u64) -> FourBlockInstance {
    random_ones(&mut ChaCha8Rng::seed_from_u64(seed), &spec(n, 1, exponent))
}

fn spec(n: usize, t_b: usize, exponent: u32) -> RandomSpec {
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

/// Median wall time over `repeat` runs.
fn time<T>(repeat: usize, mut f: impl FnMut() -> T) -> (Duration, T) {
    let mut times = Vec::with_capacity(repeat.max(1));
    let mut last = None;
    for _ in 0..repeat.max(1) {
        let start = Instant::now();
        last = Some(f());
        times.push(start.elapsed());
    }
    times.sort();
    (times[times.len() / 2], last.expect("ran at least once"))
}

fn status<E: std::fmt::Display>(r: &Result<blockip::model::Solution, E>) -> String {
    match r {
        Ok(_) => "optimal".into(),
        Err(e) => e.to_string(),
    }
}

fn brute_status(inst: &FourBlockInstance) -> &'static str {
    if box_points(&inst.l, &inst.u) > OracleBudget::default().max_points {
        "budget_exceeded"
    } else {
        "within_budget"
    }
}

pub fn rows(args: &BenchArgs) -> Result<Vec<Row>, String> {
    let mut out = Vec::new();
    match args.suite.as_str() {
        "nfold-linear" => {
            for &n in &args.sizes {
                let inst = nfold_instance(n, 1, args.seed);
                let (t, r) = time(args.repeat, || solve_nfold_snf_four_block(&inst));
                out.push(Row {
                    suite: "nfold-linear",
                    solver: "nfold_snf",
                    n,
                    exponent: 1,
                    time: t,
                    status: status(&r),
                    bruteforce: brute_status(&inst),
                });
            }
        }
        "logdelta" => {
            for &e in &args.exponents {
                let inst = nfold_instance(args.n, e, args.seed);
                let (t, r) = time(args.repeat, || solve_nfold_snf_four_block(&inst));
                out.push(Row {
                    suite: "logdelta",
                    solver: "nfold_snf",
                    n: args.n,
                    exponent: e,
                    time: t,
                    status: status(&r),
                    bruteforce: brute_status(&inst),
                });
                let inst = ones_instance(args.n, e, args.seed);
                let (t, r) = time(args.repeat, || solve_ones(&inst));
                out.push(Row {
                    suite: "logdelta",
                    solver: "ones",
                    n: args.n,
                    exponent: e,
                    time: t,
                    status: status(&r),
                    bruteforce: brute_status(&inst),
                });
            }
        }
        "" => return Err("empty suite name (expected nfold-linear or logdelta)".into()),
        other => return Err(format!("unknown suite {other:?} (expected nfold-linear or logdelta)")),
    }
    Ok(out)
}

pub fn run(args: &BenchArgs) -> u8 {
    let rows = match rows(args) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_PARSE;
        }
    };
    if args.csv {
        println!("suite,solver,n,magnitude,wall_ms,status,bruteforce");
    } else {
        println!(
            "{:<13} {:<10} {:>8} {:>9} {:>12}  {:<10} {}",
            "suite", "solver", "n", "magnitude", "wall_ms", "status", "bruteforce"
        );
    }
    for r in rows {
        let ms = r.time.as_secs_f64() * 1e3;
        let mag = format!("1e{}", r.exponent);
        if args.csv {
            println!("{},{},{},{},{:.3},{},{}", r.suite, r.solver, r.n, mag, ms, r.status, r.bruteforce);
        } else {
            println!(
                "{:<13} {:<10} {:>8} {:>9} {:>12.3}  {:<10} {}",
                r.suite, r.solver, r.n, mag, ms, r.status, r.bruteforce
            );
        }
    }
    0
}
