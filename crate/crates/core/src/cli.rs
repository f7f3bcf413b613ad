//! Command-line front end: `gen`, `solve`, `exact`, `verify` and `bench`.
//!
//! Exit codes: 0 success, 1 other failure, 2 infeasible, 3 invariant
//! violation, 64 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfl::{alpha_star, solve_cfl, RoundingParams};
use crate::cflcfc::solve_cflcfc;
use crate::error::{Error, Result};
use crate::instances::{self, gen_euclidean, CflInstance, GenParams, IntegralSolution};
use crate::invariants::CheckLog;
use crate::oracle::{exact_opt, verify};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Oracle cross-checks are skipped above this many facilities.
pub const CROSSCHECK_MAX_FACILITIES: usize = 12;

pub const CSV_HEADER: [&str; 14] = [
    "seed", "alg", "alpha", "nf", "nd", "cost", "lp_bound", "opt", "ratio_lp", "ratio_opt", "cuts",
    "iters", "ms", "invariants_ok",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cfl,
    Cflcfc,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Cfl => "cfl",
            Algorithm::Cflcfc => "cflcfc",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cfl", version, about = "Approximation algorithms for capacitated facility location")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random Euclidean instance.
    Gen {
        #[arg(long)]
        facilities: usize,
        #[arg(long)]
        clients: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Unit opening costs.
        #[arg(long)]
        cardinality: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance and write a run report.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Algorithm::Cfl)]
        alg: Algorithm,
        #[arg(long, default_value_t = alpha_star())]
        alpha: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        exact_crosscheck: bool,
    },
    /// Exhaustive optimum of a small instance.
    Exact {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an integral solution against an instance.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Solve generated instances over a seed range and write CSV rows.
    Bench {
        #[arg(long, value_enum, default_value_t = Algorithm::Cfl)]
        alg: Algorithm,
        /// Inclusive range `a..b`, or a single seed.
        #[arg(long, value_parser = parse_seeds, default_value = "1..20")]
        seeds: SeedRange,
        /// Fixed sizes; by default they cycle with the seed.
        #[arg(long)]
        nf: Option<usize>,
        #[arg(long)]
        nd: Option<usize>,
        #[arg(long, default_value_t = alpha_star())]
        alpha: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        exact_crosscheck: bool,
        /// CSV path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

fn parse_seeds(s: &str) -> std::result::Result<SeedRange, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed {t:?}: {e}"));
    let (first, last) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => (num(s)?, num(s)?),
    };
    if first > last {
        return Err(format!("empty seed range {s}"));
    }
    Ok(SeedRange { first, last })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub algorithm: Algorithm,
    /// Only meaningful for `cfl`.
    pub alpha: Option<f64>,
    pub tol: f64,
    pub seed: Option<u64>,
    pub n_facilities: usize,
    pub n_clients: usize,
    pub cost: f64,
    pub lower_bound: f64,
    pub ratio: f64,
    pub opt: Option<f64>,
    pub ratio_opt: Option<f64>,
    pub cuts: usize,
    pub iterations: usize,
    pub millis: f64,
    pub invariants: BTreeMap<String, bool>,
    pub invariants_ok: bool,
    pub failures: Vec<(String, String)>,
    pub solution: IntegralSolution,
}

/// Runs one algorithm and collects its report. `seed` is recorded only.
pub fn run_algorithm(
    inst: &CflInstance,
    alg: Algorithm,
    alpha: f64,
    tol: f64,
    crosscheck: bool,
    instance: &str,
    seed: Option<u64>,
) -> Result<RunReport> {
    let t0 = Instant::now();
    let (solution, cost, lb, ratio, cuts, iterations, checks, alpha): (_, _, _, _, _, _, CheckLog, _) =
        match alg {
            Algorithm::Cfl => {
                let params = RoundingParams { alpha, tol, ..RoundingParams::default() };
                let r = solve_cfl(inst, &params)?;
                let iters = r.rounding.iterative.iterations.len();
                (r.solution, r.cost, r.lower_bound, r.ratio, r.cuts.len(), iters, r.checks, Some(alpha))
            }
            Algorithm::Cflcfc => {
                let r = solve_cflcfc(inst)?;
                (r.solution, r.cost, r.lower_bound, r.ratio, 0, r.phase1.iterations, r.checks, None)
            }
        };
    let millis = t0.elapsed().as_secs_f64() * 1e3;
    let opt = if crosscheck && inst.n_facilities() <= CROSSCHECK_MAX_FACILITIES {
        Some(exact_opt(inst)?.opt_cost)
    } else {
        None
    };
    Ok(RunReport {
        instance: instance.to_string(),
        algorithm: alg,
        alpha,
        tol,
        seed,
        n_facilities: inst.n_facilities(),
        n_clients: inst.n_clients,
        cost,
        lower_bound: lb,
        ratio,
        opt,
        ratio_opt: opt.map(|o| crate::cfl::ratio_of(cost, o)),
        cuts,
        iterations,
        millis,
        invariants: checks.flags(),
        invariants_ok: checks.all_ok(),
        failures: checks.failures(),
        solution,
    })
}

/// Default bench sizes: `|F| = 2 + seed mod 5`, `|D| = 2 + ⌊seed/5⌋ mod 7`.
pub fn bench_sizes(seed: u64) -> (usize, usize) {
    (2 + (seed % 5) as usize, 2 + ((seed / 5) % 7) as usize)
}

pub fn bench_instance(alg: Algorithm, n_f: usize, n_d: usize, seed: u64) -> Result<CflInstance> {
    gen_euclidean(&GenParams::new(n_f, n_d, seed).cardinality(alg == Algorithm::Cflcfc))
}

/// Runs every seed (on `jobs` threads) and returns reports in seed order.
pub fn bench(
    alg: Algorithm,
    seeds: SeedRange,
    sizes: impl Fn(u64) -> (usize, usize) + Sync,
    alpha: f64,
    tol: f64,
    jobs: usize,
    crosscheck: bool,
) -> Result<Vec<RunReport>> {
    let one = |seed: u64| {
        let (n_f, n_d) = sizes(seed);
        let inst = bench_instance(alg, n_f, n_d, seed)?;
        run_algorithm(&inst, alg, alpha, tol, crosscheck, &format!("seed-{seed}"), Some(seed))
    };
    let seeds: Vec<u64> = (seeds.first..=seeds.last).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))?;
    // `collect` on an indexed parallel iterator keeps seed order.
    pool.install(|| seeds.par_iter().map(|&s| one(s)).collect())
}

pub fn write_csv<W: Write>(out: W, reports: &[RunReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.algorithm.name().to_string(),
            opt(r.alpha),
            r.n_facilities.to_string(),
            r.n_clients.to_string(),
            r.cost.to_string(),
            r.lower_bound.to_string(),
            opt(r.opt),
            r.ratio.to_string(),
            opt(r.ratio_opt),
            r.cuts.to_string(),
            r.iterations.to_string(),
            format!("{:.3}", r.millis),
            r.invariants_ok.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => instances::save_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) | Error::InfeasibleGenerator(_) => EXIT_INFEASIBLE,
        Error::InvariantViolation(_) => EXIT_INVARIANT,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Gen { facilities, clients, seed, cardinality, out } => {
            let inst = gen_euclidean(&GenParams::new(facilities, clients, seed).cardinality(cardinality))?;
            instances::save_instance(&out, &inst)?;
            Ok(EXIT_OK)
        }
        Command::Solve { input, alg, alpha, tol, out, solution, exact_crosscheck } => {
            let inst = instances::load_instance(&input)?;
            let name = input.display().to_string();
            let report = run_algorithm(&inst, alg, alpha, tol, exact_crosscheck, &name, None)?;
            if let Some(p) = solution {
                instances::save_json(p, &report.solution)?;
            }
            write_json(out.as_deref(), &report)?;
            Ok(if report.invariants_ok { EXIT_OK } else { EXIT_INVARIANT })
        }
        Command::Exact { input, out } => {
            let inst = instances::load_instance(&input)?;
            write_json(out.as_deref(), &exact_opt(&inst)?)?;
            Ok(EXIT_OK)
        }
        Command::Verify { input, solution } => {
            let inst = instances::load_instance(&input)?;
            let sol: IntegralSolution = instances::load_json(&solution)?;
            let v = verify(&inst, &sol);
            write_json(None, &v)?;
            Ok(if v.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Bench { alg, seeds, nf, nd, alpha, tol, jobs, exact_crosscheck, out } => {
            let sizes = |s: u64| {
                let (f, d) = bench_sizes(s);
                (nf.unwrap_or(f), nd.unwrap_or(d))
            };
            let reports = bench(alg, seeds, sizes, alpha, tol, jobs, exact_crosscheck)?;
            match out {
                Some(p) => write_csv(std::fs::File::create(p)?, &reports)?,
                None => write_csv(std::io::stdout().lock(), &reports)?,
            }
            let ok = reports.iter().all(|r| r.invariants_ok);
            Ok(if ok { EXIT_OK } else { EXIT_INVARIANT })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("1..20"), Ok(SeedRange { first: 1, last: 20 }));
        assert_eq!(parse_seeds("3..=4"), Ok(SeedRange { first: 3, last: 4 }));
        assert_eq!(parse_seeds("7"), Ok(SeedRange { first: 7, last: 7 }));
        assert!(parse_seeds("5..2").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        for args in [&["cfl", "solve"][..], &["cfl", "bench", "--alg", "nope"], &["cfl", "frobnicate"]] {
            let e = Cli::try_parse_from(args).unwrap_err();
            assert!(e.use_stderr(), "{args:?}");
        }
        assert!(!Cli::try_parse_from(["cfl", "--help"]).unwrap_err().use_stderr());
        assert!(Cli::try_parse_from(["cfl", "bench", "--seeds", "1..3", "--jobs", "2"]).is_ok());
    }

    #[test]
    fn gen_solve_verify_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
        let args = ["cfl", "gen", "--facilities", "3", "--clients", "5", "--seed", "1", "--cardinality", "--out"];
        assert_eq!(run(args.iter().map(|s| s.to_string()).chain([p("i.json")])), EXIT_OK);
        let inst = instances::load_instance(p("i.json")).unwrap();
        assert!(instances::validate(&inst).is_empty());
        assert_eq!((inst.n_facilities(), inst.n_clients), (3, 5));

        let code = run([
            "cfl", "solve", "--in", &p("i.json"), "--alg", "cflcfc", "--exact-crosscheck", "--out",
            &p("r.json"), "--solution", &p("s.json"),
        ]);
        assert_eq!(code, EXIT_OK);
        let r: RunReport = instances::load_json(p("r.json")).unwrap();
        let opt = exact_opt(&inst).unwrap().opt_cost;
        assert_eq!(r.opt, Some(opt));
        assert!(r.cost <= 4.0 * r.lower_bound + 1e-6 * inst.scale());
        assert!(r.cost >= opt - 1e-9 && r.lower_bound <= opt + 1e-7);
        assert!((r.ratio - r.cost / r.lower_bound).abs() < 1e-12);
        assert!(r.invariants_ok && r.invariants.values().all(|&v| v));

        assert_eq!(run(["cfl", "verify", "--in", &p("i.json"), "--solution", &p("s.json")]), EXIT_OK);
        let bad = IntegralSolution { open: vec![], assign: vec![0; 5] };
        instances::save_json(p("bad.json"), &bad).unwrap();
        assert_eq!(run(["cfl", "verify", "--in", &p("i.json"), "--solution", &p("bad.json")]), EXIT_INFEASIBLE);
        assert_eq!(run(["cfl", "exact", "--in", &p("i.json"), "--out", &p("o.json")]), EXIT_OK);
    }

    #[test]
    fn short_capacity_exits_infeasible() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.json");
        let inst = CflInstance::from_points(&[((0.0, 0.0), 1.0, 1)], &[(0.0, 0.0), (1.0, 0.0)]);
        instances::save_instance(&path, &inst).unwrap();
        assert_eq!(run(["cfl", "solve", "--in", path.to_str().unwrap()]), EXIT_INFEASIBLE);
    }

    #[test]
    fn bench_csv_is_ordered_and_deterministic() {
        let seeds = SeedRange { first: 1, last: 20 };
        let sizes = |_| (4, 6);
        let a = bench(Algorithm::Cfl, seeds, sizes, alpha_star(), 1e-7, 4, false).unwrap();
        let b = bench(Algorithm::Cfl, seeds, sizes, alpha_star(), 1e-7, 1, false).unwrap();
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.seed, x.cost, x.lower_bound, &x.solution), (y.seed, y.cost, y.lower_bound, &y.solution));
        }
        let mut buf = Vec::new();
        write_csv(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 21);
        let ratio_col = CSV_HEADER.iter().position(|&h| h == "ratio_lp").unwrap();
        for (k, l) in lines[1..].iter().enumerate() {
            let cells: Vec<&str> = l.split(',').collect();
            assert_eq!(cells[0], (k + 1).to_string());
            assert!(cells[ratio_col].parse::<f64>().unwrap() <= 9.0927);
        }
    }
}
