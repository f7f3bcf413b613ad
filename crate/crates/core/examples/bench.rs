//! A short benchmark sweep, written as CSV to stdout.

use cfl_rounding::cfl::alpha_star;
use cfl_rounding::cli::{bench, bench_sizes, write_csv, Algorithm, SeedRange};

fn main() -> cfl_rounding::Result<()> {
    let seeds = SeedRange { first: 1, last: 10 };
    let mut all = Vec::new();
    for alg in [Algorithm::Cfl, Algorithm::Cflcfc] {
        let reports = bench(alg, seeds, bench_sizes, alpha_star(), 1e-7, 2, true)?;
        let worst = reports.iter().filter_map(|r| r.ratio_opt).fold(1.0, f64::max);
        eprintln!("{alg:?}: worst ratio to OPT {worst:.4}");
        all.extend(reports);
    }
    write_csv(std::io::stdout().lock(), &all)
}
