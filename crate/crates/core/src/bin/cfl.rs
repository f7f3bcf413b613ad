fn main() {
    std::process::exit(cfl_rounding::cli::run(std::env::args_os()));
}
