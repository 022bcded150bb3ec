fn main() {
    std::process::exit(dcopt_bench::cli::run(std::env::args_os()));
}
