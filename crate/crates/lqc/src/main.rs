fn main() {
    std::process::exit(lqc::cli::run(std::env::args()));
}
