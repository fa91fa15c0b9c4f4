fn main() {
    std::process::exit(crowdship::cli::main_with_args(std::env::args_os()));
}
