fn main() {
    std::process::exit(incoherent::cli::run_from_args(std::env::args_os()));
}
