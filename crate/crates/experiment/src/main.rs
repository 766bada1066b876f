fn main() {
    std::process::exit(ued_experiment::cli::main_with_args(std::env::args_os()));
}
