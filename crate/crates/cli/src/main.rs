fn main() {
    std::process::exit(statecheck_cli::run(std::env::args_os()));
}
