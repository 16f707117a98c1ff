fn main() {
    std::process::exit(stimulex::cli::run(std::env::args_os()));
}
