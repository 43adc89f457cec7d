fn main() {
    std::process::exit(surfspec_cli::run(std::env::args_os()));
}
