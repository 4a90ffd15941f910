fn main() {
    std::process::exit(fdlab_cli::run_cli(std::env::args_os()));
}
