fn main() {
    std::process::exit(transwalk_cli::run(std::env::args_os()));
}
