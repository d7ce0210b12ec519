fn main() {
    std::process::exit(flowlens_cli::run(std::env::args_os()));
}
