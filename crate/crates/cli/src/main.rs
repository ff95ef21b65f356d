fn main() {
    std::process::exit(rcp_cli::run(std::env::args_os()));
}
