fn main() {
    std::process::exit(sitnikov_cli::run(std::env::args_os()));
}
