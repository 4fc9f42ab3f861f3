fn main() {
    std::process::exit(pomalg_cli::run(std::env::args_os()));
}
