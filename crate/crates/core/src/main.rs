fn main() {
    std::process::exit(ast_orbit::cli::run(std::env::args_os()));
}
