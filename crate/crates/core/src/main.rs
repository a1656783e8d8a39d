fn main() {
    std::process::exit(esnli::cli::run(std::env::args_os()));
}
