fn main() {
    std::process::exit(helion::cli::run(std::env::args_os()));
}
