fn main() {
    std::process::exit(sourceforge::cli::run(std::env::args_os()));
}
