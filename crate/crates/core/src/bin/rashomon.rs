fn main() {
    std::process::exit(rashomon::cli::run(std::env::args_os()));
}
