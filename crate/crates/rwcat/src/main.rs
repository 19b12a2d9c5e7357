fn main() {
    std::process::exit(rwcat::cli::run(std::env::args_os()));
}
