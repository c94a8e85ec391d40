fn main() {
    std::process::exit(evohom::cli::run(std::env::args_os()));
}
