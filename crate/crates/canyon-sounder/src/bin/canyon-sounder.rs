fn main() {
    std::process::exit(canyon_sounder::cli::run(std::env::args_os()));
}
