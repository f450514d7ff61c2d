fn main() {
    std::process::exit(ckdse::cli::run(std::env::args_os()));
}
