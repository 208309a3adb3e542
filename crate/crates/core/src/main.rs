fn main() {
    std::process::exit(trapwalk::cli::run(std::env::args_os()));
}
