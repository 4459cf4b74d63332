fn main() {
    std::process::exit(dualskip::cli::run(std::env::args_os()));
}
