fn main() {
    std::process::exit(subreg::cli::run(std::env::args_os()));
}
