fn main() {
    std::process::exit(maxcorr::cli::main_with_args(std::env::args_os()));
}
