fn main() {
    std::process::exit(nnd::cli::dispatch(std::env::args_os()));
}
