fn main() {
    std::process::exit(memlab::cli::dispatch(std::env::args_os()));
}
