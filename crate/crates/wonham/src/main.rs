fn main() {
    let code = wonham::cli::dispatch(std::env::args());
    std::process::exit(code);
}
