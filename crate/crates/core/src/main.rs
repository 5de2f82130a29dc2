fn main() {
    std::process::exit(orient_hough::cli::run(std::env::args_os()));
}
