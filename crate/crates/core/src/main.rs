fn main() {
    std::process::exit(darkgauge::cli::execute(std::env::args_os()));
}
