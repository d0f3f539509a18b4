fn main() {
    std::process::exit(satira::cli::run(std::env::args_os()));
}
