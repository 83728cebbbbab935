fn main() {
    std::process::exit(eapm::cli::run(std::env::args_os()));
}
