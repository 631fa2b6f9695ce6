fn main() {
    std::process::exit(reset_orbit::cli::run(std::env::args_os()));
}
