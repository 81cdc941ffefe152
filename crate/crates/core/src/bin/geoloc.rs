fn main() {
    std::process::exit(geoloc::cli::main_with_args(std::env::args_os()));
}
