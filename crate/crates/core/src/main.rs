fn main() {
    std::process::exit(friction_stokes::cli::run(std::env::args_os()));
}
