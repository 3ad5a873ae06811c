fn main() {
    std::process::exit(halo_grating::cli::run_with_args(std::env::args_os()));
}
