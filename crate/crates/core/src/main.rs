fn main() {
    std::process::exit(photon_router::cli::main_entry(std::env::args_os()));
}
