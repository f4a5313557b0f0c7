fn main() {
    std::process::exit(refnet::cli::run(std::env::args_os()));
}
