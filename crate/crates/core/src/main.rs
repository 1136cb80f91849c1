fn main() {
    std::process::exit(dynact::cli::run(std::env::args_os()));
}
