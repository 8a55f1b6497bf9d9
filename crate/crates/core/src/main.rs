fn main() {
    std::process::exit(gafmtf::cli::run(std::env::args_os()));
}
