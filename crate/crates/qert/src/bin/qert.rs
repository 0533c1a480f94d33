fn main() {
    std::process::exit(qert::cli::run());
}
