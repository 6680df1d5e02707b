fn main() {
    std::process::exit(dosedid::cli::run());
}
