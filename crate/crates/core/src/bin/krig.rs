fn main() {
    std::process::exit(krig::cli::run());
}
