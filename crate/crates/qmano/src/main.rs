fn main() {
    std::process::exit(qmano::cli::run());
}
