fn main() {
    std::process::exit(qmodular::cli::run());
}
