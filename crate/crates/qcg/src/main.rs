fn main() {
    std::process::exit(qcg::cli::run());
}
