fn main() {
    std::process::exit(cavmag::cli::run());
}
