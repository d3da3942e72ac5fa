fn main() {
    std::process::exit(edcrit::cli::main());
}
