fn main() {
    std::process::exit(liftpir::cli::main());
}
