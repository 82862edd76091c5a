fn main() {
    std::process::exit(nrlevy::cli::main());
}
