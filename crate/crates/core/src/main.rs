fn main() {
    std::process::exit(fimest::cli::main_entry());
}
