fn main() {
    std::process::exit(lozi_core::cli::main_entry());
}
