fn main() {
    std::process::exit(cuspbench::cli::main_entry());
}
