fn main() {
    std::process::exit(divratio_cli::main_entry());
}
