fn main() {
    std::process::exit(cone_soliton::cli::main_entry());
}
