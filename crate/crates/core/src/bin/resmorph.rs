fn main() {
    std::process::exit(resmorph::cli::main());
}
