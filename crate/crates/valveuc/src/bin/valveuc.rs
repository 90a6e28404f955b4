fn main() {
    std::process::exit(valveuc::cli::run(std::env::args()));
}
