fn main() {
    std::process::exit(ptws_cli::run(std::env::args()));
}
