fn main() {
    std::process::exit(cicq_cli::app::cli_main(std::env::args()));
}
