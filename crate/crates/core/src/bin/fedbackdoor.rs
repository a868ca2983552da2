fn main() {
    std::process::exit(fedbackdoor::cli::cli_main(std::env::args_os()));
}
