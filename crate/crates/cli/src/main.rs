fn main() {
    std::process::exit(silm_cli::cli_main(std::env::args_os()));
}
