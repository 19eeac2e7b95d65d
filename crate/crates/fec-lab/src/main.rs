fn main() {
    std::process::exit(fec_lab::cli::cli_main(std::env::args_os()));
}
