fn main() {
    std::process::exit(lpradon::cli::cli_main(std::env::args_os()));
}
