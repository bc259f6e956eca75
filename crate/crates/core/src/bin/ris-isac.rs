fn main() {
    std::process::exit(ris_isac::cli::main_with_args(std::env::args_os()));
}
