fn main() {
    std::process::exit(msgat::cli::main_with(std::env::args_os()));
}
