fn main() {
    std::process::exit(ldts::cli::run(std::env::args_os()));
}
