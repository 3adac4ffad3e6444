fn main() {
    if let Err(e) = viewpath::cli::run(std::env::args_os()) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
