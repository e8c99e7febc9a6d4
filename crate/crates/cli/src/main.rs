fn main() {
    std::process::exit(tgpd_cli::run(std::env::args_os()));
}
