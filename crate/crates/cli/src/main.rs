fn main() {
    std::process::exit(botwatch_cli::run(std::env::args_os()));
}
