fn main() {
    std::process::exit(hubforge_cli::run(std::env::args_os()));
}
