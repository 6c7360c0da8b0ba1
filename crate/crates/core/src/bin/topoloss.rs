fn main() {
    std::process::exit(topoloss::commands::run_cli(std::env::args_os()));
}
