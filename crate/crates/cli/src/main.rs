fn main() -> std::process::ExitCode {
    mobss_cli::main_with_args(std::env::args_os())
}
