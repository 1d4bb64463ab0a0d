fn main() -> std::process::ExitCode {
    drlogit::cli::run(std::env::args_os())
}
