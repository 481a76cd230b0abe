fn main() -> std::process::ExitCode {
    mv_reinsure::cli::run(std::env::args_os())
}
