fn main() -> std::process::ExitCode {
    bpel_reuse::cli::run(std::env::args_os())
}
