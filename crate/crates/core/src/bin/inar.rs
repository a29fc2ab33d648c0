use std::process::ExitCode;

fn main() -> ExitCode {
    inar::cli::main_with_args(std::env::args_os())
}
