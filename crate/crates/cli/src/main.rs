use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(apdist_cli::main_with_args(std::env::args_os()))
}
