use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(veblen_dyn::main_with_args(std::env::args_os()))
}
