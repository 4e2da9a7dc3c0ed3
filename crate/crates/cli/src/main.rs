use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(mavol_lab::app::main_with(std::env::args_os()))
}
