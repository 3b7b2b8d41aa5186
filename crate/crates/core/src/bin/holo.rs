use std::process::ExitCode;

fn main() -> ExitCode {
    holonomic::cli::main_from(std::env::args_os())
}
