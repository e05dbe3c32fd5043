use std::process::ExitCode;

fn main() -> ExitCode {
    gdesprit::cli::main_with(std::env::args_os())
}
