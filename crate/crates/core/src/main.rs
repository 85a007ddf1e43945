use std::process::ExitCode;

fn main() -> ExitCode {
    mzi_squeeze::cli::main_with_args(std::env::args_os())
}
