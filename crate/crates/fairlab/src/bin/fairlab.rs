use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fairlab::cli::run() as u8)
}
