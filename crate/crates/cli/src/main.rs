use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bvn_cli::run(std::env::args_os(), &mut std::io::stdout()))
}
