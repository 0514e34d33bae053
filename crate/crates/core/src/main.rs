use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = mellipsoid::cli::run(std::env::args_os());
    // Write failures (a closed pipe, say) leave nothing useful to report.
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
