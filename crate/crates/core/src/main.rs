use std::io::{self, BufWriter};
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = bdenum::cli::run(std::env::args_os(), &mut out, &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
