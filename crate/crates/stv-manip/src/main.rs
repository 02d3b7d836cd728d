use std::process::ExitCode;

fn main() -> ExitCode {
    stv_manip::cli::run()
}
