use std::process::ExitCode;

fn main() -> ExitCode {
    match cptsim::cli_main(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cptsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
