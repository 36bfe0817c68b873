use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DISCVAR_LOG", "warn")).init();
    ExitCode::from(discvar::cli::run_from(std::env::args_os()) as u8)
}
