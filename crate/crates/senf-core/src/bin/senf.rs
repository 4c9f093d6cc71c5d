use std::process::ExitCode;

fn main() -> ExitCode {
    senf_core::cli::main_entry()
}
