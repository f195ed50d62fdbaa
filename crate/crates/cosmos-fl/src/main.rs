use std::process::ExitCode;

fn main() -> ExitCode {
    cosmos_fl::cli::main()
}
