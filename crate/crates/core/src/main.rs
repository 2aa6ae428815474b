fn main() -> std::process::ExitCode {
    propeller_core::cli::main()
}
