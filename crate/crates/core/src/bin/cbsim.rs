fn main() -> std::process::ExitCode {
    cbsim::cli::main()
}
