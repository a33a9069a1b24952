fn main() -> std::process::ExitCode {
    postforge::cli::main()
}
