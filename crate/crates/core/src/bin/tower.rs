fn main() -> std::process::ExitCode {
    tower::cli::main()
}
