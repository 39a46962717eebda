fn main() -> std::process::ExitCode {
    irrecall::cli::main()
}
