fn main() -> std::process::ExitCode {
    dskit::cli::main()
}
