fn main() -> std::process::ExitCode {
    rpkit::cli::main()
}
