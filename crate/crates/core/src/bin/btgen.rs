fn main() -> std::process::ExitCode {
    btgen::cli::main()
}
