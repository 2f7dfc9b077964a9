fn main() -> std::process::ExitCode {
    pillarforge::cli::main()
}
