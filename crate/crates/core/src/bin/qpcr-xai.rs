fn main() -> std::process::ExitCode {
    qpcr_xai::cli::main()
}
