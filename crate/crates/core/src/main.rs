fn main() -> std::process::ExitCode {
    mfgnet::cli::main()
}
