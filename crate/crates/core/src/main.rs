fn main() -> std::process::ExitCode {
    hexcryst::cli::main()
}
