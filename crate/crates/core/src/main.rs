fn main() -> std::process::ExitCode {
    errfreq::cli::main()
}
