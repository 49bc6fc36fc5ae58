fn main() -> std::process::ExitCode {
    blurbench::cli::run()
}
