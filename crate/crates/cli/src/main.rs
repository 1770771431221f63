fn main() -> std::process::ExitCode {
    crowdwalk_cli::main_entry()
}
