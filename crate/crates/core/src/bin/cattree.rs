fn main() -> std::process::ExitCode {
    catalytic_tree::cli::main_entry()
}
