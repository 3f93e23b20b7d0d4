use clap::Parser;

fn main() -> std::process::ExitCode {
    abft_lab::cli::run(abft_lab::cli::Cli::parse())
}
