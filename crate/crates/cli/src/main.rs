use clap::Parser;
use vstar_cli::commands::emit;
use vstar_cli::{run, Cli, EXIT_OK};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli.command).and_then(|doc| emit(&doc, cli.command.output())) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
