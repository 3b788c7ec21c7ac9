use clap::Parser;

use tlbm_cli::{dispatch, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let result = dispatch(&cli, &mut stdout.lock(), &mut stderr.lock());
    if let Err(e) = result {
        eprintln!("tlbm: {e}");
        std::process::exit(e.exit_code());
    }
}
