use clap::Parser;
use sqzamp_cli::cli::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = sqzamp_cli::run(&cli, &mut stdout) {
        for line in e.to_string().lines() {
            eprintln!("error: {line}");
        }
        std::process::exit(e.exit_code());
    }
}
