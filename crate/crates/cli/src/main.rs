use clap::Parser;

fn main() {
    let cli = match qbg_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(1);
        }
        Err(e) => e.exit(),
    };
    if let Err(e) = qbg_cli::run(cli) {
        eprintln!("qbg: {e}");
        std::process::exit(e.exit_code());
    }
}
