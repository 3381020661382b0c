use clap::Parser;

fn main() {
    let cli = hardy_cli::Cli::parse();
    let code = hardy_cli::run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
