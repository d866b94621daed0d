use clap::Parser;
use trackgnn::cli::{run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    let code = run(&cfg, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
