use clap::Parser;
use gpucb_bench::Cli;

fn main() {
    let cli = Cli::parse();
    std::process::exit(gpucb_bench::execute(cli));
}
