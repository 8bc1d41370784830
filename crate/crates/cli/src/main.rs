use anyhow::Result;
use clap::Parser;

use streamscreen_cli::args::{Cli, Command};
use streamscreen_cli::{bench, compare, screen};

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Screen(args) => screen::run(args),
        Command::Compare(args) => compare::run(args),
        Command::Bench(args) => bench::run(args),
    }
}
