use clap::Parser;
use cpmp_dlts::bench::{run, Cli};

fn main() -> anyhow::Result<()> {
    let summary = run(Cli::parse())?;
    if !summary.is_empty() {
        println!("{summary}");
    }
    Ok(())
}
