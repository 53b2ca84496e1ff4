use anyhow::Result;
use clap::Parser;

fn main() -> Result<()> {
    let cli = plbp_cli::Cli::parse();
    let cfg = plbp_cli::resolve(&cli)?;
    plbp_cli::execute(&cfg, &cli.out)?;
    println!("wrote results to {}", cli.out.display());
    Ok(())
}
