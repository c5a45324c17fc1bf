//! Runs every hypothesis check on a configuration document and prints the
//! verdict, as the `verify` subcommand does.

use nonlocal_saddle::cli::run_verify;
use nonlocal_saddle::config::parse_config;
use nonlocal_saddle::Result;

const CONFIG: &str = r#"{
    "kernel": {"family": "fractional", "s": 0.5, "theta": 1.0},
    "mesh": {"n_elements": 64},
    "nonlinearity": {"family": "saturating", "m": 20.0, "delta": 2.0, "g": {"type": "constant", "value": 1.0}}
}"#;

fn main() -> Result<()> {
    let cfg = parse_config(CONFIG)?;
    let dir = std::env::temp_dir().join("nonlocal-saddle-verify");
    std::fs::create_dir_all(&dir)?;
    let outcome = run_verify(&cfg, &dir)?;
    println!("{outcome:?}");
    print!("{}", std::fs::read_to_string(dir.join("verdict.json"))?);
    Ok(())
}
