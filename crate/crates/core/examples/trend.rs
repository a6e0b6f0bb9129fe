//! Trains the standard variants on synthetic FH37K-shaped data and prints the
//! failure table.
//!
//! `cargo run --release -p lcp-core --example trend [config-file]`

use lcp_core::schema::fh37k_default;
use lcp_core::trainer::experiment::{render_failure_table, run_experiment, standard_config, standard_variants};
use lcp_core::trainer::{generate_synthetic, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg: RunConfig = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?.parse()?,
        None => standard_config(),
    };
    let schema = fh37k_default();
    let data = generate_synthetic(&schema, &cfg.data)?;
    let results = run_experiment(&schema, &data, &standard_variants(&cfg.train))?;
    print!("{}", render_failure_table(&results));
    for r in &results {
        if let Some(e) = &r.last_epoch {
            println!(
                "{}: loss {:.4} p_ex {:.4} p_d {:.4} enforced acc {:.2}",
                r.label,
                e.loss,
                e.p_ex,
                e.p_d,
                100.0 * r.enforced.acc_avg
            );
        }
    }
    Ok(())
}
