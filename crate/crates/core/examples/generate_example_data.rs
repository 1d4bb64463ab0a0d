//! Writes `data/binary_beta0.csv`: 2000 draws from the `S1b0-bin` law (β* = 0, binary Z).
//!
//! ```text
//! cargo run --example generate_example_data -- [OUTPUT]
//! ```

use std::path::PathBuf;

use drlogit::io::write_dataset_file;
use drlogit::sim::{sample_binary, select_scenarios};

const SEED: u64 = 20_260_101;
const N: usize = 2000;

fn main() -> drlogit::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/binary_beta0.csv"));
    let sc = select_scenarios(&["S1b0-bin".to_string()])?.remove(0);
    let data = sample_binary(&sc.law, N, SEED)?;
    write_dataset_file(&out, &data)?;
    println!("wrote {} rows ({} with y = 1) to {}, seed {SEED}", data.n(), data.count_y1(), out.display());
    Ok(())
}
