//! Runs catalog scenarios and prints the Monte Carlo summary.
//!
//! ```text
//! cargo run --release --example simulation_study -- [REPLICATIONS] [WORKERS] [NAMES...]
//! ```

use drlogit::sim::{run_scenario, select_scenarios, text_table, MonteCarloConfig};

fn main() -> drlogit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let reps: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(200);
    let workers: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let names: Vec<String> = if args.len() > 2 {
        args[2..].to_vec()
    } else {
        ["S1", "S2", "S3", "S4"].map(String::from).to_vec()
    };
    let cfg = MonteCarloConfig {
        workers,
        ..MonteCarloConfig::default()
    };
    for sc in select_scenarios(&names)? {
        let sc = sc.with_replications(reps);
        let start = std::time::Instant::now();
        let summary = run_scenario(&sc, &cfg)?;
        println!("{} (g correct: {}, f correct: {})", sc.description, sc.g_correct, sc.f_correct);
        print!("{}", text_table(&summary.rows));
        println!("elapsed {:.2?}\n", start.elapsed());
    }
    Ok(())
}
