//! Error table for the linear example on refined grids over `[-1, 1]^2`.
//!
//! ```bash
//! cargo run --release --example convergence_table            # 1/2 .. 1/16
//! cargo run --release --example convergence_table -- 5       # down to 1/32
//! ```

use contraction_metric::prelude::*;
use std::time::Instant;

fn main() -> Result<()> {
    env_logger::init();
    let levels: i32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4);
    let (system, exact, rhs) = linear_example();
    let kernel = wendland_c8(0.9)?;
    let square = vec![[-1.0, 1.0], [-1.0, 1.0]];
    let alphas: Vec<f64> = (1..=levels).map(|k| 0.5f64.powi(k)).collect();
    let check = GridSpec::cell_centres(square.clone(), 1.0 / 64.0);

    let start = Instant::now();
    let report = convergence_study(&system, &exact, &rhs, &kernel, &alphas, &square, &check, SolveOptions::default())?;
    println!("{:>9} {:>7} {:>12} {:>9} {:>12} {:>9}", "alpha", "N", "e_s", "ratio", "e", "ratio");
    for row in &report.rows {
        let fmt = |r: Option<f64>| r.map(|v| format!("{v:.4}")).unwrap_or_default();
        println!(
            "{:>9} {:>7} {:>12.4e} {:>9} {:>12.4e} {:>9}",
            format!("1/{}", (1.0 / row.alpha).round()),
            row.points,
            row.e_s,
            fmt(row.ratio_s),
            row.e,
            fmt(row.ratio)
        );
    }
    println!("reference ratio 2^(sigma-1-n/2) = {:.4}", report.reference_ratio);
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
