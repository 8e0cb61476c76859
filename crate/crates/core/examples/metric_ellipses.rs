//! Level curves `v^T S(x) v = level` of the recovered metric around a few
//! anchor points, printed as CSV for plotting.
//!
//! ```bash
//! cargo run --example metric_ellipses > ellipses.csv
//! ```

use contraction_metric::prelude::*;

fn main() -> Result<()> {
    let (system, exact, rhs) = linear_example();
    let kernel = wendland_c8(0.9)?;
    let points = make_grid(&GridSpec::nodes(vec![[-1.0, 1.0], [-1.0, 1.0]], 0.125))?;
    let solution = recover(&system, &kernel, &points, &rhs, SolveOptions::default())?;

    println!("anchor_id,source,x,y");
    let anchors = [[0.0, 0.0], [0.5, 0.5], [-0.5, 0.5], [0.5, -0.5], [-0.5, -0.5]];
    for (id, anchor) in anchors.iter().enumerate() {
        for (source, s) in [("recovered", solution.eval_s(anchor)), ("exact", exact.value(anchor))] {
            for p in ellipse_points(anchor, &s, 0.01, 48)? {
                println!("{id},{source},{},{}", p[0], p[1]);
            }
        }
    }
    Ok(())
}
