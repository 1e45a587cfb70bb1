//! Sparse Fourier element via PALM, its support as a sampling mask, and a
//! comparison with low-pass and largest-coefficient masks of equal size.

use sourceforge::experiments::{run_optimal_sampling, Budget, SamplingConfig};

fn main() -> sourceforge::Result<()> {
    let cfg = SamplingConfig {
        size: [48, 48],
        target_density: Some(0.1),
        search_steps: 8,
        alpha: 0.08,
        budget: Budget {
            record_every: 50,
            ..Budget::default()
        },
        ..SamplingConfig::default()
    };
    let rep = run_optimal_sampling(&cfg)?;
    if let Some(s) = &rep.summary.beta_search {
        for (b, d) in &s.trials {
            println!("beta {b:.4} -> density {:.2}%", 100.0 * d);
        }
    }
    println!("beta = {:.4}, support {} pairs", rep.summary.beta, rep.summary.support_size);
    for row in &rep.summary.comparison {
        println!(
            "{:<8} {:>5} samples  residual {:.2e}  ||v|| {:>8.3}  error {:.4}",
            row.name, row.metrics.mask_count, row.metrics.residual, row.metrics.v_norm, row.metrics.pdhg_relative_error
        );
    }
    if let Some(n) = &rep.summary.ordering_exception {
        println!("{n}");
    }
    Ok(())
}
