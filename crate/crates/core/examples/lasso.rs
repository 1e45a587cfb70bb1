//! Source elements for sparse polynomial regression (degree 5, optionally 20).
//!
//!     cargo run --release --example lasso [-- 20]

use sourceforge::experiments::{run_lasso_experiment, Lasso1DConfig};

fn main() -> sourceforge::Result<()> {
    let cfg = match std::env::args().nth(1).as_deref() {
        Some("20") => Lasso1DConfig::degree20(),
        _ => Lasso1DConfig::degree5(),
    };
    let rep = run_lasso_experiment(&cfg)?;
    let s = &rep.summary;
    println!("iterations      {} ({:?})", rep.solve.iterations, rep.solve.termination);
    println!("|grad G|        {:.3e}", rep.solve.final_grad_norm);
    println!("||v||           {:.4}", rep.solve.v_norm);
    println!("approximate     {}", s.approximate);
    println!("verified        {}", s.verification.passed);
    if let Some(e) = &s.error_estimate {
        println!("delta           {:.4}", e.delta);
        println!("alpha*          {:.4e}", e.alpha_star);
        println!("bound ||v||d    {:.4}", e.bound);
    }
    let support: Vec<usize> = rep
        .phi_t_v
        .iter()
        .enumerate()
        .filter(|(_, p)| (p.abs() - 1.0).abs() < 1e-6)
        .map(|(k, _)| k)
        .collect();
    println!("|Phi^T v| = 1 at powers {support:?}");
    Ok(())
}
