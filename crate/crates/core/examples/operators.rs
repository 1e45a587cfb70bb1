//! Adjoint consistency and norm estimates for the built-in operators.

use std::sync::Arc;

use sourceforge::operators::{
    adjoint_mismatch, power_norm, vandermonde, ComplexEmbed, Compose, Dft2Map, Grad2, LinearMap, SampledFourier,
    SamplingMask, POWER_ITERS, POWER_TOL,
};

fn main() -> sourceforge::Result<()> {
    let samples: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
    let fourier: Arc<dyn LinearMap> = Arc::new(Dft2Map::new(32, 32));
    let embed: Arc<dyn LinearMap> = Arc::new(ComplexEmbed::new(32, 32));
    let maps: Vec<(&str, Box<dyn LinearMap>)> = vec![
        ("vandermonde d=75", Box::new(vandermonde(&samples, 75)?)),
        ("grad2 32x32", Box::new(Grad2::new(32, 32)?)),
        ("S F, 9x9 low-pass", Box::new(SampledFourier::new(SamplingMask::lowpass(32, 32, 9, 9)?))),
        ("F o embed", Box::new(Compose::new(fourier, embed)?)),
    ];
    println!("{:<20} {:>12} {:>12} {:>12}", "map", "adjoint err", "norm bound", "power est.");
    for (name, m) in &maps {
        println!(
            "{name:<20} {:>12.2e} {:>12.4} {:>12.4}",
            adjoint_mismatch(m.as_ref(), 20, 0),
            m.norm_bound(),
            power_norm(m.as_ref(), POWER_ITERS, POWER_TOL)
        );
    }
    Ok(())
}
