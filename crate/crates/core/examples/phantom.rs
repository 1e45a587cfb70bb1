//! Renders the phantom and a textured test image as 16-bit PGM and PFM.


use sourceforge::experiments::{shepp_logan, textured, PHANTOM_VARIANT};
use sourceforge::io::{write_image, ImageFormat};

fn main() -> sourceforge::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let dir = std::env::temp_dir();
    for (name, img) in [("phantom", shepp_logan(n, n)?), ("textured", textured(n, n)?)] {
        for (ext, fmt) in [("pgm", ImageFormat::Pgm16), ("pfm", ImageFormat::Pfm)] {
            let p = dir.join(format!("{name}.{ext}"));
            write_image(&p, &img, fmt)?;
            println!("{}", p.display());
        }
    }
    println!("{PHANTOM_VARIANT}");
    Ok(())
}
