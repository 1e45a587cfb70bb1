//! Artifact formats: PGM/PFM images, CSV series, JSON summaries and run manifests.

mod manifest;
mod pnm;
mod series;

pub use manifest::{config_hash, load_toml, write_json, RunManifest, MANIFEST_FILE};
pub use pnm::{
    read_pfm, read_pfm_field, read_pfm_image, read_pgm, sidecar_path, write_image, write_pfm,
    write_pfm_field, write_pfm_image, write_pfm_spectrum, write_pgm16, ImageFormat, Pfm, PgmScaling,
};
pub use series::{format_f64, read_series_csv, write_series_csv};
