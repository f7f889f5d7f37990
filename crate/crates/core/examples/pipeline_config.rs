//! Parses a pipeline config, shows how problems are reported, and prints the
//! effective config with every default filled in.
//!
//! cargo run --example pipeline_config

use xlingual::cli::{Overrides, PipelineConfig};

fn main() {
    let broken = "embedding.dim = -1\nembedding.dmi = 100\ncorpus.train_fraction = 1.0\n";
    match PipelineConfig::from_text(broken, &Overrides::default()) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("{e}\n"),
    }

    let text = "# low-resource run\nseed = 3\nembedding.subsample_t = 0.001\nsweep.fractions = 0.1, 0.5, 1.0\n";
    let overrides = Overrides { out_dir: Some("runs/demo".into()), ..Overrides::default() };
    let cfg = PipelineConfig::from_text(text, &overrides).expect("valid config");
    print!("{}", cfg.to_text());
}
