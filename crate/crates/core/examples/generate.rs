//! Beam search over the bundled example prompts.

use multievent::modelkit::{batch_generate, GenerationConfig};
use multievent::toydata::reference_model;

fn main() -> multievent::Result<()> {
    let model = reference_model()?;
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/example_prompts.txt");
    let prompts: Vec<String> = std::fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    let config = GenerationConfig::default();
    let out = batch_generate(&model, &prompts, &config, &|done, total| log::debug!("{done}/{total}"));
    for p in &prompts {
        println!("{p}");
        match &out[p] {
            Ok(beams) => beams.iter().for_each(|b| println!("    {:>8.3}  {}", b.score, b.text)),
            Err(e) => println!("    failed: {e}"),
        }
    }
    Ok(())
}
