//! Projects per-event generations for the held-out three-event sentence and
//! compares how well the unadapted and fine-tuned models separate events.
//! Writes one plot CSV per model into the directory given as argument.

use std::collections::BTreeMap;
use std::path::PathBuf;

use multievent::cli::generations_by_event;
use multievent::corpus::{split_dataset, SplitConfig};
use multievent::evalkit::{diversity_projection, write_plot_csv, TsneConfig};
use multievent::modelkit::{fine_tune, GenerationConfig, HashingEmbedder, TrainConfig};
use multievent::seqio::serialize_records;
use multievent::toydata::{held_out_sentence, reference_model, toy_dataset};

fn main() -> multievent::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&out)?;
    let (contexts, records) = toy_dataset(200, 11);
    let contexts: BTreeMap<_, _> = contexts.into_iter().map(|c| (c.id.clone(), c)).collect();
    let [train, _, _] = split_dataset(&records, &SplitConfig::default())?;
    let base = reference_model()?;
    let mut tuned = base.clone();
    let config = TrainConfig { epochs: 4, batch_size: 16, learning_rate: 5e-3, weight_decay: 0.0, ..Default::default() };
    fine_tune(&mut tuned, &serialize_records(&train.records, &contexts)?, &config)?;

    let (ctx, events) = held_out_sentence();
    let embedder = HashingEmbedder::default();
    let gen = GenerationConfig { max_tokens: 20, ..Default::default() };
    for (name, model) in [("unadapted", &base), ("fine-tuned", &tuned)] {
        let by_event = generations_by_event(model, &ctx, &events, &gen)?;
        let result = diversity_projection(&by_event, &embedder, &TsneConfig::default())?;
        let path = out.join(format!("plot_{name}.csv"));
        write_plot_csv(&result.points, &path)?;
        println!("{name:<11} silhouette {:+.4}  ({} points -> {})", result.silhouette, result.points.len(), path.display());
    }
    Ok(())
}
