//! Scores the unadapted reference model and a fine-tuned copy on held-out
//! synthetic contexts, plus the references against themselves.

use std::collections::BTreeMap;

use multievent::corpus::{split_dataset, SplitConfig};
use multievent::evalkit::{evaluate_model, evaluate_references, group_records, EvalReport};
use multievent::modelkit::{fine_tune, GenerationConfig, HashingEmbedder, TrainConfig};
use multievent::seqio::serialize_records;
use multievent::toydata::{reference_model, toy_dataset};

fn main() -> multievent::Result<()> {
    let (contexts, records) = toy_dataset(200, 11);
    let contexts: BTreeMap<_, _> = contexts.into_iter().map(|c| (c.id.clone(), c)).collect();
    let [train, _, test] = split_dataset(&records, &SplitConfig::default())?;

    let base = reference_model()?;
    let mut tuned = base.clone();
    let config = TrainConfig { epochs: 4, batch_size: 16, learning_rate: 5e-3, weight_decay: 0.0, ..Default::default() };
    fine_tune(&mut tuned, &serialize_records(&train.records, &contexts)?, &config)?;

    let groups = group_records(&test.records, &contexts)?;
    let embedder = HashingEmbedder::default();
    let gen = GenerationConfig { max_tokens: 20, ..Default::default() };
    let mut unadapted = evaluate_model(&base, &groups, &gen, Some(&embedder))?;
    unadapted.model = "unadapted".into();
    let mut adapted = evaluate_model(&tuned, &groups, &gen, Some(&embedder))?;
    adapted.model = "fine-tuned".into();
    let ceiling = evaluate_references(&groups, Some(&embedder))?;

    let report = EvalReport::new(vec![unadapted, adapted, ceiling]);
    println!("{} groups\n\n{}", groups.len(), report.to_markdown(false));
    Ok(())
}
