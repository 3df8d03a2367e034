//! Fine-tunes the reference model on target-marked examples and saves a
//! run directory (config, loss history, model, special tokens).

use std::collections::BTreeMap;

use multievent::corpus::{split_dataset, SplitConfig};
use multievent::modelkit::{fine_tune, generate, GenerationConfig, RunDir, TrainConfig};
use multievent::schema::RelationType;
use multievent::seqio::{serialize_prompt, serialize_records};
use multievent::toydata::{held_out_sentence, reference_model, toy_dataset};

fn main() -> multievent::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "runs/fine_tune_example".into());
    let (contexts, records) = toy_dataset(200, 11);
    let contexts: BTreeMap<_, _> = contexts.into_iter().map(|c| (c.id.clone(), c)).collect();
    let [train, _, _] = split_dataset(&records, &SplitConfig::default())?;
    let examples = serialize_records(&train.records, &contexts)?;

    let mut model = reference_model()?;
    let config = TrainConfig { epochs: 4, batch_size: 16, learning_rate: 5e-3, weight_decay: 0.0, ..Default::default() };
    let report = fine_tune(&mut model, &examples, &config)?;
    println!("{} examples, epoch losses {:?}", examples.len(), report.epoch_losses);

    let run = RunDir::create(out.as_ref())?;
    run.persist(&config, &report, &model)?;
    println!("saved to {out}\n");

    let (ctx, events) = held_out_sentence();
    let gen = GenerationConfig { beam_size: 5, max_tokens: 20, num_return: 3 };
    for e in &events {
        let beams = generate(&model, &serialize_prompt(&ctx, e, RelationType::Causes)?, &gen)?;
        let texts: Vec<&str> = beams.iter().map(|b| b.text.as_str()).collect();
        println!("{:<13} Causes: {}", e.surface, texts.join(" | "));
    }
    Ok(())
}
