//! Silver-standard labels for multi-event sentences with the three
//! selection strategies, using the pretrained reference model as the
//! single-event generator.

use multievent::modelkit::{GenerationConfig, HashingEmbedder, LexicalNli};
use multievent::silverlab::{build_silver_dataset, SilverBackends, SilverConfig, Strategy};
use multievent::splitter::HeuristicOie;
use multievent::toydata::{reference_model, toy_contexts};

fn main() -> multievent::Result<()> {
    let model = reference_model()?;
    let oie = HeuristicOie::default();
    let embedder = HashingEmbedder::default();
    let nli = LexicalNli;
    let contexts: Vec<_> = toy_contexts(8, 5)
        .into_iter()
        .map(|c| (c.context, c.events.into_iter().map(|(_, m)| m).collect::<Vec<_>>()))
        .collect();
    let backends = SilverBackends { seq2seq: Some(&model), oie: Some(&oie), embedder: Some(&embedder), nli: Some(&nli) };

    for strategy in [Strategy::Split, Strategy::Overlap, Strategy::Nli] {
        let config = SilverConfig {
            strategy,
            generation: GenerationConfig { beam_size: 5, max_tokens: 20, num_return: 5 },
            ..Default::default()
        };
        let out = build_silver_dataset(&contexts, &config, backends)?;
        let rejected = out.audit.iter().filter(|a| !a.decision.kept).count();
        println!("{strategy:?}: {} records, {} candidates rejected", out.records.len(), rejected);
        for r in out.records.iter().take(3) {
            println!("    {} | {} | {}", r.event.surface, r.relation.name(), r.inference);
        }
    }
    Ok(())
}
