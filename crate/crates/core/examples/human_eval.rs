//! Blinded rating sheets for two systems, filled in by three simulated
//! raters, then aggregated by majority vote.

use multievent::evalkit::human::{load_ratings, write_hit_csv, write_key_csv, HitRow};
use multievent::evalkit::{export_human_eval, score_human_eval, HumanEvalItem};
use multievent::schema::RelationType;

fn main() -> multievent::Result<()> {
    let dir = tempdir()?;
    let context = "John insulted Mary, so she didn't reply when he called her";
    let mut items = Vec::new();
    for (model, inference) in [("unadapted", "the phone rings"), ("fine-tuned", "Mary feels hurt")] {
        for relation in [RelationType::Causes, RelationType::IsAfter] {
            items.push(HumanEvalItem {
                context: context.into(),
                event: "insulted".into(),
                relation,
                inference: inference.into(),
                model: model.into(),
                ratings: Vec::new(),
            });
        }
    }
    let (rows, key) = export_human_eval(&items, 7);
    let (hits, key_path, rated) = (dir.join("hits.csv"), dir.join("key.csv"), dir.join("rated.csv"));
    write_hit_csv(std::fs::File::create(&hits)?, &rows)?;
    write_key_csv(std::fs::File::create(&key_path)?, &key)?;
    println!("exported {} rows; systems are blinded as {:?}", rows.len(), rows.iter().map(|r| &r.system).collect::<std::collections::BTreeSet<_>>());

    // three raters; they like inferences that mention Mary
    let mut filled: Vec<HitRow> = Vec::new();
    for rater in 0..3 {
        for r in &rows {
            let good = r.inference.contains("Mary");
            let level = if good { "H" } else if rater == 0 { "M" } else { "L" };
            filled.push(HitRow {
                likelihood: level.into(),
                specificity: level.into(),
                relevance: if good { "H" } else { "L" }.into(),
                ..r.clone()
            });
        }
    }
    write_hit_csv(std::fs::File::create(&rated)?, &filled)?;

    let summary = score_human_eval(&load_ratings(&rated, &key_path, &hits)?);
    println!("\n{}", summary.to_markdown());
    Ok(())
}

fn tempdir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("multievent-human-eval-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
