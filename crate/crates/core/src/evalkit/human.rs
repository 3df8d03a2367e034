//! Human evaluation: HIT export with blinded systems, and majority-vote
//! scoring of the returned ratings.
//!
//! Each item is rated on three axes. Likelihood and specificity use
//! High/Moderate/Low; relevance uses High/Low only.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::RelationType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    L,
    M,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Likelihood,
    Specificity,
    Relevance,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Likelihood, Axis::Specificity, Axis::Relevance];
}

/// One rater's judgement. Missing fields mean the rater skipped that axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Rating {
    pub likelihood: Option<Level>,
    pub specificity: Option<Level>,
    pub relevance: Option<Level>,
}

impl Rating {
    pub fn get(&self, axis: Axis) -> Option<Level> {
        match axis {
            Axis::Likelihood => self.likelihood,
            Axis::Specificity => self.specificity,
            Axis::Relevance => self.relevance,
        }
    }

    pub fn complete(likelihood: Level, specificity: Level, relevance: Level) -> Self {
        Rating { likelihood: Some(likelihood), specificity: Some(specificity), relevance: Some(relevance) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanEvalItem {
    pub context: String,
    pub event: String,
    pub relation: RelationType,
    pub inference: String,
    pub model: String,
    #[serde(default)]
    pub ratings: Vec<Rating>,
}

/// One row of the HIT sheet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRow {
    pub item_id: String,
    pub context: String,
    pub target_event: String,
    pub relation: String,
    pub question: String,
    pub inference: String,
    pub system: String,
    pub likelihood: String,
    pub specificity: String,
    pub relevance: String,
}

/// Maps blinded ids back to models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRow {
    pub item_id: String,
    pub system: String,
    pub model: String,
}

/// Picks `n` items from `pool` without replacement (all when `n ≥ len`).
pub fn sample_events<T: Clone>(pool: &[T], n: usize, seed: u64) -> Vec<T> {
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(n);
    idx.sort_unstable();
    idx.into_iter().map(|i| pool[i].clone()).collect()
}

/// Builds the HIT rows and the blinding key. Models become `sys-A`,
/// `sys-B`, ... in a seeded random order, and rows are shuffled with the
/// same seed.
pub fn export_human_eval(items: &[HumanEvalItem], seed: u64) -> (Vec<HitRow>, Vec<KeyRow>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models: Vec<&str> = items.iter().map(|i| i.model.as_str()).collect::<BTreeSet<_>>().into_iter().collect();
    models.shuffle(&mut rng);
    let blind: BTreeMap<&str, String> = models.iter().enumerate().map(|(k, m)| (*m, system_name(k))).collect();
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng);
    let mut rows = Vec::with_capacity(items.len());
    let mut key = Vec::with_capacity(items.len());
    for (k, &i) in order.iter().enumerate() {
        let item = &items[i];
        let item_id = format!("h{:05}", k + 1);
        let system = blind[item.model.as_str()].clone();
        rows.push(HitRow {
            item_id: item_id.clone(),
            context: item.context.clone(),
            target_event: item.event.clone(),
            relation: item.relation.name().to_string(),
            question: item.relation.question().to_string(),
            inference: item.inference.clone(),
            system: system.clone(),
            likelihood: String::new(),
            specificity: String::new(),
            relevance: String::new(),
        });
        key.push(KeyRow { item_id, system, model: item.model.clone() });
    }
    (rows, key)
}

fn system_name(k: usize) -> String {
    let mut name = String::new();
    let mut k = k;
    loop {
        name.insert(0, (b'A' + (k % 26) as u8) as char);
        if k < 26 {
            break;
        }
        k = k / 26 - 1;
    }
    format!("sys-{name}")
}

const HIT_HEADER: [&str; 10] = [
    "item_id", "context", "target_event", "relation", "question", "inference", "system", "likelihood", "specificity",
    "relevance",
];

/// Writes rows as CSV. An empty slice still gets the header.
pub fn write_csv_rows<W: Write, T: Serialize>(writer: W, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_hit_csv<W: Write>(writer: W, rows: &[HitRow]) -> Result<()> {
    write_csv_rows(writer, rows, &HIT_HEADER)
}

pub fn write_key_csv<W: Write>(writer: W, rows: &[KeyRow]) -> Result<()> {
    write_csv_rows(writer, rows, &["item_id", "system", "model"])
}

/// A returned rating row: the HIT columns plus a rater id. Only the ids and
/// rating columns are read.
#[derive(Debug, Clone, Deserialize)]
struct RatedRow {
    item_id: String,
    #[serde(default)]
    likelihood: String,
    #[serde(default)]
    specificity: String,
    #[serde(default)]
    relevance: String,
}

fn parse_level(s: &str, axis: Axis) -> Result<Option<Level>> {
    let level = match s.trim().to_ascii_uppercase().as_str() {
        "" => return Ok(None),
        "H" => Level::H,
        "M" => Level::M,
        "L" => Level::L,
        other => return Err(Error::data(format!("unknown rating {other:?}"))),
    };
    if axis == Axis::Relevance && level == Level::M {
        return Err(Error::data("relevance has no M level"));
    }
    Ok(Some(level))
}

/// Joins rated HIT rows (one row per rater and item) with the blinding key
/// and the exported rows.
pub fn load_ratings(rated_csv: &Path, key_csv: &Path, hit_csv: &Path) -> Result<Vec<HumanEvalItem>> {
    let mut key: BTreeMap<String, String> = BTreeMap::new();
    for row in csv::Reader::from_path(key_csv)?.deserialize() {
        let row: KeyRow = row?;
        key.insert(row.item_id, row.model);
    }
    let mut items: BTreeMap<String, HumanEvalItem> = BTreeMap::new();
    for row in csv::Reader::from_path(hit_csv)?.deserialize() {
        let row: HitRow = row?;
        let model = key
            .get(&row.item_id)
            .ok_or_else(|| Error::data(format!("item {} missing from the key", row.item_id)))?;
        let relation = row.relation.parse().map_err(|_| Error::data(format!("bad relation {:?}", row.relation)))?;
        items.insert(
            row.item_id.clone(),
            HumanEvalItem {
                context: row.context,
                event: row.target_event,
                relation,
                inference: row.inference,
                model: model.clone(),
                ratings: Vec::new(),
            },
        );
    }
    for row in csv::Reader::from_path(rated_csv)?.deserialize() {
        let row: RatedRow = row?;
        let item = items
            .get_mut(&row.item_id)
            .ok_or_else(|| Error::data(format!("rated item {} was never exported", row.item_id)))?;
        item.ratings.push(Rating {
            likelihood: parse_level(&row.likelihood, Axis::Likelihood)?,
            specificity: parse_level(&row.specificity, Axis::Specificity)?,
            relevance: parse_level(&row.relevance, Axis::Relevance)?,
        });
    }
    Ok(items.into_values().collect())
}

/// Majority level among `votes`; ties go to the lower level.
pub fn majority(votes: &[Level]) -> Option<Level> {
    let count = |l: Level| votes.iter().filter(|v| **v == l).count();
    let mut best: Option<(Level, usize)> = None;
    for level in [Level::L, Level::M, Level::H] {
        let c = count(level);
        if c > 0 && best.is_none_or(|(_, b)| c > b) {
            best = Some((level, c));
        }
    }
    best.map(|(l, _)| l)
}

/// Percentage of items at each level.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LevelShares {
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HumanEvalSummary {
    pub models: BTreeMap<String, BTreeMap<Axis, LevelShares>>,
    pub items_scored: BTreeMap<String, usize>,
    /// Items without a complete rating from every rater.
    pub excluded: usize,
}

pub fn score_human_eval(items: &[HumanEvalItem]) -> HumanEvalSummary {
    let mut summary = HumanEvalSummary::default();
    let mut counts: BTreeMap<&str, BTreeMap<Axis, [usize; 3]>> = BTreeMap::new();
    for item in items {
        let complete =
            !item.ratings.is_empty() && item.ratings.iter().all(|r| Axis::ALL.iter().all(|a| r.get(*a).is_some()));
        if !complete {
            summary.excluded += 1;
            continue;
        }
        let per_model = counts.entry(item.model.as_str()).or_default();
        for axis in Axis::ALL {
            let votes: Vec<Level> = item.ratings.iter().filter_map(|r| r.get(axis)).collect();
            let level = majority(&votes).expect("complete ratings");
            per_model.entry(axis).or_default()[level as usize] += 1;
        }
        *summary.items_scored.entry(item.model.clone()).or_default() += 1;
    }
    for (model, axes) in counts {
        let mut out = BTreeMap::new();
        for (axis, c) in axes {
            let total = c.iter().sum::<usize>() as f64;
            let pct = |n: usize| 100.0 * n as f64 / total;
            out.insert(
                axis,
                LevelShares {
                    h: pct(c[Level::H as usize]),
                    m: (axis != Axis::Relevance).then(|| pct(c[Level::M as usize])),
                    l: pct(c[Level::L as usize]),
                },
            );
        }
        summary.models.insert(model.to_string(), out);
    }
    summary
}

impl HumanEvalSummary {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Model | Metric | H | M | L |\n|---|---|---:|---:|---:|\n");
        for (model, axes) in &self.models {
            for (axis, s) in axes {
                let m = s.m.map(|m| format!("{m:.0}")).unwrap_or_else(|| "-".into());
                let name = format!("{axis:?}");
                out.push_str(&format!("| {model} | {name} | {:.0} | {m} | {:.0} |\n", s.h, s.l));
            }
        }
        if self.excluded > 0 {
            out.push_str(&format!("\n{} item(s) excluded for missing ratings\n", self.excluded));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(model: &str, ratings: Vec<Rating>) -> HumanEvalItem {
        HumanEvalItem {
            context: "John insulted Mary".into(),
            event: "insulted".into(),
            relation: RelationType::Causes,
            inference: "Mary feels hurt".into(),
            model: model.into(),
            ratings,
        }
    }

    #[test]
    fn majority_rule() {
        assert_eq!(majority(&[Level::H, Level::H, Level::L]), Some(Level::H));
        assert_eq!(majority(&[Level::H, Level::M]), Some(Level::M));
        assert_eq!(majority(&[Level::H, Level::M, Level::L]), Some(Level::L));
        assert_eq!(majority(&[]), None);
    }

    #[test]
    fn all_high_is_100() {
        let r = Rating::complete(Level::H, Level::H, Level::H);
        let s = score_human_eval(&[item("a", vec![r; 3]), item("a", vec![r; 3])]);
        let shares = s.models["a"][&Axis::Likelihood];
        assert_eq!((shares.h, shares.m, shares.l), (100.0, Some(0.0), 0.0));
        assert_eq!(s.models["a"][&Axis::Relevance].m, None);
    }

    #[test]
    fn incomplete_items_are_excluded() {
        let r = Rating::complete(Level::H, Level::H, Level::H);
        let partial = Rating { relevance: None, ..r };
        let s = score_human_eval(&[item("a", vec![r, partial]), item("a", vec![]), item("a", vec![r])]);
        assert_eq!(s.excluded, 2);
        assert_eq!(s.items_scored["a"], 1);
    }

    #[test]
    fn export_is_blinded_and_seeded() {
        let items: Vec<_> = (0..6).map(|i| item(["x", "y", "z"][i % 3], vec![])).collect();
        let (rows, key) = export_human_eval(&items, 7);
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.system.starts_with("sys-") && !["x", "y", "z"].contains(&r.system.as_str())));
        assert_eq!(export_human_eval(&items, 7), (rows.clone(), key.clone()));
        let mut buf = Vec::new();
        write_hit_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn system_names() {
        assert_eq!(system_name(0), "sys-A");
        assert_eq!(system_name(25), "sys-Z");
        assert_eq!(system_name(26), "sys-AA");
    }

    #[test]
    fn relevance_rejects_moderate() {
        assert!(parse_level("M", Axis::Relevance).is_err());
        assert_eq!(parse_level("m", Axis::Likelihood).unwrap(), Some(Level::M));
        assert_eq!(parse_level(" ", Axis::Likelihood).unwrap(), None);
    }
}
