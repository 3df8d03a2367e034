//! Automatic metrics, evaluation reports, diversity analysis and human
//! evaluation support.

pub mod diversity;
pub mod human;
pub mod metrics;
pub mod report;

pub use diversity::{diversity_projection, silhouette, tsne, write_plot_csv, DiversityResult, ProjectedPoint, TsneConfig};
pub use human::{export_human_eval, score_human_eval, HumanEvalItem, HumanEvalSummary, Level, Rating};
pub use metrics::{aggregate_max_over_refs, bleu_n, embed_score, rouge_l, tokenize_v1, Aggregate};
pub use report::{
    evaluate_model, evaluate_references, group_records, score_generations, EvalGroup, EvalReport, MetricRow,
    ModelScores,
};
