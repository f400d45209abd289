//! The ablation grid: eight experiment clusters, each a fixed row set of
//! configuration variants around the base configuration.

use serde::{Deserialize, Serialize};

use crate::answering::{Modality, RenderStyle, RetrievalMode, TrajectoryOrder};
use crate::bench::BenchItem;
use crate::config::{AggregatorKind, PipelineConfig};
use crate::error::{Error, Result};
use crate::eval::{compute_report, MetricReport};
use crate::pipeline::{run_corpus, Backends};
use crate::storage::VideoRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cluster {
    /// Visual budget at the answerer.
    A,
    /// Visual budget at the extractor.
    B,
    /// Retrieval filtering.
    C,
    /// Temporal aggregation method.
    D,
    /// Modality drop-outs at the answerer.
    E,
    /// Chunk granularity.
    F,
    /// Representation form (structured vs prose).
    G,
    /// Trajectory alternatives (dense captions, shuffled order).
    H,
}

impl std::str::FromStr for Cluster {
    type Err = Error;

    fn from_str(s: &str) -> Result<Cluster> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Cluster::A),
            "B" => Ok(Cluster::B),
            "C" => Ok(Cluster::C),
            "D" => Ok(Cluster::D),
            "E" => Ok(Cluster::E),
            "F" => Ok(Cluster::F),
            "G" => Ok(Cluster::G),
            "H" => Ok(Cluster::H),
            other => Err(Error::UnknownCluster {
                name: other.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for Cluster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One grid row: a label and the full configuration it runs with.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub label: String,
    pub config: PipelineConfig,
}

/// Enumerates the cluster's rows. Numeric clusters list their fixed value
/// sets in descending order with the base value included; categorical
/// clusters lead with the base variant.
pub fn enumerate_cluster(cluster: Cluster, base: &PipelineConfig) -> Vec<GridRow> {
    let row = |label: String, config: PipelineConfig| GridRow { label, config };
    match cluster {
        Cluster::A => [64usize, 32, 16, 8]
            .iter()
            .map(|&frames| {
                let mut cfg = base.clone();
                cfg.answer.frames_at_answerer = frames;
                row(format!("frames_at_answerer={frames}"), cfg)
            })
            .collect(),
        Cluster::B => [60usize, 30, 15, 8]
            .iter()
            .map(|&frames| {
                let mut cfg = base.clone();
                cfg.frames_per_chunk = frames;
                row(format!("frames_per_chunk={frames}"), cfg)
            })
            .collect(),
        Cluster::C => {
            let mut rows = Vec::new();
            let mut scored = base.clone();
            scored.retrieval.mode = RetrievalMode::Scored;
            rows.push(row("retrieval=scored".into(), scored));
            let mut none = base.clone();
            none.retrieval.mode = RetrievalMode::None;
            rows.push(row("retrieval=no_filter_full_timeline".into(), none));
            let mut random = base.clone();
            random.retrieval.mode = RetrievalMode::RandomTopK;
            rows.push(row("retrieval=random_filter_top_k".into(), random));
            rows
        }
        Cluster::D => {
            let mut rows = Vec::new();
            let mut linked = base.clone();
            linked.aggregator = AggregatorKind::IdentityLink;
            rows.push(row("aggregator=identity_link".into(), linked));
            let mut summarized = base.clone();
            summarized.aggregator = AggregatorKind::LlmSummarize;
            rows.push(row("aggregator=llm_summarize".into(), summarized));
            rows
        }
        Cluster::E => {
            let mut rows = Vec::new();
            let mut both = base.clone();
            both.answer.modality = Modality::TextAndFrames;
            rows.push(row("modality=text_and_frames".into(), both));
            let mut text_only = base.clone();
            text_only.answer.modality = Modality::TextOnly;
            text_only.answer.frames_at_answerer = 0;
            rows.push(row("modality=text_only_no_frames".into(), text_only));
            let mut frames_only = base.clone();
            frames_only.answer.modality = Modality::FramesOnly;
            rows.push(row("modality=frames_only_no_trajectories".into(), frames_only));
            rows
        }
        Cluster::F => [30.0f64, 15.0, 7.5]
            .iter()
            .map(|&seconds| {
                let mut cfg = base.clone();
                cfg.chunk_seconds = seconds;
                row(format!("chunk_seconds={seconds}"), cfg)
            })
            .collect(),
        Cluster::G => {
            let mut rows = Vec::new();
            let mut structured = base.clone();
            structured.answer.render_style = RenderStyle::Structured;
            rows.push(row("representation=structured".into(), structured));
            let mut prose_no_retrieval = base.clone();
            prose_no_retrieval.answer.render_style = RenderStyle::Prose;
            prose_no_retrieval.retrieval.mode = RetrievalMode::None;
            rows.push(row(
                "representation=prose_extractor_no_retrieval".into(),
                prose_no_retrieval,
            ));
            let mut prose_with_retrieval = base.clone();
            prose_with_retrieval.answer.render_style = RenderStyle::Prose;
            prose_with_retrieval.retrieval.mode = RetrievalMode::Scored;
            rows.push(row(
                "representation=prose_extractor_prose_retrieval".into(),
                prose_with_retrieval,
            ));
            rows
        }
        Cluster::H => {
            let mut rows = Vec::new();
            let mut structured = base.clone();
            structured.answer.render_style = RenderStyle::Structured;
            structured.answer.trajectory_order = TrajectoryOrder::Sorted;
            rows.push(row("trajectory=structured_sorted".into(), structured));
            let mut dense = base.clone();
            dense.answer.render_style = RenderStyle::DenseCaption;
            rows.push(row("trajectory=dense_captioning_prose_state".into(), dense));
            let mut shuffled = base.clone();
            shuffled.answer.trajectory_order = TrajectoryOrder::Shuffled {
                seed: base.retrieval.seed,
            };
            rows.push(row(
                "trajectory=shuffled_no_temporal_order".into(),
                shuffled,
            ));
            rows
        }
    }
}

/// Runs every row of the cluster over the corpus. Each row must complete on
/// every item; a failing row aborts the grid with its first failure.
pub fn run_grid(
    cluster: Cluster,
    base: &PipelineConfig,
    backends: &Backends,
    videos: &[VideoRef],
    items: &[BenchItem],
) -> Result<Vec<(GridRow, MetricReport)>> {
    let mut results = Vec::new();
    for grid_row in enumerate_cluster(cluster, base) {
        grid_row.config.validate()?;
        let outcome = run_corpus(&grid_row.config, backends, videos, items)?;
        if let Some((item_id, detail)) = outcome.failures.first() {
            return Err(Error::AnswerBackend {
                question_id: item_id.clone(),
                detail: format!("grid row {:?} failed: {detail}", grid_row.label),
            });
        }
        let report = compute_report(items, &outcome.predictions)?;
        results.push((grid_row, report));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_row_sets_are_pinned() {
        let base = PipelineConfig::default();
        let a: Vec<usize> = enumerate_cluster(Cluster::A, &base)
            .iter()
            .map(|r| r.config.answer.frames_at_answerer)
            .collect();
        assert_eq!(a, vec![64, 32, 16, 8]);

        let b: Vec<usize> = enumerate_cluster(Cluster::B, &base)
            .iter()
            .map(|r| r.config.frames_per_chunk)
            .collect();
        assert_eq!(b, vec![60, 30, 15, 8]);

        let f: Vec<f64> = enumerate_cluster(Cluster::F, &base)
            .iter()
            .map(|r| r.config.chunk_seconds)
            .collect();
        assert_eq!(f, vec![30.0, 15.0, 7.5]);

        let c: Vec<RetrievalMode> = enumerate_cluster(Cluster::C, &base)
            .iter()
            .map(|r| r.config.retrieval.mode)
            .collect();
        assert_eq!(
            c,
            vec![
                RetrievalMode::Scored,
                RetrievalMode::None,
                RetrievalMode::RandomTopK
            ]
        );
        assert_eq!(enumerate_cluster(Cluster::D, &base).len(), 2);
        assert_eq!(enumerate_cluster(Cluster::E, &base).len(), 3);
        assert_eq!(enumerate_cluster(Cluster::G, &base).len(), 3);
        assert_eq!(enumerate_cluster(Cluster::H, &base).len(), 3);
    }

    #[test]
    fn text_only_row_zeroes_answer_frames() {
        let base = PipelineConfig::default();
        let rows = enumerate_cluster(Cluster::E, &base);
        assert_eq!(rows[1].config.answer.frames_at_answerer, 0);
        assert!(rows[1].config.validate().is_ok());
    }

    #[test]
    fn unknown_cluster_is_an_error() {
        assert!(matches!(
            "Z".parse::<Cluster>(),
            Err(Error::UnknownCluster { .. })
        ));
        assert!(matches!("a".parse::<Cluster>(), Ok(Cluster::A)));
    }
}
