//! End-to-end corpus builds: pipeline, then FIM, then SPSR graph.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::info;

use crate::config::ForgeConfig;
use crate::graph::{generate_spsr_corpus, GraphDiagnostics, SpsrRecord};
use crate::pipeline::{
    read_corpus, read_input, run_pipeline, write_outputs, PipelineStats, RawFile,
};
use crate::segment::{cut_corpus, FimRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pipeline,
    Fim,
    Graph,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Pipeline, Stage::Fim, Stage::Graph];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Pipeline => "pipeline",
            Stage::Fim => "fim",
            Stage::Graph => "graph",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("stage {stage} failed: {cause}")]
    StageFailure { stage: Stage, cause: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn stage_err(stage: Stage) -> impl Fn(&dyn fmt::Display) -> BuildError {
    move |e| BuildError::StageFailure {
        stage,
        cause: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimStats {
    pub samples: usize,
    pub files_cut: usize,
    pub files_without_units: usize,
    pub files_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub paths: usize,
    pub samples: usize,
    pub diagnostics: GraphDiagnostics,
}

/// Contents of `manifest.json`. Only `created_at` varies between identical
/// runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub created_at: String,
    pub config_hash: String,
    pub stages: Vec<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fim: Option<FimStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphStats>,
}

/// Writes one JSON value per line.
pub fn write_jsonl<T: Serialize>(
    path: &Path,
    items: impl IntoIterator<Item = T>,
) -> Result<(), BuildError> {
    let io = |source| BuildError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BuildError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| BuildError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the requested stages in fixed order and writes `manifest.json`.
///
/// Without the pipeline stage, later stages read `corpus.jsonl` from
/// `out_dir`. Outputs of stages that finished before a failure are kept.
pub fn run_end_to_end(
    repo_dir: &Path,
    out_dir: &Path,
    cfg: &ForgeConfig,
    stages: &[Stage],
) -> Result<BuildManifest, BuildError> {
    let wants = |s: Stage| stages.contains(&s);
    fs::create_dir_all(out_dir).map_err(|source| BuildError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut manifest = BuildManifest {
        created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        config_hash: cfg.hash(),
        stages: Stage::ALL.into_iter().filter(|s| wants(*s)).collect(),
        pipeline: None,
        fim: None,
        graph: None,
    };

    let mut corpus: Option<Vec<RawFile>> = None;
    if wants(Stage::Pipeline) {
        let err = stage_err(Stage::Pipeline);
        let files = read_input(repo_dir).map_err(|e| err(&e))?;
        let output = run_pipeline(files, &cfg.pipeline);
        write_outputs(&output, out_dir).map_err(|e| err(&e))?;
        info!(kept = output.stats.kept, "pipeline stage done");
        manifest.pipeline = Some(output.stats);
        corpus = Some(output.kept);
    }
    let mut load = |stage: Stage| -> Result<Vec<RawFile>, BuildError> {
        match &corpus {
            Some(c) => Ok(c.clone()),
            None => {
                let c =
                    read_corpus(&out_dir.join("corpus.jsonl")).map_err(|e| stage_err(stage)(&e))?;
                corpus = Some(c.clone());
                Ok(c)
            }
        }
    };

    if wants(Stage::Fim) {
        let files = load(Stage::Fim)?;
        let cut = cut_corpus(&files, &cfg.fim.options()).map_err(|e| stage_err(Stage::Fim)(&e))?;
        write_jsonl(
            &out_dir.join("fim_samples.jsonl"),
            cut.samples.iter().map(FimRecord::from),
        )?;
        info!(samples = cut.samples.len(), "fim stage done");
        manifest.fim = Some(FimStats {
            samples: cut.samples.len(),
            files_cut: cut.files_cut,
            files_without_units: cut.files_without_units,
            files_skipped: cut.files_skipped,
        });
    }

    if wants(Stage::Graph) {
        let files = load(Stage::Graph)?;
        let out =
            generate_spsr_corpus(&files, &cfg.graph).map_err(|e| stage_err(Stage::Graph)(&e))?;
        write_json(&out_dir.join("graph.json"), &out.graph.to_json())?;
        write_jsonl(
            &out_dir.join("spsr_samples.jsonl"),
            out.samples.iter().map(SpsrRecord::from),
        )?;
        info!(
            nodes = out.graph.node_count(),
            paths = out.paths_enumerated,
            "graph stage done"
        );
        manifest.graph = Some(GraphStats {
            nodes: out.graph.node_count(),
            edges: out.graph.edge_count(),
            paths: out.paths_enumerated,
            samples: out.samples.len(),
            diagnostics: out.graph.diagnostics.clone(),
        });
    }

    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repo() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("util.h"),
            "#ifndef UTIL_H\n#define UTIL_H\nint clamp(int v, int lo, int hi);\n#endif\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("util.c"),
            "#include \"util.h\"\n\nint clamp(int v, int lo, int hi) {\n    if (v < lo) {\n        return lo;\n    }\n    if (v > hi) {\n        return hi;\n    }\n    return v;\n}\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("main.c"),
            "#include \"util.h\"\n\nint scale(int x) {\n    int total = 0;\n    for (int i = 0; i < x; i++) {\n        total += clamp(i, 0, 10);\n    }\n    return total;\n}\n",
        )
        .unwrap();
        dir
    }

    #[test]
    fn all_stages_write_outputs() {
        let src = repo();
        let out = tempfile::tempdir().unwrap();
        let m =
            run_end_to_end(src.path(), out.path(), &ForgeConfig::default(), &Stage::ALL).unwrap();
        for f in [
            "corpus.jsonl",
            "fim_samples.jsonl",
            "graph.json",
            "spsr_samples.jsonl",
            "manifest.json",
        ] {
            assert!(out.path().join(f).exists(), "{f}");
        }
        assert_eq!(m.pipeline.as_ref().unwrap().kept, 3);
        assert!(m.fim.as_ref().unwrap().samples > 0);
        assert!(m.graph.as_ref().unwrap().edges > 0);
    }

    #[test]
    fn pipeline_only() {
        let src = repo();
        let out = tempfile::tempdir().unwrap();
        let m = run_end_to_end(
            src.path(),
            out.path(),
            &ForgeConfig::default(),
            &[Stage::Pipeline],
        )
        .unwrap();
        assert!(out.path().join("corpus.jsonl").exists());
        assert!(!out.path().join("fim_samples.jsonl").exists());
        assert!(!out.path().join("spsr_samples.jsonl").exists());
        assert!(m.fim.is_none() && m.graph.is_none());
        // A later run can pick up the written corpus.
        let m2 = run_end_to_end(
            src.path(),
            out.path(),
            &ForgeConfig::default(),
            &[Stage::Graph],
        )
        .unwrap();
        assert!(m2.graph.unwrap().nodes > 0);
    }

    #[test]
    fn unreadable_dir_fails_pipeline() {
        let out = tempfile::tempdir().unwrap();
        let err = run_end_to_end(
            Path::new("/nonexistent/forge-repo"),
            out.path(),
            &ForgeConfig::default(),
            &Stage::ALL,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            BuildError::StageFailure {
                stage: Stage::Pipeline,
                ..
            }
        ));
    }

    #[test]
    fn missing_corpus_fails_fim() {
        let out = tempfile::tempdir().unwrap();
        let err = run_end_to_end(
            Path::new("."),
            out.path(),
            &ForgeConfig::default(),
            &[Stage::Fim],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            BuildError::StageFailure {
                stage: Stage::Fim,
                ..
            }
        ));
    }
}
