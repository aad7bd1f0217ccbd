//! File formats, user-count filtering and feature matrix assembly.
//!
//! * `threads.jsonl`: one thread per line,
//!   `{"thread_id":..,"label":"controversial"|"non-controversial"|null,"posts":[{"id":..,"author":..,"parent":..|null,"ts":..}]}`
//! * `follows.tsv`: `follower<TAB>followee` per line, `#` starts a comment.
//! * `features.csv`: slot names plus `label`, one row per thread in input order.

use std::borrow::Borrow;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::Diagnostics;
use crate::exec::Exec;
use crate::features::{slot_names, FeatureVector, ThreadFeatures};
use crate::motif::TriadGroup;
use crate::thread::{FollowGraph, Label, Post, ReplyTree, Strictness, TreeError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("thread `{thread_id}` (line {line}): {source}")]
    Validation {
        thread_id: String,
        line: usize,
        source: TreeError,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl DatasetError {
    fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// One line of `threads.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreadRecord {
    pub thread_id: String,
    pub label: Option<Label>,
    pub posts: Vec<Post>,
}

impl ThreadRecord {
    pub fn from_tree(tree: &ReplyTree) -> Self {
        ThreadRecord {
            thread_id: tree.thread_id().to_owned(),
            label: tree.label(),
            posts: tree.posts().to_vec(),
        }
    }
}

/// Parses JSONL thread text. `path` only labels error messages.
pub fn parse_threads(
    text: &str,
    path: &Path,
    strictness: Strictness,
    exec: Exec,
) -> Result<Vec<ReplyTree>, DatasetError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let parsed = exec.map(&lines, |&(line, text)| {
        let record: ThreadRecord = serde_json::from_str(text).map_err(|e| DatasetError::Parse {
            path: path.to_owned(),
            line,
            message: e.to_string(),
        })?;
        ReplyTree::build_with(
            record.thread_id.clone(),
            record.posts,
            record.label,
            strictness,
        )
        .map_err(|source| DatasetError::Validation {
            thread_id: record.thread_id,
            line,
            source,
        })
    });
    let mut trees = Vec::with_capacity(parsed.len());
    for result in parsed {
        match result {
            Ok(t) => trees.push(t),
            Err(e) if strictness == Strictness::Strict => return Err(e),
            Err(e) => log::warn!("skipping thread: {e}"),
        }
    }
    Ok(trees)
}

pub fn load_threads(
    path: &Path,
    strictness: Strictness,
    exec: Exec,
) -> Result<Vec<ReplyTree>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    parse_threads(&text, path, strictness, exec)
}

pub fn parse_follows(
    text: &str,
    path: &Path,
    strictness: Strictness,
) -> Result<FollowGraph, DatasetError> {
    let mut g = FollowGraph::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            let message = format!(
                "expected `follower<TAB>followee`, got {} field(s)",
                fields.len()
            );
            if strictness == Strictness::Strict {
                return Err(DatasetError::Parse {
                    path: path.to_owned(),
                    line: i + 1,
                    message,
                });
            }
            log::warn!("{}:{}: {message}; line skipped", path.display(), i + 1);
            continue;
        }
        if fields[0] == fields[1] {
            log::warn!(
                "{}:{}: dropping self-follow of `{}`",
                path.display(),
                i + 1,
                fields[0]
            );
            continue;
        }
        g.add_edge(fields[0], fields[1]);
    }
    Ok(g)
}

pub fn load_follows(path: &Path, strictness: Strictness) -> Result<FollowGraph, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    parse_follows(&text, path, strictness)
}

pub fn load_dataset(
    threads_path: &Path,
    follows_path: &Path,
    strictness: Strictness,
    exec: Exec,
) -> Result<(Vec<ReplyTree>, FollowGraph), DatasetError> {
    Ok((
        load_threads(threads_path, strictness, exec)?,
        load_follows(follows_path, strictness)?,
    ))
}

pub fn write_threads<W: Write>(mut w: W, trees: &[ReplyTree]) -> io::Result<()> {
    for t in trees {
        serde_json::to_writer(&mut w, &ThreadRecord::from_tree(t))?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_follows<W: Write>(mut w: W, fg: &FollowGraph) -> io::Result<()> {
    for (a, b) in fg.edges() {
        writeln!(w, "{a}\t{b}")?;
    }
    w.flush()
}

pub fn save_threads(path: &Path, trees: &[ReplyTree]) -> Result<(), DatasetError> {
    let f = fs::File::create(path).map_err(|e| DatasetError::io(path, e))?;
    write_threads(io::BufWriter::new(f), trees).map_err(|e| DatasetError::io(path, e))
}

pub fn save_follows(path: &Path, fg: &FollowGraph) -> Result<(), DatasetError> {
    let f = fs::File::create(path).map_err(|e| DatasetError::io(path, e))?;
    write_follows(io::BufWriter::new(f), fg).map_err(|e| DatasetError::io(path, e))
}

/// Threads with more than `k` distinct users, root author included.
pub fn filter_threads<T: Borrow<ReplyTree>>(trees: &[T], k: usize) -> Vec<&ReplyTree> {
    trees
        .iter()
        .map(Borrow::borrow)
        .filter(|t| t.count_users() > k)
        .collect()
}

/// Count of threads passing each filter level.
pub fn retention<T: Borrow<ReplyTree>>(trees: &[T], ks: &[usize]) -> Vec<(usize, usize)> {
    let users: Vec<usize> = trees.iter().map(|t| t.borrow().count_users()).collect();
    ks.iter()
        .map(|&k| (k, users.iter().filter(|&&u| u > k).count()))
        .collect()
}

/// Per-thread features in input order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureMatrix {
    pub thread_ids: Vec<String>,
    pub labels: Vec<Option<Label>>,
    pub users: Vec<usize>,
    pub details: Vec<ThreadFeatures>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.details.len()
    }

    pub fn is_empty(&self) -> bool {
        self.details.is_empty()
    }

    pub fn rows(&self) -> Vec<FeatureVector> {
        self.details.iter().map(|d| d.vector).collect()
    }

    /// Rows that carry a label, optionally restricted to threads with more
    /// than `k` users.
    pub fn labeled(&self, k: Option<usize>) -> (Vec<FeatureVector>, Vec<Label>) {
        (0..self.len())
            .filter(|&i| k.is_none_or(|k| self.users[i] > k))
            .filter_map(|i| self.labels[i].map(|l| (self.details[i].vector, l)))
            .unzip()
    }

    pub fn write_features_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = slot_names().iter().map(String::as_str).collect();
        header.push("label");
        out.write_record(&header)?;
        for (d, label) in self.details.iter().zip(&self.labels) {
            let mut record: Vec<String> = d.vector.0.iter().map(|v| v.to_string()).collect();
            record.push(label.map(|l| l.as_str().to_owned()).unwrap_or_default());
            out.write_record(&record)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Per-thread quantities excluded from the feature vector, plus raw
    /// motif counts.
    pub fn write_diagnostics_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = vec!["thread_id".into(), "label".into(), "n_users".into()];
        header.extend(Diagnostics::NAMES.iter().map(|s| s.to_string()));
        header.extend(
            ["A", "B", "C", "D", "E", "F", "G"]
                .iter()
                .map(|c| format!("dyad_count_{c}")),
        );
        header.extend(
            TriadGroup::all()
                .iter()
                .map(|g| format!("triad_count_{}", g.code())),
        );
        header.push("reply_triangles".into());
        out.write_record(&header)?;
        for i in 0..self.len() {
            let d = &self.details[i];
            let mut record = vec![
                self.thread_ids[i].clone(),
                self.labels[i]
                    .map(|l| l.as_str().to_owned())
                    .unwrap_or_default(),
                self.users[i].to_string(),
            ];
            record.extend(d.diagnostics.to_array().iter().map(|v| v.to_string()));
            record.extend(d.motifs.dyad_counts.counts.iter().map(|c| c.to_string()));
            record.extend(d.motifs.triad_counts.counts.iter().map(|c| c.to_string()));
            record.push(d.motifs.reply_triangles.to_string());
            out.write_record(&record)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Extracts features for every tree; rows are independent of each other.
pub fn build_feature_matrix<T: Borrow<ReplyTree> + Sync>(
    trees: &[T],
    fg: &FollowGraph,
    exec: Exec,
) -> FeatureMatrix {
    let details = exec.map(trees, |t| ThreadFeatures::extract(t.borrow(), fg));
    FeatureMatrix {
        thread_ids: trees
            .iter()
            .map(|t| t.borrow().thread_id().to_owned())
            .collect(),
        labels: trees.iter().map(|t| t.borrow().label()).collect(),
        users: trees.iter().map(|t| t.borrow().count_users()).collect(),
        details,
    }
}
