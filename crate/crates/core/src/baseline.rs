//! Structural, propagation and temporal thread features.
//!
//! Degrees are total (in + out) degrees in both the reply tree and the reply
//! graph. Cascade depth is counted in hops. Degenerate single-post threads
//! yield zeros; excluding them is the job of the user filter.

use crate::thread::{ReplyGraph, ReplyTree};

/// Seconds in the "first hour" window, anchored at the root timestamp.
pub const FIRST_HOUR_SECS: u64 = 3600;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Structural {
    pub n_nodes_tree: usize,
    pub n_edges_tree: usize,
    pub n_nodes_reply: usize,
    pub n_edges_reply: usize,
    pub avg_degree_tree: f64,
    pub avg_degree_reply: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Propagation {
    pub avg_cascade_depth: f64,
    pub max_relative_degree: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Temporal {
    pub avg_inter_reply_time: f64,
    pub frac_first_hour: f64,
}

/// The ten baseline predictive features.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BaselineFeatures {
    pub structural: Structural,
    pub propagation: Propagation,
    pub temporal: Temporal,
}

impl BaselineFeatures {
    pub fn compute(tree: &ReplyTree, rg: &ReplyGraph) -> Self {
        BaselineFeatures {
            structural: structural_features(tree, rg),
            propagation: propagation_features(tree),
            temporal: temporal_features(tree),
        }
    }

    pub fn to_array(&self) -> [f64; 10] {
        let s = &self.structural;
        [
            s.n_nodes_tree as f64,
            s.n_edges_tree as f64,
            s.n_nodes_reply as f64,
            s.n_edges_reply as f64,
            s.avg_degree_tree,
            s.avg_degree_reply,
            self.propagation.avg_cascade_depth,
            self.propagation.max_relative_degree,
            self.temporal.avg_inter_reply_time,
            self.temporal.frac_first_hour,
        ]
    }
}

/// Per-thread quantities that are useful for exploratory analysis but are
/// not fed to the classifier (they mostly track thread popularity).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub max_inter_reply_time: f64,
    pub min_inter_reply_time: f64,
    pub max_cascade_depth: usize,
    pub root_degree_tree: usize,
    pub max_degree_tree: usize,
    pub root_degree_reply: usize,
    pub max_degree_reply: usize,
    /// Largest subtree hanging off a direct reply to the root.
    pub max_subtree_size: usize,
}

impl Diagnostics {
    pub const NAMES: [&'static str; 8] = [
        "max_inter_reply_time",
        "min_inter_reply_time",
        "max_cascade_depth",
        "root_degree_tree",
        "max_degree_tree",
        "root_degree_reply",
        "max_degree_reply",
        "max_subtree_size",
    ];

    pub fn compute(tree: &ReplyTree, rg: &ReplyGraph) -> Self {
        let gaps = inter_reply_gaps(tree);
        let depths = tree.depths();
        let sizes = tree.subtree_sizes();
        let root = tree.root();
        let reply_degree = reply_degrees(rg);
        let root_author = rg
            .index_of(&tree.root_post().author)
            .expect("root author in reply graph");
        Diagnostics {
            max_inter_reply_time: gaps.iter().copied().fold(0.0, f64::max),
            min_inter_reply_time: gaps.iter().copied().reduce(f64::min).unwrap_or(0.0),
            max_cascade_depth: depths.iter().copied().max().unwrap_or(0),
            root_degree_tree: tree.degree(root),
            max_degree_tree: (0..tree.len())
                .filter(|&i| i != root)
                .map(|i| tree.degree(i))
                .max()
                .unwrap_or(0),
            root_degree_reply: reply_degree[root_author as usize],
            max_degree_reply: reply_degree.iter().copied().max().unwrap_or(0),
            max_subtree_size: tree
                .children_of(root)
                .iter()
                .map(|&c| sizes[c])
                .max()
                .unwrap_or(0),
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.max_inter_reply_time,
            self.min_inter_reply_time,
            self.max_cascade_depth as f64,
            self.root_degree_tree as f64,
            self.max_degree_tree as f64,
            self.root_degree_reply as f64,
            self.max_degree_reply as f64,
            self.max_subtree_size as f64,
        ]
    }
}

/// Total simple degree of each reply-graph user. A self-loop adds one to
/// both in- and out-degree.
fn reply_degrees(rg: &ReplyGraph) -> Vec<usize> {
    let mut deg = vec![0; rg.user_count()];
    for ((a, b), _) in rg.edges() {
        deg[a as usize] += 1;
        deg[b as usize] += 1;
    }
    deg
}

pub fn structural_features(tree: &ReplyTree, rg: &ReplyGraph) -> Structural {
    let n_nodes_tree = tree.len();
    let n_edges_tree = tree.arc_count();
    let n_nodes_reply = rg.user_count();
    let n_edges_reply = rg.simple_edge_count();
    let avg = |edges: usize, nodes: usize| {
        if nodes == 0 {
            0.0
        } else {
            2.0 * edges as f64 / nodes as f64
        }
    };
    Structural {
        n_nodes_tree,
        n_edges_tree,
        n_nodes_reply,
        n_edges_reply,
        avg_degree_tree: avg(n_edges_tree, n_nodes_tree),
        avg_degree_reply: avg(n_edges_reply, n_nodes_reply),
    }
}

pub fn propagation_features(tree: &ReplyTree) -> Propagation {
    let root = tree.root();
    let root_degree = tree.degree(root);
    if root_degree == 0 {
        return Propagation::default();
    }
    let depths = tree.depths();
    let (sum, leaves) = (0..tree.len())
        .filter(|&i| i != root && tree.children_of(i).is_empty())
        .fold((0usize, 0usize), |(s, n), i| (s + depths[i], n + 1));
    let max_other = (0..tree.len())
        .filter(|&i| i != root)
        .map(|i| tree.degree(i))
        .max()
        .unwrap_or(0);
    Propagation {
        avg_cascade_depth: sum as f64 / leaves as f64,
        max_relative_degree: max_other as f64 / root_degree as f64,
    }
}

/// Seconds between each reply and its parent, clamped at zero.
fn inter_reply_gaps(tree: &ReplyTree) -> Vec<f64> {
    let posts = tree.posts();
    (0..posts.len())
        .filter_map(|i| {
            tree.parent_of(i)
                .map(|p| posts[i].ts.saturating_sub(posts[p].ts) as f64)
        })
        .collect()
}

pub fn temporal_features(tree: &ReplyTree) -> Temporal {
    let gaps = inter_reply_gaps(tree);
    if gaps.is_empty() {
        return Temporal::default();
    }
    let root_ts = tree.root_post().ts;
    let cutoff = root_ts.saturating_add(FIRST_HOUR_SECS);
    let early = tree
        .posts()
        .iter()
        .enumerate()
        .filter(|(i, p)| *i != tree.root() && p.ts <= cutoff)
        .count();
    Temporal {
        avg_inter_reply_time: gaps.iter().sum::<f64>() / gaps.len() as f64,
        frac_first_hour: early as f64 / gaps.len() as f64,
    }
}
