//! Synthetic labelled corpora with controllable interaction patterns.
//!
//! Each thread is rooted at a page account and grown reply by reply. The
//! per-class knobs shape the signals the features pick up: how often a reply
//! targets a user the replier does not follow, how often replies attach below
//! the first level, how quickly replies arrive, and how often a reply is
//! answered back. Users are local to their thread, so threads never share
//! follow structure.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::thread::{FollowGraph, Label, Post, ReplyTree};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid synthetic parameters: {0}")]
pub struct InvalidParams(pub String);

/// Log-normal user count per thread, clipped to `[min_users, max_users]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeDist {
    pub median_users: f64,
    pub sigma: f64,
    pub min_users: usize,
    pub max_users: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub n_threads: usize,
    pub size: SizeDist,
    /// Extra posts per replier beyond their first, on average.
    pub extra_posts_per_user: f64,
    /// Probability that a new reply pair has no follow from replier to target.
    pub p_reply_nonfollowed: f64,
    /// Probability a reply attaches to a non-root post.
    pub depth_bias: f64,
    /// Mean seconds between a post and a reply to it.
    pub time_scale: f64,
    /// Probability a reply is answered back by its target.
    pub p_reciprocal: f64,
    /// Probability that a followed reply target follows back.
    pub p_mutual_follow: f64,
    /// Probability of a follow arc between two thread users who never reply
    /// to each other.
    pub follow_density: f64,
    /// Probability that the target of a non-followed reply follows the replier.
    #[serde(default)]
    pub p_follow_back: f64,
    /// Number of distinct root accounts.
    pub pages: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    pub controversial: ClassParams,
    pub non_controversial: ClassParams,
    /// Standard deviation of per-thread noise added to every probability.
    #[serde(default)]
    pub jitter: f64,
    /// Log-normal sigma of the per-thread time-scale multiplier.
    #[serde(default)]
    pub time_jitter: f64,
    /// Fraction of threads grown with the other class's parameters while
    /// keeping their own label.
    #[serde(default)]
    pub label_noise: f64,
}

impl SynthParams {
    /// A 1,200-thread corpus whose class differences follow the qualitative
    /// findings on real reply threads: controversial threads reply more to
    /// non-followed users, go deeper and move faster, and their participants
    /// are more sparsely connected by follows.
    pub fn preset(seed: u64) -> Self {
        let size = SizeDist {
            median_users: 50.0,
            sigma: 1.4,
            min_users: 3,
            max_users: 400,
        };
        SynthParams {
            seed,
            controversial: ClassParams {
                n_threads: 700,
                size: size.clone(),
                extra_posts_per_user: 0.8,
                p_reply_nonfollowed: 0.65,
                depth_bias: 0.5,
                time_scale: 1000.0,
                p_reciprocal: 0.2,
                p_mutual_follow: 0.25,
                follow_density: 0.01,
                p_follow_back: 0.05,
                pages: 11,
            },
            non_controversial: ClassParams {
                n_threads: 500,
                size,
                extra_posts_per_user: 0.8,
                p_reply_nonfollowed: 0.45,
                depth_bias: 0.4,
                time_scale: 3000.0,
                p_reciprocal: 0.2,
                p_mutual_follow: 0.35,
                follow_density: 0.04,
                p_follow_back: 0.2,
                pages: 7,
            },
            jitter: 0.06,
            time_jitter: 0.6,
            label_noise: 0.05,
        }
    }

    /// Widely separated classes without noise.
    pub fn separable(seed: u64, threads_per_class: usize) -> Self {
        let size = SizeDist {
            median_users: 20.0,
            sigma: 0.5,
            min_users: 5,
            max_users: 60,
        };
        SynthParams {
            seed,
            controversial: ClassParams {
                n_threads: threads_per_class,
                size: size.clone(),
                extra_posts_per_user: 0.5,
                p_reply_nonfollowed: 0.95,
                depth_bias: 0.8,
                time_scale: 300.0,
                p_reciprocal: 0.3,
                p_mutual_follow: 0.2,
                follow_density: 0.0,
                p_follow_back: 0.0,
                pages: 3,
            },
            non_controversial: ClassParams {
                n_threads: threads_per_class,
                size,
                extra_posts_per_user: 0.5,
                p_reply_nonfollowed: 0.05,
                depth_bias: 0.05,
                time_scale: 7200.0,
                p_reciprocal: 0.0,
                p_mutual_follow: 0.2,
                follow_density: 0.0,
                p_follow_back: 0.0,
                pages: 3,
            },
            jitter: 0.0,
            time_jitter: 0.0,
            label_noise: 0.0,
        }
    }

    /// Rejects NaN as well as out-of-range values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), InvalidParams> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(InvalidParams(format!("{name} = {v} is not a probability")))
            }
        };
        for (tag, c) in [
            ("controversial", &self.controversial),
            ("non_controversial", &self.non_controversial),
        ] {
            prob(&format!("{tag}.p_reply_nonfollowed"), c.p_reply_nonfollowed)?;
            prob(&format!("{tag}.depth_bias"), c.depth_bias)?;
            prob(&format!("{tag}.p_reciprocal"), c.p_reciprocal)?;
            prob(&format!("{tag}.p_mutual_follow"), c.p_mutual_follow)?;
            prob(&format!("{tag}.follow_density"), c.follow_density)?;
            prob(&format!("{tag}.p_follow_back"), c.p_follow_back)?;
            if c.size.min_users < 2 || c.size.max_users < c.size.min_users {
                return Err(InvalidParams(format!(
                    "{tag}.size: need 2 <= min_users <= max_users"
                )));
            }
            if !(c.size.median_users > 0.0) || !(c.size.sigma >= 0.0) {
                return Err(InvalidParams(format!(
                    "{tag}.size: median must be positive, sigma non-negative"
                )));
            }
            if !(c.time_scale > 0.0) || !(c.extra_posts_per_user >= 0.0) {
                return Err(InvalidParams(format!(
                    "{tag}: time_scale must be positive, extra posts non-negative"
                )));
            }
            if c.pages == 0 {
                return Err(InvalidParams(format!("{tag}.pages must be at least 1")));
            }
        }
        prob("label_noise", self.label_noise)?;
        if !(self.jitter >= 0.0) || !(self.time_jitter >= 0.0) {
            return Err(InvalidParams("jitter values must be non-negative".into()));
        }
        Ok(())
    }
}

/// Generated trees (in shuffled order) with the follow graph among their
/// users. Deterministic for a given seed, whatever the execution strategy.
pub fn generate_synthetic(
    params: &SynthParams,
    exec: Exec,
) -> Result<(Vec<ReplyTree>, FollowGraph), InvalidParams> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    struct Spec {
        label: Label,
        grow_as: Label,
        page: usize,
        seed: u64,
    }
    let mut specs = Vec::new();
    for (label, class) in [
        (Label::Controversial, &params.controversial),
        (Label::NonControversial, &params.non_controversial),
    ] {
        for i in 0..class.n_threads {
            let flipped = rng.random::<f64>() < params.label_noise;
            let grow_as = match (label, flipped) {
                (l, false) => l,
                (Label::Controversial, true) => Label::NonControversial,
                (Label::NonControversial, true) => Label::Controversial,
            };
            specs.push(Spec {
                label,
                grow_as,
                page: i % class.pages,
                seed: rng.random(),
            });
        }
    }
    specs.shuffle(&mut rng);

    let grown = exec.map_range(specs.len(), |idx| {
        let spec = &specs[idx];
        let class = match spec.grow_as {
            Label::Controversial => &params.controversial,
            Label::NonControversial => &params.non_controversial,
        };
        let page = match spec.label {
            Label::Controversial => format!("page_c{:02}", spec.page),
            Label::NonControversial => format!("page_n{:02}", spec.page),
        };
        let mut trng = ChaCha8Rng::seed_from_u64(spec.seed);
        grow_thread(
            &format!("t{idx:05}"),
            &page,
            spec.label,
            class,
            params,
            idx as u64,
            &mut trng,
        )
    });

    let mut fg = FollowGraph::new();
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, follows) in grown {
        for (a, b) in &follows {
            fg.add_edge(a, b);
        }
        trees.push(tree);
    }
    Ok((trees, fg))
}

fn jittered(p: f64, sd: f64, rng: &mut impl Rng) -> f64 {
    if sd == 0.0 {
        return p;
    }
    let noise: f64 = Normal::new(0.0, sd).expect("valid sd").sample(rng);
    (p + noise).clamp(0.0, 1.0)
}

struct Growth {
    /// (author, parent post, timestamp)
    posts: Vec<(usize, Option<usize>, u64)>,
    replied: HashSet<(usize, usize)>,
    /// unordered pairs whose follow state has been drawn
    decided: HashSet<(usize, usize)>,
    follows: HashSet<(usize, usize)>,
    gap: Exp<f64>,
    p_nonfollowed: f64,
    p_mutual: f64,
    p_follow_back: f64,
}

impl Growth {
    fn add_reply(&mut self, author: usize, parent: usize, rng: &mut ChaCha8Rng) -> usize {
        let target = self.posts[parent].0;
        let ts = self.posts[parent].2 + self.gap.sample(rng).round() as u64;
        self.posts.push((author, Some(parent), ts));
        self.replied.insert((author, target));
        let pair = (author.min(target), author.max(target));
        if self.decided.insert(pair) {
            if rng.random::<f64>() >= self.p_nonfollowed {
                self.follows.insert((author, target));
                if rng.random::<f64>() < self.p_mutual {
                    self.follows.insert((target, author));
                }
            } else if rng.random::<f64>() < self.p_follow_back {
                self.follows.insert((target, author));
            }
        }
        self.posts.len() - 1
    }
}

fn grow_thread(
    thread_id: &str,
    page: &str,
    label: Label,
    class: &ClassParams,
    params: &SynthParams,
    index: u64,
    rng: &mut ChaCha8Rng,
) -> (ReplyTree, Vec<(String, String)>) {
    let p_nonfollowed = jittered(class.p_reply_nonfollowed, params.jitter, rng);
    let depth_bias = jittered(class.depth_bias, params.jitter, rng);
    let p_reciprocal = jittered(class.p_reciprocal, params.jitter, rng);
    let p_mutual = jittered(class.p_mutual_follow, params.jitter, rng);
    let time_scale = if params.time_jitter > 0.0 {
        class.time_scale
            * LogNormal::new(0.0, params.time_jitter)
                .expect("valid sigma")
                .sample(rng)
    } else {
        class.time_scale
    };
    let gap = Exp::new(1.0 / time_scale).expect("positive rate");

    let size = &class.size;
    let drawn: f64 = if size.sigma > 0.0 {
        LogNormal::new(size.median_users.ln(), size.sigma)
            .expect("valid sigma")
            .sample(rng)
    } else {
        size.median_users
    };
    let n_users = (drawn.round() as usize).clamp(size.min_users, size.max_users);
    let repliers = n_users - 1;
    let extra = (repliers as f64 * class.extra_posts_per_user).round() as usize;
    let total_steps = repliers + extra;

    // authors: 0 is the page, 1..n_users are repliers
    let names: Vec<String> = std::iter::once(page.to_owned())
        .chain((1..n_users).map(|u| format!("{thread_id}_u{u:03}")))
        .collect();
    let mut g = Growth {
        posts: vec![(0, None, 1_600_000_000 + index * 100_000)],
        replied: HashSet::new(),
        decided: HashSet::new(),
        follows: HashSet::new(),
        gap,
        p_nonfollowed,
        p_mutual,
        p_follow_back: jittered(class.p_follow_back, params.jitter, rng),
    };
    let mut next_new = 1;

    for step in 0..total_steps {
        let remaining_new = n_users - next_new;
        let remaining_steps = total_steps - step;
        let author = if remaining_new > 0
            && (next_new == 1
                || rng.random::<f64>() * (remaining_steps as f64) < remaining_new as f64)
        {
            next_new += 1;
            next_new - 1
        } else {
            rng.random_range(1..next_new)
        };

        let mut parent = 0;
        if g.posts.len() > 1 && rng.random::<f64>() < depth_bias {
            for _ in 0..10 {
                let cand = rng.random_range(1..g.posts.len());
                let cand_author = g.posts[cand].0;
                // replying back along an existing arc would make the pair
                // reciprocal; that only happens through explicit answers
                if cand_author != author && !g.replied.contains(&(cand_author, author)) {
                    parent = cand;
                    break;
                }
            }
        }
        let post = g.add_reply(author, parent, rng);

        let target = g.posts[parent].0;
        if target != 0 && rng.random::<f64>() < p_reciprocal {
            g.add_reply(target, post, rng);
        }
    }
    let Growth {
        posts,
        mut follows,
        decided,
        ..
    } = g;

    for a in 0..n_users {
        for b in a + 1..n_users {
            if !decided.contains(&(a, b)) && rng.random::<f64>() < class.follow_density {
                if rng.random::<bool>() {
                    follows.insert((a, b));
                } else {
                    follows.insert((b, a));
                }
            }
        }
    }

    let post_ids: Vec<String> = (0..posts.len())
        .map(|i| format!("{thread_id}_p{i:04}"))
        .collect();
    let built: Vec<Post> = posts
        .iter()
        .enumerate()
        .map(|(i, &(author, parent, ts))| Post {
            id: post_ids[i].clone(),
            author: names[author].clone(),
            parent: parent.map(|p| post_ids[p].clone()),
            ts,
        })
        .collect();
    let tree =
        ReplyTree::build(thread_id, built, Some(label)).expect("generated thread is a valid tree");
    let mut follow_names: Vec<(String, String)> = follows
        .into_iter()
        .map(|(a, b)| (names[a].clone(), names[b].clone()))
        .collect();
    follow_names.sort();
    (tree, follow_names)
}

/// Root account of each thread, usable as a cross-validation group key.
pub fn page_groups(trees: &[ReplyTree]) -> Vec<String> {
    trees.iter().map(|t| t.root_post().author.clone()).collect()
}

/// Label counts, for summaries.
pub fn class_counts(trees: &[ReplyTree]) -> HashMap<Option<Label>, usize> {
    let mut counts = HashMap::new();
    for t in trees {
        *counts.entry(t.label()).or_insert(0) += 1;
    }
    counts
}
