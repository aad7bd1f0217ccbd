//! The three graph views of a conversation: the content reply tree, its
//! projection onto users, and the global follow graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Thread-level controversy label. `Controversial` is the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Controversial,
    NonControversial,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Controversial => "controversial",
            Label::NonControversial => "non-controversial",
        }
    }

    /// +1 for controversial, -1 otherwise.
    pub fn sign(self) -> f64 {
        match self {
            Label::Controversial => 1.0,
            Label::NonControversial => -1.0,
        }
    }

    pub fn from_sign(margin: f64) -> Self {
        if margin > 0.0 {
            Label::Controversial
        } else {
            Label::NonControversial
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "controversial" => Ok(Label::Controversial),
            "non-controversial" => Ok(Label::NonControversial),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// How hard validation is. Lenient mode warns instead of failing on
/// recoverable problems (clock skew, malformed lines in bulk files).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strictness {
    Strict,
    #[default]
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub author: String,
    pub parent: Option<String>,
    /// Seconds since epoch.
    pub ts: u64,
}

impl Post {
    pub fn new(
        id: impl Into<String>,
        author: impl Into<String>,
        parent: Option<&str>,
        ts: u64,
    ) -> Self {
        Post {
            id: id.into(),
            author: author.into(),
            parent: parent.map(str::to_owned),
            ts,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("thread has no posts")]
    EmptyThread,
    #[error("post id `{0}` appears more than once")]
    DuplicatePostId(String),
    #[error("post `{post}` replies to unknown post `{parent}`")]
    MissingParent { post: String, parent: String },
    #[error("thread has {0} root posts, expected exactly one")]
    MultipleRoots(usize),
    #[error("parent links contain a cycle")]
    CycleDetected,
    #[error("post `{post}` is older than its parent")]
    TimestampOrder { post: String },
}

/// A validated conversation tree. Posts are stored in timestamp order, ties
/// broken by post id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplyTree {
    thread_id: String,
    label: Option<Label>,
    posts: Vec<Post>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl ReplyTree {
    /// Builds a tree in lenient mode (timestamp inversions are only logged).
    pub fn build(
        thread_id: impl Into<String>,
        posts: Vec<Post>,
        label: Option<Label>,
    ) -> Result<Self, TreeError> {
        Self::build_with(thread_id, posts, label, Strictness::Lenient)
    }

    pub fn build_with(
        thread_id: impl Into<String>,
        posts: Vec<Post>,
        label: Option<Label>,
        strictness: Strictness,
    ) -> Result<Self, TreeError> {
        let thread_id = thread_id.into();
        if posts.is_empty() {
            return Err(TreeError::EmptyThread);
        }
        let mut seen = HashSet::with_capacity(posts.len());
        for p in &posts {
            if !seen.insert(p.id.as_str()) {
                return Err(TreeError::DuplicatePostId(p.id.clone()));
            }
        }
        for p in &posts {
            if let Some(parent) = &p.parent {
                if !seen.contains(parent.as_str()) {
                    return Err(TreeError::MissingParent {
                        post: p.id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }
        match posts.iter().filter(|p| p.parent.is_none()).count() {
            // every post has a parent inside the thread, so the links loop
            0 => return Err(TreeError::CycleDetected),
            1 => {}
            n => return Err(TreeError::MultipleRoots(n)),
        }

        let tree = Self::assemble(thread_id, posts, label);
        if tree.reachable_count() != tree.posts.len() {
            return Err(TreeError::CycleDetected);
        }
        for (i, p) in tree.posts.iter().enumerate() {
            if let Some(par) = tree.parent[i] {
                if p.ts < tree.posts[par].ts {
                    match strictness {
                        Strictness::Strict => {
                            return Err(TreeError::TimestampOrder { post: p.id.clone() })
                        }
                        Strictness::Lenient => log::warn!(
                            "thread {}: post {} is older than its parent {}",
                            tree.thread_id,
                            p.id,
                            tree.posts[par].id
                        ),
                    }
                }
            }
        }
        Ok(tree)
    }

    /// Sorts and indexes posts that are already known to form one tree.
    fn assemble(thread_id: String, mut posts: Vec<Post>, label: Option<Label>) -> Self {
        posts.sort_by(|a, b| a.ts.cmp(&b.ts).then_with(|| a.id.cmp(&b.id)));
        let index: HashMap<&str, usize> = posts
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect();
        let parent: Vec<Option<usize>> = posts
            .iter()
            .map(|p| p.parent.as_deref().map(|id| index[id]))
            .collect();
        let mut children = vec![Vec::new(); posts.len()];
        for (i, par) in parent.iter().enumerate() {
            if let Some(par) = par {
                children[*par].push(i);
            }
        }
        let root = parent.iter().position(Option::is_none).unwrap_or(0);
        ReplyTree {
            thread_id,
            label,
            posts,
            parent,
            children,
            root,
        }
    }

    fn reachable_count(&self) -> usize {
        let mut stack = vec![self.root];
        let mut count = 0;
        while let Some(i) = stack.pop() {
            count += 1;
            stack.extend(&self.children[i]);
        }
        count
    }

    pub fn thread_id(&self) -> &str {
        &self.thread_id
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Number of reply arcs, always `len() - 1`.
    pub fn arc_count(&self) -> usize {
        self.posts.len() - 1
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_post(&self) -> &Post {
        &self.posts[self.root]
    }

    pub fn parent_of(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn children_of(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Tree degree of a post: parent arc plus child arcs.
    pub fn degree(&self, i: usize) -> usize {
        self.children[i].len() + usize::from(self.parent[i].is_some())
    }

    /// Hop distance of every post from the root.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.posts.len()];
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            for &c in &self.children[i] {
                depth[c] = depth[i] + 1;
                stack.push(c);
            }
        }
        depth
    }

    /// Number of posts in the subtree rooted at every post.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let depth = self.depths();
        let mut order: Vec<usize> = (0..self.posts.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(depth[i]));
        let mut size = vec![1; self.posts.len()];
        for i in order {
            if let Some(p) = self.parent[i] {
                size[p] += size[i];
            }
        }
        size
    }

    /// Distinct authors, root author included.
    pub fn count_users(&self) -> usize {
        self.posts
            .iter()
            .map(|p| p.author.as_str())
            .collect::<HashSet<_>>()
            .len()
    }

    /// One tree per direct reply to the root, holding that reply and all of
    /// its descendants. Subtrees are unlabelled and named
    /// `<thread_id>/<reply id>`.
    pub fn direct_reply_subtrees(&self) -> Vec<ReplyTree> {
        self.children[self.root]
            .iter()
            .map(|&top| {
                let mut members = Vec::new();
                let mut stack = vec![top];
                while let Some(i) = stack.pop() {
                    members.push(i);
                    stack.extend(&self.children[i]);
                }
                let posts = members
                    .into_iter()
                    .map(|i| {
                        let mut p = self.posts[i].clone();
                        if i == top {
                            p.parent = None;
                        }
                        p
                    })
                    .collect();
                ReplyTree::assemble(
                    format!("{}/{}", self.thread_id, self.posts[top].id),
                    posts,
                    None,
                )
            })
            .collect()
    }

    pub fn project(&self) -> ReplyGraph {
        ReplyGraph::project(self)
    }
}

/// Projection of one thread onto its users. An edge `(u, v)` with
/// multiplicity `m` means `u` authored `m` posts replying to posts by `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplyGraph {
    users: Vec<String>,
    edges: BTreeMap<(u32, u32), u32>,
}

impl ReplyGraph {
    pub fn project(tree: &ReplyTree) -> Self {
        let users: Vec<String> = tree
            .posts
            .iter()
            .map(|p| p.author.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut g = ReplyGraph {
            users,
            edges: BTreeMap::new(),
        };
        for (i, p) in tree.posts.iter().enumerate() {
            if let Some(par) = tree.parent[i] {
                let from = g.index_of(&p.author).expect("author indexed");
                let to = g.index_of(&tree.posts[par].author).expect("author indexed");
                *g.edges.entry((from, to)).or_insert(0) += 1;
            }
        }
        g
    }

    /// Builds a reply graph directly from user names and weighted arcs.
    /// Arc endpoints missing from `users` are added.
    pub fn from_edges<S: AsRef<str>>(users: &[S], edges: &[(S, S, u32)]) -> Self {
        let mut names: BTreeSet<String> = users.iter().map(|u| u.as_ref().to_owned()).collect();
        for (a, b, _) in edges {
            names.insert(a.as_ref().to_owned());
            names.insert(b.as_ref().to_owned());
        }
        let mut g = ReplyGraph {
            users: names.into_iter().collect(),
            edges: BTreeMap::new(),
        };
        for (a, b, m) in edges {
            if *m == 0 {
                continue;
            }
            let key = (
                g.index_of(a.as_ref()).unwrap(),
                g.index_of(b.as_ref()).unwrap(),
            );
            *g.edges.entry(key).or_insert(0) += m;
        }
        g
    }

    /// Users in sorted order; positions are the graph's local indices.
    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn index_of(&self, user: &str) -> Option<u32> {
        self.users
            .binary_search_by(|u| u.as_str().cmp(user))
            .ok()
            .map(|i| i as u32)
    }

    /// Weighted arcs keyed by local indices, self-loops included.
    pub fn edges(&self) -> impl Iterator<Item = ((u32, u32), u32)> + '_ {
        self.edges.iter().map(|(k, m)| (*k, *m))
    }

    pub fn multiplicity(&self, from: u32, to: u32) -> u32 {
        self.edges.get(&(from, to)).copied().unwrap_or(0)
    }

    /// Whether `from` replied to `to` at least once, by user name.
    pub fn replied(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(a), Some(b)) => self.multiplicity(a, b) > 0,
            _ => false,
        }
    }

    /// Number of distinct directed arcs (multiplicities collapsed).
    pub fn simple_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.edges.values().map(|&m| u64::from(m)).sum()
    }
}

/// Directed follow relation among users. `(a, b)` means `a` follows `b`.
/// Self-loops are never stored.
#[derive(Clone, Debug, Default)]
pub struct FollowGraph {
    names: Vec<String>,
    index: HashMap<String, u32>,
    out: Vec<Vec<u32>>,
    edge_count: usize,
}

impl FollowGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<I, S>(edges: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut g = FollowGraph::new();
        for (a, b) in edges {
            g.add_edge(a.as_ref(), b.as_ref());
        }
        g
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        self.out.push(Vec::new());
        i
    }

    /// Adds `follower -> followee`. Returns false for self-loops and
    /// duplicates, which are not stored.
    pub fn add_edge(&mut self, follower: &str, followee: &str) -> bool {
        if follower == followee {
            return false;
        }
        let a = self.intern(follower);
        let b = self.intern(followee);
        let out = &mut self.out[a as usize];
        match out.binary_search(&b) {
            Ok(_) => false,
            Err(pos) => {
                out.insert(pos, b);
                self.edge_count += 1;
                true
            }
        }
    }

    pub fn user_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn follows(&self, follower: &str, followee: &str) -> bool {
        match (self.index.get(follower), self.index.get(followee)) {
            (Some(&a), Some(&b)) => self.out[a as usize].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    /// All edges by name, sorted.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut edges: Vec<(&str, &str)> = self
            .out
            .iter()
            .enumerate()
            .flat_map(|(a, outs)| {
                outs.iter()
                    .map(move |&b| (self.names[a].as_str(), self.names[b as usize].as_str()))
            })
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn users(&self) -> BTreeSet<&str> {
        self.names.iter().map(String::as_str).collect()
    }

    /// Follow arcs among `users`, as pairs of positions in that slice.
    /// Cost is proportional to the out-degree of the listed users, not to
    /// the size of the whole graph.
    pub fn restrict(&self, users: &[String]) -> Vec<(u32, u32)> {
        let local: HashMap<u32, u32> = users
            .iter()
            .enumerate()
            .filter_map(|(li, name)| self.index.get(name).map(|&gi| (gi, li as u32)))
            .collect();
        let mut arcs = Vec::new();
        for (&gi, &li) in &local {
            for b in &self.out[gi as usize] {
                if let Some(&lj) = local.get(b) {
                    arcs.push((li, lj));
                }
            }
        }
        arcs.sort_unstable();
        arcs
    }
}

impl PartialEq for FollowGraph {
    fn eq(&self, other: &Self) -> bool {
        self.users() == other.users() && self.edges() == other.edges()
    }
}

impl Eq for FollowGraph {}
