//! Dyadic and triadic motif census over the overlay of one thread's reply
//! graph with the follow graph.
//!
//! Dyads are user pairs with at least one reply between them, classified
//! into the seven reply/follow configurations `A`..`G`. Triads are closed
//! triangles of the overlay (every pair joined by a reply or a follow arc)
//! that contain at least one reply; each is coarsened into the multiset of
//! its three per-pair connection types, giving 20 groups.
//!
//! Edge multiplicities and reply self-loops are ignored throughout.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::thread::{FollowGraph, ReplyGraph};

pub const N_DYAD_CLASSES: usize = 7;
pub const N_TRIAD_GROUPS: usize = 20;

/// Joint reply/follow configuration of a user pair with at least one reply.
///
/// For one-way reply classes the replier is taken as the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DyadClass {
    /// one-way reply, no follow
    A,
    /// reciprocal reply, no follow
    B,
    /// one-way reply, replier follows the target
    C,
    /// one-way reply, target follows the replier
    D,
    /// reciprocal reply, reciprocal follow
    E,
    /// reciprocal reply, one-way follow
    F,
    /// one-way reply, reciprocal follow
    G,
}

impl DyadClass {
    pub const ALL: [DyadClass; N_DYAD_CLASSES] = [
        DyadClass::A,
        DyadClass::B,
        DyadClass::C,
        DyadClass::D,
        DyadClass::E,
        DyadClass::F,
        DyadClass::G,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["A", "B", "C", "D", "E", "F", "G"][self.index()]
    }
}

impl fmt::Display for DyadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Connection type of one side of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairClass {
    /// follow arc(s) only
    FollowOnly,
    /// one-way reply, no follow
    ReplyOneWay,
    /// reciprocal reply, no follow
    ReplyReciprocal,
    /// at least one reply and at least one follow, any orientation
    ReplyFollow,
}

impl PairClass {
    pub const ALL: [PairClass; 4] = [
        PairClass::FollowOnly,
        PairClass::ReplyOneWay,
        PairClass::ReplyReciprocal,
        PairClass::ReplyFollow,
    ];

    pub fn code(self) -> &'static str {
        match self {
            PairClass::FollowOnly => "FO",
            PairClass::ReplyOneWay => "RO1",
            PairClass::ReplyReciprocal => "RO2",
            PairClass::ReplyFollow => "RF",
        }
    }
}

/// Unordered multiset of three [`PairClass`]es, stored sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriadGroup([PairClass; 3]);

impl TriadGroup {
    pub fn new(a: PairClass, b: PairClass, c: PairClass) -> Self {
        let mut parts = [a, b, c];
        parts.sort();
        TriadGroup(parts)
    }

    pub fn parts(&self) -> [PairClass; 3] {
        self.0
    }

    /// All 20 groups in slot order (lexicographic over sorted parts).
    pub fn all() -> Vec<TriadGroup> {
        let mut out = Vec::with_capacity(N_TRIAD_GROUPS);
        for i in 0..4 {
            for j in i..4 {
                for k in j..4 {
                    out.push(TriadGroup([
                        PairClass::ALL[i],
                        PairClass::ALL[j],
                        PairClass::ALL[k],
                    ]));
                }
            }
        }
        out
    }

    /// Position of this group in [`TriadGroup::all`].
    pub fn index(&self) -> usize {
        let [a, b, c] = self.0.map(|p| p as usize);
        // groups whose smallest part is below `a`, then within that block
        let before_a: usize = (0..a).map(pairs_from).sum();
        let before_b: usize = (a..b).map(|y| 4 - y).sum();
        before_a + before_b + (c - b)
    }

    /// Canonical code, e.g. `FO|RO1|RF`.
    pub fn code(&self) -> String {
        self.0.map(PairClass::code).join("|")
    }
}

/// Number of sorted pairs (y, z) with x <= y <= z < 4.
fn pairs_from(x: usize) -> usize {
    let m = 4 - x;
    m * (m + 1) / 2
}

impl fmt::Display for TriadGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MotifError {
    #[error("users `{0}` and `{1}` never replied to each other")]
    NoReplyEdge(String, String),
    #[error("a dyad needs two distinct users, got `{0}` twice")]
    SelfPair(String),
}

/// Reply and follow arcs between two users `u` and `v`, oriented from `u`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PairState {
    pub reply_uv: bool,
    pub reply_vu: bool,
    pub follow_uv: bool,
    pub follow_vu: bool,
}

impl PairState {
    pub fn has_reply(self) -> bool {
        self.reply_uv || self.reply_vu
    }

    pub fn has_follow(self) -> bool {
        self.follow_uv || self.follow_vu
    }

    pub fn is_connected(self) -> bool {
        self.has_reply() || self.has_follow()
    }

    pub fn reversed(self) -> Self {
        PairState {
            reply_uv: self.reply_vu,
            reply_vu: self.reply_uv,
            follow_uv: self.follow_vu,
            follow_vu: self.follow_uv,
        }
    }

    /// Dyad class, or `None` when there is no reply either way.
    pub fn dyad_class(self) -> Option<DyadClass> {
        let PairState {
            reply_uv,
            reply_vu,
            follow_uv,
            follow_vu,
        } = self;
        let class = match (reply_uv, reply_vu) {
            (false, false) => return None,
            (true, true) => match (follow_uv, follow_vu) {
                (false, false) => DyadClass::B,
                (true, true) => DyadClass::E,
                _ => DyadClass::F,
            },
            _ => {
                // orient so the replier is the source
                let (follow_fwd, follow_back) = if reply_uv {
                    (follow_uv, follow_vu)
                } else {
                    (follow_vu, follow_uv)
                };
                match (follow_fwd, follow_back) {
                    (false, false) => DyadClass::A,
                    (true, false) => DyadClass::C,
                    (false, true) => DyadClass::D,
                    (true, true) => DyadClass::G,
                }
            }
        };
        Some(class)
    }

    /// Triangle side type, or `None` when the pair is not connected.
    pub fn pair_class(self) -> Option<PairClass> {
        match (self.has_reply(), self.has_follow()) {
            (false, false) => None,
            (false, true) => Some(PairClass::FollowOnly),
            (true, true) => Some(PairClass::ReplyFollow),
            (true, false) if self.reply_uv && self.reply_vu => Some(PairClass::ReplyReciprocal),
            (true, false) => Some(PairClass::ReplyOneWay),
        }
    }
}

const REPLY_LH: u8 = 1;
const REPLY_HL: u8 = 2;
const FOLLOW_LH: u8 = 4;
const FOLLOW_HL: u8 = 8;

/// Undirected overlay of reply and follow arcs among one thread's users,
/// indexed by the reply graph's local user indices.
#[derive(Clone, Debug)]
pub struct Overlay {
    /// keyed by `(lo, hi)`; bits relative to that orientation
    pairs: HashMap<(u32, u32), u8>,
    adjacency: Vec<Vec<u32>>,
}

impl Overlay {
    pub fn new(rg: &ReplyGraph, fg: &FollowGraph) -> Self {
        let mut pairs: HashMap<(u32, u32), u8> = HashMap::new();
        let mut mark = |a: u32, b: u32, fwd: u8, back: u8| {
            if a == b {
                return;
            }
            let (key, bit) = if a < b { ((a, b), fwd) } else { ((b, a), back) };
            *pairs.entry(key).or_insert(0) |= bit;
        };
        for ((a, b), _) in rg.edges() {
            mark(a, b, REPLY_LH, REPLY_HL);
        }
        for (a, b) in fg.restrict(rg.users()) {
            mark(a, b, FOLLOW_LH, FOLLOW_HL);
        }
        Self::from_pairs(rg.user_count(), pairs)
    }

    /// Overlay of reply arcs only.
    pub fn replies_only(rg: &ReplyGraph) -> Self {
        Self::new(rg, &FollowGraph::new())
    }

    fn from_pairs(n: usize, pairs: HashMap<(u32, u32), u8>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in pairs.keys() {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Overlay { pairs, adjacency }
    }

    pub fn user_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn state(&self, u: u32, v: u32) -> PairState {
        let (key, flip) = if u < v {
            ((u, v), false)
        } else {
            ((v, u), true)
        };
        let bits = self.pairs.get(&key).copied().unwrap_or(0);
        let s = PairState {
            reply_uv: bits & REPLY_LH != 0,
            reply_vu: bits & REPLY_HL != 0,
            follow_uv: bits & FOLLOW_LH != 0,
            follow_vu: bits & FOLLOW_HL != 0,
        };
        if flip {
            s.reversed()
        } else {
            s
        }
    }

    /// Connected pairs `(lo, hi)` in sorted order.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        let mut keys: Vec<_> = self.pairs.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    /// Calls `visit(u, v, w)` once per triangle, with `u < v < w`.
    ///
    /// Vertices are ranked by (degree, index) and each edge is oriented
    /// towards the higher rank, so every triangle is found exactly once by
    /// intersecting forward neighbour lists; this runs in O(m^1.5).
    pub fn for_each_triangle(&self, mut visit: impl FnMut(u32, u32, u32)) {
        let n = self.adjacency.len();
        let rank_key = |v: usize| (self.adjacency[v].len(), v);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by_key(|&v| rank_key(v));
        let mut rank = vec![0usize; n];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        let forward: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                let mut f: Vec<usize> = self.adjacency[v]
                    .iter()
                    .map(|&w| w as usize)
                    .filter(|&w| rank[w] > rank[v])
                    .map(|w| rank[w])
                    .collect();
                f.sort_unstable();
                f
            })
            .collect();
        for u in 0..n {
            for &rv in &forward[u] {
                let v = order[rv];
                let (a, b) = (&forward[u], &forward[v]);
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            let mut t = [u as u32, v as u32, order[a[i]] as u32];
                            t.sort_unstable();
                            visit(t[0], t[1], t[2]);
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
        }
    }
}

/// Dyad class of users `u` and `v` by name.
pub fn classify_dyad(
    u: &str,
    v: &str,
    rg: &ReplyGraph,
    fg: &FollowGraph,
) -> Result<DyadClass, MotifError> {
    if u == v {
        return Err(MotifError::SelfPair(u.to_owned()));
    }
    let state = PairState {
        reply_uv: rg.replied(u, v),
        reply_vu: rg.replied(v, u),
        follow_uv: fg.follows(u, v),
        follow_vu: fg.follows(v, u),
    };
    state
        .dyad_class()
        .ok_or_else(|| MotifError::NoReplyEdge(u.to_owned(), v.to_owned()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DyadCensus {
    pub counts: [u64; N_DYAD_CLASSES],
}

impl DyadCensus {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> [f64; N_DYAD_CLASSES] {
        normalize(&self.counts)
    }

    pub fn count(&self, class: DyadClass) -> u64 {
        self.counts[class.index()]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TriadCensus {
    pub counts: [u64; N_TRIAD_GROUPS],
}

impl TriadCensus {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> [f64; N_TRIAD_GROUPS] {
        normalize(&self.counts)
    }

    pub fn count(&self, group: TriadGroup) -> u64 {
        self.counts[group.index()]
    }
}

fn normalize<const N: usize>(counts: &[u64; N]) -> [f64; N] {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return [0.0; N];
    }
    counts.map(|c| c as f64 / total as f64)
}

pub fn dyadic_census_overlay(overlay: &Overlay) -> DyadCensus {
    let mut census = DyadCensus::default();
    for &(a, b) in overlay.pairs.keys() {
        if let Some(class) = overlay.state(a, b).dyad_class() {
            census.counts[class.index()] += 1;
        }
    }
    census
}

pub fn triadic_census_overlay(overlay: &Overlay) -> TriadCensus {
    let mut census = TriadCensus::default();
    overlay.for_each_triangle(|u, v, w| {
        let sides = [
            overlay.state(u, v),
            overlay.state(v, w),
            overlay.state(u, w),
        ];
        if !sides.iter().any(|s| s.has_reply()) {
            return;
        }
        let [a, b, c] = sides.map(|s| s.pair_class().expect("triangle sides are connected"));
        census.counts[TriadGroup::new(a, b, c).index()] += 1;
    });
    census
}

pub fn dyadic_census(rg: &ReplyGraph, fg: &FollowGraph) -> DyadCensus {
    dyadic_census_overlay(&Overlay::new(rg, fg))
}

pub fn triadic_census(rg: &ReplyGraph, fg: &FollowGraph) -> TriadCensus {
    triadic_census_overlay(&Overlay::new(rg, fg))
}

/// Number of user triples whose three pairs all have a reply either way.
pub fn reply_triangle_count(rg: &ReplyGraph) -> u64 {
    let mut count = 0;
    Overlay::replies_only(rg).for_each_triangle(|_, _, _| count += 1);
    count
}

/// Closed reply triangles over all `C(n, 3)` user triples; 0 when n < 3.
pub fn triangle_ratio(rg: &ReplyGraph) -> f64 {
    let n = rg.user_count() as u64;
    if n < 3 {
        return 0.0;
    }
    let possible = n * (n - 1) * (n - 2) / 6;
    reply_triangle_count(rg) as f64 / possible as f64
}

/// The motif block of a thread's feature vector, plus raw counts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotifFeatures {
    pub dyad_freq: [f64; N_DYAD_CLASSES],
    pub triad_freq: [f64; N_TRIAD_GROUPS],
    pub triangle_ratio: f64,
    pub dyad_counts: DyadCensus,
    pub triad_counts: TriadCensus,
    pub reply_triangles: u64,
}

impl MotifFeatures {
    pub fn compute(rg: &ReplyGraph, fg: &FollowGraph) -> Self {
        let overlay = Overlay::new(rg, fg);
        let dyads = dyadic_census_overlay(&overlay);
        let triads = triadic_census_overlay(&overlay);
        let reply_triangles = reply_triangle_count(rg);
        let n = rg.user_count() as u64;
        let triangle_ratio = if n < 3 {
            0.0
        } else {
            reply_triangles as f64 / (n * (n - 1) * (n - 2) / 6) as f64
        };
        MotifFeatures {
            dyad_freq: dyads.frequencies(),
            triad_freq: triads.frequencies(),
            triangle_ratio,
            dyad_counts: dyads,
            triad_counts: triads,
            reply_triangles,
        }
    }
}
