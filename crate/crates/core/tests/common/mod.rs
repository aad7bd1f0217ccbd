#![allow(dead_code)]

use proptest::prelude::*;

use controversy_motifs::{FollowGraph, Post, ReplyGraph, ReplyTree};

/// Raw material for a tree: per non-root post, a parent selector, an author
/// index and a delay after the parent.
pub type TreeSpec = (u8, Vec<(usize, u8, u32)>);

pub fn tree_spec(max_posts: usize, max_users: u8) -> impl Strategy<Value = TreeSpec> {
    (
        0..max_users,
        prop::collection::vec((any::<usize>(), 0..max_users, 0u32..10_000), 0..max_posts),
    )
}

pub fn build_tree(id: &str, spec: &TreeSpec) -> ReplyTree {
    build_tree_with(id, spec, |i| format!("p{i}"), |a| format!("user{a}"), 1_000)
}

pub fn build_tree_with(
    id: &str,
    (root_author, replies): &TreeSpec,
    post_id: impl Fn(usize) -> String,
    user: impl Fn(u8) -> String,
    t0: u64,
) -> ReplyTree {
    let mut posts = vec![Post::new(post_id(0), user(*root_author), None, t0)];
    for (i, &(sel, author, dt)) in replies.iter().enumerate() {
        let parent = sel % (i + 1);
        let ts = posts[parent].ts + u64::from(dt);
        let parent_id = posts[parent].id.clone();
        posts.push(Post::new(
            post_id(i + 1),
            user(author),
            Some(parent_id.as_str()),
            ts,
        ));
    }
    ReplyTree::build(id, posts, None).expect("generated trees are valid")
}

/// Reply and follow arcs among `n` users named `u0..`.
pub type OverlaySpec = (usize, Vec<(usize, usize, u32)>, Vec<(usize, usize)>);

pub fn overlay_spec(max_users: usize) -> impl Strategy<Value = OverlaySpec> {
    (1..=max_users).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((0..n, 0..n, 1u32..4), 0..n * n),
            prop::collection::vec((0..n, 0..n), 0..n * n),
        )
    })
}

pub fn build_overlay(
    spec: &OverlaySpec,
    name: impl Fn(usize) -> String,
) -> (ReplyGraph, FollowGraph) {
    let (n, replies, follows) = spec;
    let users: Vec<String> = (0..*n).map(&name).collect();
    let replies: Vec<(String, String, u32)> = replies
        .iter()
        .map(|&(a, b, m)| (name(a), name(b), m))
        .collect();
    let rg = ReplyGraph::from_edges(&users, &replies);
    let fg = FollowGraph::from_edges(
        follows
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| (name(a), name(b))),
    );
    (rg, fg)
}
