//! Endpoints of maximal causal paths.
//!
//! A maximal path is a simple path that cannot be extended at either end
//! without repeating a node. In an acyclic graph its endpoints are exactly the
//! sources and sinks. Inside a cycle a node `v` can still start a maximal path
//! when some simple path out of `v` visits every predecessor of `v`; all such
//! predecessors must then share `v`'s strongly connected component, so the
//! search stays inside that component.

use std::collections::HashSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::Direction;

/// Components larger than this are not searched exhaustively; every node in
/// them is reported as a path endpoint.
const MAX_SEARCH_COMPONENT: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EndpointRole {
    pub starts: bool,
    pub ends: bool,
}

/// For every node, whether it starts and/or ends some maximal path.
/// Parallel edges must already be collapsed.
pub fn endpoint_roles<N, E>(graph: &DiGraph<N, E>) -> Vec<EndpointRole> {
    let mut component = vec![0usize; graph.node_count()];
    let sccs = tarjan_scc(graph);
    for (ci, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = ci;
        }
    }

    graph
        .node_indices()
        .map(|v| EndpointRole {
            starts: is_endpoint(graph, &sccs, &component, v, Direction::Incoming),
            ends: is_endpoint(graph, &sccs, &component, v, Direction::Outgoing),
        })
        .collect()
}

/// `Incoming`: can `v` start a maximal path? `Outgoing`: can it end one?
fn is_endpoint<N, E>(
    graph: &DiGraph<N, E>,
    sccs: &[Vec<NodeIndex>],
    component: &[usize],
    v: NodeIndex,
    blocked_side: Direction,
) -> bool {
    let must_cover: Vec<NodeIndex> = graph.neighbors_directed(v, blocked_side).collect();
    if must_cover.is_empty() {
        return true;
    }
    let c = component[v.index()];
    if must_cover.iter().any(|n| component[n.index()] != c) {
        return false;
    }
    let members = &sccs[c];
    if members.len() > MAX_SEARCH_COMPONENT {
        return true;
    }

    // Local numbering inside the component so visited sets fit in a bitmask.
    let local = |n: NodeIndex| members.iter().position(|m| *m == n).expect("member");
    let mut target = 0u32;
    for n in &must_cover {
        target |= 1 << local(*n);
    }
    // Walk away from the blocked side: a path starting at v follows outgoing
    // edges, a path ending at v is traced backwards along incoming ones.
    let walk = blocked_side.opposite();
    let mut failed: HashSet<(u32, usize)> = HashSet::new();
    search(graph, members, c, component, walk, local(v), 1 << local(v), target, &mut failed)
}

#[allow(clippy::too_many_arguments)]
fn search<N, E>(
    graph: &DiGraph<N, E>,
    members: &[NodeIndex],
    c: usize,
    component: &[usize],
    walk: Direction,
    at: usize,
    visited: u32,
    target: u32,
    failed: &mut HashSet<(u32, usize)>,
) -> bool {
    if visited & target == target {
        return true;
    }
    if failed.contains(&(visited, at)) {
        return false;
    }
    for next in graph.neighbors_directed(members[at], walk) {
        if component[next.index()] != c {
            continue;
        }
        let li = members.iter().position(|m| *m == next).expect("member");
        if visited & (1 << li) != 0 {
            continue;
        }
        if search(graph, members, c, component, walk, li, visited | (1 << li), target, failed) {
            return true;
        }
    }
    failed.insert((visited, at));
    false
}
