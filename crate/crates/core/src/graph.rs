//! Explicit layered view graphs for small instances: greedy traversal and
//! exhaustive search for the best path.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::visible_with_rays;
use crate::config::PlannerConfig;
use crate::planner::{layers, BasePath, PlanContext, PlanError, ViewPath, ViewStep};
use crate::sampling::collision_free;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has {paths} candidate paths, over the budget of {budget}")]
    BudgetExceeded { paths: u128, budget: u64 },
    #[error("first layer must hold exactly one node, found {0}")]
    Root(usize),
    #[error("edge from layer {layer} node {from} to missing node {to}")]
    Edge { layer: usize, from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    /// Sorted, deduplicated surface ids seen from this node.
    pub visible: Vec<u32>,
    /// Pose data when the node came from a scene; `marginal_ig` unused.
    pub step: Option<ViewStep>,
}

impl GraphNode {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        GraphNode { visible: ids, step: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewGraph {
    pub layers: Vec<Vec<GraphNode>>,
    /// `edges[i][a]` lists the nodes of layer `i + 1` reachable from node
    /// `a` of layer `i`.
    pub edges: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    /// Edges only between configurations within the per-joint bound.
    Tvp,
    /// Every node connects to every node of the next layer.
    Full,
}

/// A root-to-node walk through the graph, one node index per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPath {
    pub nodes: Vec<usize>,
    pub gains: Vec<usize>,
    pub total: usize,
}

impl ViewGraph {
    pub fn new(layers: Vec<Vec<GraphNode>>, edges: Vec<Vec<Vec<usize>>>) -> Result<Self, GraphError> {
        if layers.first().map(|l| l.len()) != Some(1) {
            return Err(GraphError::Root(layers.first().map_or(0, |l| l.len())));
        }
        for (i, layer) in edges.iter().enumerate() {
            let next = layers.get(i + 1).map_or(0, |l| l.len());
            for (a, succ) in layer.iter().enumerate() {
                if let Some(&b) = succ.iter().find(|&&b| b >= next) {
                    return Err(GraphError::Edge { layer: i, from: a, to: b });
                }
            }
        }
        Ok(ViewGraph { layers, edges })
    }

    pub fn fully_connected(layers: Vec<Vec<GraphNode>>) -> Result<Self, GraphError> {
        let edges = layers
            .windows(2)
            .map(|w| vec![(0..w[1].len()).collect(); w[0].len()])
            .collect();
        Self::new(layers, edges)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    fn successors(&self, layer: usize, node: usize) -> &[usize] {
        self.edges
            .get(layer)
            .and_then(|l| l.get(node))
            .map_or(&[], |v| v.as_slice())
    }

    fn universe(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .flat_map(|n| n.visible.last())
            .max()
            .map_or(0, |&m| m as usize + 1)
    }

    /// Upper bound on the number of root-to-leaf paths.
    pub fn path_bound(&self) -> u128 {
        self.layers
            .iter()
            .fold(1u128, |acc, l| acc.saturating_mul(l.len().max(1) as u128))
    }

    /// Distinct ids covered by the nodes of `nodes` (one per layer).
    pub fn union_size(&self, nodes: &[usize]) -> usize {
        let mut seen = vec![false; self.universe()];
        let mut n = 0;
        for (i, &a) in nodes.iter().enumerate() {
            for &s in &self.layers[i][a].visible {
                if !core::mem::replace(&mut seen[s as usize], true) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Converts a walk to a view path when every node carries pose data.
    pub fn to_view_path(&self, path: &GraphPath) -> Option<ViewPath> {
        let mut steps = Vec::with_capacity(path.nodes.len());
        for (i, (&a, &g)) in path.nodes.iter().zip(&path.gains).enumerate() {
            let mut s = self.layers[i][a].step.clone()?;
            s.marginal_ig = g;
            steps.push(s);
        }
        Some(ViewPath {
            steps,
            total_ig: path.total,
        })
    }
}

/// Walks from the root, taking the successor of largest marginal gain at
/// each layer (ties broken by `seed`). Stops early at a node without
/// successors.
pub fn greedy_on_graph(graph: &ViewGraph, seed: u64) -> GraphPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = vec![false; graph.universe()];
    let mark = |ids: &[u32], seen: &mut Vec<bool>| ids.iter().filter(|&&s| !core::mem::replace(&mut seen[s as usize], true)).count();
    let first = mark(&graph.layers[0][0].visible, &mut seen);
    let mut path = GraphPath {
        nodes: vec![0],
        gains: vec![first],
        total: first,
    };
    let mut cur = 0;
    for i in 0..graph.depth() - 1 {
        let succ = graph.successors(i, cur);
        if succ.is_empty() {
            break;
        }
        let gains: Vec<usize> = succ
            .iter()
            .map(|&b| graph.layers[i + 1][b].visible.iter().filter(|&&s| !seen[s as usize]).count())
            .collect();
        let best = *gains.iter().max().unwrap_or(&0);
        let tied: Vec<usize> = succ.iter().zip(&gains).filter(|x| *x.1 == best).map(|x| *x.0).collect();
        cur = if tied.len() == 1 { tied[0] } else { tied[rng.random_range(0..tied.len())] };
        let g = mark(&graph.layers[i + 1][cur].visible, &mut seen);
        path.nodes.push(cur);
        path.gains.push(g);
        path.total += g;
    }
    path
}

struct Search<'a> {
    graph: &'a ViewGraph,
    counts: Vec<u32>,
    covered: usize,
    nodes: Vec<usize>,
    best: Option<(usize, Vec<usize>)>,
}

impl Search<'_> {
    fn push(&mut self, layer: usize, node: usize) {
        for &s in &self.graph.layers[layer][node].visible {
            let c = &mut self.counts[s as usize];
            if *c == 0 {
                self.covered += 1;
            }
            *c += 1;
        }
        self.nodes.push(node);
    }

    fn pop(&mut self, layer: usize) {
        let node = self.nodes.pop().unwrap_or(0);
        for &s in &self.graph.layers[layer][node].visible {
            let c = &mut self.counts[s as usize];
            *c -= 1;
            if *c == 0 {
                self.covered -= 1;
            }
        }
    }

    fn visit(&mut self, layer: usize) {
        let succ = self.graph.successors(layer, self.nodes[layer]);
        if layer + 1 == self.graph.depth() || succ.is_empty() {
            if self.best.as_ref().is_none_or(|b| self.covered > b.0) {
                self.best = Some((self.covered, self.nodes.clone()));
            }
            return;
        }
        for &b in succ {
            self.push(layer + 1, b);
            self.visit(layer + 1);
            self.pop(layer + 1);
        }
    }
}

/// Exhaustive search for the walk of largest coverage. Walks end at the last
/// layer or at a node without successors. Ties keep the lexicographically
/// first walk. Refuses graphs with more than `budget` candidate paths.
pub fn brute_force_optimal(graph: &ViewGraph, budget: u64) -> Result<GraphPath, GraphError> {
    let paths = graph.path_bound();
    if paths > budget as u128 {
        return Err(GraphError::BudgetExceeded { paths, budget });
    }
    let universe = graph.universe();
    let branches: Vec<usize> = if graph.depth() > 1 {
        graph.successors(0, 0).to_vec()
    } else {
        Vec::new()
    };
    let run = |first: Option<usize>| {
        let mut s = Search {
            graph,
            counts: vec![0; universe],
            covered: 0,
            nodes: Vec::new(),
            best: None,
        };
        s.push(0, 0);
        match first {
            Some(b) => {
                s.push(1, b);
                s.visit(1);
            }
            None => s.visit(0),
        }
        s.best
    };
    let results = if branches.is_empty() {
        vec![run(None)]
    } else {
        crate::par::map(&branches, |&b| run(Some(b)))
    };
    let mut best: Option<(usize, Vec<usize>)> = None;
    for r in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| r.0 > b.0) {
            best = Some(r);
        }
    }
    let (_, nodes) = best.unwrap_or((0, vec![0]));
    Ok(walk_gains(graph, nodes))
}

fn walk_gains(graph: &ViewGraph, nodes: Vec<usize>) -> GraphPath {
    let mut seen = vec![false; graph.universe()];
    let gains: Vec<usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            graph.layers[i][a]
                .visible
                .iter()
                .filter(|&&s| !core::mem::replace(&mut seen[s as usize], true))
                .count()
        })
        .collect();
    let total = gains.iter().sum();
    GraphPath { nodes, gains, total }
}

/// Builds a small graph from a scene. The root is the ready pose at the
/// first base sample. Each node of a layer draws candidates around itself
/// (filtered as in planning, IK seeded at the node); the next layer takes
/// survivors from the nodes in turn until it holds `per_layer`. Edges
/// follow `connectivity`, so a node may connect to more than the node that
/// generated it.
pub fn graph_from_scene(ctx: &PlanContext, path: &BasePath, per_layer: usize, connectivity: Connectivity) -> Result<ViewGraph, PlanError> {
    let (grid, arm, cam) = (ctx.grid, ctx.arm, ctx.cam);
    let cfg = PlannerConfig {
        joint_filter: true,
        ..ctx.config.clone()
    };
    let sub = PlanContext::new(grid, arm, cam, &cfg);
    let rays = cam.local_rays();
    let ready = arm.ready.clone();
    let ls = layers(path, 0.0);
    let start = arm.forward_kinematics(&ready, &ls[0].base)?;
    if !collision_free(grid, &start.translation.vector.into(), cfg.collision_radius) {
        return Err(PlanError::InvalidStart("camera collides or leaves the map"));
    }
    let node = |pose, joints, layer: &crate::planner::Layer| {
        let vis = visible_with_rays(grid, &pose, cam, &rays);
        GraphNode {
            visible: vis.sids,
            step: Some(ViewStep {
                base_index: layer.base_index,
                time: layer.time,
                base: layer.base,
                pose,
                joints,
                marginal_ig: 0,
                held: false,
            }),
        }
    };
    let joints = |n: &GraphNode| n.step.as_ref().expect("scene node").joints.clone();
    let mut out = vec![vec![node(start, ready.clone(), &ls[0])]];
    for layer in &ls[1..] {
        let parents = out.last().expect("root layer");
        let mut pools: Vec<_> = parents
            .iter()
            .enumerate()
            .map(|(k, p)| sub.candidates_salted(layer, &joints(p), k as u64).candidates.into_iter())
            .collect();
        let mut next = Vec::new();
        while next.len() < per_layer {
            let before = next.len();
            for pool in pools.iter_mut() {
                if next.len() < per_layer {
                    if let Some(c) = pool.next() {
                        next.push(node(c.pose, c.ik, layer));
                    }
                }
            }
            if next.len() == before {
                break;
            }
        }
        if next.is_empty() {
            break;
        }
        out.push(next);
    }
    let graph = match connectivity {
        Connectivity::Full => ViewGraph::fully_connected(out),
        Connectivity::Tvp => {
            let edges = out
                .windows(2)
                .zip(&ls[1..])
                .map(|(w, layer)| {
                    w[0].iter()
                        .map(|a| {
                            let qa = joints(a);
                            (0..w[1].len())
                                .filter(|&b| arm.reachable_within_step(&qa, &joints(&w[1][b]), layer.dt))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            ViewGraph::new(out, edges)
        }
    };
    graph.map_err(|_| PlanError::PathTooShort)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(r: core::ops::Range<u32>) -> GraphNode {
        GraphNode::from_ids(r.collect())
    }

    #[test]
    fn single_decision_matches_oracle() {
        let g = ViewGraph::fully_connected(vec![vec![ids(0..2)], vec![ids(0..3), ids(5..9), ids(1..4)]]).unwrap();
        let greedy = greedy_on_graph(&g, 0);
        assert_eq!(greedy.nodes, vec![0, 1]);
        assert_eq!(greedy.total, 6);
        assert_eq!(brute_force_optimal(&g, DEFAULT_BUDGET).unwrap(), greedy);
    }

    #[test]
    fn greedy_trap() {
        // A big first view with no way onward versus a smaller one that
        // leads to a fresh view.
        let layers = vec![vec![ids(0..0)], vec![ids(0..5), ids(0..3)], vec![ids(10..15)]];
        let edges = vec![vec![vec![0, 1]], vec![vec![], vec![0]]];
        let g = ViewGraph::new(layers, edges).unwrap();
        let greedy = greedy_on_graph(&g, 0);
        assert_eq!(greedy.nodes, vec![0, 0]);
        assert_eq!(greedy.total, 5);
        let best = brute_force_optimal(&g, DEFAULT_BUDGET).unwrap();
        assert_eq!(best.nodes, vec![0, 1, 0]);
        assert_eq!(best.total, 8);
        assert_eq!(best.gains, vec![0, 3, 5]);
    }

    #[test]
    fn dominant_node_on_optimal_path() {
        let g = ViewGraph::fully_connected(vec![
            vec![ids(0..1)],
            vec![ids(1..3), ids(0..20), ids(2..4)],
            vec![ids(3..5), ids(20..22)],
        ])
        .unwrap();
        let best = brute_force_optimal(&g, DEFAULT_BUDGET).unwrap();
        assert_eq!(best.nodes[1], 1);
        assert_eq!(best.total, 22);
        assert_eq!(g.union_size(&best.nodes), 22);
    }

    #[test]
    fn budget_refusal() {
        let layer: Vec<GraphNode> = (0..10).map(|k| ids(k..k + 1)).collect();
        let mut layers = vec![vec![ids(0..0)]];
        layers.extend(core::iter::repeat_n(layer, 4));
        let g = ViewGraph::fully_connected(layers).unwrap();
        assert_eq!(
            brute_force_optimal(&g, 1000),
            Err(GraphError::BudgetExceeded { paths: 10_000, budget: 1000 })
        );
        assert!(brute_force_optimal(&g, 10_000).is_ok());
    }

    #[test]
    fn root_and_edge_validation() {
        assert_eq!(ViewGraph::fully_connected(vec![vec![ids(0..1), ids(0..1)]]), Err(GraphError::Root(2)));
        assert!(matches!(
            ViewGraph::new(vec![vec![ids(0..1)], vec![ids(0..1)]], vec![vec![vec![3]]]),
            Err(GraphError::Edge { .. })
        ));
    }

    #[test]
    fn random_instances_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let depth = rng.random_range(2..=5);
            let mut layers = vec![vec![GraphNode::from_ids((0..rng.random_range(0..5)).map(|_| rng.random_range(0..40)).collect())]];
            for _ in 1..depth {
                let w = rng.random_range(1..=4);
                layers.push(
                    (0..w)
                        .map(|_| GraphNode::from_ids((0..rng.random_range(0..12)).map(|_| rng.random_range(0..40)).collect()))
                        .collect(),
                );
            }
            let edges: Vec<Vec<Vec<usize>>> = layers
                .windows(2)
                .map(|w| {
                    (0..w[0].len())
                        .map(|_| (0..w[1].len()).filter(|_| rng.random_bool(0.6)).collect())
                        .collect()
                })
                .collect();
            let full = ViewGraph::fully_connected(layers.clone()).unwrap();
            let g = ViewGraph::new(layers, edges).unwrap();
            for g in [&g, &full] {
                let greedy = greedy_on_graph(g, 3);
                let best = brute_force_optimal(g, DEFAULT_BUDGET).unwrap();
                assert!(best.total >= greedy.total);
                assert_eq!(best.total, g.union_size(&best.nodes));
                assert_eq!(greedy.total, g.union_size(&greedy.nodes));
            }
        }
    }
}
