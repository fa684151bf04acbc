//! Gauge structure of the coupling graph.
//!
//! Every mode carries a free U(1) phase; every coupling ties two of them
//! together. On a spanning tree all coupling phases can be rotated away, so
//! what survives is one phase per independent loop: `E − V + C` physical
//! phases for `E` couplings, `V` participating modes and `C` connected
//! components.
//!
//! The spanning tree is grown breadth-first, neighbours visited in edge
//! insertion order, from the system's gauge root (if set) or otherwise from
//! the lexicographically smallest photon label. Each further component is
//! rooted at its smallest photon label.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{apply_vertex_phases, ModeKind, SystemModel};
use crate::phase;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub photon: usize,
    pub magnon: usize,
    pub phase: f64,
}

/// Bipartite photon/magnon coupling graph over the modes that carry at
/// least one coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    pub vertices: Vec<String>,
    pub kinds: Vec<ModeKind>,
    pub edges: Vec<GraphEdge>,
    /// `adjacency[v]` lists `(edge index, neighbour)` in insertion order.
    pub adjacency: Vec<Vec<(usize, usize)>>,
    root: Option<usize>,
}

impl CouplingGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == label)
    }

    /// Connected components, each as a sorted vertex list.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.vertex_count()];
        let mut out = Vec::new();
        for start in 0..self.vertex_count() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(_, w) in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Number of independent cycles, `E − V + C`.
    pub fn cyclomatic_number(&self) -> usize {
        self.edge_count() + self.components().len() - self.vertex_count()
    }

    fn component_root(&self, comp: &[usize]) -> usize {
        if let Some(r) = self.root.filter(|r| comp.contains(r)) {
            return r;
        }
        let photons = comp.iter().copied().filter(|&v| self.kinds[v] == ModeKind::Photon);
        photons
            .min_by(|&a, &b| self.vertices[a].cmp(&self.vertices[b]))
            .or_else(|| comp.iter().copied().min_by(|&a, &b| self.vertices[a].cmp(&self.vertices[b])))
            .expect("component is non-empty")
    }

    /// BFS forest. Returns, per vertex, the parent link `(edge, parent)`,
    /// the BFS order and the tree-edge mask.
    fn spanning_forest(&self) -> SpanningForest {
        let n = self.vertex_count();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut visited = vec![false; n];
        let mut in_tree = vec![false; self.edge_count()];
        let mut order = Vec::with_capacity(n);
        let mut comps = self.components();
        // keep component order deterministic: the one holding the root first
        comps.sort_by_key(|c| {
            let r = self.component_root(c);
            (Some(r) != self.root, self.vertices[r].clone())
        });
        for comp in comps {
            let root = self.component_root(&comp);
            visited[root] = true;
            order.push(root);
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for &(e, w) in &self.adjacency[v] {
                    if !visited[w] {
                        visited[w] = true;
                        parent[w] = Some((e, v));
                        depth[w] = depth[v] + 1;
                        in_tree[e] = true;
                        order.push(w);
                        queue.push_back(w);
                    }
                }
            }
        }
        SpanningForest {
            parent,
            depth,
            order,
            in_tree,
        }
    }
}

struct SpanningForest {
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    order: Vec<usize>,
    in_tree: Vec<bool>,
}

pub fn build_graph(system: &SystemModel) -> CouplingGraph {
    let mut vertices: Vec<String> = Vec::new();
    let mut kinds = Vec::new();
    // vertex order follows first appearance in the edge list
    let mut intern = |label: &str, kind: ModeKind| -> usize {
        match vertices.iter().position(|v| v == label) {
            Some(i) => i,
            None => {
                vertices.push(label.to_string());
                kinds.push(kind);
                vertices.len() - 1
            }
        }
    };
    let mut edges = Vec::new();
    for e in system.edges() {
        let p = intern(&e.photon, ModeKind::Photon);
        let m = intern(&e.magnon, ModeKind::Magnon);
        edges.push(GraphEdge {
            photon: p,
            magnon: m,
            phase: e.phase(),
        });
    }
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.photon].push((i, e.magnon));
        adjacency[e.magnon].push((i, e.photon));
    }
    let root = system.gauge_root().and_then(|r| vertices.iter().position(|v| v == r));
    CouplingGraph {
        vertices,
        kinds,
        edges,
        adjacency,
        root,
    }
}

/// A closed walk through the graph. `edges[k] = (edge index, +1 | −1)`, where
/// +1 means the edge is traversed photon → magnon. `vertices[k]` is the
/// vertex the k-th step leaves from.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, i8)>,
}

impl Cycle {
    pub fn labels(&self, graph: &CouplingGraph) -> Vec<String> {
        self.vertices.iter().map(|&v| graph.vertices[v].clone()).collect()
    }
}

/// Fundamental cycles of the BFS spanning forest, one per non-tree edge, in
/// edge insertion order. Each cycle starts at the chord's photon, crosses the
/// chord to its magnon and returns along the tree.
pub fn cycle_basis(graph: &CouplingGraph) -> Vec<Cycle> {
    let forest = graph.spanning_forest();
    graph
        .edges
        .iter()
        .enumerate()
        .filter(|(i, _)| !forest.in_tree[*i])
        .map(|(i, e)| fundamental_cycle(graph, &forest, i, e))
        .collect()
}

fn fundamental_cycle(graph: &CouplingGraph, forest: &SpanningForest, chord: usize, e: &GraphEdge) -> Cycle {
    // tree paths from both chord endpoints up to their lowest common ancestor
    let (mut a, mut b) = (e.magnon, e.photon);
    let mut up_from_magnon = Vec::new();
    let mut up_from_photon = Vec::new();
    while forest.depth[a] > forest.depth[b] {
        let (edge, p) = forest.parent[a].expect("non-root");
        up_from_magnon.push((a, edge));
        a = p;
    }
    while forest.depth[b] > forest.depth[a] {
        let (edge, p) = forest.parent[b].expect("non-root");
        up_from_photon.push((b, edge));
        b = p;
    }
    while a != b {
        let (ea, pa) = forest.parent[a].expect("non-root");
        up_from_magnon.push((a, ea));
        a = pa;
        let (eb, pb) = forest.parent[b].expect("non-root");
        up_from_photon.push((b, eb));
        b = pb;
    }
    let lca = a;

    let orientation = |edge: usize, from: usize| -> i8 {
        if graph.edges[edge].photon == from {
            1
        } else {
            -1
        }
    };
    let mut vertices = vec![e.photon];
    let mut edges = vec![(chord, 1)];
    for &(v, edge) in &up_from_magnon {
        vertices.push(v);
        edges.push((edge, orientation(edge, v)));
    }
    vertices.push(lca);
    // back down towards the chord's photon
    for &(v, edge) in up_from_photon.iter().rev() {
        let parent = forest.parent[v].expect("non-root").1;
        edges.push((edge, orientation(edge, parent)));
        vertices.push(v);
    }
    // the photon endpoint closes the walk and is already first
    vertices.pop();
    Cycle { vertices, edges }
}

/// Signed sum of edge phases around the cycle, wrapped to (−π, π].
pub fn loop_phase(cycle: &Cycle, graph: &CouplingGraph) -> Result<f64> {
    if cycle.edges.is_empty() || cycle.edges.len() != cycle.vertices.len() {
        return Err(Error::CycleNotClosed);
    }
    let n = cycle.edges.len();
    let mut total = 0.0;
    for (k, &(edge, sign)) in cycle.edges.iter().enumerate() {
        let e = graph.edges.get(edge).ok_or(Error::CycleNotClosed)?;
        let from = cycle.vertices[k];
        let to = cycle.vertices[(k + 1) % n];
        let ok = match sign {
            1 => e.photon == from && e.magnon == to,
            -1 => e.magnon == from && e.photon == to,
            _ => false,
        };
        if !ok {
            return Err(Error::CycleNotClosed);
        }
        total += f64::from(sign) * e.phase;
    }
    Ok(phase::wrap(total))
}

/// Finds the cycle that visits the given labels in order (each consecutive
/// pair, including last → first, must be coupled).
pub fn cycle_through(graph: &CouplingGraph, labels: &[&str]) -> Result<Cycle> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::CycleNotClosed);
    }
    let idx = labels
        .iter()
        .map(|l| graph.vertex(l).ok_or_else(|| Error::UnknownMode(l.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut edges = Vec::with_capacity(n);
    for k in 0..n {
        let (u, v) = (idx[k], idx[(k + 1) % n]);
        let found = graph.adjacency[u]
            .iter()
            .find(|&&(_, w)| w == v)
            .map(|&(e, _)| e)
            .ok_or(Error::CycleNotClosed)?;
        let sign = if graph.edges[found].photon == u { 1 } else { -1 };
        edges.push((found, sign));
    }
    Ok(Cycle { vertices: idx, edges })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedEdge {
    pub photon: String,
    pub magnon: String,
    pub phase_rad: f64,
    pub tree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPhase {
    pub theta_rad: f64,
    /// Vertex labels around the loop, starting with the chord's photon.
    pub cycle: Vec<String>,
    pub chord: (String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeReduction {
    pub vertex_phases: BTreeMap<String, f64>,
    pub reduced_edges: Vec<ReducedEdge>,
    pub physical_phases: Vec<PhysicalPhase>,
}

impl GaugeReduction {
    pub fn thetas(&self) -> Vec<f64> {
        self.physical_phases.iter().map(|p| p.theta_rad).collect()
    }
}

/// Rotates every spanning-tree coupling phase to zero. Each chord is left
/// carrying the loop phase of its fundamental cycle.
pub fn reduce(system: &SystemModel) -> Result<GaugeReduction> {
    let graph = build_graph(system);
    let forest = graph.spanning_forest();
    let mut alpha = vec![0.0; graph.vertex_count()];
    for &v in &forest.order {
        if let Some((e, p)) = forest.parent[v] {
            let phi = graph.edges[e].phase;
            // φ − α_photon + α_magnon = 0 along the tree edge
            alpha[v] = match graph.kinds[v] {
                ModeKind::Magnon => alpha[p] - phi,
                ModeKind::Photon => alpha[p] + phi,
            };
        }
    }
    let vertex_phases: BTreeMap<String, f64> = graph
        .vertices
        .iter()
        .zip(&alpha)
        .map(|(l, a)| (l.clone(), phase::wrap(*a)))
        .collect();
    let rotated = apply_vertex_phases(system, &vertex_phases)?;
    let reduced_edges = rotated
        .edges()
        .iter()
        .zip(&forest.in_tree)
        .map(|(e, tree)| ReducedEdge {
            photon: e.photon.clone(),
            magnon: e.magnon.clone(),
            phase_rad: e.phase(),
            tree: *tree,
        })
        .collect::<Vec<_>>();
    let physical_phases = cycle_basis(&graph)
        .into_iter()
        .map(|cycle| {
            let chord = &graph.edges[cycle.edges[0].0];
            PhysicalPhase {
                theta_rad: loop_phase(&cycle, &graph).expect("fundamental cycles are closed"),
                cycle: cycle.labels(&graph),
                chord: (graph.vertices[chord.photon].clone(), graph.vertices[chord.magnon].clone()),
            }
        })
        .collect();
    Ok(GaugeReduction {
        vertex_phases,
        reduced_edges,
        physical_phases,
    })
}

/// The system in its reduced gauge (tree couplings real and positive).
pub fn reduced_system(system: &SystemModel) -> Result<SystemModel> {
    let r = reduce(system)?;
    apply_vertex_phases(system, &r.vertex_phases)
}

/// The reduced system with chord phases replaced by `thetas`, in the order of
/// `reduce(system).physical_phases`.
pub fn with_physical_phases(system: &SystemModel, thetas: &[f64]) -> Result<SystemModel> {
    let r = reduce(system)?;
    if thetas.len() != r.physical_phases.len() {
        return Err(Error::InvalidParameter(format!(
            "system has {} physical phases, {} given",
            r.physical_phases.len(),
            thetas.len()
        )));
    }
    let mut out = apply_vertex_phases(system, &r.vertex_phases)?;
    for (p, theta) in r.physical_phases.iter().zip(thetas) {
        let edge = out.edge_mut(&p.chord.0, &p.chord.1).expect("chord exists");
        edge.set_phase(*theta);
    }
    Ok(out)
}
