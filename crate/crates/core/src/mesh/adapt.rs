//! Conforming bisection refinement and inverse-bisection coarsening.
//!
//! 1D elements split at their midpoint. 2D uses newest-vertex bisection: the
//! refinement edge of `[v0, v1, peak]` is `(v0, v1)`, and bisecting yields
//! `[peak, v0, m]` and `[v1, peak, m]` with the midpoint `m` as new peak.
//! Compatibility closure is recursive: a neighbor whose refinement edge
//! differs is bisected first, after which the child sharing the edge is
//! compatible.

use std::collections::HashMap;

use crate::scalar::{real, Real};

use super::{local_face, ElementNode, Mesh, UNUSED};

/// Diagnostics from a coarsening call.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoarsenStats {
    /// Sibling groups actually merged.
    pub merged_patches: usize,
    /// Marked elements that were not part of any executed group.
    pub skipped_marks: usize,
}

/// A group of sibling elements that can be merged in one coarsening step:
/// all active elements incident to a removable bisection midpoint.
#[derive(Debug, Clone)]
pub struct CoarsenPatch {
    /// The vertex that disappears when the patch is merged.
    pub midpoint_vertex: usize,
    /// Active element ids of the group members, ascending.
    pub elements: Vec<usize>,
    /// Forest ids of the parents restored by the merge.
    pub(crate) parents: Vec<usize>,
}

/// Tracks the up to two active elements adjacent to an edge while refining.
#[derive(Clone, Copy, Default)]
struct EdgeSlot {
    elems: [usize; 2],
    len: usize,
}

impl EdgeSlot {
    fn push(&mut self, e: usize) {
        assert!(self.len < 2, "edge shared by more than two elements");
        self.elems[self.len] = e;
        self.len += 1;
    }

    fn remove(&mut self, e: usize) {
        if self.len == 2 && self.elems[0] == e {
            self.elems[0] = self.elems[1];
        } else {
            assert!(self.len > 0 && self.elems[self.len - 1] == e);
        }
        self.len -= 1;
    }

    fn other(&self, e: usize) -> Option<usize> {
        match self.len {
            2 if self.elems[0] == e => Some(self.elems[1]),
            2 => Some(self.elems[0]),
            _ => None,
        }
    }
}

const MAX_CLOSURE_DEPTH: usize = 4096;

impl<S: Real> Mesh<S> {
    /// Bisects every marked element (ids into the active list), closing the
    /// mesh so it stays conforming. An empty mark set returns an identical
    /// mesh.
    pub fn refine(&self, marked: &[usize]) -> Mesh<S> {
        let mut vertices = self.vertices().to_vec();
        let mut forest: Vec<ElementNode> = self.forest().to_vec();

        let mut targets: Vec<usize> = marked.iter().map(|&m| self.active_forest_ids()[m]).collect();
        targets.sort_unstable();
        targets.dedup();

        if self.dim() == 1 {
            for t in targets {
                bisect_1d(t, &mut vertices, &mut forest);
            }
        } else {
            let mut edges: HashMap<[usize; 2], EdgeSlot> = HashMap::new();
            for &f in self.active_forest_ids() {
                for k in 0..3 {
                    edges
                        .entry(local_face(2, &forest[f].verts, k))
                        .or_default()
                        .push(f);
                }
            }
            for t in targets {
                ensure_bisected(t, &mut vertices, &mut forest, &mut edges, 0);
            }
        }
        Mesh::finish(self.dim(), vertices, forest)
    }

    /// Merges every sibling group that is fully marked and whose removal
    /// keeps the mesh conforming. One hierarchy level per call; ineligible
    /// marks are counted, not errors.
    pub fn coarsen(&self, marked: &[usize]) -> (Mesh<S>, CoarsenStats) {
        let mut is_marked = vec![false; self.n_elements()];
        for &m in marked {
            is_marked[m] = true;
        }

        let mut stats = CoarsenStats::default();
        let mut drop_leaf = vec![false; self.forest().len()];
        let mut drop_vertex = vec![false; self.n_vertices()];
        let mut reopen_parent = vec![false; self.forest().len()];
        let mut covered = vec![false; self.n_elements()];

        for patch in self.coarsen_patches() {
            if !patch.elements.iter().all(|&e| is_marked[e]) {
                continue;
            }
            stats.merged_patches += 1;
            drop_vertex[patch.midpoint_vertex] = true;
            for &e in &patch.elements {
                covered[e] = true;
                drop_leaf[self.active_forest_ids()[e]] = true;
            }
            for &p in &patch.parents {
                reopen_parent[p] = true;
            }
        }
        stats.skipped_marks = marked.iter().filter(|&&m| !covered[m]).count();

        if stats.merged_patches == 0 {
            return (self.clone(), stats);
        }

        // Compact vertices and forest nodes, remapping indices.
        let mut vertex_map = vec![UNUSED; self.n_vertices()];
        let mut vertices = Vec::with_capacity(self.n_vertices());
        for (v, &p) in self.vertices().iter().enumerate() {
            if !drop_vertex[v] {
                vertex_map[v] = vertices.len();
                vertices.push(p);
            }
        }
        let mut node_map = vec![UNUSED; self.forest().len()];
        let mut forest: Vec<ElementNode> = Vec::with_capacity(self.forest().len());
        for (f, node) in self.forest().iter().enumerate() {
            if drop_leaf[f] {
                continue;
            }
            node_map[f] = forest.len();
            let mut n = node.clone();
            if reopen_parent[f] {
                n.children = None;
            }
            forest.push(n);
        }
        for node in &mut forest {
            for v in node.verts.iter_mut() {
                if *v != UNUSED {
                    *v = vertex_map[*v];
                }
            }
            node.parent = node.parent.map(|p| node_map[p]);
            node.children = node.children.map(|[a, b]| [node_map[a], node_map[b]]);
        }
        (Mesh::finish(self.dim(), vertices, forest), stats)
    }

    /// All currently mergeable sibling groups, ordered by midpoint vertex id.
    pub fn coarsen_patches(&self) -> Vec<CoarsenPatch> {
        let forest = self.forest();
        // Candidate parents: both children exist and are active.
        let mut by_midpoint: HashMap<usize, Vec<usize>> = HashMap::new();
        for (f, node) in forest.iter().enumerate() {
            if let Some([c0, c1]) = node.children {
                if self.active_id_of(c0).is_some() && self.active_id_of(c1).is_some() {
                    let mid = if self.dim() == 1 {
                        forest[c0].verts[1]
                    } else {
                        forest[c0].verts[2]
                    };
                    by_midpoint.entry(mid).or_default().push(f);
                }
            }
        }

        let mut mids: Vec<usize> = by_midpoint.keys().copied().collect();
        mids.sort_unstable();

        let mut patches = Vec::new();
        for mid in mids {
            let parents = &by_midpoint[&mid];
            let mut members: Vec<usize> = parents
                .iter()
                .flat_map(|&p| forest[p].children.unwrap())
                .map(|c| self.active_id_of(c).unwrap())
                .collect();
            members.sort_unstable();
            // Removing `mid` is conforming only if every active element
            // touching it belongs to the group.
            if members.as_slice() == self.vertex_elements(mid) {
                let mut parents = parents.clone();
                parents.sort_unstable();
                patches.push(CoarsenPatch {
                    midpoint_vertex: mid,
                    elements: members,
                    parents,
                });
            }
        }
        patches
    }
}

fn bisect_1d<S: Real>(t: usize, vertices: &mut Vec<[S; 2]>, forest: &mut Vec<ElementNode>) {
    if forest[t].children.is_some() {
        return;
    }
    let [a, b, _] = forest[t].verts;
    let m = vertices.len();
    vertices.push([(vertices[a][0] + vertices[b][0]) / real(2.0), S::zero()]);
    let level = forest[t].level + 1;
    let c0 = forest.len();
    forest.push(ElementNode {
        verts: [a, m, UNUSED],
        parent: Some(t),
        children: None,
        level,
    });
    forest.push(ElementNode {
        verts: [m, b, UNUSED],
        parent: Some(t),
        children: None,
        level,
    });
    forest[t].children = Some([c0, c0 + 1]);
}

fn ensure_bisected<S: Real>(
    t: usize,
    vertices: &mut Vec<[S; 2]>,
    forest: &mut Vec<ElementNode>,
    edges: &mut HashMap<[usize; 2], EdgeSlot>,
    depth: usize,
) {
    if forest[t].children.is_some() {
        return;
    }
    assert!(
        depth < MAX_CLOSURE_DEPTH,
        "newest-vertex closure did not terminate; initial edge labeling incompatible"
    );
    loop {
        let tv = forest[t].verts;
        let edge = sorted2(tv[0], tv[1]);
        let partner = edges.get(&edge).and_then(|s| s.other(t));
        match partner {
            None => {
                bisect_pair(t, None, vertices, forest, edges);
                return;
            }
            Some(n) => {
                let nv = forest[n].verts;
                if sorted2(nv[0], nv[1]) == edge {
                    bisect_pair(t, Some(n), vertices, forest, edges);
                    return;
                }
                ensure_bisected(n, vertices, forest, edges, depth + 1);
                // The child of `n` sharing our edge now has it as its
                // refinement edge; retry.
            }
        }
    }
}

fn bisect_pair<S: Real>(
    t: usize,
    partner: Option<usize>,
    vertices: &mut Vec<[S; 2]>,
    forest: &mut Vec<ElementNode>,
    edges: &mut HashMap<[usize; 2], EdgeSlot>,
) {
    let tv = forest[t].verts;
    let m = vertices.len();
    let pa = vertices[tv[0]];
    let pb = vertices[tv[1]];
    vertices.push([(pa[0] + pb[0]) / real(2.0), (pa[1] + pb[1]) / real(2.0)]);

    split_one(t, m, vertices, forest, edges);
    if let Some(n) = partner {
        split_one(n, m, vertices, forest, edges);
    }
}

fn split_one<S: Real>(
    t: usize,
    m: usize,
    _vertices: &mut [[S; 2]],
    forest: &mut Vec<ElementNode>,
    edges: &mut HashMap<[usize; 2], EdgeSlot>,
) {
    let [v0, v1, peak] = forest[t].verts;
    let level = forest[t].level + 1;
    let c0 = forest.len();
    forest.push(ElementNode {
        verts: [peak, v0, m],
        parent: Some(t),
        children: None,
        level,
    });
    forest.push(ElementNode {
        verts: [v1, peak, m],
        parent: Some(t),
        children: None,
        level,
    });
    forest[t].children = Some([c0, c0 + 1]);

    for k in 0..3 {
        edges
            .get_mut(&local_face(2, &[v0, v1, peak], k))
            .expect("edge map out of sync")
            .remove(t);
    }
    for c in [c0, c0 + 1] {
        let cv = forest[c].verts;
        for k in 0..3 {
            edges.entry(local_face(2, &cv, k)).or_default().push(c);
        }
    }
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}
