//! Grid topology for the cover-and-merge construction.
//!
//! A pixel grid of even dimensions is covered by disjoint 2x2 circuits.
//! The dual graph has one vertex per circuit and one edge per pair of
//! lattice-adjacent circuits; a real-valued weight per dual edge fully
//! parameterizes a scan order (see [`crate::cover`]). The line graph over
//! dual edges is the substrate for per-edge message passing.

use crate::error::{Error, Result};

/// Default cap on pixel count accepted by [`GridSize::new`].
pub const MAX_PIXELS: usize = 1 << 16;

/// Even image dimensions, validated on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSize {
    height: usize,
    width: usize,
}

impl GridSize {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        Self::with_max_pixels(height, width, MAX_PIXELS)
    }

    pub fn with_max_pixels(height: usize, width: usize, max_pixels: usize) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidSize {
                height,
                width,
                reason: "dimensions must be at least 2",
            });
        }
        if height % 2 != 0 || width % 2 != 0 {
            return Err(Error::InvalidSize {
                height,
                width,
                reason: "dimensions must be even (the cover tiles the grid with 2x2 circuits)",
            });
        }
        if height.saturating_mul(width) > max_pixels {
            return Err(Error::InvalidSize {
                height,
                width,
                reason: "pixel count exceeds the configured maximum",
            });
        }
        Ok(Self { height, width })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    /// Circuit lattice dimensions `(H/2, W/2)`.
    pub fn circuit_dims(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    pub fn circuit_count(&self) -> usize {
        self.pixel_count() / 4
    }

    pub fn pixel_id(&self, row: usize, col: usize) -> PixelId {
        debug_assert!(row < self.height && col < self.width);
        PixelId(row * self.width + col)
    }

    pub fn pixel_coords(&self, id: PixelId) -> (usize, usize) {
        (id.0 / self.width, id.0 % self.width)
    }

    /// Circuit containing pixel `(r, c)` is `(r/2, c/2)`.
    pub fn circuit_of(&self, id: PixelId) -> CircuitId {
        let (r, c) = self.pixel_coords(id);
        CircuitId((r / 2) * (self.width / 2) + c / 2)
    }

    /// True when consecutive pixels share a 4-adjacent grid edge.
    pub fn adjacent(&self, a: PixelId, b: PixelId) -> bool {
        let (ar, ac) = self.pixel_coords(a);
        let (br, bc) = self.pixel_coords(b);
        ar.abs_diff(br) + ac.abs_diff(bc) == 1
    }
}

/// Row-major pixel index in `[0, H*W)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelId(pub usize);

/// Row-major index into the `(H/2) x (W/2)` circuit lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CircuitId(pub usize);

/// Index into [`DualGraph::edges`]; the alignment key between weight
/// vectors, pooled features and line-graph nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualEdgeId(pub usize);

/// An undirected pixel-grid edge, stored `(smaller, larger)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PixelEdge(pub PixelId, pub PixelId);

impl PixelEdge {
    pub fn new(a: PixelId, b: PixelId) -> Self {
        if a <= b {
            Self(a, b)
        } else {
            Self(b, a)
        }
    }
}

/// The dual graph over 2x2 circuits.
///
/// Edges are kept in a canonical order: all horizontal edges in row-major
/// order first, then all vertical edges in row-major order. Everything keyed
/// by [`DualEdgeId`] (weights, pooled features, line-graph nodes) shares this
/// layout.
#[derive(Clone, Debug)]
pub struct DualGraph {
    size: GridSize,
    edges: Vec<(CircuitId, CircuitId)>,
    horizontal_count: usize,
}

impl DualGraph {
    pub fn size(&self) -> GridSize {
        self.size
    }

    pub fn dims(&self) -> (usize, usize) {
        self.size.circuit_dims()
    }

    pub fn vertex_count(&self) -> usize {
        self.size.circuit_count()
    }

    pub fn edges(&self) -> &[(CircuitId, CircuitId)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn endpoints(&self, edge: DualEdgeId) -> (CircuitId, CircuitId) {
        self.edges[edge.0]
    }

    pub fn is_horizontal(&self, edge: DualEdgeId) -> bool {
        edge.0 < self.horizontal_count
    }

    /// Incident edge lists per circuit, in ascending edge order.
    pub fn incidence(&self) -> Vec<Vec<(DualEdgeId, CircuitId)>> {
        let mut inc = vec![Vec::with_capacity(4); self.vertex_count()];
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            inc[a.0].push((DualEdgeId(i), b));
            inc[b.0].push((DualEdgeId(i), a));
        }
        inc
    }
}

/// Expected dual edge count `(H*W - H - W) / 2` for a valid size.
pub fn dual_edge_count(size: GridSize) -> usize {
    (size.pixel_count() - size.height() - size.width()) / 2
}

/// Builds the dual graph with canonical edge ordering.
pub fn build_dual(size: GridSize) -> DualGraph {
    let (ch, cw) = size.circuit_dims();
    let mut edges = Vec::with_capacity(dual_edge_count(size));
    for r in 0..ch {
        for c in 0..cw.saturating_sub(1) {
            edges.push((CircuitId(r * cw + c), CircuitId(r * cw + c + 1)));
        }
    }
    let horizontal_count = edges.len();
    for r in 0..ch.saturating_sub(1) {
        for c in 0..cw {
            edges.push((CircuitId(r * cw + c), CircuitId((r + 1) * cw + c)));
        }
    }
    debug_assert_eq!(edges.len(), dual_edge_count(size));
    DualGraph {
        size,
        edges,
        horizontal_count,
    }
}

/// One covering circuit: its four pixels and the four edges of its 4-cycle.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub id: CircuitId,
    /// Top-left, top-right, bottom-right, bottom-left.
    pub pixels: [PixelId; 4],
    /// The 4-cycle through `pixels` in that order.
    pub edges: [PixelEdge; 4],
}

/// Enumerates the disjoint 2x2 circuits covering the grid.
pub fn circuit_cover(size: GridSize) -> Vec<Circuit> {
    let (ch, cw) = size.circuit_dims();
    let mut out = Vec::with_capacity(size.circuit_count());
    for r in 0..ch {
        for c in 0..cw {
            let pixels = [
                size.pixel_id(2 * r, 2 * c),
                size.pixel_id(2 * r, 2 * c + 1),
                size.pixel_id(2 * r + 1, 2 * c + 1),
                size.pixel_id(2 * r + 1, 2 * c),
            ];
            let edges = [
                PixelEdge::new(pixels[0], pixels[1]),
                PixelEdge::new(pixels[1], pixels[2]),
                PixelEdge::new(pixels[2], pixels[3]),
                PixelEdge::new(pixels[3], pixels[0]),
            ];
            out.push(Circuit {
                id: CircuitId(r * cw + c),
                pixels,
                edges,
            });
        }
    }
    out
}

/// The four pixel edges involved in merging two adjacent circuits: the
/// facing side edges `e`, `f` get removed and the connecting edges `u`, `w`
/// get added. `u` joins `e.0` to `f.0` and `w` joins `e.1` to `f.1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelEdgeQuad {
    pub e: PixelEdge,
    pub f: PixelEdge,
    pub u: PixelEdge,
    pub w: PixelEdge,
}

/// Resolves the exchange quad for a dual edge.
///
/// Horizontal dual edge: `e` is the right side of the left circuit, `f` the
/// left side of the right circuit, `u`/`w` the upper/lower connecting edges.
/// Vertical dual edges use the transposed convention.
pub fn cross_edges(dual: &DualGraph, edge: DualEdgeId) -> PixelEdgeQuad {
    let size = dual.size();
    let (cw,) = (size.circuit_dims().1,);
    let (a, _b) = dual.endpoints(edge);
    let (r, c) = (a.0 / cw, a.0 % cw);
    if dual.is_horizontal(edge) {
        let e = PixelEdge::new(
            size.pixel_id(2 * r, 2 * c + 1),
            size.pixel_id(2 * r + 1, 2 * c + 1),
        );
        let f = PixelEdge::new(
            size.pixel_id(2 * r, 2 * c + 2),
            size.pixel_id(2 * r + 1, 2 * c + 2),
        );
        PixelEdgeQuad {
            e,
            f,
            u: PixelEdge::new(e.0, f.0),
            w: PixelEdge::new(e.1, f.1),
        }
    } else {
        let e = PixelEdge::new(
            size.pixel_id(2 * r + 1, 2 * c),
            size.pixel_id(2 * r + 1, 2 * c + 1),
        );
        let f = PixelEdge::new(
            size.pixel_id(2 * r + 2, 2 * c),
            size.pixel_id(2 * r + 2, 2 * c + 1),
        );
        PixelEdgeQuad {
            e,
            f,
            u: PixelEdge::new(e.0, f.0),
            w: PixelEdge::new(e.1, f.1),
        }
    }
}

/// Line graph over dual edges: node `i` is dual edge `i`; nodes are adjacent
/// iff their dual edges share a circuit endpoint.
#[derive(Clone, Debug)]
pub struct LineGraph {
    node_count: usize,
    adjacency: Vec<(usize, usize)>,
}

impl LineGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Undirected adjacency pairs, each stored once with `a < b`.
    pub fn adjacency(&self) -> &[(usize, usize)] {
        &self.adjacency
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Per-node neighbor lists.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count];
        for &(a, b) in &self.adjacency {
            out[a].push(b);
            out[b].push(a);
        }
        out
    }
}

pub fn build_line_graph(dual: &DualGraph) -> LineGraph {
    let mut adjacency = Vec::new();
    for inc in dual.incidence() {
        for i in 0..inc.len() {
            for j in i + 1..inc.len() {
                let (a, b) = (inc[i].0 .0, inc[j].0 .0);
                adjacency.push((a.min(b), a.max(b)));
            }
        }
    }
    // Two lattice edges share at most one circuit, so no duplicates arise.
    adjacency.sort_unstable();
    debug_assert!(adjacency.windows(2).all(|w| w[0] != w[1]));
    LineGraph {
        node_count: dual.edge_count(),
        adjacency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(h: usize, w: usize) -> GridSize {
        GridSize::new(h, w).unwrap()
    }

    #[test]
    fn rejects_odd_and_undersized_dims() {
        assert!(GridSize::new(3, 4).is_err());
        assert!(GridSize::new(4, 6).is_ok());
        assert!(GridSize::new(0, 4).is_err());
        assert!(GridSize::new(2, 2).is_ok());
        assert!(GridSize::new(512, 512).is_err()); // over MAX_PIXELS
    }

    #[test]
    fn dual_edge_counts_match_formula() {
        assert_eq!(build_dual(size(4, 4)).edge_count(), 4);
        assert_eq!(build_dual(size(4, 4)).vertex_count(), 4);
        assert_eq!(build_dual(size(2, 2)).edge_count(), 0);
        assert_eq!(build_dual(size(32, 32)).edge_count(), 480);
        assert_eq!(build_dual(size(32, 32)).vertex_count(), 256);
    }

    #[test]
    fn dual_edges_are_canonical() {
        let dual = build_dual(size(6, 4));
        // 3x2 lattice: horizontal edges first (3), then vertical (4).
        assert_eq!(dual.edge_count(), 7);
        assert!(dual.is_horizontal(DualEdgeId(2)));
        assert!(!dual.is_horizontal(DualEdgeId(3)));
        for &(a, b) in dual.edges() {
            assert!(a < b);
            let (cw,) = (2,);
            let (ar, ac) = (a.0 / cw, a.0 % cw);
            let (br, bc) = (b.0 / cw, b.0 % cw);
            assert_eq!(ar.abs_diff(br) + ac.abs_diff(bc), 1);
        }
    }

    #[test]
    fn cover_is_disjoint_and_complete() {
        for (h, w) in [(2, 2), (4, 4), (6, 8)] {
            let s = size(h, w);
            let cover = circuit_cover(s);
            let mut seen = vec![false; s.pixel_count()];
            for circuit in &cover {
                for p in circuit.pixels {
                    assert!(!seen[p.0], "pixel covered twice");
                    seen[p.0] = true;
                }
                // The four edges form a 4-cycle: each pixel appears in
                // exactly two of them.
                for p in circuit.pixels {
                    let deg = circuit
                        .edges
                        .iter()
                        .filter(|e| e.0 == p || e.1 == p)
                        .count();
                    assert_eq!(deg, 2);
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn pixel_to_circuit_mapping() {
        let s = size(4, 4);
        assert_eq!(s.circuit_of(s.pixel_id(2, 3)), CircuitId(3)); // circuit (1,1)
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(
                    s.circuit_of(s.pixel_id(r, c)),
                    CircuitId((r / 2) * 2 + c / 2)
                );
            }
        }
    }

    #[test]
    fn cross_edges_horizontal_quad() {
        // 2 rows x 4 cols: two circuits side by side, one horizontal dual edge.
        let s = size(2, 4);
        let dual = build_dual(s);
        assert_eq!(dual.edge_count(), 1);
        let q = cross_edges(&dual, DualEdgeId(0));
        assert_eq!(q.e, PixelEdge::new(s.pixel_id(0, 1), s.pixel_id(1, 1)));
        assert_eq!(q.f, PixelEdge::new(s.pixel_id(0, 2), s.pixel_id(1, 2)));
        assert_eq!(q.u, PixelEdge::new(s.pixel_id(0, 1), s.pixel_id(0, 2)));
        assert_eq!(q.w, PixelEdge::new(s.pixel_id(1, 1), s.pixel_id(1, 2)));
    }

    #[test]
    fn cross_edges_vertical_quad_is_transposed() {
        // 4 rows x 2 cols: two stacked circuits, one vertical dual edge.
        let s = size(4, 2);
        let dual = build_dual(s);
        assert_eq!(dual.edge_count(), 1);
        let q = cross_edges(&dual, DualEdgeId(0));
        assert_eq!(q.e, PixelEdge::new(s.pixel_id(1, 0), s.pixel_id(1, 1)));
        assert_eq!(q.f, PixelEdge::new(s.pixel_id(2, 0), s.pixel_id(2, 1)));
        assert_eq!(q.u, PixelEdge::new(s.pixel_id(1, 0), s.pixel_id(2, 0)));
        assert_eq!(q.w, PixelEdge::new(s.pixel_id(1, 1), s.pixel_id(2, 1)));
    }

    #[test]
    fn quads_form_4_cycles() {
        let s = size(8, 8);
        let dual = build_dual(s);
        for i in 0..dual.edge_count() {
            let q = cross_edges(&dual, DualEdgeId(i));
            // e,u,f,w traversed as a cycle: e.0-e.1, e.1-f.1 (w), f.1-f.0, f.0-e.0 (u)
            assert!(s.adjacent(q.e.0, q.e.1));
            assert!(s.adjacent(q.f.0, q.f.1));
            assert_eq!(q.u, PixelEdge::new(q.e.0, q.f.0));
            assert_eq!(q.w, PixelEdge::new(q.e.1, q.f.1));
            assert!(s.adjacent(q.u.0, q.u.1));
            assert!(s.adjacent(q.w.0, q.w.1));
        }
    }

    #[test]
    fn quads_are_edge_disjoint_across_dual_edges() {
        let s = size(8, 8);
        let dual = build_dual(s);
        let mut seen = std::collections::HashSet::new();
        for i in 0..dual.edge_count() {
            let q = cross_edges(&dual, DualEdgeId(i));
            for edge in [q.e, q.f, q.u, q.w] {
                assert!(seen.insert(edge), "edge reused across quads: {edge:?}");
            }
        }
    }

    /// Independent line-graph oracle: brute-force pairwise shared-endpoint
    /// enumeration over dual edges.
    fn line_graph_brute(dual: &DualGraph) -> Vec<(usize, usize)> {
        let edges = dual.edges();
        let mut out = Vec::new();
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if a == c || a == d || b == c || b == d {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn line_graph_matches_brute_force_examples() {
        // 4x4 image: dual graph is a 4-cycle; its line graph is again a 4-cycle.
        let lg = build_line_graph(&build_dual(size(4, 4)));
        assert_eq!(lg.node_count(), 4);
        assert_eq!(lg.edge_count(), 4);

        // 6x4 image: 3x2 dual lattice with 7 edges -> 7 nodes, 10 line edges.
        let dual = build_dual(size(6, 4));
        let lg = build_line_graph(&dual);
        assert_eq!(lg.node_count(), 7);
        assert_eq!(lg.edge_count(), 10);
        assert_eq!(lg.adjacency(), line_graph_brute(&dual).as_slice());

        // 2x2 image: no dual edges, empty line graph.
        let lg = build_line_graph(&build_dual(size(2, 2)));
        assert_eq!(lg.node_count(), 0);
        assert_eq!(lg.edge_count(), 0);
    }

    #[test]
    fn line_graph_matches_brute_force_all_small_sizes() {
        for h in (2..=12).step_by(2) {
            for w in (2..=12).step_by(2) {
                let dual = build_dual(size(h, w));
                let lg = build_line_graph(&dual);
                let brute = line_graph_brute(&dual);
                assert_eq!(lg.adjacency(), brute.as_slice(), "size {h}x{w}");
                // Edge count also equals sum over vertices of C(deg, 2).
                let mut deg = vec![0usize; dual.vertex_count()];
                for &(a, b) in dual.edges() {
                    deg[a.0] += 1;
                    deg[b.0] += 1;
                }
                let expect: usize = deg.iter().map(|&d| d * (d.saturating_sub(1)) / 2).sum();
                assert_eq!(lg.edge_count(), expect);
            }
        }
    }
}
