//! 3-colored triangular lattice on a torus.
//!
//! Vertices live on the triangular lattice `Z^2` with neighbor directions
//! `±(1,0), ±(0,1), ±(-1,1)`. The color of the point `(i, j)` is
//! `(i - j) mod 3`, so neighbors always differ in color. The unit cell holds
//! one vertex of each color and is spanned by `A1 = (2,-1)` and `A2 = (1,1)`;
//! the torus identifies `l1·A1` and `l2·A2`. Qubits sit on the triangular
//! plaquettes (two per vertex). An edge carries the color that differs from
//! both of its endpoints.
//!
//! For a color `b`, the b-superlattice has the b-colored vertices as sites and
//! one superedge per b-colored edge, joining the two b-colored apexes of the
//! plaquettes on either side of the edge. It is again a triangular lattice,
//! with cell displacements `±(1,0), ±(0,1), ±(-1,1)`.

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    R,
    G,
    B,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::R, Color::G, Color::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Color {
        Color::ALL[i % 3]
    }

    /// The color different from both `a` and `b` (`a != b`).
    pub fn third(a: Color, b: Color) -> Color {
        debug_assert_ne!(a, b);
        Color::from_index(3 - a.index() - b.index())
    }

    pub fn others(self) -> [Color; 2] {
        let i = self.index();
        [Color::from_index(i + 1), Color::from_index(i + 2)]
    }

    pub fn letter(self) -> char {
        ['R', 'G', 'B'][self.index()]
    }

    pub fn parse(c: char) -> Option<Color> {
        match c.to_ascii_uppercase() {
            'R' => Some(Color::R),
            'G' => Some(Color::G),
            'B' => Some(Color::B),
            _ => None,
        }
    }
}

impl std::fmt::Display for Color {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    L1,
    L2,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::L1, Direction::L2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Direction {
        match self {
            Direction::L1 => Direction::L2,
            Direction::L2 => Direction::L1,
        }
    }

    /// Unit step in cell coordinates.
    pub fn step(self) -> [i64; 2] {
        match self {
            Direction::L1 => [1, 0],
            Direction::L2 => [0, 1],
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::L1 => write!(f, "l1"),
            Direction::L2 => write!(f, "l2"),
        }
    }
}

const A1: [i64; 2] = [2, -1];
const A2: [i64; 2] = [1, 1];
const OFFSET: [[i64; 2]; 3] = [[0, 0], [1, 0], [0, 1]];
const FORWARD: [[i64; 2]; 3] = [[1, 0], [0, 1], [-1, 1]];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Vertex {
    pub cell: [usize; 2],
    pub color: Color,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub color: Color,
    pub plaquettes: [usize; 2],
    /// Displacement from `vertices[0]` to `vertices[1]` in lattice coordinates.
    pub shift: [i64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Plaquette {
    /// Corner vertices indexed by color.
    pub vertices: [usize; 3],
    /// Side edges indexed by color.
    pub edges: [usize; 3],
    pub up: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColoredTorusLattice {
    pub l1: usize,
    pub l2: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub plaquettes: Vec<Plaquette>,
    pub vertex_plaquettes: Vec<[usize; 6]>,
    pub vertex_edges: Vec<[usize; 6]>,
}

fn color_of_point(p: [i64; 2]) -> usize {
    (p[0] - p[1]).rem_euclid(3) as usize
}

/// Cell coordinates of a displacement between two points of the same color.
pub(crate) fn cell_shift(d: [i64; 2]) -> [i64; 2] {
    debug_assert_eq!((d[0] - d[1]).rem_euclid(3), 0);
    let c1 = (d[0] - d[1]) / 3;
    [c1, d[1] + c1]
}

impl ColoredTorusLattice {
    pub fn new(l1: usize, l2: usize) -> Result<Self> {
        build_lattice(l1, l2)
    }

    pub fn num_qubits(&self) -> usize {
        self.plaquettes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.l1 * self.l2
    }

    pub fn vertex_index(&self, cell: [usize; 2], color: Color) -> usize {
        (cell[1] * self.l1 + cell[0]) * 3 + color.index()
    }

    /// Unreduced lattice position of a vertex in the fundamental domain.
    pub fn position(&self, v: usize) -> [i64; 2] {
        let vx = &self.vertices[v];
        let (c1, c2) = (vx.cell[0] as i64, vx.cell[1] as i64);
        let o = OFFSET[vx.color.index()];
        [c1 * A1[0] + c2 * A2[0] + o[0], c1 * A1[1] + c2 * A2[1] + o[1]]
    }

    /// Vertex index of an arbitrary lattice point.
    pub fn reduce(&self, p: [i64; 2]) -> usize {
        let c = color_of_point(p);
        let o = OFFSET[c];
        let cs = cell_shift([p[0] - o[0], p[1] - o[1]]);
        let c1 = cs[0].rem_euclid(self.l1 as i64) as usize;
        let c2 = cs[1].rem_euclid(self.l2 as i64) as usize;
        self.vertex_index([c1, c2], Color::from_index(c))
    }

    fn edge_between(&self, p: [i64; 2], q: [i64; 2]) -> usize {
        let d = [q[0] - p[0], q[1] - p[1]];
        if let Some(k) = FORWARD.iter().position(|&f| f == d) {
            self.reduce(p) * 3 + k
        } else {
            let k = FORWARD
                .iter()
                .position(|&f| f == [-d[0], -d[1]])
                .expect("points are neighbors");
            self.reduce(q) * 3 + k
        }
    }

    fn plaquette_at(&self, pts: [[i64; 2]; 3]) -> usize {
        let mut s = pts.to_vec();
        s.sort();
        for &p in &pts {
            let mut up = vec![p, [p[0] + 1, p[1]], [p[0], p[1] + 1]];
            up.sort();
            if up == s {
                return self.reduce(p) * 2;
            }
            let mut down = vec![p, [p[0] + 1, p[1]], [p[0] + 1, p[1] - 1]];
            down.sort();
            if down == s {
                return self.reduce(p) * 2 + 1;
            }
        }
        unreachable!("points do not form a plaquette")
    }

    pub fn edges_of_color(&self, c: Color) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].color == c)
    }

    /// Whether edge `e`, walked from `vertices[0]`, leaves the fundamental
    /// domain across the seam of each direction.
    pub fn edge_crossing(&self, e: usize) -> [bool; 2] {
        let ed = &self.edges[e];
        let p = self.position(ed.vertices[0]);
        let q = [p[0] + ed.shift[0], p[1] + ed.shift[1]];
        let o = OFFSET[color_of_point(q)];
        let cs = cell_shift([q[0] - o[0], q[1] - o[1]]);
        let l = [self.l1 as i64, self.l2 as i64];
        [0, 1].map(|k| cs[k] < 0 || cs[k] >= l[k])
    }

    pub fn vertices_of_color(&self, c: Color) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(move |&v| self.vertices[v].color == c)
    }

    /// The two common neighbors (unreduced) of the endpoints of edge `e`,
    /// ordered to match `edges[e].plaquettes`.
    fn edge_apexes(&self, e: usize) -> [[i64; 2]; 2] {
        let ed = &self.edges[e];
        let p = self.position(ed.vertices[0]);
        let q = [p[0] + ed.shift[0], p[1] + ed.shift[1]];
        let dirs: Vec<[i64; 2]> = FORWARD
            .iter()
            .flat_map(|&f| [f, [-f[0], -f[1]]])
            .collect();
        let mut common = Vec::new();
        for d in &dirs {
            let a = [p[0] + d[0], p[1] + d[1]];
            let da = [a[0] - q[0], a[1] - q[1]];
            if dirs.contains(&da) {
                common.push(a);
            }
        }
        debug_assert_eq!(common.len(), 2);
        let t0 = self.plaquette_at([p, q, common[0]]);
        if t0 == ed.plaquettes[0] {
            [common[0], common[1]]
        } else {
            [common[1], common[0]]
        }
    }

    /// Independent re-check of every structural invariant.
    pub fn verify(&self) -> Result<()> {
        let (l1, l2) = (self.l1, self.l2);
        let fail = |m: String| Err(Error::Inconsistent(m));
        if self.vertices.len() != 3 * l1 * l2
            || self.plaquettes.len() != 6 * l1 * l2
            || self.edges.len() != 9 * l1 * l2
        {
            return fail("element counts".into());
        }
        for c in Color::ALL {
            if self.edges_of_color(c).count() != 3 * l1 * l2 {
                return fail(format!("edge count of color {c}"));
            }
        }
        // V - E + F = 0 on the torus.
        if self.vertices.len() + self.plaquettes.len() != self.edges.len() {
            return fail("Euler characteristic".into());
        }
        for (e, ed) in self.edges.iter().enumerate() {
            let (a, b) = (ed.vertices[0], ed.vertices[1]);
            let (ca, cb) = (self.vertices[a].color, self.vertices[b].color);
            if ca == cb || ed.color == ca || ed.color == cb {
                return fail(format!("edge {e} coloring"));
            }
            if ed.plaquettes[0] == ed.plaquettes[1] {
                return fail(format!("edge {e} plaquettes coincide"));
            }
            for &p in &ed.plaquettes {
                if self.plaquettes[p].edges[ed.color.index()] != e {
                    return fail(format!("edge {e} not a side of plaquette {p}"));
                }
            }
        }
        for (p, pl) in self.plaquettes.iter().enumerate() {
            for c in Color::ALL {
                if self.vertices[pl.vertices[c.index()]].color != c {
                    return fail(format!("plaquette {p} corner colors"));
                }
                if self.edges[pl.edges[c.index()]].color != c {
                    return fail(format!("plaquette {p} side colors"));
                }
            }
        }
        let mut count = vec![0usize; self.vertices.len()];
        for pl in &self.plaquettes {
            for &v in &pl.vertices {
                count[v] += 1;
            }
        }
        for (v, ps) in self.vertex_plaquettes.iter().enumerate() {
            let mut s = ps.to_vec();
            s.sort();
            s.dedup();
            if s.len() != 6 || count[v] != 6 {
                return fail(format!("vertex {v} does not touch 6 distinct plaquettes"));
            }
            if ps.iter().any(|&p| !self.plaquettes[p].vertices.contains(&v)) {
                return fail(format!("vertex {v} plaquette map"));
            }
            let mut es = self.vertex_edges[v].to_vec();
            es.sort();
            es.dedup();
            if es.len() != 6 {
                return fail(format!("vertex {v} does not have 6 distinct incident edges"));
            }
        }
        Ok(())
    }
}

pub fn build_lattice(l1: usize, l2: usize) -> Result<ColoredTorusLattice> {
    if l1 == 0 || l2 == 0 {
        return invalid(format!("lattice dimensions must be positive, got ({l1},{l2})"));
    }
    let mut vertices = Vec::with_capacity(3 * l1 * l2);
    for c2 in 0..l2 {
        for c1 in 0..l1 {
            for c in Color::ALL {
                vertices.push(Vertex {
                    cell: [c1, c2],
                    color: c,
                });
            }
        }
    }
    let mut lat = ColoredTorusLattice {
        l1,
        l2,
        vertices,
        edges: Vec::new(),
        plaquettes: Vec::new(),
        vertex_plaquettes: Vec::new(),
        vertex_edges: Vec::new(),
    };
    let nv = lat.vertices.len();
    let mut edges = Vec::with_capacity(3 * nv);
    for v in 0..nv {
        let p = lat.position(v);
        for f in FORWARD {
            let q = [p[0] + f[0], p[1] + f[1]];
            let w = lat.reduce(q);
            let color = Color::third(lat.vertices[v].color, lat.vertices[w].color);
            edges.push(Edge {
                vertices: [v, w],
                color,
                plaquettes: [usize::MAX; 2],
                shift: f,
            });
        }
    }
    lat.edges = edges;
    let mut plaquettes = Vec::with_capacity(2 * nv);
    let mut edge_plaqs: Vec<Vec<usize>> = vec![Vec::new(); lat.edges.len()];
    for v in 0..nv {
        let p = lat.position(v);
        for up in [true, false] {
            let pts = if up {
                [p, [p[0] + 1, p[1]], [p[0], p[1] + 1]]
            } else {
                [p, [p[0] + 1, p[1]], [p[0] + 1, p[1] - 1]]
            };
            let mut vs = [usize::MAX; 3];
            for &q in &pts {
                vs[color_of_point(q)] = lat.reduce(q);
            }
            let mut es = [usize::MAX; 3];
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let e = lat.edge_between(pts[a], pts[b]);
                es[lat.edges[e].color.index()] = e;
            }
            let idx = plaquettes.len();
            for &e in &es {
                edge_plaqs[e].push(idx);
            }
            plaquettes.push(Plaquette {
                vertices: vs,
                edges: es,
                up,
            });
        }
    }
    for (e, ps) in edge_plaqs.iter().enumerate() {
        if ps.len() != 2 {
            return Err(Error::Inconsistent(format!("edge {e} has {} plaquettes", ps.len())));
        }
        lat.edges[e].plaquettes = [ps[0], ps[1]];
    }
    lat.plaquettes = plaquettes;
    // Six plaquettes around each vertex, in angular order starting from the
    // up triangle anchored at the vertex.
    let around: [[[i64; 2]; 3]; 6] = [
        [[0, 0], [1, 0], [0, 1]],
        [[0, 0], [0, 1], [-1, 1]],
        [[0, 0], [-1, 1], [-1, 0]],
        [[0, 0], [-1, 0], [0, -1]],
        [[0, 0], [0, -1], [1, -1]],
        [[0, 0], [1, -1], [1, 0]],
    ];
    let mut vp = Vec::with_capacity(nv);
    let mut ve = Vec::with_capacity(nv);
    for v in 0..nv {
        let p = lat.position(v);
        let mut ps = [0; 6];
        let mut es = [0; 6];
        for (k, tri) in around.iter().enumerate() {
            let pts = tri.map(|d| [p[0] + d[0], p[1] + d[1]]);
            ps[k] = lat.plaquette_at(pts);
            es[k] = lat.edge_between(pts[0], pts[1]);
        }
        vp.push(ps);
        ve.push(es);
    }
    lat.vertex_plaquettes = vp;
    lat.vertex_edges = ve;
    lat.verify()?;
    Ok(lat)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Superedge {
    pub base_edge: usize,
    /// Supervertex indices of the apexes of `plaquettes[0]` and `plaquettes[1]`.
    pub ends: [usize; 2],
    /// Cell displacement from `ends[0]` to `ends[1]`.
    pub shift: [i64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuperlatticeView {
    pub round: Color,
    pub l1: usize,
    pub l2: usize,
    /// Base vertex index of each supervertex (the round-color vertices).
    pub supervertices: Vec<usize>,
    pub superedges: Vec<Superedge>,
    /// Base vertices of the two other colors; each is surrounded by three superedges.
    pub superplaquettes: Vec<usize>,
    /// Base edge index to superedge index.
    pub superedge_of_edge: HashMap<usize, usize>,
    /// Per supervertex: (superedge, neighbor, shift seen from this end).
    pub incidence: Vec<Vec<(usize, usize, [i64; 2])>>,
}

pub fn superlattice(lat: &ColoredTorusLattice, round: Color) -> SuperlatticeView {
    let supervertices: Vec<usize> = lat.vertices_of_color(round).collect();
    let mut super_index = vec![usize::MAX; lat.vertices.len()];
    for (i, &v) in supervertices.iter().enumerate() {
        super_index[v] = i;
    }
    let mut superedges = Vec::new();
    let mut superedge_of_edge = HashMap::new();
    let mut incidence = vec![Vec::new(); supervertices.len()];
    for e in lat.edges_of_color(round) {
        let ed = &lat.edges[e];
        let apex = ed.plaquettes.map(|p| lat.plaquettes[p].vertices[round.index()]);
        let pos = lat.edge_apexes(e);
        let shift = cell_shift([pos[1][0] - pos[0][0], pos[1][1] - pos[0][1]]);
        let ends = apex.map(|a| super_index[a]);
        let idx = superedges.len();
        incidence[ends[0]].push((idx, ends[1], shift));
        incidence[ends[1]].push((idx, ends[0], [-shift[0], -shift[1]]));
        superedge_of_edge.insert(e, idx);
        superedges.push(Superedge {
            base_edge: e,
            ends,
            shift,
        });
    }
    let superplaquettes = (0..lat.vertices.len())
        .filter(|&v| lat.vertices[v].color != round)
        .collect();
    SuperlatticeView {
        round,
        l1: lat.l1,
        l2: lat.l2,
        supervertices,
        superedges,
        superplaquettes,
        superedge_of_edge,
        incidence,
    }
}

impl SuperlatticeView {
    pub fn num_vertices(&self) -> usize {
        self.supervertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.superedges.len()
    }

    /// Supervertices with odd degree in the given superedge set.
    pub fn boundary(&self, superedges: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut deg = vec![false; self.num_vertices()];
        for s in superedges {
            for &v in &self.superedges[s].ends {
                deg[v] ^= true;
            }
        }
        (0..deg.len()).filter(|&v| deg[v]).collect()
    }

    /// Whether a superedge wraps across the seam of each torus direction.
    pub fn crosses_seam(&self, s: usize) -> [bool; 2] {
        let se = &self.superedges[s];
        let cell = self.cell_of(se.ends[0]);
        let l = [self.l1 as i64, self.l2 as i64];
        [0, 1].map(|k| {
            let t = cell[k] as i64 + se.shift[k];
            t < 0 || t >= l[k]
        })
    }

    pub fn cell_of(&self, sv: usize) -> [usize; 2] {
        let v = self.supervertices[sv];
        let c = v / 3;
        [c % self.l1, c / self.l1]
    }

    pub fn supervertex_at(&self, cell: [usize; 2]) -> usize {
        cell[1] * self.l1 + cell[0]
    }

    /// Parity of seam crossings in each direction; equals the winding parity
    /// for a closed superedge set.
    pub fn winding_parity(&self, superedges: impl IntoIterator<Item = usize>) -> [bool; 2] {
        let mut w = [false; 2];
        for s in superedges {
            let c = self.crosses_seam(s);
            w[0] ^= c[0];
            w[1] ^= c[1];
        }
        w
    }

    /// Straight superlattice walk of `len` unit steps in `dir` from `start`.
    pub fn straight_walk(&self, start: [usize; 2], dir: Direction, len: usize) -> Vec<usize> {
        let step = dir.step();
        let mut v = self.supervertex_at(start);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let &(s, w, _) = self.incidence[v]
                .iter()
                .find(|(_, _, sh)| *sh == step)
                .expect("triangular superlattice has every unit step");
            out.push(s);
            v = w;
        }
        out
    }

    /// Cocycle dual to a loop in direction `dir`: superedges crossing the
    /// seam of the other direction, where a loop along `dir` never crosses.
    pub fn cut(&self, dir: Direction) -> Vec<usize> {
        let k = dir.other().index();
        (0..self.num_edges())
            .filter(|&s| self.crosses_seam(s)[k])
            .collect()
    }
}

/// A closed cycle of same-colored base edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub direction: Direction,
    pub color: Color,
    /// Cell of the supervertex where the straight walk starts.
    pub start: [usize; 2],
    pub edges: Vec<usize>,
}

/// Straight loop of `color` edges along `direction` through supervertex cell `start`.
pub fn loop_at(
    lat: &ColoredTorusLattice,
    direction: Direction,
    color: Color,
    start: [usize; 2],
) -> LoopSpec {
    let sl = superlattice(lat, color);
    let len = match direction {
        Direction::L1 => lat.l1,
        Direction::L2 => lat.l2,
    };
    let edges = sl
        .straight_walk(start, direction, len)
        .into_iter()
        .map(|s| sl.superedges[s].base_edge)
        .collect();
    LoopSpec {
        direction,
        color,
        start,
        edges,
    }
}

/// The documented representative: the straight loop through cell (0,0).
pub fn canonical_loop(lat: &ColoredTorusLattice, direction: Direction, color: Color) -> LoopSpec {
    loop_at(lat, direction, color, [0, 0])
}

/// Plaquettes covered an odd number of times by the edges' plaquette pairs.
pub fn edge_support(lat: &ColoredTorusLattice, edges: &[usize]) -> Vec<usize> {
    let mut odd = vec![false; lat.num_qubits()];
    for &e in edges {
        for &p in &lat.edges[e].plaquettes {
            odd[p] ^= true;
        }
    }
    (0..odd.len()).filter(|&p| odd[p]).collect()
}

/// Edges of `color` with exactly one of their two plaquettes in `support`.
pub fn colored_boundary(lat: &ColoredTorusLattice, support: &[usize], color: Color) -> Vec<usize> {
    let mut inside = vec![false; lat.num_qubits()];
    for &p in support {
        inside[p] = true;
    }
    lat.edges_of_color(color)
        .filter(|&e| {
            let [a, b] = lat.edges[e].plaquettes;
            inside[a] != inside[b]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let l = build_lattice(1, 1).unwrap();
        assert_eq!((l.vertices.len(), l.num_qubits(), l.edges.len()), (3, 6, 9));
        let l = build_lattice(2, 2).unwrap();
        assert_eq!((l.vertices.len(), l.num_qubits(), l.edges.len()), (12, 24, 36));
        assert!(build_lattice(0, 2).is_err());
    }

    #[test]
    fn superlattice_degree_six() {
        for (a, b) in [(1, 1), (2, 2), (2, 3), (3, 3)] {
            let l = build_lattice(a, b).unwrap();
            for c in Color::ALL {
                let s = superlattice(&l, c);
                assert_eq!(s.num_edges(), 3 * a * b);
                for inc in &s.incidence {
                    assert_eq!(inc.len(), 6);
                    let mut sh: Vec<_> = inc.iter().map(|x| x.2).collect();
                    sh.sort();
                    sh.dedup();
                    assert_eq!(sh.len(), 6);
                }
            }
        }
    }

    #[test]
    fn canonical_loop_winding() {
        for (a, b) in [(1, 1), (2, 2), (2, 3), (3, 2)] {
            let l = build_lattice(a, b).unwrap();
            for c in Color::ALL {
                let s = superlattice(&l, c);
                for d in Direction::ALL {
                    let lp = canonical_loop(&l, d, c);
                    let se: Vec<usize> = lp.edges.iter().map(|e| s.superedge_of_edge[e]).collect();
                    assert!(s.boundary(se.iter().copied()).is_empty());
                    let w = s.winding_parity(se.iter().copied());
                    assert_eq!(w, [d == Direction::L1, d == Direction::L2]);
                }
            }
        }
    }
}
