//! All-pairs shortest paths over the free cells of a wall grid (4-connectivity).
//!
//! [`seidel_apsp`] runs Seidel's recursive-squaring algorithm on each connected
//! component; [`bfs_apsp`] runs one breadth-first search per cell and serves as
//! the reference.

use std::collections::VecDeque;

use super::level::Cell;

pub const UNREACHABLE: u32 = u32::MAX;

/// Distances between free cells, indexed by vertex id (row-major order of
/// free cells).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    pub height: usize,
    pub width: usize,
    pub cells: Vec<Cell>,
    vertex_of: Vec<Option<usize>>,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    fn new(height: usize, width: usize, walls: &[bool]) -> Self {
        assert_eq!(walls.len(), height * width, "wall grid has wrong size");
        let mut cells = Vec::new();
        let mut vertex_of = vec![None; walls.len()];
        for (i, &w) in walls.iter().enumerate() {
            if !w {
                vertex_of[i] = Some(cells.len());
                cells.push(Cell::new(i / width, i % width));
            }
        }
        let n = cells.len();
        DistanceMatrix { height, width, cells, vertex_of, dist: vec![UNREACHABLE; n * n] }
    }

    pub fn n_vertices(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex(&self, cell: Cell) -> Option<usize> {
        if cell.row >= self.height || cell.col >= self.width {
            return None;
        }
        self.vertex_of[cell.row * self.width + cell.col]
    }

    /// Raw distance between vertex ids; [`UNREACHABLE`] across components.
    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.dist[u * self.cells.len() + v]
    }

    /// Distance between two free cells, `None` if unreachable or not free.
    pub fn distance(&self, a: Cell, b: Cell) -> Option<u32> {
        let d = self.get(self.vertex(a)?, self.vertex(b)?);
        (d != UNREACHABLE).then_some(d)
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.cells[v];
        let (h, w) = (self.height as isize, self.width as isize);
        [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)].into_iter().filter_map(move |(dr, dc)| {
            let (r, cc) = (c.row as isize + dr, c.col as isize + dc);
            if r < 0 || cc < 0 || r >= h || cc >= w {
                None
            } else {
                self.vertex_of[r as usize * self.width + cc as usize]
            }
        })
    }
}

pub fn bfs_apsp(height: usize, width: usize, walls: &[bool]) -> DistanceMatrix {
    let mut m = DistanceMatrix::new(height, width, walls);
    let n = m.n_vertices();
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        let mut row = vec![UNREACHABLE; n];
        row[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for v in m.neighbors(u) {
                if row[v] == UNREACHABLE {
                    row[v] = row[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        m.dist[s * n..(s + 1) * n].copy_from_slice(&row);
    }
    m
}

/// Square boolean matrix with bit-packed rows.
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn zeros(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitMatrix { n, words, bits: vec![0; n * words] }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn is_complete(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j)))
    }

    /// `A ∨ A²` with the diagonal cleared.
    fn square_or_self(&self) -> BitMatrix {
        let mut out = BitMatrix { n: self.n, words: self.words, bits: self.bits.clone() };
        for i in 0..self.n {
            for k in 0..self.n {
                if self.get(i, k) {
                    let (src, dst) = (k * self.words, i * self.words);
                    for w in 0..self.words {
                        out.bits[dst + w] |= self.bits[src + w];
                    }
                }
            }
            out.bits[i * self.words + i / 64] &= !(1 << (i % 64));
        }
        out
    }
}

/// Seidel's algorithm on a connected graph; returns the dense distance matrix.
fn seidel(adj: &BitMatrix) -> Vec<u32> {
    let n = adj.n;
    if adj.is_complete() {
        let mut d = vec![1u32; n * n];
        for i in 0..n {
            d[i * n + i] = 0;
        }
        return d;
    }
    let t = seidel(&adj.square_or_self());
    let dense: Vec<u32> = (0..n * n).map(|i| adj.get(i / n, i % n) as u32).collect();
    let degree: Vec<u32> = (0..n).map(|i| adj.row(i).iter().map(|w| w.count_ones()).sum()).collect();
    let mut d = vec![0u32; n * n];
    let mut x = vec![0u32; n];
    for i in 0..n {
        x.iter_mut().for_each(|v| *v = 0);
        let t_row = &t[i * n..(i + 1) * n];
        for (k, &tik) in t_row.iter().enumerate() {
            if tik != 0 {
                let a_row = &dense[k * n..(k + 1) * n];
                for (xj, &a) in x.iter_mut().zip(a_row) {
                    *xj += tik * a;
                }
            }
        }
        for j in 0..n {
            let tij = t_row[j];
            d[i * n + j] = if x[j] >= tij * degree[j] { 2 * tij } else { 2 * tij - 1 };
        }
    }
    d
}

/// Component label per vertex by iterated minimum-label propagation.
fn component_labels(m: &DistanceMatrix) -> Vec<usize> {
    let mut label: Vec<usize> = (0..m.n_vertices()).collect();
    loop {
        let mut changed = false;
        for v in 0..label.len() {
            let best = m.neighbors(v).map(|u| label[u]).fold(label[v], usize::min);
            if best < label[v] {
                label[v] = best;
                changed = true;
            }
        }
        if !changed {
            return label;
        }
    }
}

pub fn seidel_apsp(height: usize, width: usize, walls: &[bool]) -> DistanceMatrix {
    let mut m = DistanceMatrix::new(height, width, walls);
    let n = m.n_vertices();
    let labels = component_labels(&m);
    let mut roots: Vec<usize> = labels.clone();
    roots.sort_unstable();
    roots.dedup();
    for root in roots {
        let members: Vec<usize> = (0..n).filter(|&v| labels[v] == root).collect();
        let mut local = vec![usize::MAX; n];
        for (i, &v) in members.iter().enumerate() {
            local[v] = i;
        }
        let mut adj = BitMatrix::zeros(members.len());
        for (i, &v) in members.iter().enumerate() {
            for u in m.neighbors(v) {
                adj.set(i, local[u]);
            }
        }
        let d = seidel(&adj);
        let k = members.len();
        for (i, &v) in members.iter().enumerate() {
            for (j, &u) in members.iter().enumerate() {
                m.dist[v * n + u] = d[i * k + j];
            }
        }
    }
    m
}
