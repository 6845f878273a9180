//! Tile structure of dense transition operators.
//!
//! Listing the strongly connected components of a chain in topological order
//! makes its generator block upper-triangular, and every `e^{Qt}` shares that
//! pattern. Products of such matrices only need the tiles on or above the
//! component staircase, which for acyclic chains is about a sixth of the work
//! of a full product.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2};

use super::Ctmc;

pub(crate) const TILE: usize = 128;

#[derive(Debug, Clone)]
pub(crate) struct BlockOrder {
    /// `perm[new] = old`
    pub perm: Vec<usize>,
    /// For each tile row, the first tile column that can hold a nonzero.
    tile_start: Vec<usize>,
    n: usize,
}

impl BlockOrder {
    pub fn of<S>(chain: &Ctmc<S>) -> Self {
        let n = chain.len();
        let comps = strongly_connected(chain);
        let mut perm = Vec::with_capacity(n);
        let mut first = vec![0usize; n];
        // Tarjan emits sinks first; sources first gives an upper-triangular
        // block pattern
        for comp in comps.iter().rev() {
            let start = perm.len();
            for &v in comp {
                perm.push(v);
            }
            for k in start..perm.len() {
                first[k] = start;
            }
        }
        let tiles = n.div_ceil(TILE);
        let tile_start = (0..tiles).map(|t| first[t * TILE] / TILE).collect();
        BlockOrder { perm, tile_start, n }
    }

    fn tiles(&self) -> usize {
        self.tile_start.len()
    }

    /// Largest tile row whose staircase reaches tile column `j`.
    fn last_row_reaching(&self, j: usize) -> usize {
        let mut k = j;
        while k + 1 < self.tiles() && self.tile_start[k + 1] <= j {
            k += 1;
        }
        k
    }

    /// Share of a full dense product that a structured product performs.
    pub fn work_fraction(&self) -> f64 {
        let t = self.tiles();
        if t <= 2 {
            return 1.0;
        }
        let mut work = 0usize;
        for i in 0..t {
            for j in self.tile_start[i]..t {
                let k_hi = self.last_row_reaching(j);
                work += k_hi + 1 - self.tile_start[i];
            }
        }
        work as f64 / (t * t * t) as f64
    }

    /// `a * b` for two matrices sharing this block pattern.
    pub fn product(&self, a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        let t = self.tiles();
        if t <= 2 || self.tile_start.iter().all(|&s| s == 0) {
            return a.dot(b);
        }
        let n = self.n;
        let span = |i: usize| i * TILE..((i + 1) * TILE).min(n);
        let mut c = Array2::<f64>::zeros((n, n));
        for i in 0..t {
            let rows = span(i);
            for j in self.tile_start[i]..t {
                let cols = span(j);
                let k_lo = self.tile_start[i];
                let k_hi = self.last_row_reaching(j);
                let inner = k_lo * TILE..span(k_hi).end;
                let av = a.slice(s![rows.clone(), inner.clone()]);
                let bv = b.slice(s![inner, cols.clone()]);
                let mut cv = c.slice_mut(s![rows.clone(), cols]);
                general_mat_mul(1.0, &av, &bv, 0.0, &mut cv);
            }
        }
        c
    }
}

/// Iterative Tarjan; components come out in reverse topological order.
fn strongly_connected<S>(chain: &Ctmc<S>) -> Vec<Vec<usize>> {
    let n = chain.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0usize;
    let succ: Vec<Vec<usize>> = (0..n).map(|i| chain.transitions_from(i).map(|(j, _)| j).collect()).collect();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack holds the component");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}
