use crate::graph::Graph;
use crate::tensor::Tensor2;

/// Normalized adjacency with self-loops, stored by receiving row: row `i`
/// holds `(j, w)` for every message `j -> i`, including `i` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    pub add_self_loops: bool,
}

impl ShiftOperator {
    /// Undirected: `1/√((d_i+1)(d_j+1))`. Directed: a message `j -> i` gets
    /// `1/√((d_out(j)+1)(d_in(i)+1))`.
    pub fn build(g: &Graph) -> Self {
        let n = g.num_nodes();
        let (in_off, in_src) = g.in_adjacency();
        let out_deg: Vec<f64> = (0..n).map(|v| g.degree(v) as f64 + 1.0).collect();
        let in_deg: Vec<f64> = (0..n).map(|v| (in_off[v + 1] - in_off[v]) as f64 + 1.0).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(in_src.len() + n);
        let mut vals = Vec::with_capacity(in_src.len() + n);
        offsets.push(0);
        for i in 0..n {
            let sources = &in_src[in_off[i]..in_off[i + 1]];
            // keep columns sorted with the self-loop in place
            let split = sources.partition_point(|&j| j < i);
            for &j in sources[..split].iter().chain(std::iter::once(&i)).chain(&sources[split..]) {
                cols.push(j);
                vals.push(1.0 / (out_deg[j] * in_deg[i]).sqrt());
            }
            offsets.push(cols.len());
        }
        Self {
            n,
            offsets,
            cols,
            vals,
            add_self_loops: true,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Tensor2 {
        let mut d = Tensor2::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// `S · x`.
    pub fn apply(&self, x: &Tensor2) -> Tensor2 {
        assert_eq!(x.rows(), self.n);
        let mut out = Tensor2::zeros(self.n, x.cols());
        for i in 0..self.n {
            let dst = out.row_mut(i);
            for k in self.offsets[i]..self.offsets[i + 1] {
                let w = self.vals[k];
                for (o, s) in dst.iter_mut().zip(x.row(self.cols[k])) {
                    *o += w * s;
                }
            }
        }
        out
    }

    /// `Sᵀ · x`.
    pub fn apply_transpose(&self, x: &Tensor2) -> Tensor2 {
        assert_eq!(x.rows(), self.n);
        let mut out = Tensor2::zeros(self.n, x.cols());
        for i in 0..self.n {
            let src = x.row(i);
            for k in self.offsets[i]..self.offsets[i + 1] {
                let w = self.vals[k];
                for (o, s) in out.row_mut(self.cols[k]).iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::Graph;

    #[test]
    fn single_node_is_identity() {
        let s = ShiftOperator::build(&empty(1));
        assert_eq!(s.to_dense().data(), &[1.0]);
    }

    #[test]
    fn single_edge_all_half() {
        let s = ShiftOperator::build(&path(2));
        assert!(s.to_dense().data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn star_hub_leaf_entry() {
        let s = ShiftOperator::build(&star(4));
        let want = 1.0 / (2.0 * 2f64.sqrt());
        assert!((s.get(0, 1) - want).abs() < 1e-15);
        assert!((s.get(1, 0) - want).abs() < 1e-15);
    }

    #[test]
    fn undirected_operator_is_symmetric() {
        let s = ShiftOperator::build(&barbell(4, 3)).to_dense();
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn directed_reduces_to_undirected_on_symmetric_arcs() {
        let g = barbell(3, 2);
        let arcs: Vec<_> = g.arcs().collect();
        let d = Graph::build(g.num_nodes(), &arcs, true, None).unwrap();
        assert_eq!(ShiftOperator::build(&d), ShiftOperator::build(&g));
    }

    #[test]
    fn directed_uses_source_out_and_target_in_degree() {
        // 0 -> 1, 0 -> 2, 2 -> 1
        let g = Graph::build(3, &[(0, 1), (0, 2), (2, 1)], true, None).unwrap();
        let s = ShiftOperator::build(&g);
        // message 0 -> 1: d_out(0)+1 = 3, d_in(1)+1 = 3
        assert!((s.get(1, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.get(0, 1), 0.0);
        // self-loop of 1: d_out(1)+1 = 1, d_in(1)+1 = 3
        assert!((s.get(1, 1) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn transpose_apply_matches_dense() {
        let g = Graph::build(4, &[(0, 1), (1, 2), (3, 0), (2, 3)], true, None).unwrap();
        let s = ShiftOperator::build(&g);
        let x = Tensor2::from_vec(4, 2, (0..8).map(f64::from).collect());
        assert_eq!(s.apply(&x), s.to_dense().matmul(&x));
        let t = s.apply_transpose(&x);
        let want = s.to_dense().t_matmul(&x);
        for (a, b) in t.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
