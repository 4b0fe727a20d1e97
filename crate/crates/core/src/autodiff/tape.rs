use super::tensor::{matmul, matmul_at, matmul_bt, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Broadcast {
    Same,
    /// rhs is a `[p]` or `[1, p]` row added to every row of an `[n, p]` lhs.
    Row,
    /// rhs holds a single element.
    Scalar,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId, Broadcast),
    Relu(NodeId),
    Exp(NodeId),
    Neg(NodeId),
    Scale(NodeId, f64),
    Sum(NodeId),
    L2NormSq(NodeId),
    Mse(NodeId, NodeId),
    SoftmaxCrossEntropy {
        logits: NodeId,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
    BceWithLogits(NodeId, NodeId),
    Reshape(NodeId),
    SelectColumn(NodeId, usize),
    GatherRows(NodeId, Vec<usize>),
    ConcatCols(Vec<NodeId>),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Record of one forward pass, replayed in reverse by [`Tape::backward`].
///
/// Nodes are appended in evaluation order, so every node's inputs precede it.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`], indexed by node.
#[derive(Clone, Debug)]
pub struct Gradients {
    adjoints: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Adjoint of `id`, or `None` when the root does not depend on it.
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.adjoints.get(id.0).and_then(Option::as_ref)
    }

    /// Adjoint of `id`, with zeros for nodes the root does not depend on.
    pub fn wrt(&self, id: NodeId) -> Tensor {
        self.get(id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[id.0]))
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    /// Records an input (parameter or data) with no parents.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (n, k) = self.value(a).dims2("matmul")?;
        let (k2, p) = self.value(b).dims2("matmul")?;
        if k != k2 {
            return Err(Error::shape("matmul", format!("[{n}, {k}] x [{k2}, {p}]")));
        }
        let data = matmul(self.value(a).data(), self.value(b).data(), n, k, p);
        let value = Tensor::new(vec![n, p], data)?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    /// Elementwise sum; `b` may also be a single element or a row broadcast over `a`.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        let mode = if va.shape() == vb.shape() {
            Broadcast::Same
        } else if vb.numel() == 1 {
            Broadcast::Scalar
        } else {
            let cols = match va.shape() {
                [_, p] => Some(*p),
                _ => None,
            };
            let row_ok = matches!(vb.shape(), [p] | [1, p] if Some(*p) == cols);
            if !row_ok {
                return Err(Error::shape("add", format!("{:?} + {:?}", va.shape(), vb.shape())));
            }
            Broadcast::Row
        };
        let mut out = va.clone();
        match mode {
            Broadcast::Same => out.add_assign(vb),
            Broadcast::Scalar => {
                let s = vb.item();
                out.data_mut().iter_mut().for_each(|x| *x += s);
            }
            Broadcast::Row => {
                let row = vb.data();
                for chunk in out.data_mut().chunks_mut(row.len()) {
                    for (x, r) in chunk.iter_mut().zip(row) {
                        *x += r;
                    }
                }
            }
        }
        Ok(self.push(Op::Add(a, b, mode), out))
    }

    /// Adds a constant scalar, recorded as a leaf plus an add.
    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        let c = self.leaf(Tensor::scalar(c));
        self.add(a, c)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(Op::Relu(a), value)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::exp);
        self.push(Op::Exp(a), value)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(|x| -x);
        self.push(Op::Neg(a), value)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let value = self.value(a).map(|x| c * x);
        self.push(Op::Scale(a, c), value)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(s))
    }

    pub fn l2_norm_sq(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data().iter().map(|x| x * x).sum();
        self.push(Op::L2NormSq(a), Tensor::scalar(s))
    }

    /// Mean squared error over all elements.
    pub fn mse(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(Error::shape(
                "mse",
                format!("prediction {:?} vs target {:?}", p.shape(), t.shape()),
            ));
        }
        if p.numel() == 0 {
            return Err(Error::shape("mse", "empty batch"));
        }
        let n = p.numel() as f64;
        let s: f64 = p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.push(Op::Mse(pred, target), Tensor::scalar(s / n)))
    }

    /// Mean softmax cross-entropy of `[batch, classes]` logits against `[batch]`
    /// integer class labels, computed with a shifted log-sum-exp.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: NodeId) -> Result<NodeId> {
        let (b, c) = self.value(logits).dims2("softmax_cross_entropy")?;
        let lv = self.value(labels);
        if lv.numel() != b || b == 0 {
            return Err(Error::shape(
                "softmax_cross_entropy",
                format!("logits [{b}, {c}] vs labels {:?}", lv.shape()),
            ));
        }
        let mut idx = Vec::with_capacity(b);
        for &y in lv.data() {
            if y < 0.0 || y.fract() != 0.0 || y as usize >= c {
                return Err(Error::shape(
                    "softmax_cross_entropy",
                    format!("label {y} outside 0..{c}"),
                ));
            }
            idx.push(y as usize);
        }
        let z = self.value(logits).data();
        let mut probs = vec![0.0; b * c];
        let mut total = 0.0;
        for i in 0..b {
            let row = &z[i * c..(i + 1) * c];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let lse = max + denom.ln();
            for j in 0..c {
                probs[i * c + j] = (row[j] - lse).exp();
            }
            total += lse - row[idx[i]];
        }
        let op = Op::SoftmaxCrossEntropy {
            logits,
            labels: idx,
            probs,
        };
        Ok(self.push(op, Tensor::scalar(total / b as f64)))
    }

    /// Mean binary cross-entropy of logits against targets in `[0, 1]`.
    pub fn bce_with_logits(&mut self, logits: NodeId, target: NodeId) -> Result<NodeId> {
        let (z, y) = (self.value(logits), self.value(target));
        if z.shape() != y.shape() || z.numel() == 0 {
            return Err(Error::shape(
                "bce_with_logits",
                format!("logits {:?} vs target {:?}", z.shape(), y.shape()),
            ));
        }
        let n = z.numel() as f64;
        let s: f64 = z
            .data()
            .iter()
            .zip(y.data())
            .map(|(&z, &y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p())
            .sum();
        Ok(self.push(Op::BceWithLogits(logits, target), Tensor::scalar(s / n)))
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let v = self.value(a);
        if shape.iter().product::<usize>() != v.numel() {
            return Err(Error::shape("reshape", format!("{:?} -> {shape:?}", v.shape())));
        }
        let value = v.clone().with_shape(shape.to_vec());
        Ok(self.push(Op::Reshape(a), value))
    }

    /// Column `j` of an `[n, p]` matrix as an `[n, 1]` matrix.
    pub fn select_column(&mut self, a: NodeId, j: usize) -> Result<NodeId> {
        let (n, p) = self.value(a).dims2("select_column")?;
        if j >= p {
            return Err(Error::shape("select_column", format!("column {j} of [{n}, {p}]")));
        }
        let data = self.value(a).data();
        let col: Vec<f64> = (0..n).map(|i| data[i * p + j]).collect();
        let value = Tensor::new(vec![n, 1], col)?;
        Ok(self.push(Op::SelectColumn(a, j), value))
    }

    /// Rows of a `[k, e]` table picked by `indices`, giving `[indices.len(), e]`.
    pub fn gather_rows(&mut self, table: NodeId, indices: &[usize]) -> Result<NodeId> {
        let (k, e) = self.value(table).dims2("gather_rows")?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= k) {
            return Err(Error::shape("gather_rows", format!("row {bad} of [{k}, {e}]")));
        }
        let data = self.value(table).data();
        let mut out = Vec::with_capacity(indices.len() * e);
        for &i in indices {
            out.extend_from_slice(&data[i * e..(i + 1) * e]);
        }
        let value = Tensor::new(vec![indices.len(), e], out)?;
        Ok(self.push(Op::GatherRows(table, indices.to_vec()), value))
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::shape("concat_cols", "no inputs"));
        }
        let mut dims = Vec::with_capacity(parts.len());
        for &p in parts {
            dims.push(self.value(p).dims2("concat_cols")?);
        }
        let n = dims[0].0;
        if dims.iter().any(|d| d.0 != n) {
            return Err(Error::shape("concat_cols", format!("row counts {dims:?}")));
        }
        let total: usize = dims.iter().map(|d| d.1).sum();
        let mut out = Vec::with_capacity(n * total);
        for i in 0..n {
            for (&p, &(_, c)) in parts.iter().zip(&dims) {
                out.extend_from_slice(&self.value(p).data()[i * c..(i + 1) * c]);
            }
        }
        let value = Tensor::new(vec![n, total], out)?;
        Ok(self.push(Op::ConcatCols(parts.to_vec()), value))
    }

    /// Reverse pass from a scalar `root`; the root's adjoint is 1.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        let rv = self.value(root);
        if rv.numel() != 1 {
            return Err(Error::NonScalarRoot(rv.shape().to_vec()));
        }
        let mut adj: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        adj[root.0] = Some(Tensor::filled(rv.shape(), 1.0));

        for idx in (0..=root.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            self.propagate(&node.op, &node.value, &g, &mut adj);
            adj[idx] = Some(g);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        adj.resize(self.nodes.len(), None);
        Ok(Gradients { adjoints: adj, shapes })
    }

    fn propagate(&self, op: &Op, out: &Tensor, g: &Tensor, adj: &mut [Option<Tensor>]) {
        let mut acc = |id: NodeId, t: Tensor| match &mut adj[id.0] {
            Some(existing) => existing.add_assign(&t),
            slot @ None => *slot = Some(t),
        };
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (n, k) = (va.shape()[0], va.shape()[1]);
                let p = vb.shape()[1];
                let da = matmul_bt(g.data(), vb.data(), n, p, k);
                let db = matmul_at(va.data(), g.data(), n, k, p);
                acc(*a, tensor(va.shape(), da));
                acc(*b, tensor(vb.shape(), db));
            }
            Op::Add(a, b, mode) => {
                acc(*a, g.clone());
                let vb = self.value(*b);
                let db = match mode {
                    Broadcast::Same => g.clone(),
                    Broadcast::Scalar => Tensor::filled(vb.shape(), g.data().iter().sum()),
                    Broadcast::Row => {
                        let p = vb.numel();
                        let mut row = vec![0.0; p];
                        for chunk in g.data().chunks(p) {
                            for (r, x) in row.iter_mut().zip(chunk) {
                                *r += x;
                            }
                        }
                        tensor(vb.shape(), row)
                    }
                };
                acc(*b, db);
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let d = x
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                    .collect();
                acc(*a, tensor(x.shape(), d));
            }
            Op::Exp(a) => {
                let d = out.data().iter().zip(g.data()).map(|(y, g)| y * g).collect();
                acc(*a, tensor(out.shape(), d));
            }
            Op::Neg(a) => acc(*a, g.map(|x| -x)),
            Op::Scale(a, c) => {
                let c = *c;
                acc(*a, g.map(|x| c * x));
            }
            Op::Sum(a) => {
                let s = g.item();
                acc(*a, Tensor::filled(self.value(*a).shape(), s));
            }
            Op::L2NormSq(a) => {
                let s = 2.0 * g.item();
                acc(*a, self.value(*a).map(|x| s * x));
            }
            Op::Mse(p, t) => {
                let (vp, vt) = (self.value(*p), self.value(*t));
                let c = 2.0 * g.item() / vp.numel() as f64;
                let d: Vec<f64> = vp.data().iter().zip(vt.data()).map(|(a, b)| c * (a - b)).collect();
                let neg: Vec<f64> = d.iter().map(|x| -x).collect();
                acc(*p, tensor(vp.shape(), d));
                acc(*t, tensor(vt.shape(), neg));
            }
            Op::SoftmaxCrossEntropy { logits, labels, probs } => {
                let vz = self.value(*logits);
                let c = vz.shape()[1];
                let scale = g.item() / labels.len() as f64;
                let mut d: Vec<f64> = probs.iter().map(|p| p * scale).collect();
                for (i, &y) in labels.iter().enumerate() {
                    d[i * c + y] -= scale;
                }
                acc(*logits, tensor(vz.shape(), d));
            }
            Op::BceWithLogits(z, y) => {
                let (vz, vy) = (self.value(*z), self.value(*y));
                let c = g.item() / vz.numel() as f64;
                let dz = vz
                    .data()
                    .iter()
                    .zip(vy.data())
                    .map(|(&z, &y)| c * (sigmoid(z) - y))
                    .collect();
                let dy = vz.data().iter().map(|&z| -c * z).collect();
                acc(*z, tensor(vz.shape(), dz));
                acc(*y, tensor(vy.shape(), dy));
            }
            Op::Reshape(a) => {
                let shape = self.value(*a).shape().to_vec();
                acc(*a, g.clone().with_shape(shape));
            }
            Op::SelectColumn(a, j) => {
                let va = self.value(*a);
                let p = va.shape()[1];
                let mut d = vec![0.0; va.numel()];
                for (i, &x) in g.data().iter().enumerate() {
                    d[i * p + j] = x;
                }
                acc(*a, tensor(va.shape(), d));
            }
            Op::GatherRows(t, indices) => {
                let vt = self.value(*t);
                let e = vt.shape()[1];
                let mut d = vec![0.0; vt.numel()];
                for (row, &i) in indices.iter().enumerate() {
                    for c in 0..e {
                        d[i * e + c] += g.data()[row * e + c];
                    }
                }
                acc(*t, tensor(vt.shape(), d));
            }
            Op::ConcatCols(parts) => {
                let total = out.shape()[1];
                let n = out.shape()[0];
                let mut start = 0;
                for &p in parts {
                    let vp = self.value(p);
                    let c = vp.shape()[1];
                    let mut d = Vec::with_capacity(n * c);
                    for i in 0..n {
                        d.extend_from_slice(&g.data()[i * total + start..i * total + start + c]);
                    }
                    acc(p, tensor(vp.shape(), d));
                    start += c;
                }
            }
        }
    }
}

fn tensor(shape: &[usize], data: Vec<f64>) -> Tensor {
    Tensor::new(shape.to_vec(), data).expect("adjoint shape matches its node")
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
