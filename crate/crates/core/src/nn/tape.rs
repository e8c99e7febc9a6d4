use super::tensor::{gemm_nn, gemm_nt, gemm_tn};
use super::{NnError, ParamId, ParamStore, Real, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

#[derive(Debug)]
enum Op<T> {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, T),
    Act(NodeId, Activation),
    SliceCols { src: NodeId, start: usize },
    Gather { table: NodeId, ids: Vec<usize> },
    SeqMean { steps: Vec<NodeId>, lens: Vec<usize> },
    SoftmaxT { src: NodeId, tau: T },
    SelectedSqErr { src: NodeId, picks: Vec<(usize, usize, T)>, scale: T },
    KlDiv { logits: NodeId, target: Tensor<T>, scale: T },
    LstmGates { x: NodeId, h: NodeId, w_x: NodeId, w_h: NodeId, bias: NodeId },
    LstmCell { gates: NodeId, c: NodeId },
    LstmHidden { gates: NodeId, c: NodeId },
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::AddBias(..) => "add_bias",
            Op::Add(..) => "add",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Act(..) => "activation",
            Op::SliceCols { .. } => "slice_cols",
            Op::Gather { .. } => "embedding_lookup",
            Op::SeqMean { .. } => "sequence_mean",
            Op::SoftmaxT { .. } => "softmax_t",
            Op::SelectedSqErr { .. } => "squared_td_loss",
            Op::KlDiv { .. } => "kl_loss",
            Op::LstmGates { .. } => "lstm_gates",
            Op::LstmCell { .. } => "lstm_cell",
            Op::LstmHidden { .. } => "lstm_hidden",
        }
    }
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Record of executed operations, replayed in reverse by [`Tape::gradients`].
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Result<NodeId, NnError> {
        if !value.is_finite() {
            return Err(NnError::NonFinite(op.name()));
        }
        self.nodes.push(Node { value, op });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Constant input. Gradients flowing into it are still reported by
    /// [`Tape::gradients`].
    pub fn input(&mut self, value: Tensor<T>) -> Result<NodeId, NnError> {
        self.push(value, Op::Input)
    }

    /// Snapshot a parameter onto the tape.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> NodeId {
        let value = store.value(id).clone();
        // Parameters are checked on update; skip the finiteness pass here.
        self.nodes.push(Node {
            value,
            op: Op::Param(id),
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k) = (av.rows(), av.cols());
        let (k2, n) = (bv.rows(), bv.cols());
        if k != k2 {
            return Err(NnError::Shape(format!(
                "matmul {:?} x {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let mut out = vec![T::zero(); m * n];
        gemm_nn(av.data(), bv.data(), &mut out, m, k, n);
        self.push(Tensor::new(&[m, n], out)?, Op::MatMul(a, b))
    }

    /// `x + b` with `b` broadcast over the rows of `x`.
    pub fn add_bias(&mut self, x: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        let (xv, bv) = (self.value(x), self.value(b));
        if bv.len() != xv.cols() {
            return Err(NnError::Shape(format!(
                "bias {:?} for input {:?}",
                bv.shape(),
                xv.shape()
            )));
        }
        let mut out = xv.clone();
        let cols = xv.cols();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += bv.data()[i % cols];
        }
        self.push(out, Op::AddBias(x, b))
    }

    fn same_shape(&self, a: NodeId, b: NodeId, what: &str) -> Result<(), NnError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(NnError::Shape(format!(
                "{what} {:?} vs {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.same_shape(a, b, "add")?;
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.same_shape(a, b, "mul")?;
        let mut out = self.value(a).clone();
        for (o, &v) in out.data_mut().iter_mut().zip(self.value(b).data()) {
            *o *= v;
        }
        self.push(out, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, s: T) -> Result<NodeId, NnError> {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|v| *v *= s);
        self.push(out, Op::Scale(a, s))
    }

    pub fn activation(&mut self, kind: Activation, x: NodeId) -> Result<NodeId, NnError> {
        let mut out = self.value(x).clone();
        let f: fn(T) -> T = match kind {
            Activation::Relu => |v| if v > T::zero() { v } else { T::zero() },
            Activation::Sigmoid => sigmoid,
            Activation::Tanh => |v| v.tanh(),
        };
        out.data_mut().iter_mut().for_each(|v| *v = f(*v));
        self.push(out, Op::Act(x, kind))
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId, NnError> {
        self.activation(Activation::Relu, x)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId, NnError> {
        self.activation(Activation::Sigmoid, x)
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId, NnError> {
        self.activation(Activation::Tanh, x)
    }

    /// Activated LSTM gates `[B×4H]`: sigmoid on the input, forget and
    /// output blocks, tanh on the candidate block.
    pub fn lstm_gates(
        &mut self,
        x: NodeId,
        h: NodeId,
        w_x: NodeId,
        w_h: NodeId,
        bias: NodeId,
    ) -> Result<NodeId, NnError> {
        let (xv, hv) = (self.value(x), self.value(h));
        let (wxv, whv, bv) = (self.value(w_x), self.value(w_h), self.value(bias));
        let (b, d, hid) = (xv.rows(), xv.cols(), hv.cols());
        let four = 4 * hid;
        if hv.rows() != b
            || wxv.shape() != [d, four]
            || whv.shape() != [hid, four]
            || bv.len() != four
        {
            return Err(NnError::Shape(format!(
                "lstm gates x {:?} h {:?} w_x {:?} w_h {:?} bias {:?}",
                xv.shape(),
                hv.shape(),
                wxv.shape(),
                whv.shape(),
                bv.shape()
            )));
        }
        let mut out = Vec::with_capacity(b * four);
        for _ in 0..b {
            out.extend_from_slice(bv.data());
        }
        gemm_nn(xv.data(), wxv.data(), &mut out, b, d, four);
        gemm_nn(hv.data(), whv.data(), &mut out, b, hid, four);
        for row in out.chunks_exact_mut(four) {
            let (ifg, o) = row.split_at_mut(3 * hid);
            let (i_f, g) = ifg.split_at_mut(2 * hid);
            i_f.iter_mut().for_each(|v| *v = sigmoid(*v));
            g.iter_mut().for_each(|v| *v = v.tanh());
            o.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        self.push(
            Tensor::new(&[b, four], out)?,
            Op::LstmGates {
                x,
                h,
                w_x,
                w_h,
                bias,
            },
        )
    }

    /// Next cell state `f⊙c + i⊙g` from activated gates.
    pub fn lstm_cell(&mut self, gates: NodeId, c: NodeId) -> Result<NodeId, NnError> {
        let (gv, cv) = (self.value(gates), self.value(c));
        let hid = cv.cols();
        if gv.rows() != cv.rows() || gv.cols() != 4 * hid {
            return Err(NnError::Shape(format!(
                "lstm cell gates {:?} state {:?}",
                gv.shape(),
                cv.shape()
            )));
        }
        let mut out = Vec::with_capacity(cv.len());
        for r in 0..cv.rows() {
            let g = gv.row(r);
            for (j, &cj) in cv.row(r).iter().enumerate() {
                out.push(g[hid + j] * cj + g[j] * g[2 * hid + j]);
            }
        }
        self.push(Tensor::new(cv.shape(), out)?, Op::LstmCell { gates, c })
    }

    /// Hidden output `o⊙tanh(c)` from activated gates and the new cell state.
    pub fn lstm_hidden(&mut self, gates: NodeId, c: NodeId) -> Result<NodeId, NnError> {
        let (gv, cv) = (self.value(gates), self.value(c));
        let hid = cv.cols();
        if gv.rows() != cv.rows() || gv.cols() != 4 * hid {
            return Err(NnError::Shape(format!(
                "lstm hidden gates {:?} state {:?}",
                gv.shape(),
                cv.shape()
            )));
        }
        let mut out = Vec::with_capacity(cv.len());
        for r in 0..cv.rows() {
            let g = gv.row(r);
            for (j, &cj) in cv.row(r).iter().enumerate() {
                out.push(g[3 * hid + j] * cj.tanh());
            }
        }
        self.push(Tensor::new(cv.shape(), out)?, Op::LstmHidden { gates, c })
    }

    /// Columns `start..start + width` of a matrix.
    pub fn slice_cols(&mut self, src: NodeId, start: usize, width: usize) -> Result<NodeId, NnError> {
        let sv = self.value(src);
        let (rows, cols) = (sv.rows(), sv.cols());
        if start + width > cols {
            return Err(NnError::Shape(format!(
                "slice {start}..{} of {cols} columns",
                start + width
            )));
        }
        let mut out = Vec::with_capacity(rows * width);
        for r in 0..rows {
            out.extend_from_slice(&sv.row(r)[start..start + width]);
        }
        self.push(Tensor::new(&[rows, width], out)?, Op::SliceCols { src, start })
    }

    /// Gather rows of `table` (`[V×d]`) into a `[ids.len()×d]` matrix.
    pub fn embedding_lookup(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId, NnError> {
        let tv = self.value(table);
        let (vocab, dim) = (tv.rows(), tv.cols());
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            if id >= vocab {
                return Err(NnError::IndexOutOfRange { index: id, len: vocab });
            }
            out.extend_from_slice(tv.row(id));
        }
        self.push(
            Tensor::new(&[ids.len(), dim], out)?,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
        )
    }

    /// Arithmetic mean of equally shaped tensors.
    pub fn sequence_mean(&mut self, steps: &[NodeId]) -> Result<NodeId, NnError> {
        if steps.is_empty() {
            return Err(NnError::EmptySequence);
        }
        let rows = self.value(steps[0]).rows();
        self.masked_sequence_mean(steps, &vec![steps.len(); rows])
    }

    /// Row-wise mean over time of `[B×H]` step outputs, where row `b` only
    /// averages its first `lens[b]` steps.
    pub fn masked_sequence_mean(&mut self, steps: &[NodeId], lens: &[usize]) -> Result<NodeId, NnError> {
        let first = steps.first().ok_or(NnError::EmptySequence)?;
        let shape = self.value(*first).shape().to_vec();
        let rows = self.value(*first).rows();
        if lens.len() != rows {
            return Err(NnError::Shape(format!("{} lengths for {rows} rows", lens.len())));
        }
        for s in steps {
            if self.value(*s).shape() != shape.as_slice() {
                return Err(NnError::Shape("sequence elements differ in shape".into()));
            }
        }
        let mut out = Tensor::zeros(&shape);
        for (b, &len) in lens.iter().enumerate() {
            if len == 0 || len > steps.len() {
                return Err(NnError::EmptySequence);
            }
            let inv = T::one() / T::from_f64(len as f64);
            let row = out.row_mut(b);
            for s in &steps[..len] {
                for (o, &v) in row.iter_mut().zip(self.nodes[s.0].value.row(b)) {
                    *o += v;
                }
            }
            row.iter_mut().for_each(|v| *v *= inv);
        }
        self.push(
            out,
            Op::SeqMean {
                steps: steps.to_vec(),
                lens: lens.to_vec(),
            },
        )
    }

    /// Row-wise `softmax(x / tau)`.
    pub fn softmax_t(&mut self, src: NodeId, tau: T) -> Result<NodeId, NnError> {
        if !(tau > T::zero()) {
            return Err(NnError::InvalidTemperature(tau.as_f64()));
        }
        let sv = self.value(src);
        let mut out = sv.clone();
        for r in 0..sv.rows() {
            softmax_row(out.row_mut(r), tau);
        }
        self.push(out, Op::SoftmaxT { src, tau })
    }

    /// `scale · Σ (y − x[r, c])²` over the listed `(r, c, y)` picks.
    pub fn selected_squared_error(
        &mut self,
        src: NodeId,
        picks: &[(usize, usize, T)],
        scale: T,
    ) -> Result<NodeId, NnError> {
        let sv = self.value(src);
        let mut total = T::zero();
        for &(r, c, y) in picks {
            if r >= sv.rows() || c >= sv.cols() {
                return Err(NnError::IndexOutOfRange {
                    index: c.max(r),
                    len: sv.cols(),
                });
            }
            let d = y - sv.at(r, c);
            total += d * d;
        }
        self.push(
            Tensor::scalar(total * scale),
            Op::SelectedSqErr {
                src,
                picks: picks.to_vec(),
                scale,
            },
        )
    }

    /// `scale · Σ_rows KL(target_row ‖ softmax(logits_row))`.
    pub fn kl_div(&mut self, logits: NodeId, target: Tensor<T>, scale: T) -> Result<NodeId, NnError> {
        let lv = self.value(logits);
        if target.rows() != lv.rows() || target.cols() != lv.cols() {
            return Err(NnError::Shape(format!(
                "kl target {:?} for logits {:?}",
                target.shape(),
                lv.shape()
            )));
        }
        let tol = T::from_f64(1e-6).max(T::epsilon() * T::from_f64(64.0));
        let mut total = T::zero();
        for r in 0..lv.rows() {
            let p = target.row(r);
            let sum: T = p.iter().copied().sum();
            if p.iter().any(|&v| v < T::zero() || !v.is_finite()) || (sum - T::one()).abs() > tol {
                return Err(NnError::InvalidDistribution);
            }
            total += kl_row(p, lv.row(r));
        }
        self.push(
            Tensor::scalar(total * scale),
            Op::KlDiv {
                logits,
                target,
                scale,
            },
        )
    }

    /// Reverse sweep from `output` seeded with `seed` (same shape as the output).
    pub fn gradients(&self, output: NodeId, seed: Tensor<T>) -> Result<Gradients<T>, NnError> {
        if seed.shape() != self.value(output).shape() {
            return Err(NnError::Shape(format!(
                "seed {:?} for output {:?}",
                seed.shape(),
                self.value(output).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..=output.0).map(|_| None).collect();
        grads[output.0] = Some(seed);
        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    /// Backpropagate a scalar loss and accumulate into the parameter gradients.
    pub fn backward(&self, loss: NodeId, params: &mut ParamStore<T>) -> Result<(), NnError> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(NnError::NonScalarLoss(lv.shape().to_vec()));
        }
        let seed = Tensor::new(lv.shape(), vec![T::one()])?;
        self.gradients(loss, seed)?.accumulate_into(self, params);
        Ok(())
    }

    fn backprop_node(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                gemm_nt(g.data(), bv.data(), acc(grads, *a, av).data_mut(), m, n, k);
                gemm_tn(av.data(), g.data(), acc(grads, *b, bv).data_mut(), m, k, n);
            }
            Op::AddBias(x, b) => {
                acc(grads, *x, self.value(*x)).add_assign(g);
                let bg = acc(grads, *b, self.value(*b));
                let cols = g.cols();
                for (j, &v) in g.data().iter().enumerate() {
                    bg.data_mut()[j % cols] += v;
                }
            }
            Op::Add(a, b) => {
                acc(grads, *a, self.value(*a)).add_assign(g);
                acc(grads, *b, self.value(*b)).add_assign(g);
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let ga = acc(grads, *a, av);
                for ((o, &gv), &y) in ga.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                    *o += gv * y;
                }
                let gb = acc(grads, *b, bv);
                for ((o, &gv), &x) in gb.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                    *o += gv * x;
                }
            }
            Op::Scale(a, s) => {
                let ga = acc(grads, *a, self.value(*a));
                for (o, &gv) in ga.data_mut().iter_mut().zip(g.data()) {
                    *o += gv * *s;
                }
            }
            Op::Act(x, kind) => {
                let y = &node.value;
                let gx = acc(grads, *x, self.value(*x));
                for ((o, &gv), &yv) in gx.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                    let d = match kind {
                        Activation::Relu => {
                            if yv > T::zero() {
                                T::one()
                            } else {
                                T::zero()
                            }
                        }
                        Activation::Sigmoid => yv * (T::one() - yv),
                        Activation::Tanh => T::one() - yv * yv,
                    };
                    *o += gv * d;
                }
            }
            Op::SliceCols { src, start } => {
                let width = g.cols();
                let gs = acc(grads, *src, self.value(*src));
                for r in 0..g.rows() {
                    let dst = &mut gs.row_mut(r)[*start..*start + width];
                    for (o, &gv) in dst.iter_mut().zip(g.row(r)) {
                        *o += gv;
                    }
                }
            }
            Op::Gather { table, ids } => {
                let gt = acc(grads, *table, self.value(*table));
                for (r, &id) in ids.iter().enumerate() {
                    for (o, &gv) in gt.row_mut(id).iter_mut().zip(g.row(r)) {
                        *o += gv;
                    }
                }
            }
            Op::SeqMean { steps, lens } => {
                for (t, s) in steps.iter().enumerate() {
                    let gs = acc(grads, *s, self.value(*s));
                    for (b, &len) in lens.iter().enumerate() {
                        if t >= len {
                            continue;
                        }
                        let inv = T::one() / T::from_f64(len as f64);
                        for (o, &gv) in gs.row_mut(b).iter_mut().zip(g.row(b)) {
                            *o += gv * inv;
                        }
                    }
                }
            }
            Op::LstmGates {
                x,
                h,
                w_x,
                w_h,
                bias,
            } => {
                let y = &node.value;
                let four = y.cols();
                let hid = four / 4;
                // Gradient with respect to the pre-activations.
                let mut pre = g.data().to_vec();
                for (prow, yrow) in pre.chunks_exact_mut(four).zip(y.data().chunks_exact(four)) {
                    for (j, (p, &a)) in prow.iter_mut().zip(yrow).enumerate() {
                        *p *= if (2 * hid..3 * hid).contains(&j) {
                            T::one() - a * a
                        } else {
                            a * (T::one() - a)
                        };
                    }
                }
                let (xv, hv) = (self.value(*x), self.value(*h));
                let (wxv, whv) = (self.value(*w_x), self.value(*w_h));
                let (b, d) = (xv.rows(), xv.cols());
                gemm_nt(&pre, wxv.data(), acc(grads, *x, xv).data_mut(), b, four, d);
                gemm_nt(&pre, whv.data(), acc(grads, *h, hv).data_mut(), b, four, hid);
                gemm_tn(xv.data(), &pre, acc(grads, *w_x, wxv).data_mut(), b, d, four);
                gemm_tn(hv.data(), &pre, acc(grads, *w_h, whv).data_mut(), b, hid, four);
                let bg = acc(grads, *bias, self.value(*bias));
                for prow in pre.chunks_exact(four) {
                    for (o, &v) in bg.data_mut().iter_mut().zip(prow) {
                        *o += v;
                    }
                }
            }
            Op::LstmCell { gates, c } => {
                let (gv, cv) = (self.value(*gates), self.value(*c));
                let hid = cv.cols();
                let gg = acc(grads, *gates, gv);
                for r in 0..cv.rows() {
                    let (grow, a, up) = (gg.row_mut(r), gv.row(r), g.row(r));
                    for (j, (&dc, &cj)) in up.iter().zip(cv.row(r)).enumerate() {
                        grow[j] += dc * a[2 * hid + j];
                        grow[hid + j] += dc * cj;
                        grow[2 * hid + j] += dc * a[j];
                    }
                }
                let gc = acc(grads, *c, cv);
                for r in 0..cv.rows() {
                    let (a, up) = (gv.row(r), g.row(r));
                    for (j, o) in gc.row_mut(r).iter_mut().enumerate() {
                        *o += up[j] * a[hid + j];
                    }
                }
            }
            Op::LstmHidden { gates, c } => {
                let (gv, cv) = (self.value(*gates), self.value(*c));
                let hid = cv.cols();
                let tc: Vec<T> = cv.data().iter().map(|v| v.tanh()).collect();
                let gg = acc(grads, *gates, gv);
                for r in 0..cv.rows() {
                    let grow = gg.row_mut(r);
                    for (j, &dh) in g.row(r).iter().enumerate() {
                        grow[3 * hid + j] += dh * tc[r * hid + j];
                    }
                }
                let gc = acc(grads, *c, cv);
                for r in 0..cv.rows() {
                    let a = gv.row(r);
                    for (j, o) in gc.row_mut(r).iter_mut().enumerate() {
                        let t = tc[r * hid + j];
                        *o += g.row(r)[j] * a[3 * hid + j] * (T::one() - t * t);
                    }
                }
            }
            Op::SoftmaxT { src, tau } => {
                let y = &node.value;
                let gs = acc(grads, *src, self.value(*src));
                let inv_tau = T::one() / *tau;
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    for ((o, &yv), &gv) in gs.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o += inv_tau * yv * (gv - dot);
                    }
                }
            }
            Op::SelectedSqErr { src, picks, scale } => {
                let sv = self.value(*src);
                let up = g.data()[0] * *scale;
                let gs = acc(grads, *src, sv);
                let cols = sv.cols();
                for &(r, c, y) in picks {
                    gs.data_mut()[r * cols + c] += up * T::from_f64(-2.0) * (y - sv.at(r, c));
                }
            }
            Op::KlDiv {
                logits,
                target,
                scale,
            } => {
                let lv = self.value(*logits);
                let up = g.data()[0] * *scale;
                let gl = acc(grads, *logits, lv);
                let mut s = vec![T::zero(); lv.cols()];
                for r in 0..lv.rows() {
                    s.copy_from_slice(lv.row(r));
                    softmax_row(&mut s, T::one());
                    let p = target.row(r);
                    let mass: T = p.iter().copied().sum();
                    for ((o, &sv), &pv) in gl.row_mut(r).iter_mut().zip(&s).zip(p) {
                        *o += up * (mass * sv - pv);
                    }
                }
            }
        }
    }
}

fn acc<'a, T: Real>(
    grads: &'a mut [Option<Tensor<T>>],
    id: NodeId,
    like: &Tensor<T>,
) -> &'a mut Tensor<T> {
    grads[id.0].get_or_insert_with(|| Tensor::zeros(like.shape()))
}

/// Per-node gradients from one reverse sweep.
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient reaching `node`, or `None` when the output does not depend on it.
    pub fn get(&self, node: NodeId) -> Option<&Tensor<T>> {
        self.grads.get(node.0).and_then(|g| g.as_ref())
    }

    /// Add parameter-leaf gradients into the store.
    pub fn accumulate_into(&self, tape: &Tape<T>, params: &mut ParamStore<T>) {
        for (i, g) in self.grads.iter().enumerate() {
            if let (Some(g), Op::Param(pid)) = (g, &tape.nodes[i].op) {
                params.get_mut(*pid).grad.add_assign(g);
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid<T: Real>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// In-place `softmax(row / tau)` with max subtraction.
pub(crate) fn softmax_row<T: Real>(row: &mut [T], tau: T) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = ((*v - max) / tau).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// `Σ p ln(p / softmax(q))` with `0 · ln 0 = 0`.
pub(crate) fn kl_row<T: Real>(p: &[T], q: &[T]) -> T {
    let max = q.iter().copied().fold(T::neg_infinity(), T::max);
    let log_z = q.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
    let mut total = T::zero();
    for (&pv, &qv) in p.iter().zip(q) {
        if pv > T::zero() {
            total += pv * (pv.ln() - (qv - log_z));
        }
    }
    total
}
