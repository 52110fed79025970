use alloc::vec;
use alloc::vec::Vec;

use super::params::{ParamId, ParameterStore};
use super::tensor::Tensor;
use crate::{math, Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Square-kernel 2-D convolution geometry (NHWC input, zero padding).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn output_size(&self, input: usize) -> usize {
        (input + 2 * self.padding - self.kernel) / self.stride + 1
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Abs(Var),
    Exp(Var),
    Log(Var),
    Scale(Var, f64),
    AddScalar(Var),
    Concat(Vec<Var>),
    Mean(Var),
    Sum(Var),
    RepeatRows(Var, usize),
    MaxPoolRows { x: Var, argmax: Vec<usize> },
    Conv2d {
        x: Var,
        w: Var,
        spec: ConvSpec,
        cols: Vec<f64>,
    },
    GlobalAvgPool(Var),
    Reshape(Var),
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    data: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

/// Per-node gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    params: Vec<(ParamId, usize)>,
    /// Number of nodes whose vector-Jacobian product was evaluated.
    pub visited: usize,
    /// Highest number of times any single node was visited (1 on an acyclic tape).
    pub max_visits_per_node: usize,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`, if it was reachable.
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    /// Adds every parameter gradient into `store`.
    pub fn accumulate_into(&self, store: &mut ParameterStore) {
        for &(id, node) in &self.params {
            if let Some(g) = &self.grads[node] {
                store.tensor_mut(id).accumulate_grad(g);
            }
        }
    }
}

/// Dynamic computation record for one forward pass.
#[derive(Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
    record: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

fn mismatch(op: &'static str, a: &[usize], b: &[usize]) -> Error {
    Error::ShapeMismatch {
        op,
        lhs: a.to_vec(),
        rhs: b.to_vec(),
    }
}

/// `c (+)= op(a) * op(b)` for row-major matrices, where `op` optionally
/// transposes. `m, k, n` are the dimensions after `op`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_t: bool,
    b: &[f64],
    b_t: bool,
    c: &mut [f64],
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: slice lengths are checked above and the strides describe
    // exactly those row-major layouts.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

impl Tape {
    /// A tape that records gradients.
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            param_vars: Vec::new(),
            record: true,
        }
    }

    /// A tape for frozen evaluation: nothing is marked for backward.
    pub fn inference() -> Self {
        Tape {
            record: false,
            ..Tape::new()
        }
    }

    pub fn is_recording(&self) -> bool {
        self.record
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].data
    }

    pub fn to_tensor(&self, v: Var) -> Tensor {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape.clone(), n.data.clone()).expect("tape nodes hold valid tensors")
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op, inputs: &[Var]) -> Var {
        let needs_grad = self.record && inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.push_node(shape, data, op, needs_grad)
    }

    fn push_node(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.nodes.push(Node {
            shape,
            data,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Inserts a constant or input tensor. It takes part in backward when the
    /// tensor has `requires_grad` set.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let needs_grad = self.record && t.requires_grad();
        let shape = t.shape().to_vec();
        self.push_node(shape, t.into_data(), Op::Leaf, needs_grad)
    }

    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<f64>) -> Result<Var> {
        Ok(self.leaf(Tensor::new(shape, data)?))
    }

    /// Binds a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParameterStore, id: ParamId) -> Var {
        if let Some(Some(v)) = self.param_vars.get(id.index()) {
            return *v;
        }
        let t = store.tensor(id);
        let needs_grad = self.record && t.requires_grad();
        let v = self.push_node(
            t.shape().to_vec(),
            t.data().to_vec(),
            Op::Param(id),
            needs_grad,
        );
        if self.param_vars.len() <= id.index() {
            self.param_vars.resize(id.index() + 1, None);
        }
        self.param_vars[id.index()] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(mismatch("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, self.value(a), false, self.value(b), false, &mut out, false);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), &[a, b]))
    }

    fn zip_same(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(mismatch(name, self.shape(a), self.shape(b)));
        }
        let out: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(shape, out, op, &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Adds a vector along the last axis of `x` (the only broadcast).
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (sx, sb) = (self.shape(x), self.shape(bias));
        if sb.len() != 1 || sx.last() != Some(&sb[0]) {
            return Err(mismatch("add_bias", sx, sb));
        }
        let n = sb[0];
        let b = self.value(bias);
        let out: Vec<f64> = self
            .value(x)
            .iter()
            .enumerate()
            .map(|(i, &v)| v + b[i % n])
            .collect();
        let shape = sx.to_vec();
        Ok(self.push(shape, out, Op::AddBias(x, bias), &[x, bias]))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let out: Vec<f64> = self.value(x).iter().map(|&v| f(v)).collect();
        let shape = self.shape(x).to_vec();
        self.push(shape, out, op, &[x])
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| if v > 0.0 { v } else { 0.0 }, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        self.map(x, math::abs, Op::Abs(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.map(x, math::exp, Op::Exp(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.map(x, math::ln, Op::Log(x))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        self.map(x, |v| v * s, Op::Scale(x, s))
    }

    pub fn add_scalar(&mut self, x: Var, s: f64) -> Var {
        self.map(x, |v| v + s, Op::AddScalar(x))
    }

    /// Concatenates along the last axis; all leading dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::Empty("concat input list"));
        };
        let lead = self.shape(first)[..self.shape(first).len() - 1].to_vec();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            if s.len() != lead.len() + 1 || s[..s.len() - 1] != lead[..] {
                return Err(mismatch("concat", self.shape(first), s));
            }
            widths.push(s[s.len() - 1]);
        }
        let total: usize = widths.iter().sum();
        let rows: usize = lead.iter().product();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p)[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        Ok(self.push(shape, out, Op::Concat(parts.to_vec()), parts))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        self.push(vec![1], vec![m], Op::Mean(x), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().sum::<f64>();
        self.push(vec![1], vec![s], Op::Sum(x), &[x])
    }

    /// `[g, c] -> [g * times, c]`, each row repeated `times` times in place.
    pub fn repeat_rows(&mut self, x: Var, times: usize) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 2 || times == 0 {
            return Err(mismatch("repeat_rows", s, &[times]));
        }
        let (g, c) = (s[0], s[1]);
        let src = self.value(x);
        let mut out = Vec::with_capacity(g * times * c);
        for r in 0..g {
            let row = &src[r * c..(r + 1) * c];
            for _ in 0..times {
                out.extend_from_slice(row);
            }
        }
        Ok(self.push(vec![g * times, c], out, Op::RepeatRows(x, times), &[x]))
    }

    /// `[g * n, c] -> [g, c]`, maximum over each consecutive run of `n` rows.
    pub fn max_pool_rows(&mut self, x: Var, n: usize) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 2 || n == 0 || s[0] % n != 0 {
            return Err(mismatch("max_pool_rows", s, &[n]));
        }
        let (rows, c) = (s[0], s[1]);
        let g = rows / n;
        let src = self.value(x);
        let mut out = vec![f64::NEG_INFINITY; g * c];
        let mut argmax = vec![0usize; g * c];
        for gi in 0..g {
            for r in gi * n..(gi + 1) * n {
                let row = &src[r * c..(r + 1) * c];
                for j in 0..c {
                    if row[j] > out[gi * c + j] || r == gi * n {
                        out[gi * c + j] = row[j];
                        argmax[gi * c + j] = r * c + j;
                    }
                }
            }
        }
        Ok(self.push(vec![g, c], out, Op::MaxPoolRows { x, argmax }, &[x]))
    }

    /// `x: [b, h, w, cin]`, `weight: [k*k*cin, cout]` -> `[b, ho, wo, cout]`.
    pub fn conv2d(&mut self, x: Var, weight: Var, spec: ConvSpec) -> Result<Var> {
        let (sx, sw) = (self.shape(x).to_vec(), self.shape(weight).to_vec());
        if sx.len() != 4
            || sw.len() != 2
            || sw[0] != spec.kernel * spec.kernel * sx[3]
            || spec.stride == 0
            || sx[1] + 2 * spec.padding < spec.kernel
            || sx[2] + 2 * spec.padding < spec.kernel
        {
            return Err(mismatch("conv2d", &sx, &sw));
        }
        let (b, h, w, cin) = (sx[0], sx[1], sx[2], sx[3]);
        let (ho, wo) = (spec.output_size(h), spec.output_size(w));
        let patch = spec.kernel * spec.kernel * cin;
        let rows = b * ho * wo;
        let mut cols = vec![0.0; rows * patch];
        let src = self.value(x);
        for bi in 0..b {
            for oy in 0..ho {
                for ox in 0..wo {
                    let row = (bi * ho + oy) * wo + ox;
                    let dst = &mut cols[row * patch..(row + 1) * patch];
                    for ky in 0..spec.kernel {
                        let iy = (oy * spec.stride + ky) as isize - spec.padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..spec.kernel {
                            let ix = (ox * spec.stride + kx) as isize - spec.padding as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let s = ((bi * h + iy as usize) * w + ix as usize) * cin;
                            let d = (ky * spec.kernel + kx) * cin;
                            dst[d..d + cin].copy_from_slice(&src[s..s + cin]);
                        }
                    }
                }
            }
        }
        let cout = sw[1];
        let mut out = vec![0.0; rows * cout];
        gemm(rows, patch, cout, &cols, false, self.value(weight), false, &mut out, false);
        let keep = if self.record { cols } else { Vec::new() };
        Ok(self.push(
            vec![b, ho, wo, cout],
            out,
            Op::Conv2d {
                x,
                w: weight,
                spec,
                cols: keep,
            },
            &[x, weight],
        ))
    }

    /// `[b, h, w, c] -> [b, c]`, mean over the spatial axes.
    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 4 {
            return Err(mismatch("global_avg_pool", &s, &[4]));
        }
        let (b, hw, c) = (s[0], s[1] * s[2], s[3]);
        let src = self.value(x);
        let mut out = vec![0.0; b * c];
        for bi in 0..b {
            for p in 0..hw {
                let row = &src[(bi * hw + p) * c..(bi * hw + p + 1) * c];
                for (o, v) in out[bi * c..(bi + 1) * c].iter_mut().zip(row) {
                    *o += v;
                }
            }
        }
        let inv = 1.0 / hw as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        Ok(self.push(vec![b, c], out, Op::GlobalAvgPool(x), &[x]))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let n: usize = shape.iter().product();
        if n != self.value(x).len() || shape.contains(&0) {
            return Err(mismatch("reshape", self.shape(x), &shape));
        }
        let data = self.value(x).to_vec();
        Ok(self.push(shape, data, Op::Reshape(x), &[x]))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.shape(loss);
        if self.value(loss).len() != 1 {
            return Err(Error::NonScalarLoss(shape.to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut visits = vec![0usize; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        let mut visited = 0;
        let mut params = Vec::new();
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                grads[i] = None;
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            visited += 1;
            visits[i] += 1;
            self.propagate(node, &g, &mut grads);
            match node.op {
                Op::Leaf => grads[i] = Some(g),
                Op::Param(id) => {
                    params.push((id, i));
                    grads[i] = Some(g);
                }
                _ => {}
            }
        }
        Ok(Gradients {
            grads,
            params,
            visited,
            max_visits_per_node: visits.into_iter().max().unwrap_or(0),
        })
    }

    /// Runs backward and adds parameter gradients into `store`.
    pub fn backward_into(&self, loss: Var, store: &mut ParameterStore) -> Result<Gradients> {
        let g = self.backward(loss)?;
        g.accumulate_into(store);
        Ok(g)
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let needs = |v: Var| self.nodes[v.0].needs_grad;
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; self.nodes[v.0].data.len()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            &Op::MatMul(a, b) => {
                let (sa, sb) = (&self.nodes[a.0].shape, &self.nodes[b.0].shape);
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                let (av, bv) = (&self.nodes[a.0].data, &self.nodes[b.0].data);
                if needs(a) {
                    acc(a, &mut |ga| gemm(m, n, k, g, false, bv, true, ga, true));
                }
                if needs(b) {
                    acc(b, &mut |gb| gemm(k, m, n, av, true, g, false, gb, true));
                }
            }
            &Op::Add(a, b) => {
                acc(a, &mut |ga| ga.iter_mut().zip(g).for_each(|(x, y)| *x += y));
                acc(b, &mut |gb| gb.iter_mut().zip(g).for_each(|(x, y)| *x += y));
            }
            &Op::Sub(a, b) => {
                acc(a, &mut |ga| ga.iter_mut().zip(g).for_each(|(x, y)| *x += y));
                acc(b, &mut |gb| gb.iter_mut().zip(g).for_each(|(x, y)| *x -= y));
            }
            &Op::Mul(a, b) => {
                let (av, bv) = (&self.nodes[a.0].data, &self.nodes[b.0].data);
                acc(a, &mut |ga| {
                    for ((x, gy), bb) in ga.iter_mut().zip(g).zip(bv) {
                        *x += gy * bb;
                    }
                });
                acc(b, &mut |gb| {
                    for ((x, gy), aa) in gb.iter_mut().zip(g).zip(av) {
                        *x += gy * aa;
                    }
                });
            }
            &Op::AddBias(x, bias) => {
                acc(x, &mut |gx| gx.iter_mut().zip(g).for_each(|(a, b)| *a += b));
                acc(bias, &mut |gb| {
                    let n = gb.len();
                    for (i, v) in g.iter().enumerate() {
                        gb[i % n] += v;
                    }
                });
            }
            &Op::Relu(x) => {
                let xv = &self.nodes[x.0].data;
                acc(x, &mut |gx| {
                    for ((a, gy), xi) in gx.iter_mut().zip(g).zip(xv) {
                        if *xi > 0.0 {
                            *a += gy;
                        }
                    }
                });
            }
            &Op::Sigmoid(x) => {
                let y = &node.data;
                acc(x, &mut |gx| {
                    for ((a, gy), yi) in gx.iter_mut().zip(g).zip(y) {
                        *a += gy * yi * (1.0 - yi);
                    }
                });
            }
            &Op::Abs(x) => {
                let xv = &self.nodes[x.0].data;
                acc(x, &mut |gx| {
                    for ((a, gy), xi) in gx.iter_mut().zip(g).zip(xv) {
                        if *xi > 0.0 {
                            *a += gy;
                        } else if *xi < 0.0 {
                            *a -= gy;
                        }
                    }
                });
            }
            &Op::Exp(x) => {
                let y = &node.data;
                acc(x, &mut |gx| {
                    for ((a, gy), yi) in gx.iter_mut().zip(g).zip(y) {
                        *a += gy * yi;
                    }
                });
            }
            &Op::Log(x) => {
                let xv = &self.nodes[x.0].data;
                acc(x, &mut |gx| {
                    for ((a, gy), xi) in gx.iter_mut().zip(g).zip(xv) {
                        *a += gy / xi;
                    }
                });
            }
            &Op::Scale(x, s) => {
                acc(x, &mut |gx| gx.iter_mut().zip(g).for_each(|(a, b)| *a += b * s));
            }
            &Op::AddScalar(x) | &Op::Reshape(x) => {
                acc(x, &mut |gx| gx.iter_mut().zip(g).for_each(|(a, b)| *a += b));
            }
            Op::Concat(parts) => {
                let total = *node.shape.last().unwrap();
                let rows = node.data.len() / total;
                let mut offset = 0;
                for &p in parts {
                    let w = *self.nodes[p.0].shape.last().unwrap();
                    acc(p, &mut |gp| {
                        for r in 0..rows {
                            let src = &g[r * total + offset..r * total + offset + w];
                            for (a, b) in gp[r * w..(r + 1) * w].iter_mut().zip(src) {
                                *a += b;
                            }
                        }
                    });
                    offset += w;
                }
            }
            &Op::Mean(x) => {
                let n = self.nodes[x.0].data.len() as f64;
                let d = g[0] / n;
                acc(x, &mut |gx| gx.iter_mut().for_each(|a| *a += d));
            }
            &Op::Sum(x) => {
                acc(x, &mut |gx| gx.iter_mut().for_each(|a| *a += g[0]));
            }
            &Op::RepeatRows(x, times) => {
                let c = self.nodes[x.0].shape[1];
                acc(x, &mut |gx| {
                    for (r, row) in gx.chunks_mut(c).enumerate() {
                        for t in 0..times {
                            let src = &g[(r * times + t) * c..(r * times + t + 1) * c];
                            row.iter_mut().zip(src).for_each(|(a, b)| *a += b);
                        }
                    }
                });
            }
            Op::MaxPoolRows { x, argmax } => {
                acc(*x, &mut |gx| {
                    for (gy, &src) in g.iter().zip(argmax) {
                        gx[src] += gy;
                    }
                });
            }
            Op::Conv2d { x, w, spec, cols } => {
                let (x, w, spec) = (*x, *w, *spec);
                let sx = &self.nodes[x.0].shape;
                let (b, h, wd, cin) = (sx[0], sx[1], sx[2], sx[3]);
                let cout = self.nodes[w.0].shape[1];
                let patch = spec.kernel * spec.kernel * cin;
                let (ho, wo) = (node.shape[1], node.shape[2]);
                let rows = b * ho * wo;
                if needs(w) {
                    acc(w, &mut |gw| gemm(patch, rows, cout, cols, true, g, false, gw, true));
                }
                if needs(x) {
                    let mut dcols = vec![0.0; rows * patch];
                    gemm(
                        rows,
                        cout,
                        patch,
                        g,
                        false,
                        &self.nodes[w.0].data,
                        true,
                        &mut dcols,
                        false,
                    );
                    acc(x, &mut |gx| {
                        for bi in 0..b {
                            for oy in 0..ho {
                                for ox in 0..wo {
                                    let row = (bi * ho + oy) * wo + ox;
                                    let src = &dcols[row * patch..(row + 1) * patch];
                                    for ky in 0..spec.kernel {
                                        let iy = (oy * spec.stride + ky) as isize
                                            - spec.padding as isize;
                                        if iy < 0 || iy >= h as isize {
                                            continue;
                                        }
                                        for kx in 0..spec.kernel {
                                            let ix = (ox * spec.stride + kx) as isize
                                                - spec.padding as isize;
                                            if ix < 0 || ix >= wd as isize {
                                                continue;
                                            }
                                            let d = ((bi * h + iy as usize) * wd + ix as usize)
                                                * cin;
                                            let s = (ky * spec.kernel + kx) * cin;
                                            for c in 0..cin {
                                                gx[d + c] += src[s + c];
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    });
                }
            }
            &Op::GlobalAvgPool(x) => {
                let s = &self.nodes[x.0].shape;
                let (b, hw, c) = (s[0], s[1] * s[2], s[3]);
                let inv = 1.0 / hw as f64;
                acc(x, &mut |gx| {
                    for bi in 0..b {
                        for p in 0..hw {
                            let dst = &mut gx[(bi * hw + p) * c..(bi * hw + p + 1) * c];
                            for (a, gy) in dst.iter_mut().zip(&g[bi * c..(bi + 1) * c]) {
                                *a += gy * inv;
                            }
                        }
                    }
                });
            }
        }
    }
}
