//! Operation tape for reverse-mode differentiation.
//!
//! A [`Tape`] owns every intermediate value of one forward computation.
//! Operations append nodes and return [`Var`] handles; [`Tape::backward`]
//! walks the nodes in reverse creation order (reverse topological order,
//! since an operation can only reference earlier nodes) and accumulates
//! gradients additively across fan-out.
//!
//! A tape is confined to one thread. Independent tapes share nothing.

use super::{softmax_in_place, Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

enum Op {
    Leaf,
    Matmul { a: Var, b: Var },
    Add { a: Var, b: Var },
    AddRow { a: Var, row: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    RepeatRows { a: Var },
    Affine { a: Var, mul: f64 },
    Tanh { a: Var },
    Sigmoid { a: Var },
    SoftmaxRows { a: Var },
    MaskedSoftmaxCol { a: Var, mask: Vec<bool> },
    SumRows { a: Var },
    SumCols { a: Var },
    MeanRows { a: Var },
    Transpose { a: Var },
    ConcatRows { parts: Vec<Var> },
    ConcatCols { parts: Vec<Var> },
    GatherRows { table: Var, idx: Vec<usize> },
    CrossEntropy { logits: Var, labels: Vec<usize> },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    /// Record a leaf value; gradient participation follows the tensor's flag.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        let needs = value.requires_grad();
        self.push(value, Op::Leaf, needs)
    }

    /// Record a constant leaf (never differentiated).
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn check_finite(data: &[f64], op: &'static str) -> Result<(), TensorError> {
        if data.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(TensorError::NonFinite { op })
        }
    }

    // ── forward operations ──────────────────────────────────────────

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, ka) = self.value(a).dims2();
        let (kb, n) = self.value(b).dims2();
        if ka != kb {
            return Err(TensorError::Dimension(format!(
                "matmul inner dimensions differ: {m}x{ka} vs {kb}x{n}"
            )));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), m, ka, n);
        Self::check_finite(&out, "matmul")?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(
            Tensor::new(vec![m, n], out).expect("matmul shape"),
            Op::Matmul { a, b },
            needs,
        ))
    }

    fn elementwise(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var, TensorError> {
        if self.value(a).dims2() != self.value(b).dims2() {
            return Err(TensorError::Dimension(format!(
                "{name} shape mismatch: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Self::check_finite(&out, name)?;
        let shape = self.value(a).shape().to_vec();
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(
            Tensor::new(shape, out).expect("elementwise shape"),
            op,
            needs,
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise(a, b, "add", |x, y| x + y, Op::Add { a, b })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise(a, b, "sub", |x, y| x - y, Op::Sub { a, b })
    }

    /// `m×n + 1×n`, the row broadcast over every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let (m, n) = self.value(a).dims2();
        let (rm, rn) = self.value(row).dims2();
        if rm != 1 || rn != n {
            return Err(TensorError::Dimension(format!(
                "add_row expects 1x{n} row, got {rm}x{rn}"
            )));
        }
        let row_data = self.value(row).data().to_vec();
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + row_data[i % n])
            .collect();
        Self::check_finite(&out, "add_row")?;
        let needs = self.needs(a) || self.needs(row);
        Ok(self.push(
            Tensor::new(vec![m, n], out).expect("add_row shape"),
            Op::AddRow { a, row },
            needs,
        ))
    }

    /// Tile a `1×n` row into `times×n`. Gradients sum back over the copies.
    pub fn repeat_rows(&mut self, a: Var, times: usize) -> Result<Var, TensorError> {
        let (m, n) = self.value(a).dims2();
        if m != 1 {
            return Err(TensorError::Dimension(format!(
                "repeat_rows expects a single row, got {m}x{n}"
            )));
        }
        let mut out = Vec::with_capacity(times * n);
        for _ in 0..times {
            out.extend_from_slice(self.value(a).data());
        }
        let needs = self.needs(a);
        Ok(self.push(
            Tensor::new(vec![times, n], out).expect("repeat_rows shape"),
            Op::RepeatRows { a },
            needs,
        ))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise(a, b, "mul", |x, y| x * y, Op::Mul { a, b })
    }

    /// Elementwise `mul * a + add`.
    pub fn affine(&mut self, a: Var, mul: f64, add: f64) -> Var {
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .map(|&x| mul * x + add)
            .collect();
        debug_assert!(
            out.iter().all(|x| x.is_finite()),
            "affine produced non-finite"
        );
        let shape = self.value(a).shape().to_vec();
        let needs = self.needs(a);
        self.push(
            Tensor::new(shape, out).expect("affine shape"),
            Op::Affine { a, mul },
            needs,
        )
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out: Vec<f64> = self.value(a).data().iter().map(|x| x.tanh()).collect();
        let shape = self.value(a).shape().to_vec();
        let needs = self.needs(a);
        self.push(
            Tensor::new(shape, out).expect("tanh shape"),
            Op::Tanh { a },
            needs,
        )
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .map(|x| 1.0 / (1.0 + (-x).exp()))
            .collect();
        let shape = self.value(a).shape().to_vec();
        let needs = self.needs(a);
        self.push(
            Tensor::new(shape, out).expect("sigmoid shape"),
            Op::Sigmoid { a },
            needs,
        )
    }

    /// Softmax along axis 1, independently per row. Overflow is guarded by
    /// max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let (m, n) = self.value(a).dims2();
        let mut out = self.value(a).data().to_vec();
        for r in 0..m {
            softmax_in_place(&mut out[r * n..(r + 1) * n]);
        }
        let needs = self.needs(a);
        self.push(
            Tensor::new(vec![m, n], out).expect("softmax shape"),
            Op::SoftmaxRows { a },
            needs,
        )
    }

    /// Softmax along axis 0 (per column), via transposition.
    pub fn softmax_cols(&mut self, a: Var) -> Var {
        let t = self.transpose(a);
        let s = self.softmax_rows(t);
        self.transpose(s)
    }

    /// Softmax over an `n×1` column of scores with masked positions forced
    /// to exactly zero weight (their scores are treated as negative
    /// infinity before normalization).
    pub fn masked_softmax_col(&mut self, a: Var, mask: &[bool]) -> Result<Var, TensorError> {
        let (n, c) = self.value(a).dims2();
        if c != 1 {
            return Err(TensorError::Dimension(format!(
                "masked_softmax_col expects a column, got {n}x{c}"
            )));
        }
        if mask.len() != n {
            return Err(TensorError::Dimension(format!(
                "mask length {} does not match {n} positions",
                mask.len()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(TensorError::Input(
                "masked_softmax_col requires at least one unmasked position".into(),
            ));
        }
        let data = self.value(a).data();
        let max = data
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&x, _)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out = vec![0.0; n];
        let mut sum = 0.0;
        for i in 0..n {
            if mask[i] {
                out[i] = (data[i] - max).exp();
                sum += out[i];
            }
        }
        for x in out.iter_mut() {
            *x /= sum;
        }
        let needs = self.needs(a);
        Ok(self.push(
            Tensor::new(vec![n, 1], out).expect("masked softmax shape"),
            Op::MaskedSoftmaxCol {
                a,
                mask: mask.to_vec(),
            },
            needs,
        ))
    }

    /// Column vector of row sums: `m×n → m×1`.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let (m, n) = self.value(a).dims2();
        let data = self.value(a).data();
        let out: Vec<f64> = (0..m)
            .map(|r| data[r * n..(r + 1) * n].iter().sum())
            .collect();
        let needs = self.needs(a);
        self.push(
            Tensor::new(vec![m, 1], out).expect("sum_cols shape"),
            Op::SumCols { a },
            needs,
        )
    }

    /// Row vector of column sums: `m×n → 1×n`.
    pub fn sum_rows(&mut self, a: Var) -> Var {
        let (m, n) = self.value(a).dims2();
        let data = self.value(a).data();
        let mut out = vec![0.0; n];
        for r in 0..m {
            for c in 0..n {
                out[c] += data[r * n + c];
            }
        }
        let needs = self.needs(a);
        self.push(
            Tensor::new(vec![1, n], out).expect("sum_rows shape"),
            Op::SumRows { a },
            needs,
        )
    }

    /// Mean over rows: `m×n → 1×n`.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let (m, n) = self.value(a).dims2();
        let data = self.value(a).data();
        let mut out = vec![0.0; n];
        for r in 0..m {
            for c in 0..n {
                out[c] += data[r * n + c] / m as f64;
            }
        }
        let needs = self.needs(a);
        self.push(
            Tensor::new(vec![1, n], out).expect("mean_rows shape"),
            Op::MeanRows { a },
            needs,
        )
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let (m, n) = self.value(a).dims2();
        let data = self.value(a).data();
        let mut out = vec![0.0; m * n];
        for r in 0..m {
            for c in 0..n {
                out[c * m + r] = data[r * n + c];
            }
        }
        let needs = self.needs(a);
        self.push(
            Tensor::new(vec![n, m], out).expect("transpose shape"),
            Op::Transpose { a },
            needs,
        )
    }

    /// Stack parts vertically; every part must have the same column count.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::Input("concat_rows of zero parts".into()));
        }
        let (_, n) = self.value(parts[0]).dims2();
        let mut out = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let (pm, pn) = self.value(p).dims2();
            if pn != n {
                return Err(TensorError::Dimension(format!(
                    "concat_rows column mismatch: {pn} vs {n}"
                )));
            }
            rows += pm;
            out.extend_from_slice(self.value(p).data());
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(
            Tensor::new(vec![rows, n], out).expect("concat_rows shape"),
            Op::ConcatRows {
                parts: parts.to_vec(),
            },
            needs,
        ))
    }

    /// Stack parts horizontally; every part must have the same row count.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::Input("concat_cols of zero parts".into()));
        }
        let (m, _) = self.value(parts[0]).dims2();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (pm, pn) = self.value(p).dims2();
            if pm != m {
                return Err(TensorError::Dimension(format!(
                    "concat_cols row mismatch: {pm} vs {m}"
                )));
            }
            widths.push(pn);
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; m * total];
        let mut offset = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let data = self.value(p).data();
            for r in 0..m {
                out[r * total + offset..r * total + offset + w]
                    .copy_from_slice(&data[r * w..(r + 1) * w]);
            }
            offset += w;
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(
            Tensor::new(vec![m, total], out).expect("concat_cols shape"),
            Op::ConcatCols {
                parts: parts.to_vec(),
            },
            needs,
        ))
    }

    /// Select rows of `table` by index, in order. Gradients scatter-add
    /// back into the table rows.
    pub fn gather_rows(&mut self, table: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let (rows, cols) = self.value(table).dims2();
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(TensorError::Input(format!(
                "gather_rows index {bad} out of range for {rows} rows"
            )));
        }
        let data = self.value(table).data();
        let mut out = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            out.extend_from_slice(&data[i * cols..(i + 1) * cols]);
        }
        let needs = self.needs(table);
        Ok(self.push(
            Tensor::new(vec![idx.len(), cols], out).expect("gather shape"),
            Op::GatherRows {
                table,
                idx: idx.to_vec(),
            },
            needs,
        ))
    }

    /// Mean over the batch of `−log softmax(logits)[label]`. The gradient
    /// is `(softmax − one_hot) / batch`.
    pub fn cross_entropy_with_logits(
        &mut self,
        logits: Var,
        labels: &[usize],
    ) -> Result<Var, TensorError> {
        let (batch, classes) = self.value(logits).dims2();
        if labels.len() != batch {
            return Err(TensorError::Input(format!(
                "{} labels for a batch of {batch}",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(TensorError::Input(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        let data = self.value(logits).data();
        let mut loss = 0.0;
        for (b, &label) in labels.iter().enumerate() {
            let row = &data[b * classes..(b + 1) * classes];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_sum: f64 = row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
            loss -= row[label] - max - log_sum;
        }
        loss /= batch as f64;
        Self::check_finite(&[loss], "cross_entropy_with_logits")?;
        let needs = self.needs(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
            },
            needs,
        ))
    }

    // ── backward pass ───────────────────────────────────────────────

    /// Propagate gradients from a scalar output back to every node that
    /// needs them. Returns per-node gradient storage indexed by [`Var`].
    pub fn backward(&self, output: Var) -> Gradients {
        assert_eq!(
            self.value(output).numel(),
            1,
            "backward starts from a scalar"
        );
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(vec![1.0]);

        for i in (0..=output.0).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            if !self.nodes[i].needs_grad {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Gradients { grads }
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, update: impl FnOnce(&mut [f64])) {
        if !self.needs(v) {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; self.value(v).numel()]);
        update(slot);
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Matmul { a, b } => {
                let (m, k) = self.value(*a).dims2();
                let (_, n) = self.value(*b).dims2();
                let a_data = self.value(*a).data();
                let b_data = self.value(*b).data();
                self.accumulate(grads, *a, |da| {
                    // dA += G · Bᵀ
                    for r in 0..m {
                        for c in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g[r * n + j] * b_data[c * n + j];
                            }
                            da[r * k + c] += s;
                        }
                    }
                });
                self.accumulate(grads, *b, |db| {
                    // dB += Aᵀ · G
                    for r in 0..k {
                        for c in 0..n {
                            let mut s = 0.0;
                            for j in 0..m {
                                s += a_data[j * k + r] * g[j * n + c];
                            }
                            db[r * n + c] += s;
                        }
                    }
                });
            }
            Op::Add { a, b } => {
                self.accumulate(grads, *a, |da| add_assign(da, g, 1.0));
                self.accumulate(grads, *b, |db| add_assign(db, g, 1.0));
            }
            Op::AddRow { a, row } => {
                let (m, n) = self.value(*a).dims2();
                self.accumulate(grads, *a, |da| add_assign(da, g, 1.0));
                self.accumulate(grads, *row, |dr| {
                    for r in 0..m {
                        for c in 0..n {
                            dr[c] += g[r * n + c];
                        }
                    }
                });
            }
            Op::RepeatRows { a } => {
                let (times, n) = self.value(Var(i)).dims2();
                self.accumulate(grads, *a, |da| {
                    for r in 0..times {
                        for c in 0..n {
                            da[c] += g[r * n + c];
                        }
                    }
                });
            }
            Op::Sub { a, b } => {
                self.accumulate(grads, *a, |da| add_assign(da, g, 1.0));
                self.accumulate(grads, *b, |db| add_assign(db, g, -1.0));
            }
            Op::Mul { a, b } => {
                let a_data = self.value(*a).data();
                let b_data = self.value(*b).data();
                self.accumulate(grads, *a, |da| {
                    for (d, (&gi, &bi)) in da.iter_mut().zip(g.iter().zip(b_data)) {
                        *d += gi * bi;
                    }
                });
                self.accumulate(grads, *b, |db| {
                    for (d, (&gi, &ai)) in db.iter_mut().zip(g.iter().zip(a_data)) {
                        *d += gi * ai;
                    }
                });
            }
            Op::Affine { a, mul } => {
                let mul = *mul;
                self.accumulate(grads, *a, |da| add_assign(da, g, mul));
            }
            Op::Tanh { a } => {
                let y = self.value(Var(i)).data();
                self.accumulate(grads, *a, |da| {
                    for (d, (&gi, &yi)) in da.iter_mut().zip(g.iter().zip(y)) {
                        *d += gi * (1.0 - yi * yi);
                    }
                });
            }
            Op::Sigmoid { a } => {
                let y = self.value(Var(i)).data();
                self.accumulate(grads, *a, |da| {
                    for (d, (&gi, &yi)) in da.iter_mut().zip(g.iter().zip(y)) {
                        *d += gi * yi * (1.0 - yi);
                    }
                });
            }
            Op::SoftmaxRows { a } => {
                let (m, n) = self.value(*a).dims2();
                let y = self.value(Var(i)).data();
                self.accumulate(grads, *a, |da| {
                    for r in 0..m {
                        let yr = &y[r * n..(r + 1) * n];
                        let gr = &g[r * n..(r + 1) * n];
                        let dot: f64 = yr.iter().zip(gr).map(|(&yi, &gi)| yi * gi).sum();
                        for c in 0..n {
                            da[r * n + c] += yr[c] * (gr[c] - dot);
                        }
                    }
                });
            }
            Op::MaskedSoftmaxCol { a, mask } => {
                let y = self.value(Var(i)).data();
                let dot: f64 = y
                    .iter()
                    .zip(g)
                    .zip(mask)
                    .filter(|(_, &m)| m)
                    .map(|((&yi, &gi), _)| yi * gi)
                    .sum();
                self.accumulate(grads, *a, |da| {
                    for c in 0..y.len() {
                        if mask[c] {
                            da[c] += y[c] * (g[c] - dot);
                        }
                    }
                });
            }
            Op::SumCols { a } => {
                let (m, n) = self.value(*a).dims2();
                self.accumulate(grads, *a, |da| {
                    for r in 0..m {
                        for c in 0..n {
                            da[r * n + c] += g[r];
                        }
                    }
                });
            }
            Op::SumRows { a } => {
                let (m, n) = self.value(*a).dims2();
                self.accumulate(grads, *a, |da| {
                    for r in 0..m {
                        for c in 0..n {
                            da[r * n + c] += g[c];
                        }
                    }
                });
            }
            Op::MeanRows { a } => {
                let (m, n) = self.value(*a).dims2();
                let scale = 1.0 / m as f64;
                self.accumulate(grads, *a, |da| {
                    for r in 0..m {
                        for c in 0..n {
                            da[r * n + c] += g[c] * scale;
                        }
                    }
                });
            }
            Op::Transpose { a } => {
                let (m, n) = self.value(*a).dims2();
                self.accumulate(grads, *a, |da| {
                    for r in 0..m {
                        for c in 0..n {
                            da[r * n + c] += g[c * m + r];
                        }
                    }
                });
            }
            Op::ConcatRows { parts } => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).numel();
                    self.accumulate(grads, p, |dp| add_assign(dp, &g[offset..offset + len], 1.0));
                    offset += len;
                }
            }
            Op::ConcatCols { parts } => {
                let (m, total) = self.value(Var(i)).dims2();
                let mut offset = 0;
                for &p in parts {
                    let (_, w) = self.value(p).dims2();
                    self.accumulate(grads, p, |dp| {
                        for r in 0..m {
                            for c in 0..w {
                                dp[r * w + c] += g[r * total + offset + c];
                            }
                        }
                    });
                    offset += w;
                }
            }
            Op::GatherRows { table, idx } => {
                let (_, cols) = self.value(*table).dims2();
                self.accumulate(grads, *table, |dt| {
                    for (r, &row) in idx.iter().enumerate() {
                        for c in 0..cols {
                            dt[row * cols + c] += g[r * cols + c];
                        }
                    }
                });
            }
            Op::CrossEntropy { logits, labels } => {
                let (batch, classes) = self.value(*logits).dims2();
                let data = self.value(*logits).data();
                let scale = g[0] / batch as f64;
                self.accumulate(grads, *logits, |dl| {
                    for (b, &label) in labels.iter().enumerate() {
                        let row = &data[b * classes..(b + 1) * classes];
                        let mut sm = row.to_vec();
                        softmax_in_place(&mut sm);
                        for c in 0..classes {
                            let one_hot = if c == label { 1.0 } else { 0.0 };
                            dl[b * classes + c] += scale * (sm[c] - one_hot);
                        }
                    }
                });
            }
        }
    }
}

/// Gradient storage produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

fn add_assign(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for r in 0..m {
        for p in 0..k {
            let av = a[r * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[r * n..(r + 1) * n];
            for c in 0..n {
                orow[c] += av * brow[c];
            }
        }
    }
    out
}
