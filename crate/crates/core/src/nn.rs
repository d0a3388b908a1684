//! One-hidden-layer ReLU classifier with per-sample cross-entropy and
//! hand-derived gradients.
//!
//! `H = relu(X·W1ᵀ + b1)·W2ᵀ + b2`, one row of logits per node.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{LdtsError, Result};
use crate::sampler::{RngState, SampleSet};

const CHECKPOINT_MAGIC: &[u8; 4] = b"LDTS";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// hidden × input
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// classes × hidden
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

/// Per-node logits, `n × classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits(pub Array2<f64>);

impl Logits {
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    /// Arg-max class per row; ties resolve to the lowest class index.
    pub fn predictions(&self) -> Vec<usize> {
        self.0
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

/// Uniform Glorot bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl ModelParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize, class_count: usize) -> Self {
        ModelParams {
            w1: Array2::zeros((hidden_dim, input_dim)),
            b1: Array1::zeros(hidden_dim),
            w2: Array2::zeros((class_count, hidden_dim)),
            b2: Array1::zeros(class_count),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn class_count(&self) -> usize {
        self.w2.nrows()
    }

    fn check_consistent(&self) -> Result<()> {
        if self.b1.len() != self.w1.nrows()
            || self.w2.ncols() != self.w1.nrows()
            || self.b2.len() != self.w2.nrows()
        {
            return Err(LdtsError::Shape(format!(
                "inconsistent parameter shapes: W1 {:?}, b1 {}, W2 {:?}, b2 {}",
                self.w1.dim(),
                self.b1.len(),
                self.w2.dim(),
                self.b2.len()
            )));
        }
        Ok(())
    }

    fn same_shape(&self, other: &ModelParams) -> bool {
        self.w1.dim() == other.w1.dim()
            && self.b1.len() == other.b1.len()
            && self.w2.dim() == other.w2.dim()
            && self.b2.len() == other.b2.len()
    }

    /// All parameters in checkpoint order (W1, b1, W2, b2; row-major).
    pub fn flat(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Mutable access to the parameter at `index` of [`ModelParams::flat`].
    pub fn flat_mut(&mut self, index: usize) -> &mut f64 {
        let mut i = index;
        for block in [
            self.w1.as_slice_mut(),
            self.b1.as_slice_mut(),
            self.w2.as_slice_mut(),
            self.b2.as_slice_mut(),
        ] {
            let block = block.expect("parameters are contiguous");
            if i < block.len() {
                return &mut block[i];
            }
            i -= block.len();
        }
        panic!("parameter index {index} out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &ModelParams) -> f64 {
        self.flat()
            .iter()
            .zip(other.flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        for dim in [
            self.w1.nrows(),
            self.w1.ncols(),
            self.w2.nrows(),
            self.w2.ncols(),
        ] {
            out.write_all(&(dim as u32).to_le_bytes())?;
        }
        for v in self.flat() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> std::result::Result<Self, String> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(|e| e.to_string())?;
        if &magic != CHECKPOINT_MAGIC {
            return Err("bad magic bytes".into());
        }
        let mut u32s = [0u32; 5];
        for v in &mut u32s {
            let mut buf = [0u8; 4];
            input.read_exact(&mut buf).map_err(|e| e.to_string())?;
            *v = u32::from_le_bytes(buf);
        }
        let [version, hidden, input_dim, classes, hidden2] = u32s.map(|v| v as usize);
        if version != CHECKPOINT_VERSION as usize {
            return Err(format!("unsupported checkpoint version {version}"));
        }
        if hidden != hidden2 {
            return Err(format!("W1 has {hidden} rows but W2 has {hidden2} columns"));
        }
        let mut params = ModelParams::zeros(input_dim, hidden, classes);
        for i in 0..params.parameter_count() {
            let mut buf = [0u8; 8];
            input
                .read_exact(&mut buf)
                .map_err(|_| "truncated parameter data".to_string())?;
            *params.flat_mut(i) = f64::from_le_bytes(buf);
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest).map_err(|e| e.to_string())? != 0 {
            return Err("trailing bytes after parameters".into());
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| LdtsError::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| LdtsError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| LdtsError::io(path, e))?;
        ModelParams::read_from(std::io::BufReader::new(file))
            .map_err(|msg| LdtsError::format(path, msg))
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(
    input_dim: usize,
    hidden_dim: usize,
    class_count: usize,
    rng: &mut RngState,
) -> Result<ModelParams> {
    if input_dim == 0 || hidden_dim == 0 || class_count == 0 {
        return Err(LdtsError::Argument(format!(
            "dimensions must be positive, got input={input_dim} hidden={hidden_dim} classes={class_count}"
        )));
    }
    let mut uniform = |rows: usize, cols: usize| {
        let a = glorot_bound(cols, rows);
        Array2::from_shape_simple_fn((rows, cols), || (2.0 * rng.random::<f64>() - 1.0) * a)
    };
    let w1 = uniform(hidden_dim, input_dim);
    let w2 = uniform(class_count, hidden_dim);
    Ok(ModelParams {
        w1,
        b1: Array1::zeros(hidden_dim),
        w2,
        b2: Array1::zeros(class_count),
    })
}

struct Activations {
    pre: Array2<f64>,
    hidden: Array2<f64>,
    logits: Array2<f64>,
}

fn forward_full(params: &ModelParams, x: ArrayView2<f64>) -> Result<Activations> {
    params.check_consistent()?;
    if x.ncols() != params.input_dim() {
        return Err(LdtsError::Shape(format!(
            "features have {} columns, model expects {}",
            x.ncols(),
            params.input_dim()
        )));
    }
    let pre = x.dot(&params.w1.t()) + &params.b1;
    let hidden = pre.mapv(|v| v.max(0.0));
    let logits = hidden.dot(&params.w2.t()) + &params.b2;
    Ok(Activations {
        pre,
        hidden,
        logits,
    })
}

pub fn forward(params: &ModelParams, x: ArrayView2<f64>) -> Result<Logits> {
    forward_full(params, x).map(|a| Logits(a.logits))
}

/// Cross-entropy of every row against its label, without reduction.
pub fn per_sample_loss(logits: &Logits, labels: &[usize]) -> Result<Vec<f64>> {
    let h = &logits.0;
    if h.nrows() != labels.len() {
        return Err(LdtsError::Shape(format!(
            "{} logit rows but {} labels",
            h.nrows(),
            labels.len()
        )));
    }
    let classes = h.ncols();
    h.rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &y)| {
            if y >= classes {
                return Err(LdtsError::Data(format!(
                    "label {y} out of range for {classes} classes"
                )));
            }
            // log-sum-exp as max + ln(1 + Σ_{j≠argmax} e^(h_j − max)), accurate for confident rows
            let mut arg = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[arg] {
                    arg = j;
                }
            }
            let max = row[arg];
            let rest: f64 = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != arg)
                .map(|(_, v)| (v - max).exp())
                .sum();
            Ok((max - row[y]) + rest.ln_1p())
        })
        .collect()
}

/// Gradient of the mean cross-entropy over the rows in `sample`.
///
/// Rows outside `sample` are never read, so they contribute nothing.
pub fn masked_backward(
    params: &ModelParams,
    x: ArrayView2<f64>,
    labels: &[usize],
    sample: &SampleSet,
) -> Result<Gradients> {
    if sample.is_empty() {
        return Err(LdtsError::Argument("empty sample".into()));
    }
    if x.nrows() != labels.len() {
        return Err(LdtsError::Shape(format!(
            "{} feature rows but {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    if let Some(&last) = sample.indices().last() {
        if last >= x.nrows() {
            return Err(LdtsError::Argument(format!(
                "sample index {last} out of range for {} rows",
                x.nrows()
            )));
        }
    }
    let xs = x.select(Axis(0), sample.indices());
    let ys: Vec<usize> = sample.indices().iter().map(|&i| labels[i]).collect();
    let act = forward_full(params, xs.view())?;
    let classes = params.class_count();
    let scale = 1.0 / sample.len() as f64;

    // dL/dlogits = (softmax − onehot) / |S|
    let mut delta_out = act.logits;
    for (mut row, &y) in delta_out.rows_mut().into_iter().zip(&ys) {
        if y >= classes {
            return Err(LdtsError::Data(format!(
                "label {y} out of range for {classes} classes"
            )));
        }
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum * scale);
        row[y] -= scale;
    }

    let grad_w2 = delta_out.t().dot(&act.hidden);
    let grad_b2 = delta_out.sum_axis(Axis(0));
    let mut delta_hidden = delta_out.dot(&params.w2);
    Zip::from(&mut delta_hidden)
        .and(&act.pre)
        .for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
    let grad_w1 = delta_hidden.t().dot(&xs);
    let grad_b1 = delta_hidden.sum_axis(Axis(0));

    Ok(ModelParams {
        w1: grad_w1,
        b1: grad_b1,
        w2: grad_w2,
        b2: grad_b2,
    })
}

/// `params − lr · grads`.
pub fn sgd_step(params: &ModelParams, grads: &Gradients, lr: f64) -> Result<ModelParams> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(LdtsError::Argument(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    if !params.same_shape(grads) {
        return Err(LdtsError::Shape(
            "gradient shape differs from parameters".into(),
        ));
    }
    if !grads.is_finite() {
        return Err(LdtsError::Numeric("non-finite gradient".into()));
    }
    Ok(ModelParams {
        w1: &params.w1 - &(lr * &grads.w1),
        b1: &params.b1 - &(lr * &grads.b1),
        w2: &params.w2 - &(lr * &grads.w2),
        b2: &params.b2 - &(lr * &grads.b2),
    })
}
