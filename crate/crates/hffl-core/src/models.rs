//! From-scratch model family over flat parameter vectors.
//!
//! Two architectures are shipped: logistic regression (a single linear
//! layer; binary problems use one sigmoid output, multiclass uses softmax)
//! and MLPs with relu or tanh hidden layers. Parameters live in one flat
//! `f64` vector, laid out layer by layer as a row-major weight matrix
//! followed by its bias vector, so the federation engine can exchange and
//! average models without knowing anything about their structure.
//!
//! The loss is mean cross-entropy with logits clamped to ±30, which makes
//! the per-example loss bounded; [`ArchSpec::loss_range`] reports the exact
//! `[a, b]` interval an architecture can produce, which is what the bounds
//! module consumes. Clamped coordinates propagate zero gradient.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Logit magnitude above which the loss saturates.
pub const LOGIT_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    Logistic,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed in terms of the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Architecture descriptor: layer sizes from input to output plus the
/// hidden activation and the number of classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    kind: ArchKind,
    layer_sizes: Vec<usize>,
    activation: Activation,
    class_count: usize,
}

impl ArchSpec {
    /// Logistic regression over `input_dim` features. Binary problems get a
    /// single sigmoid output; `class_count > 2` gets one softmax output per
    /// class.
    pub fn logistic(input_dim: usize, class_count: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        if class_count < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {class_count}"
            )));
        }
        let out = if class_count == 2 { 1 } else { class_count };
        Ok(Self {
            kind: ArchKind::Logistic,
            layer_sizes: vec![input_dim, out],
            activation: Activation::Relu,
            class_count,
        })
    }

    /// MLP with at least one hidden layer; the output layer has one unit
    /// per class.
    pub fn mlp(
        input_dim: usize,
        hidden: &[usize],
        class_count: usize,
        activation: Activation,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        if class_count < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {class_count}"
            )));
        }
        if hidden.is_empty() {
            return Err(Error::Config("mlp needs at least one hidden layer".into()));
        }
        if hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input_dim);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(class_count);
        Ok(Self {
            kind: ArchKind::Mlp,
            layer_sizes,
            activation,
            class_count,
        })
    }

    pub fn kind(&self) -> ArchKind {
        self.kind
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// True for the single-output sigmoid form used on binary problems.
    pub fn is_binary_sigmoid(&self) -> bool {
        self.output_dim() == 1
    }

    /// Exact parameter count: `Σ (fan_in + 1) · fan_out` over layers.
    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    /// `(offset_weights, offset_biases, fan_in, fan_out)` per layer.
    fn layout(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.layer_sizes.len() - 1);
        let mut off = 0;
        for w in self.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            out.push((off, off + fan_in * fan_out, fan_in, fan_out));
            off += (fan_in + 1) * fan_out;
        }
        out
    }

    /// The exact `[a, b]` range of the clamped per-example cross-entropy.
    ///
    /// The sigmoid form tops out at `ln(1 + e^30)`, a hair above 30. The
    /// softmax form can reach `30 + ln(e^-30 + (K-1)·e^30)`, roughly
    /// `60 + ln(K-1)`: the true-class logit saturates low while the others
    /// saturate high.
    pub fn loss_range(&self) -> (f64, f64) {
        let b = if self.is_binary_sigmoid() {
            LOGIT_CLAMP.exp().ln_1p()
        } else {
            let k = self.output_dim() as f64;
            LOGIT_CLAMP + ((-LOGIT_CLAMP).exp() + (k - 1.0) * LOGIT_CLAMP.exp()).ln()
        };
        (0.0, b)
    }

    /// Short report label, e.g. `logistic`, `mlp(16)`, `mlp(64-32,tanh)`.
    pub fn label(&self) -> String {
        match self.kind {
            ArchKind::Logistic => "logistic".to_string(),
            ArchKind::Mlp => {
                let hidden: Vec<String> = self.layer_sizes[1..self.layer_sizes.len() - 1]
                    .iter()
                    .map(|h| h.to_string())
                    .collect();
                match self.activation {
                    Activation::Relu => format!("mlp({})", hidden.join("-")),
                    Activation::Tanh => format!("mlp({},tanh)", hidden.join("-")),
                }
            }
        }
    }
}

/// A model's parameters: one flat vector tied to its architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    arch: ArchSpec,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(arch: ArchSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(Error::Shape(format!(
                "architecture {} expects {} parameters, got {}",
                arch.label(),
                arch.param_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite parameter value".into()));
        }
        Ok(Self { arch, values })
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draws initial parameters: weights uniform in `±1/√fan_in`, biases zero.
pub fn init_params(arch: &ArchSpec, seed: u64) -> ParamVector {
    let mut rng = rng_from(seed);
    let mut values = vec![0.0; arch.param_count()];
    for (w_off, b_off, fan_in, fan_out) in arch.layout() {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for v in &mut values[w_off..w_off + fan_in * fan_out] {
            let u: f64 = rng.random();
            *v = bound * (2.0 * u - 1.0);
        }
        // biases stay zero
        let _ = b_off;
    }
    ParamVector { arch: arch.clone(), values }
}

/// Reusable per-example forward/backward buffers.
struct Scratch {
    /// acts[0] is the input; acts[l+1] the output of layer l (raw logits
    /// for the last layer).
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Scratch {
    fn new(arch: &ArchSpec) -> Self {
        let acts = arch.layer_sizes().iter().map(|&n| vec![0.0; n]).collect();
        let widest = *arch.layer_sizes().iter().max().unwrap();
        Self {
            acts,
            delta: vec![0.0; widest],
            delta_prev: vec![0.0; widest],
        }
    }

    fn forward(&mut self, arch: &ArchSpec, values: &[f64], x: &[f64]) {
        self.acts[0].copy_from_slice(x);
        let layout = arch.layout();
        let last = layout.len() - 1;
        for (l, (w_off, b_off, fan_in, fan_out)) in layout.into_iter().enumerate() {
            let (before, after) = self.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            for o in 0..fan_out {
                let row = &values[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                let mut z = values[b_off + o];
                for i in 0..fan_in {
                    z += row[i] * input[i];
                }
                out[o] = if l == last { z } else { arch.activation().apply(z) };
            }
        }
    }

    fn logits(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

/// Per-example loss and logit gradient for the clamped cross-entropy.
/// Returns the loss; writes dL/dlogit into `dlogits`.
fn loss_and_dlogits(logits: &[f64], label: u32, dlogits: &mut [f64]) -> f64 {
    if logits.len() == 1 {
        let raw = logits[0];
        let clamped = raw.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
        let y = label as f64;
        let loss = clamped.max(0.0) - clamped * y + (-clamped.abs()).exp().ln_1p();
        let sigma = 1.0 / (1.0 + (-clamped).exp());
        dlogits[0] = if raw.abs() > LOGIT_CLAMP { 0.0 } else { sigma - y };
        loss
    } else {
        let mut max = f64::NEG_INFINITY;
        for (d, &raw) in dlogits.iter_mut().zip(logits) {
            let clamped = raw.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
            *d = clamped; // stash clamped logits
            max = max.max(clamped);
        }
        let mut sum = 0.0;
        for &z in dlogits.iter() {
            sum += (z - max).exp();
        }
        let lse = max + sum.ln();
        let loss = lse - dlogits[label as usize];
        for (k, d) in dlogits.iter_mut().enumerate() {
            let p = (*d - lse).exp();
            let target = if k == label as usize { 1.0 } else { 0.0 };
            *d = if logits[k].abs() > LOGIT_CLAMP { 0.0 } else { p - target };
        }
        loss
    }
}

fn check_dims(arch: &ArchSpec, data: &Dataset) -> Result<()> {
    if arch.input_dim() != data.n_features() {
        return Err(Error::Shape(format!(
            "architecture expects {} features, dataset `{}` has {}",
            arch.input_dim(),
            data.name(),
            data.n_features()
        )));
    }
    Ok(())
}

fn check_indices(data: &Dataset, indices: &[usize]) -> Result<()> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= data.len()) {
        return Err(Error::Shape(format!(
            "index {bad} out of range for dataset `{}` of {} examples",
            data.name(),
            data.len()
        )));
    }
    Ok(())
}

fn check_labels(arch: &ArchSpec, data: &Dataset, indices: &[usize]) -> Result<()> {
    check_indices(data, indices)?;
    for &i in indices {
        if data.label(i) as usize >= arch.class_count() {
            return Err(Error::Shape(format!(
                "label {} outside the architecture's {} classes",
                data.label(i),
                arch.class_count()
            )));
        }
    }
    Ok(())
}

fn loss_and_grad_impl(
    arch: &ArchSpec,
    values: &[f64],
    data: &Dataset,
    indices: &[usize],
    grad: Option<&mut Vec<f64>>,
) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::EmptyBatch);
    }
    check_dims(arch, data)?;
    check_labels(arch, data, indices)?;

    let layout = arch.layout();
    let mut scratch = Scratch::new(arch);
    let mut loss_sum = 0.0;
    let mut grad_buf = grad;
    if let Some(g) = grad_buf.as_deref_mut() {
        g.clear();
        g.resize(values.len(), 0.0);
    }

    let out_dim = arch.output_dim();
    for &idx in indices {
        scratch.forward(arch, values, data.row(idx));
        // Disjoint field borrows: logits live in acts, dlogits in delta.
        let loss = loss_and_dlogits(
            scratch.acts.last().unwrap(),
            data.label(idx),
            &mut scratch.delta[..out_dim],
        );
        loss_sum += loss;

        if let Some(g) = grad_buf.as_deref_mut() {
            // Backward pass, output layer down to the input layer.
            for (l, &(w_off, b_off, fan_in, fan_out)) in layout.iter().enumerate().rev() {
                // Split borrows: delta for this layer lives in scratch.delta.
                for o in 0..fan_out {
                    let d = scratch.delta[o];
                    if d != 0.0 {
                        let a_prev = &scratch.acts[l];
                        let g_row = &mut g[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                        for i in 0..fan_in {
                            g_row[i] += d * a_prev[i];
                        }
                    }
                    g[b_off + o] += d;
                }
                if l > 0 {
                    for i in 0..fan_in {
                        let mut s = 0.0;
                        for o in 0..fan_out {
                            s += values[w_off + o * fan_in + i] * scratch.delta[o];
                        }
                        let a = scratch.acts[l][i];
                        scratch.delta_prev[i] = s * arch.activation().derivative_from_output(a);
                    }
                    scratch.delta[..fan_in].copy_from_slice(&scratch.delta_prev[..fan_in]);
                }
            }
        }
    }

    let n = indices.len() as f64;
    if let Some(g) = grad_buf.as_deref_mut() {
        for v in g.iter_mut() {
            *v /= n;
        }
    }
    Ok(loss_sum / n)
}

/// Mean clamped cross-entropy and its gradient over the batch.
pub fn loss_and_grad(
    p: &ParamVector,
    data: &Dataset,
    indices: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let mut grad = Vec::new();
    let loss = loss_and_grad_impl(&p.arch, &p.values, data, indices, Some(&mut grad))?;
    Ok((loss, grad))
}

/// Mean clamped cross-entropy over the batch, without the gradient.
pub fn mean_loss(p: &ParamVector, data: &Dataset, indices: &[usize]) -> Result<f64> {
    loss_and_grad_impl(&p.arch, &p.values, data, indices, None)
}

fn predict_into(arch: &ArchSpec, scratch: &mut Scratch, values: &[f64], x: &[f64]) -> u32 {
    scratch.forward(arch, values, x);
    let logits = scratch.logits();
    if logits.len() == 1 {
        // Sigmoid form: positive logit means class 1; the 0.5 tie goes to
        // class 0 (lowest class id).
        u32::from(logits[0] > 0.0)
    } else {
        let mut best = 0;
        for (k, &z) in logits.iter().enumerate().skip(1) {
            if z > logits[best] {
                best = k;
            }
        }
        best as u32
    }
}

/// Test accuracy in `[0, 1]`: fraction of argmax-correct predictions, ties
/// broken toward the lowest class id.
pub fn score(p: &ParamVector, test: &Dataset) -> Result<f64> {
    let indices: Vec<usize> = (0..test.len()).collect();
    accuracy_on(p, test, &indices)
}

/// Accuracy restricted to the given rows.
pub fn accuracy_on(p: &ParamVector, data: &Dataset, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::EmptyBatch);
    }
    check_dims(&p.arch, data)?;
    check_indices(data, indices)?;
    let mut scratch = Scratch::new(&p.arch);
    let mut correct = 0usize;
    for &i in indices {
        if predict_into(&p.arch, &mut scratch, &p.values, data.row(i)) == data.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer state: first and second moment vectors plus step count.
/// Each worker owns its state; states are never shared or federated.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
    pub config: AdamConfig,
}

impl OptState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step: 0,
            config,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update applied in place.
    fn apply(&mut self, values: &mut [f64], grad: &[f64]) {
        let c = self.config;
        self.step += 1;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for i in 0..values.len() {
            let g = grad[i];
            let m = c.beta1 * self.first_moment[i] + (1.0 - c.beta1) * g;
            let v = c.beta2 * self.second_moment[i] + (1.0 - c.beta2) * g * g;
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            let m_hat = m / bc1;
            let v_hat = v / bc2;
            values[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
    }
}

/// One Adam step as a pure function: returns the updated parameters and
/// optimizer state, leaving the inputs untouched.
pub fn adam_step(
    p: &ParamVector,
    grad: &[f64],
    state: &OptState,
) -> Result<(ParamVector, OptState)> {
    if grad.len() != p.values.len() || state.first_moment.len() != p.values.len() {
        return Err(Error::Shape(format!(
            "adam step: {} parameters, {} gradient entries, {} moment entries",
            p.values.len(),
            grad.len(),
            state.first_moment.len()
        )));
    }
    let mut next = p.clone();
    let mut st = state.clone();
    st.apply(&mut next.values, grad);
    Ok((next, st))
}

/// How local training consumes a batch of examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSpec {
    /// One gradient step per epoch over the entire batch, in the order the
    /// indices were given (no shuffling), so a single epoch is literally
    /// `w − η∇ℓ(w; S)` in plain-SGD mode.
    Full,
    /// Shuffled mini-batches of the given size, reshuffled every epoch.
    Size(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Adam(AdamConfig),
    Sgd { learning_rate: f64 },
}

/// Local training configuration shared by agents, baselines, and the
/// generalization-gap checker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub solver: Solver,
    pub epochs: usize,
    pub batch: BatchSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            solver: Solver::Adam(AdamConfig::default()),
            epochs: 1,
            batch: BatchSpec::Size(32),
        }
    }
}

impl TrainConfig {
    /// The literal one-full-batch-gradient-step configuration.
    pub fn literal_sgd(learning_rate: f64) -> Self {
        Self {
            solver: Solver::Sgd { learning_rate },
            epochs: 1,
            batch: BatchSpec::Full,
        }
    }
}

/// Trains `start` on the given rows for `cfg.epochs` passes and returns the
/// updated parameters. Optimizer state is created fresh inside this call.
pub fn fit(
    start: &ParamVector,
    data: &Dataset,
    indices: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<ParamVector> {
    if indices.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let BatchSpec::Size(0) = cfg.batch {
        return Err(Error::Config("mini-batch size must be positive".into()));
    }
    check_dims(&start.arch, data)?;
    check_labels(&start.arch, data, indices)?;

    let mut values = start.values.clone();
    let mut adam = match cfg.solver {
        Solver::Adam(c) => Some(OptState::new(values.len(), c)),
        Solver::Sgd { .. } => None,
    };
    let mut grad = Vec::new();
    let mut order = indices.to_vec();
    let mut rng = rng_from(seed);

    for _ in 0..cfg.epochs {
        match cfg.batch {
            BatchSpec::Full => {
                loss_and_grad_impl(&start.arch, &values, data, indices, Some(&mut grad))?;
                apply_update(&mut values, &grad, &cfg.solver, adam.as_mut());
            }
            BatchSpec::Size(b) => {
                order.shuffle(&mut rng);
                for chunk in order.chunks(b) {
                    loss_and_grad_impl(&start.arch, &values, data, chunk, Some(&mut grad))?;
                    apply_update(&mut values, &grad, &cfg.solver, adam.as_mut());
                }
            }
        }
    }
    ParamVector::new(start.arch.clone(), values)
}

fn apply_update(values: &mut [f64], grad: &[f64], solver: &Solver, adam: Option<&mut OptState>) {
    match solver {
        Solver::Adam(_) => adam.expect("adam state").apply(values, grad),
        Solver::Sgd { learning_rate } => {
            for (v, g) in values.iter_mut().zip(grad) {
                *v -= learning_rate * g;
            }
        }
    }
}

/// Dataset profiles with their customary Adam learning rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataProfile {
    Census,
    Digits,
    Fashion,
    Text,
    Synthetic,
}

/// Default Adam learning rate for a dataset profile.
pub fn default_learning_rate(profile: DataProfile) -> f64 {
    match profile {
        DataProfile::Census | DataProfile::Digits | DataProfile::Synthetic => 0.01,
        DataProfile::Fashion => 0.003,
        DataProfile::Text => 0.001,
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"HFFLCKP1";

/// Writes a self-describing checkpoint: architecture descriptor followed by
/// the little-endian `f64` parameter array. Round-trips bit-exactly.
pub fn save_checkpoint(p: &ParamVector, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&[match p.arch.kind {
        ArchKind::Logistic => 0u8,
        ArchKind::Mlp => 1u8,
    }])?;
    w.write_all(&[match p.arch.activation {
        Activation::Relu => 0u8,
        Activation::Tanh => 1u8,
    }])?;
    w.write_all(&(p.arch.class_count as u32).to_le_bytes())?;
    w.write_all(&(p.arch.layer_sizes.len() as u32).to_le_bytes())?;
    for &s in &p.arch.layer_sizes {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    w.write_all(&(p.values.len() as u64).to_le_bytes())?;
    for &v in &p.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn ckpt_error(path: &Path, field: &'static str, detail: String) -> Error {
    Error::Format {
        path: path.display().to_string(),
        field,
        detail,
    }
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<ParamVector> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| ckpt_error(path, "magic", "file too short".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(ckpt_error(path, "magic", format!("unexpected header {magic:?}")));
    }
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    let kind = match byte[0] {
        0 => ArchKind::Logistic,
        1 => ArchKind::Mlp,
        other => return Err(ckpt_error(path, "kind", format!("unknown kind {other}"))),
    };
    r.read_exact(&mut byte)?;
    let activation = match byte[0] {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        other => {
            return Err(ckpt_error(path, "activation", format!("unknown activation {other}")))
        }
    };
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let class_count = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let n_sizes = u32::from_le_bytes(u32buf) as usize;
    if n_sizes < 2 || n_sizes > 64 {
        return Err(ckpt_error(path, "layers", format!("implausible layer count {n_sizes}")));
    }
    let mut layer_sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        r.read_exact(&mut u32buf)?;
        layer_sizes.push(u32::from_le_bytes(u32buf) as usize);
    }
    let arch = ArchSpec {
        kind,
        layer_sizes,
        activation,
        class_count,
    };
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let len = u64::from_le_bytes(u64buf) as usize;
    if len != arch.param_count() {
        return Err(ckpt_error(
            path,
            "values",
            format!("{} values stored, architecture expects {}", len, arch.param_count()),
        ));
    }
    let mut values = Vec::with_capacity(len);
    let mut f64buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut f64buf)
            .map_err(|_| ckpt_error(path, "values", "file truncated".into()))?;
        values.push(f64::from_le_bytes(f64buf));
    }
    ParamVector::new(arch, values)
}
