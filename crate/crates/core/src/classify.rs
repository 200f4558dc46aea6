//! Shallow pixelwise classifier over texture features, the Adam optimizer
//! that trains it, and small-region refinement of the predicted map.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::components::{label_components, neighbours4};
use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::grid::{Grid, SegmentationMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    /// Multinomial logistic regression.
    SoftmaxLinear,
    /// One tanh hidden layer.
    Mlp { hidden: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub architecture: Architecture,
    pub input_dim: usize,
    pub classes: usize,
    /// Flat parameters. Softmax: `W (K x C)`, `b (C)`. MLP: `W1 (K x H)`,
    /// `b1 (H)`, `W2 (H x C)`, `b2 (C)`. Matrices are row-major.
    pub params: Vec<f64>,
}

fn param_count(arch: Architecture, k: usize, c: usize) -> usize {
    match arch {
        Architecture::SoftmaxLinear => k * c + c,
        Architecture::Mlp { hidden } => k * hidden + hidden + hidden * c + c,
    }
}

impl ClassifierModel {
    /// Glorot-uniform weights and zero biases from a seeded stream.
    pub fn initialize(
        arch: Architecture,
        input_dim: usize,
        classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid(
                "classifier needs at least one input feature",
            ));
        }
        if classes < 2 {
            return Err(Error::invalid("classifier needs at least 2 classes"));
        }
        if let Architecture::Mlp { hidden: 0 } = arch {
            return Err(Error::invalid("hidden layer must have at least one unit"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(arch, input_dim, classes));
        let mut layer = |params: &mut Vec<f64>, fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        };
        match arch {
            Architecture::SoftmaxLinear => layer(&mut params, input_dim, classes),
            Architecture::Mlp { hidden } => {
                layer(&mut params, input_dim, hidden);
                layer(&mut params, hidden, classes);
            }
        }
        Ok(Self {
            architecture: arch,
            input_dim,
            classes,
            params,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let expected = param_count(self.architecture, self.input_dim, self.classes);
        if self.params.len() != expected {
            return Err(Error::dims(
                format!("{expected} parameters"),
                format!("{} parameters", self.params.len()),
            ));
        }
        if self.classes < 2 {
            return Err(Error::invalid("classifier needs at least 2 classes"));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("classifier parameters"));
        }
        Ok(())
    }

    /// Class scores (logits) for one feature vector.
    pub fn scores(&self, x: &[f64], out: &mut [f64]) {
        let (k, c) = (self.input_dim, self.classes);
        match self.architecture {
            Architecture::SoftmaxLinear => {
                affine(x, &self.params[..k * c], &self.params[k * c..], c, out)
            }
            Architecture::Mlp { hidden } => {
                let (w1, rest) = self.params.split_at(k * hidden);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(hidden * c);
                let mut h = vec![0.0; hidden];
                affine(x, w1, b1, hidden, &mut h);
                h.iter_mut().for_each(|v| *v = v.tanh());
                affine(&h, w2, b2, c, out);
            }
        }
    }

    /// Mean cross-entropy over `labels.len()` rows of `xs` and its gradient.
    pub fn loss_and_gradient(&self, xs: &[f64], labels: &[u32]) -> (f64, Vec<f64>) {
        let (k, c) = (self.input_dim, self.classes);
        let n = labels.len();
        let inv_n = 1.0 / n as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut z = vec![0.0; c];
        match self.architecture {
            Architecture::SoftmaxLinear => {
                let (gw, gb) = grad.split_at_mut(k * c);
                for (x, &y) in xs.chunks(k).zip(labels) {
                    self.scores(x, &mut z);
                    loss += softmax_in_place(&mut z, y as usize);
                    z[y as usize] -= 1.0;
                    for (i, &xi) in x.iter().enumerate() {
                        for (j, &dz) in z.iter().enumerate() {
                            gw[i * c + j] += xi * dz * inv_n;
                        }
                    }
                    for (g, &dz) in gb.iter_mut().zip(&z) {
                        *g += dz * inv_n;
                    }
                }
            }
            Architecture::Mlp { hidden } => {
                let (w1, rest) = self.params.split_at(k * hidden);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(hidden * c);
                let (gw1, grest) = grad.split_at_mut(k * hidden);
                let (gb1, grest) = grest.split_at_mut(hidden);
                let (gw2, gb2) = grest.split_at_mut(hidden * c);
                let mut h = vec![0.0; hidden];
                let mut dh = vec![0.0; hidden];
                for (x, &y) in xs.chunks(k).zip(labels) {
                    affine(x, w1, b1, hidden, &mut h);
                    h.iter_mut().for_each(|v| *v = v.tanh());
                    affine(&h, w2, b2, c, &mut z);
                    loss += softmax_in_place(&mut z, y as usize);
                    z[y as usize] -= 1.0;
                    for (u, &hu) in h.iter().enumerate() {
                        let mut acc = 0.0;
                        for (j, &dz) in z.iter().enumerate() {
                            gw2[u * c + j] += hu * dz * inv_n;
                            acc += w2[u * c + j] * dz;
                        }
                        dh[u] = acc * (1.0 - hu * hu);
                    }
                    for (g, &dz) in gb2.iter_mut().zip(&z) {
                        *g += dz * inv_n;
                    }
                    for (i, &xi) in x.iter().enumerate() {
                        for (u, &da) in dh.iter().enumerate() {
                            gw1[i * hidden + u] += xi * da * inv_n;
                        }
                    }
                    for (g, &da) in gb1.iter_mut().zip(&dh) {
                        *g += da * inv_n;
                    }
                }
            }
        }
        (loss * inv_n, grad)
    }

    pub fn loss(&self, xs: &[f64], labels: &[u32]) -> f64 {
        let mut z = vec![0.0; self.classes];
        let total: f64 = xs
            .chunks(self.input_dim)
            .zip(labels)
            .map(|(x, &y)| {
                self.scores(x, &mut z);
                softmax_in_place(&mut z, y as usize)
            })
            .sum();
        total / labels.len() as f64
    }
}

fn affine(x: &[f64], w: &[f64], b: &[f64], out_dim: usize, out: &mut [f64]) {
    out.copy_from_slice(b);
    for (i, &xi) in x.iter().enumerate() {
        let row = &w[i * out_dim..(i + 1) * out_dim];
        for (o, &wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
}

/// Replaces logits by probabilities and returns `-ln p[target]`.
fn softmax_in_place(z: &mut [f64], target: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    let log_p = (z[target]).ln() - sum.ln();
    z.iter_mut().for_each(|v| *v /= sum);
    -log_p
}

/// First index of the largest score.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    /// Rows per step; 0 means full batch.
    pub batch_size: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            beta1: 0.95,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            epochs: 50,
            batch_size: 256,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.weight_decay >= 0.0 && self.adam_epsilon > 0.0) {
            return Err(Error::invalid(
                "weight_decay must be >= 0 and adam_epsilon > 0",
            ));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One Adam update with bias correction. Weight decay is decoupled: the
/// parameters shrink by `1 - lr * weight_decay` before the moment step.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || params.len() != state.v.len()
    {
        return Err(Error::dims(params.len(), grads.len()));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        *p *= decay;
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean training loss over all rows after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Classes with no training pixel.
    pub missing_classes: Vec<u32>,
}

/// Minimizes mean pixel cross-entropy with mini-batch Adam. Deterministic for
/// a given `cfg.rng_seed`, which seeds both initialization and shuffling.
pub fn train(
    samples: &[(&FeatureTensor, &SegmentationMap)],
    architecture: Architecture,
    classes: usize,
    cfg: &TrainConfig,
) -> Result<(ClassifierModel, TrainReport)> {
    cfg.validate()?;
    let (first, _) = samples
        .first()
        .ok_or_else(|| Error::invalid("no training samples"))?;
    let k = first.k();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (f, m) in samples {
        if f.k() != k {
            return Err(Error::dims(
                format!("{k} features"),
                format!("{} features", f.k()),
            ));
        }
        if (f.width(), f.height()) != (m.width(), m.height()) {
            return Err(Error::dims(
                format!("{}x{}", f.width(), f.height()),
                format!("{}x{}", m.width(), m.height()),
            ));
        }
        if let Some(&bad) = m
            .labels()
            .as_slice()
            .iter()
            .find(|&&l| l as usize >= classes)
        {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        xs.extend_from_slice(f.as_slice());
        ys.extend_from_slice(m.labels().as_slice());
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features"));
    }

    let mut present = vec![false; classes];
    ys.iter().for_each(|&y| present[y as usize] = true);
    let missing_classes: Vec<u32> = (0..classes as u32)
        .filter(|&c| !present[c as usize])
        .collect();
    if !missing_classes.is_empty() {
        log::warn!("classes {missing_classes:?} have no training pixels");
    }

    let mut model = ClassifierModel::initialize(architecture, k, classes, cfg.rng_seed)?;
    let mut state = AdamState::new(model.params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x05ee_d0fb_a7c4);
    let n = ys.len();
    let batch = if cfg.batch_size == 0 {
        n
    } else {
        cfg.batch_size.min(n)
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut bx = Vec::with_capacity(batch * k);
    let mut by = Vec::with_capacity(batch);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        if batch == n {
            let (_, grad) = model.loss_and_gradient(&xs, &ys);
            adam_step(&mut model.params, &grad, &mut state, cfg)?;
        } else {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                bx.clear();
                by.clear();
                for &i in chunk {
                    bx.extend_from_slice(&xs[i * k..(i + 1) * k]);
                    by.push(ys[i]);
                }
                let (_, grad) = model.loss_and_gradient(&bx, &by);
                adam_step(&mut model.params, &grad, &mut state, cfg)?;
            }
        }
        epoch_losses.push(model.loss(&xs, &ys));
    }
    model.validate()?;
    Ok((
        model,
        TrainReport {
            epoch_losses,
            missing_classes,
        },
    ))
}

/// Per-pixel argmax of the class scores; ties go to the lower class index.
pub fn predict(features: &FeatureTensor, model: &ClassifierModel) -> Result<SegmentationMap> {
    if features.k() != model.input_dim {
        return Err(Error::dims(
            format!("{} features", model.input_dim),
            format!("{} features", features.k()),
        ));
    }
    let mut z = vec![0.0; model.classes];
    let labels = features
        .as_slice()
        .chunks(model.input_dim)
        .map(|x| {
            model.scores(x, &mut z);
            argmax(&z) as u32
        })
        .collect();
    SegmentationMap::new(
        Grid::from_vec(features.width(), features.height(), labels)?,
        model.classes as u32,
    )
}

/// Default minimum region size as a fraction of the image.
pub const DEFAULT_REFINE_FRACTION: f64 = 0.005;

/// Absorbs every 4-connected region smaller than `min_fraction` of the image
/// into its largest adjacent region, smallest regions first, until none is left.
pub fn refine(map: &SegmentationMap, min_fraction: f64) -> Result<SegmentationMap> {
    if !(0.0..1.0).contains(&min_fraction) {
        return Err(Error::invalid(format!(
            "refine fraction {min_fraction} must lie in [0, 1)"
        )));
    }
    let min_size = min_fraction * map.len() as f64;
    let mut labels = map.labels().clone();
    loop {
        let comps = label_components(&labels);
        if !comps.sizes.iter().any(|&s| (s as f64) < min_size) {
            break;
        }
        let merged = absorb_small(&labels, &comps, min_size);
        labels = merged;
    }
    SegmentationMap::new(labels, map.classes())
}

fn absorb_small(
    labels: &Grid<u32>,
    comps: &crate::components::Components,
    min_size: f64,
) -> Grid<u32> {
    let (w, h) = labels.dims();
    let count = comps.count();
    let ids = comps.ids.as_slice();

    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); count];
    for y in 0..h {
        for x in 0..w {
            let a = ids[y * w + x] as usize;
            for (nx, ny) in neighbours4(x, y, w, h) {
                let b = ids[ny * w + nx] as usize;
                if a != b {
                    adjacency[a].insert(b);
                }
            }
        }
    }

    let mut parent: Vec<usize> = (0..count).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut size = comps.sizes.clone();
    let mut class = comps.classes.clone();

    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..count)
        .filter(|&c| (size[c] as f64) < min_size)
        .map(|c| Reverse((size[c], c)))
        .collect();

    while let Some(Reverse((s, c))) = heap.pop() {
        if root(&mut parent, c) != c || size[c] != s || (s as f64) >= min_size {
            continue;
        }
        let mut neighbours: Vec<usize> = adjacency[c]
            .iter()
            .map(|&n| root(&mut parent, n))
            .filter(|&n| n != c)
            .collect();
        neighbours.sort_unstable();
        neighbours.dedup();
        let Some(&target) = neighbours
            .iter()
            .max_by(|&&a, &&b| size[a].cmp(&size[b]).then(b.cmp(&a)))
        else {
            continue;
        };
        // c takes target's class; any other neighbour of that class now touches
        // target through c and joins it as well
        let absorbed: Vec<usize> = std::iter::once(c)
            .chain(
                neighbours
                    .iter()
                    .copied()
                    .filter(|&n| n != target && class[n] == class[target]),
            )
            .collect();
        for a in absorbed {
            parent[a] = target;
            size[target] += size[a];
            let adj = std::mem::take(&mut adjacency[a]);
            adjacency[target].extend(adj);
        }
        class[c] = class[target];
        if (size[target] as f64) < min_size {
            heap.push(Reverse((size[target], target)));
        }
    }

    let out: Vec<u32> = ids
        .iter()
        .map(|&id| class[root(&mut parent, id as usize)])
        .collect();
    Grid::from_vec(w, h, out).expect("same dimensions")
}
