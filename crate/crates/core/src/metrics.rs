//! Partition-comparison scores between a predicted and a ground-truth map.
//! Every score is a percentage where 100 means identical partitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SegmentationMap;

/// Pixel counts of every (predicted class, ground-truth class) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    fn row_sums(&self) -> Vec<u64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).sum())
            .collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    fn transposed(&self) -> Self {
        let mut counts = vec![0; self.counts.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                counts[j * self.rows + i] = self.get(i, j);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            counts,
            total: self.total,
        }
    }
}

pub fn contingency(pred: &SegmentationMap, gt: &SegmentationMap) -> Result<ContingencyTable> {
    pred.labels().ensure_same_dims(gt.labels())?;
    let rows = pred.classes() as usize;
    let cols = gt.classes() as usize;
    let mut counts = vec![0u64; rows * cols];
    for (&p, &g) in pred.labels().as_slice().iter().zip(gt.labels().as_slice()) {
        counts[p as usize * cols + g as usize] += 1;
    }
    Ok(ContingencyTable {
        rows,
        cols,
        counts,
        total: pred.len() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub nvoi: f64,
    pub ssc: f64,
    pub sdhd: f64,
    pub vd: f64,
}

impl Scores {
    pub fn as_pairs(&self) -> [(&'static str, f64); 4] {
        [
            ("nvoi", self.nvoi),
            ("ssc", self.ssc),
            ("sdhd", self.sdhd),
            ("vd", self.vd),
        ]
    }

    pub fn min(&self) -> f64 {
        self.as_pairs()
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `sum over rows of the largest entry in the row`.
fn sum_row_max(t: &ContingencyTable) -> u64 {
    (0..t.rows)
        .map(|i| (0..t.cols).map(|j| t.get(i, j)).max().unwrap_or(0))
        .sum()
}

/// Van Dongen distance turned into a similarity.
pub fn van_dongen(t: &ContingencyTable) -> f64 {
    let n = t.total as f64;
    let d = 2.0 * n - sum_row_max(t) as f64 - sum_row_max(&t.transposed()) as f64;
    100.0 * (1.0 - d / (2.0 * n))
}

/// Covering of the row partition by the column partition.
fn covering(t: &ContingencyTable) -> f64 {
    let rows = t.row_sums();
    let cols = t.col_sums();
    let total: f64 = (0..t.rows)
        .map(|i| {
            let best = (0..t.cols)
                .filter(|&j| t.get(i, j) > 0)
                .map(|j| {
                    let inter = t.get(i, j) as f64;
                    inter / (rows[i] as f64 + cols[j] as f64 - inter)
                })
                .fold(0.0, f64::max);
            rows[i] as f64 * best
        })
        .sum();
    total / t.total as f64
}

/// Segmentation covering, the smaller of both directions.
pub fn swapped_covering(t: &ContingencyTable) -> f64 {
    100.0 * covering(t).min(covering(&t.transposed()))
}

/// Directional Hamming distance from the row partition to the column one:
/// pixels of each column region lying outside its best-overlapping row region.
fn directional_hamming(t: &ContingencyTable) -> u64 {
    t.total - sum_row_max(&t.transposed())
}

pub fn swapped_hamming(t: &ContingencyTable) -> f64 {
    let d = directional_hamming(t).min(directional_hamming(&t.transposed()));
    100.0 * (1.0 - d as f64 / t.total as f64)
}

/// Variation of information in nats.
pub fn variation_of_information(t: &ContingencyTable) -> f64 {
    let n = t.total as f64;
    let rows = t.row_sums();
    let cols = t.col_sums();
    let mut vi = 0.0;
    for i in 0..t.rows {
        for j in 0..t.cols {
            let c = t.get(i, j);
            if c == 0 {
                continue;
            }
            let p = c as f64 / n;
            vi -= p * ((c as f64 / rows[i] as f64).ln() + (c as f64 / cols[j] as f64).ln());
        }
    }
    vi.max(0.0)
}

/// `100 (1 - VI / ln Np)`, clamped to `[0, 100]`.
pub fn normalized_voi(t: &ContingencyTable) -> f64 {
    if t.total <= 1 {
        return 100.0;
    }
    let v = 100.0 * (1.0 - variation_of_information(t) / (t.total as f64).ln());
    v.clamp(0.0, 100.0)
}

pub fn score(pred: &SegmentationMap, gt: &SegmentationMap) -> Result<Scores> {
    let t = contingency(pred, gt)?;
    if t.total == 0 {
        return Err(Error::invalid("cannot score empty maps"));
    }
    Ok(Scores {
        nvoi: normalized_voi(&t),
        ssc: swapped_covering(&t),
        sdhd: swapped_hamming(&t),
        vd: van_dongen(&t),
    })
}
