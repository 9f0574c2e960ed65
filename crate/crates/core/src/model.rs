//! Domain types shared by every learner and the deterministic top-m
//! label-set prediction.
//!
//! Labels are stored 0-based but every public constructor, `Display`
//! implementation and log uses the 1-based numbering `1..=k`.

use std::fmt;

use crate::error::{Error, Result};

/// A class label. Stored as a 0-based index, displayed 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(usize);

impl Label {
    /// Builds a label from its 1-based number.
    pub fn new(number: usize) -> Result<Self> {
        if number == 0 {
            return Err(Error::InvalidArgument("labels are numbered from 1".into()));
        }
        Ok(Label(number - 1))
    }

    pub const fn from_index(index: usize) -> Self {
        Label(index)
    }

    /// 0-based storage index.
    pub const fn index(self) -> usize {
        self.0
    }

    /// 1-based label number.
    pub const fn number(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

fn check_subset_size(m: usize, k: usize) -> Result<()> {
    if m == 0 || m >= k {
        return Err(Error::InvalidParameter(format!(
            "subset size m = {m} must satisfy 1 <= m < k = {k}"
        )));
    }
    Ok(())
}

/// Ordered tuple of `m` distinct labels out of `k`.
///
/// Membership is a set test; the order is kept because the superarm
/// probability is a product of sequential conditionals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelSet {
    members: Vec<Label>,
    k: usize,
}

impl LabelSet {
    pub fn new(members: Vec<Label>, k: usize) -> Result<Self> {
        check_subset_size(members.len(), k)?;
        let mut seen = vec![false; k];
        for label in &members {
            if label.index() >= k {
                return Err(Error::InvalidArgument(format!(
                    "label {label} out of range 1..={k}"
                )));
            }
            if std::mem::replace(&mut seen[label.index()], true) {
                return Err(Error::InvalidArgument(format!("duplicate label {label}")));
            }
        }
        Ok(LabelSet { members, k })
    }

    /// Builds a set from 1-based label numbers.
    pub fn from_numbers(numbers: &[usize], k: usize) -> Result<Self> {
        let members = numbers
            .iter()
            .map(|&n| Label::new(n))
            .collect::<Result<Vec<_>>>()?;
        LabelSet::new(members, k)
    }

    pub(crate) fn from_indices_unchecked(indices: impl IntoIterator<Item = usize>, k: usize) -> Self {
        LabelSet {
            members: indices.into_iter().map(Label::from_index).collect(),
            k,
        }
    }

    pub fn contains(&self, label: Label) -> bool {
        self.members.contains(&label)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of classes the set was drawn from.
    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn members(&self) -> &[Label] {
        &self.members
    }

    pub fn first(&self) -> Label {
        self.members[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        self.members.iter().copied()
    }

    /// 1-based label numbers in order.
    pub fn numbers(&self) -> Vec<usize> {
        self.members.iter().map(|l| l.number()).collect()
    }

    /// Dense membership mask indexed by 0-based label.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.k];
        for label in &self.members {
            mask[label.index()] = true;
        }
        mask
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, label) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{label}")?;
        }
        f.write_str(")")
    }
}

/// One score per class, `(W x)_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Self {
        ScoreVector(scores)
    }

    pub fn get(&self, label: Label) -> f64 {
        self.0[label.index()]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Top-m labels: each pick is the highest remaining score, lowest
    /// index on ties.
    pub fn top_m(&self, m: usize) -> Result<LabelSet> {
        let k = self.0.len();
        check_subset_size(m, k)?;
        let mut taken = vec![false; k];
        let mut picks = Vec::with_capacity(m);
        for _ in 0..m {
            let mut best: Option<usize> = None;
            for (j, &s) in self.0.iter().enumerate() {
                if taken[j] {
                    continue;
                }
                match best {
                    Some(b) if s <= self.0[b] => {}
                    _ => best = Some(j),
                }
            }
            // m < k guarantees an untaken label remains
            let b = best.expect("untaken label");
            taken[b] = true;
            picks.push(b);
        }
        Ok(LabelSet::from_indices_unchecked(picks, k))
    }

    /// Highest-scoring label, lowest index on ties.
    pub fn argmax(&self) -> Label {
        let mut best = 0;
        for (j, &s) in self.0.iter().enumerate().skip(1) {
            if s > self.0[best] {
                best = j;
            }
        }
        Label::from_index(best)
    }
}

/// Dense `k x d` weight matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    k: usize,
    d: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(k: usize, d: usize) -> Self {
        WeightMatrix {
            k,
            d,
            data: vec![0.0; k * d],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidArgument("weight matrix needs at least one row".into()));
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(k * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("weight entries must be finite".into()));
        }
        Ok(WeightMatrix { k, d, data })
    }

    pub fn from_fn(k: usize, d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(k * d);
        for r in 0..k {
            for j in 0..d {
                data.push(f(r, j));
            }
        }
        WeightMatrix { k, d, data }
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, r: usize, j: usize) -> f64 {
        self.data[r * self.d + j]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.d..(r + 1) * self.d]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.d..(r + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// Matrix inner product `<W, U>`.
    pub fn inner(&self, update: &UpdateMatrix) -> Result<f64> {
        self.check_update(update)?;
        let mut acc = 0.0;
        for r in 0..self.k {
            let c = update.coeffs[r];
            for (w, x) in self.row(r).iter().zip(&update.x) {
                acc += w * (x * c);
            }
        }
        Ok(acc)
    }

    /// `W <- W + U`.
    pub fn apply(&mut self, update: &UpdateMatrix) -> Result<()> {
        self.check_update(update)?;
        for r in 0..self.k {
            let c = update.coeffs[r];
            let x = &update.x;
            for (w, xj) in self.row_mut(r).iter_mut().zip(x) {
                *w += xj * c;
            }
        }
        Ok(())
    }

    fn check_update(&self, update: &UpdateMatrix) -> Result<()> {
        if update.coeffs.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: update.coeffs.len(),
            });
        }
        if update.x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: update.x.len(),
            });
        }
        Ok(())
    }

    /// `W x`.
    pub fn score(&self, x: &[f64]) -> Result<ScoreVector> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        Ok(ScoreVector(
            (0..self.k)
                .map(|r| self.row(r).iter().zip(x).map(|(w, v)| w * v).sum())
                .collect(),
        ))
    }
}

/// A `k x d` update. Every update in this crate has the rank-one form
/// `U[r][j] = c_r * x_j`, so only the row coefficients and the features
/// are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateMatrix {
    coeffs: Vec<f64>,
    x: Vec<f64>,
}

impl UpdateMatrix {
    pub fn outer(coeffs: Vec<f64>, x: &[f64]) -> Self {
        UpdateMatrix {
            coeffs,
            x: x.to_vec(),
        }
    }

    pub fn zero(k: usize, d: usize) -> Self {
        UpdateMatrix {
            coeffs: vec![0.0; k],
            x: vec![0.0; d],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn features(&self) -> &[f64] {
        &self.x
    }

    pub fn entry(&self, r: usize, j: usize) -> f64 {
        self.x[j] * self.coeffs[r]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.coeffs
            .iter()
            .map(|&c| self.x.iter().map(|&xj| xj * c).collect())
            .collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        let mut acc = 0.0;
        for &c in &self.coeffs {
            for &xj in &self.x {
                let e = xj * c;
                acc += e * e;
            }
        }
        acc
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        self.coeffs.iter().map(|&c| self.x[j] * c).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0) || self.x.iter().all(|&v| v == 0.0)
    }
}

/// A feature vector with its true label.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Example {
    pub fn new(features: Vec<f64>, label: Label, k: usize) -> Result<Self> {
        if label.index() >= k {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range 1..={k}"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("features must be finite".into()));
        }
        Ok(Example { features, label })
    }

    pub fn norm(&self) -> f64 {
        self.features.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Divides the features by `max(1, ||x||)`.
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 1.0 {
            self.features.iter_mut().for_each(|v| *v /= n);
        }
    }
}

pub fn score(w: &WeightMatrix, x: &[f64]) -> Result<ScoreVector> {
    w.score(x)
}

/// The greedy label set `(a_1, .., a_m)` of the `m` highest scores.
pub fn predict_top_m(w: &WeightMatrix, x: &[f64], m: usize) -> Result<LabelSet> {
    check_subset_size(m, w.num_classes())?;
    w.score(x)?.top_m(m)
}

pub fn predict_top1(w: &WeightMatrix, x: &[f64]) -> Result<Label> {
    check_subset_size(1, w.num_classes())?;
    Ok(w.score(x)?.argmax())
}
