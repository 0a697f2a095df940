//! Equal-width binning of `c`, `l` and `m` ahead of the exact engine.
//!
//! Each binned value is replaced by the midpoint of its bin. This is an
//! approximation layer: the exact engine only sees the discretized data.

use crate::error::{Error, Result};
use crate::model::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinTarget {
    AllC,
    AllL,
    C(usize),
    L(usize),
    M,
}

/// Bin counts per variable, parsed from e.g. `c=4,l=3,m=2,c2=5`.
/// A rule naming a single column overrides a group rule.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Binning {
    rules: Vec<(BinTarget, usize)>,
}

impl Binning {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = || Error::InvalidArgument(format!("bad bin rule `{item}`, expected e.g. `m=4` or `c1=3`"));
            let (name, count) = item.split_once('=').ok_or_else(bad)?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            if count < 2 {
                return Err(Error::InvalidArgument(format!("bin count for `{name}` must be at least 2")));
            }
            let name = name.trim();
            let index = |prefix: char| {
                name.strip_prefix(prefix)
                    .and_then(|r| r.parse::<usize>().ok())
                    .filter(|i| *i >= 1)
                    .map(|i| i - 1)
            };
            let target = match name {
                "c" => BinTarget::AllC,
                "l" => BinTarget::AllL,
                "m" => BinTarget::M,
                _ => index('c')
                    .map(BinTarget::C)
                    .or_else(|| index('l').map(BinTarget::L))
                    .ok_or_else(bad)?,
            };
            if rules.iter().any(|(t, _)| *t == target) {
                return Err(Error::InvalidArgument(format!("bin rule for `{name}` given twice")));
            }
            rules.push((target, count));
        }
        if rules.is_empty() {
            return Err(Error::InvalidArgument("empty bin specification".into()));
        }
        Ok(Binning { rules })
    }

    fn count_for(&self, specific: BinTarget, group: BinTarget) -> Option<usize> {
        let find = |t: BinTarget| self.rules.iter().find(|(x, _)| *x == t).map(|(_, n)| *n);
        find(specific).or_else(|| find(group))
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        let (k, p) = (dataset.k(), dataset.p());
        for (t, _) in &self.rules {
            match *t {
                BinTarget::C(i) if i >= k => {
                    return Err(Error::DimensionMismatch(format!("bin rule for c{} but k={k}", i + 1)))
                }
                BinTarget::L(j) if j >= p => {
                    return Err(Error::DimensionMismatch(format!("bin rule for l{} but p={p}", j + 1)))
                }
                _ => {}
            }
        }
        let mut records = dataset.records().to_vec();
        for i in 0..k {
            if let Some(bins) = self.count_for(BinTarget::C(i), BinTarget::AllC) {
                let binner = EqualWidth::fit(records.iter().map(|r| r.c[i]), bins);
                records.iter_mut().for_each(|r| r.c[i] = binner.label(r.c[i]));
            }
        }
        for j in 0..p {
            if let Some(bins) = self.count_for(BinTarget::L(j), BinTarget::AllL) {
                let binner = EqualWidth::fit(records.iter().map(|r| r.l[j]), bins);
                records.iter_mut().for_each(|r| r.l[j] = binner.label(r.l[j]));
            }
        }
        if let Some(bins) = self.count_for(BinTarget::M, BinTarget::M) {
            let binner = EqualWidth::fit(records.iter().map(|r| r.m), bins);
            records.iter_mut().for_each(|r| r.m = binner.label(r.m));
        }
        Ok(Dataset::new(k, p, records))
    }
}

#[derive(Debug, Clone, Copy)]
struct EqualWidth {
    min: f64,
    width: f64,
    bins: usize,
}

impl EqualWidth {
    fn fit(values: impl Iterator<Item = f64>, bins: usize) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        EqualWidth {
            min,
            width: (max - min) / bins as f64,
            bins,
        }
    }

    fn label(&self, v: f64) -> f64 {
        if self.width == 0.0 {
            return v;
        }
        let idx = (((v - self.min) / self.width).floor() as usize).min(self.bins - 1);
        self.min + (idx as f64 + 0.5) * self.width
    }
}
