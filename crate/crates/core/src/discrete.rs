//! Exact evaluation of the identification formula for finite-support
//! `(C, L, M)`:
//!
//! ```text
//! E(Y1^I) = Σ_c Σ_l Σ_m  E[Y | M=m, L=l, C=c, A=1]
//!                        · f(m | L=l, C=c, A=0)
//!                        · f(l | C=c, A=1)
//!                        · f(c)
//! ```
//!
//! Every table is an empirical frequency table built with exact value
//! equality. Continuous data has to be binned before it gets here.

use std::collections::{BTreeMap, BTreeSet};

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::model::{stable_sum, Dataset, EffectEstimates};

type Scalar = OrderedFloat<f64>;
type Key = Vec<Scalar>;

fn key(values: &[f64]) -> Key {
    // -0.0 and 0.0 compare equal under OrderedFloat; store the positive zero.
    values.iter().map(|&v| OrderedFloat(v + 0.0)).collect()
}

fn unkey(k: &Key) -> Vec<f64> {
    k.iter().map(|v| v.0).collect()
}

fn fmt_vec(name: &str, k: &Key) -> Option<String> {
    match k.len() {
        0 => None,
        1 => Some(format!("{name}={}", k[0].0)),
        _ => {
            let inner: Vec<String> = k.iter().map(|v| v.0.to_string()).collect();
            Some(format!("{name}=({})", inner.join(",")))
        }
    }
}

fn fmt_cell(m: Option<Scalar>, l: Option<&Key>, c: &Key) -> String {
    let mut parts = Vec::new();
    if let Some(m) = m {
        parts.push(format!("m={}", m.0));
    }
    if let Some(l) = l {
        parts.extend(fmt_vec("l", l));
    }
    parts.extend(fmt_vec("c", c));
    format!("({})", parts.join(","))
}

/// Options for [`fit_discrete_laws_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiscreteOptions {
    /// Laplace pseudo-count added to every cell of `f(L|C,A=1)` and
    /// `f(M|L,C,A=0)`. The supports become the values of `L` seen among
    /// treated records and of `M` seen among control records. Outcome means
    /// are never smoothed: a missing treated cell is still an error.
    pub smoothing: Option<f64>,
}

/// Frequency tables entering the identification formula.
///
/// Supports are stored sorted, which fixes the summation order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    k: usize,
    p: usize,
    f_c: Vec<(Key, f64)>,
    l_given_c: BTreeMap<Key, Vec<(Key, f64)>>,
    m_given_lc: BTreeMap<(Key, Key), Vec<(Scalar, f64)>>,
    y_mean: BTreeMap<(Scalar, Key, Key), f64>,
}

const NORMALIZATION_TOL: f64 = 1e-12;

impl DiscreteLaw {
    pub fn builder(k: usize, p: usize) -> DiscreteLawBuilder {
        DiscreteLawBuilder {
            k,
            p,
            f_c: BTreeMap::new(),
            l_given_c: BTreeMap::new(),
            m_given_lc: BTreeMap::new(),
            y_mean: BTreeMap::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Support of `C` with probabilities, sorted.
    pub fn c_table(&self) -> Vec<(Vec<f64>, f64)> {
        self.f_c.iter().map(|(c, p)| (unkey(c), *p)).collect()
    }

    /// `f(L=· | C=c, A=1)`, sorted by `l`.
    pub fn l_table(&self, c: &[f64]) -> Vec<(Vec<f64>, f64)> {
        self.l_given_c
            .get(&key(c))
            .map(|t| t.iter().map(|(l, p)| (unkey(l), *p)).collect())
            .unwrap_or_default()
    }

    /// `f(M=· | L=l, C=c, A=0)`, sorted by `m`.
    pub fn m_table(&self, l: &[f64], c: &[f64]) -> Vec<(f64, f64)> {
        self.m_given_lc
            .get(&(key(l), key(c)))
            .map(|t| t.iter().map(|(m, p)| (m.0, *p)).collect())
            .unwrap_or_default()
    }

    pub fn f_c(&self, c: &[f64]) -> f64 {
        let c = key(c);
        self.f_c
            .iter()
            .find(|(k, _)| *k == c)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn f_l_given_c(&self, l: &[f64], c: &[f64]) -> f64 {
        let l = key(l);
        self.l_given_c
            .get(&key(c))
            .and_then(|t| t.iter().find(|(k, _)| *k == l))
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn f_m_given_lc(&self, m: f64, l: &[f64], c: &[f64]) -> f64 {
        let m = OrderedFloat(m + 0.0);
        self.m_given_lc
            .get(&(key(l), key(c)))
            .and_then(|t| t.iter().find(|(k, _)| *k == m))
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn y_mean(&self, m: f64, l: &[f64], c: &[f64]) -> Option<f64> {
        self.y_mean
            .get(&(OrderedFloat(m + 0.0), key(l), key(c)))
            .copied()
    }

    pub fn y_mean_cells(&self) -> impl Iterator<Item = f64> + '_ {
        self.y_mean.values().copied()
    }

    /// Checks normalization, nonnegativity and positivity. Returns the first
    /// problem found in canonical order.
    fn check(&self) -> Result<()> {
        let bad_table = |what: String| Err(Error::InvalidArgument(what));
        check_table(self.f_c.iter().map(|(_, p)| *p)).or_else(|e| bad_table(format!("f(C): {e}")))?;
        for (c, pc) in &self.f_c {
            if *pc <= 0.0 {
                continue;
            }
            let Some(lt) = self.l_given_c.get(c) else {
                return Err(Error::IdentificationGap(format!(
                    "no treated record with {}",
                    fmt_cell(None, None, c)
                )));
            };
            check_table(lt.iter().map(|(_, p)| *p))
                .or_else(|e| bad_table(format!("f(L|{}): {e}", fmt_cell(None, None, c))))?;
            for (l, pl) in lt {
                if *pl <= 0.0 {
                    continue;
                }
                let Some(mt) = self.m_given_lc.get(&(l.clone(), c.clone())) else {
                    return Err(Error::IdentificationGap(format!(
                        "no control record with {}",
                        fmt_cell(None, Some(l), c)
                    )));
                };
                check_table(mt.iter().map(|(_, p)| *p))
                    .or_else(|e| bad_table(format!("f(M|{}): {e}", fmt_cell(None, Some(l), c))))?;
                for (m, pm) in mt {
                    if *pm > 0.0 && !self.y_mean.contains_key(&(*m, l.clone(), c.clone())) {
                        return Err(Error::IdentificationGap(format!(
                            "no treated record in cell {}",
                            fmt_cell(Some(*m), Some(l), c)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_table(probs: impl Iterator<Item = f64>) -> std::result::Result<(), String> {
    let probs: Vec<f64> = probs.collect();
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(format!("invalid probability {p}"));
    }
    let total = stable_sum(probs.iter().copied());
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(format!("probabilities sum to {total}, not 1"));
    }
    Ok(())
}

/// Assembles a [`DiscreteLaw`] from explicit tables.
#[derive(Debug, Clone)]
pub struct DiscreteLawBuilder {
    k: usize,
    p: usize,
    f_c: BTreeMap<Key, f64>,
    l_given_c: BTreeMap<Key, BTreeMap<Key, f64>>,
    m_given_lc: BTreeMap<(Key, Key), BTreeMap<Scalar, f64>>,
    y_mean: BTreeMap<(Scalar, Key, Key), f64>,
}

impl DiscreteLawBuilder {
    pub fn c(mut self, c: &[f64], prob: f64) -> Self {
        self.f_c.insert(key(c), prob);
        self
    }

    pub fn l_given_c(mut self, c: &[f64], l: &[f64], prob: f64) -> Self {
        self.l_given_c.entry(key(c)).or_default().insert(key(l), prob);
        self
    }

    pub fn m_given_lc(mut self, l: &[f64], c: &[f64], m: f64, prob: f64) -> Self {
        self.m_given_lc
            .entry((key(l), key(c)))
            .or_default()
            .insert(OrderedFloat(m + 0.0), prob);
        self
    }

    pub fn y_mean(mut self, m: f64, l: &[f64], c: &[f64], value: f64) -> Self {
        self.y_mean.insert((OrderedFloat(m + 0.0), key(l), key(c)), value);
        self
    }

    pub fn build(self) -> Result<DiscreteLaw> {
        let dims_ok = self.f_c.keys().all(|c| c.len() == self.k)
            && self
                .l_given_c
                .iter()
                .all(|(c, t)| c.len() == self.k && t.keys().all(|l| l.len() == self.p))
            && self
                .m_given_lc
                .keys()
                .all(|(l, c)| l.len() == self.p && c.len() == self.k);
        if !dims_ok {
            return Err(Error::DimensionMismatch(format!(
                "discrete law tables do not match k={}, p={}",
                self.k, self.p
            )));
        }
        let law = DiscreteLaw {
            k: self.k,
            p: self.p,
            f_c: self.f_c.into_iter().collect(),
            l_given_c: self
                .l_given_c
                .into_iter()
                .map(|(c, t)| (c, t.into_iter().collect()))
                .collect(),
            m_given_lc: self
                .m_given_lc
                .into_iter()
                .map(|(lc, t)| (lc, t.into_iter().collect()))
                .collect(),
            y_mean: self.y_mean,
        };
        law.check()?;
        Ok(law)
    }
}

pub fn fit_discrete_laws(dataset: &Dataset) -> Result<DiscreteLaw> {
    fit_discrete_laws_with(dataset, &DiscreteOptions::default())
}

/// Builds the empirical tables: `f(C)` from all records, `f(L|C)` from
/// treated records, `f(M|L,C)` from control records and the outcome cell
/// means from treated records.
pub fn fit_discrete_laws_with(dataset: &Dataset, options: &DiscreteOptions) -> Result<DiscreteLaw> {
    dataset.ensure_estimable()?;
    if let Some(alpha) = options.smoothing {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing pseudo-count must be positive, got {alpha}"
            )));
        }
    }

    let mut c_counts: BTreeMap<Key, usize> = BTreeMap::new();
    let mut l_counts: BTreeMap<Key, BTreeMap<Key, usize>> = BTreeMap::new();
    let mut m_counts: BTreeMap<(Key, Key), BTreeMap<Scalar, usize>> = BTreeMap::new();
    let mut y_cells: BTreeMap<(Scalar, Key, Key), Vec<f64>> = BTreeMap::new();
    let mut l_support: BTreeSet<Key> = BTreeSet::new();
    let mut m_support: BTreeSet<Scalar> = BTreeSet::new();

    for r in dataset.records() {
        let c = key(&r.c);
        let l = key(&r.l);
        let m = OrderedFloat(r.m + 0.0);
        *c_counts.entry(c.clone()).or_default() += 1;
        if r.treated() {
            *l_counts
                .entry(c.clone())
                .or_default()
                .entry(l.clone())
                .or_default() += 1;
            l_support.insert(l.clone());
            y_cells.entry((m, l, c)).or_default().push(r.y);
        } else {
            *m_counts.entry((l, c)).or_default().entry(m).or_default() += 1;
            m_support.insert(m);
        }
    }

    let n = dataset.len() as f64;
    let f_c: Vec<(Key, f64)> = c_counts
        .into_iter()
        .map(|(c, count)| (c, count as f64 / n))
        .collect();

    let mut l_given_c = BTreeMap::new();
    let mut m_given_lc = BTreeMap::new();
    for (c, _) in &f_c {
        let observed = l_counts.remove(c).unwrap_or_default();
        let table = match options.smoothing {
            Some(alpha) => smoothed(&l_support, &observed, alpha),
            None if observed.is_empty() => {
                return Err(Error::IdentificationGap(format!(
                    "no treated record with {}",
                    fmt_cell(None, None, c)
                )))
            }
            None => normalized(&observed),
        };
        for (l, _) in &table {
            let lc = (l.clone(), c.clone());
            let observed = m_counts.remove(&lc).unwrap_or_default();
            let m_table = match options.smoothing {
                Some(alpha) => smoothed(&m_support, &observed, alpha),
                None if observed.is_empty() => {
                    return Err(Error::IdentificationGap(format!(
                        "no control record with {}",
                        fmt_cell(None, Some(l), c)
                    )))
                }
                None => normalized(&observed),
            };
            m_given_lc.insert(lc, m_table);
        }
        l_given_c.insert(c.clone(), table);
    }

    let y_mean = y_cells
        .into_iter()
        .map(|(cell, ys)| {
            let mean = stable_sum(ys.iter().copied()) / ys.len() as f64;
            (cell, mean)
        })
        .collect();

    let law = DiscreteLaw {
        k: dataset.k(),
        p: dataset.p(),
        f_c,
        l_given_c,
        m_given_lc,
        y_mean,
    };
    law.check()?;
    Ok(law)
}

fn normalized<K: Clone + Ord>(counts: &BTreeMap<K, usize>) -> Vec<(K, f64)> {
    let total: usize = counts.values().sum();
    counts
        .iter()
        .map(|(v, &c)| (v.clone(), c as f64 / total as f64))
        .collect()
}

fn smoothed<K: Clone + Ord>(support: &BTreeSet<K>, counts: &BTreeMap<K, usize>, alpha: f64) -> Vec<(K, f64)> {
    let total: usize = counts.values().sum();
    let denom = total as f64 + alpha * support.len() as f64;
    support
        .iter()
        .map(|v| {
            let c = counts.get(v).copied().unwrap_or(0) as f64;
            (v.clone(), (c + alpha) / denom)
        })
        .collect()
}

/// Evaluates the identification sum over sorted supports.
pub fn identify_ey1_i(law: &DiscreteLaw) -> f64 {
    let mut total = 0.0;
    for (c, pc) in &law.f_c {
        let mut over_l = 0.0;
        for (l, pl) in law.l_given_c.get(c).map(Vec::as_slice).unwrap_or_default() {
            let mut over_m = 0.0;
            for (m, pm) in law
                .m_given_lc
                .get(&(l.clone(), c.clone()))
                .map(Vec::as_slice)
                .unwrap_or_default()
            {
                if *pm > 0.0 {
                    // presence guaranteed by DiscreteLaw::check
                    over_m += pm * law.y_mean[&(*m, l.clone(), c.clone())];
                }
            }
            over_l += pl * over_m;
        }
        total += pc * over_l;
    }
    total
}

pub fn identify_effects(dataset: &Dataset) -> Result<EffectEstimates> {
    identify_effects_with(dataset, &DiscreteOptions::default())
}

/// `E(Y1^I)` from the exact engine, `E(Y0)` and `E(Y1)` from the arm means.
pub fn identify_effects_with(dataset: &Dataset, options: &DiscreteOptions) -> Result<EffectEstimates> {
    let law = fit_discrete_laws_with(dataset, options)?;
    let ey1_i = identify_ey1_i(&law);
    Ok(EffectEstimates::new(
        dataset.arm_mean_y(0)?,
        dataset.arm_mean_y(1)?,
        ey1_i,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObservedRecord;
    use proptest::prelude::*;

    fn r(a: u8, l: f64, m: f64, y: f64) -> ObservedRecord {
        ObservedRecord::new(a, vec![], vec![l], m, y)
    }

    fn hand_dataset() -> Dataset {
        Dataset::new(
            0,
            1,
            vec![
                r(1, 0.0, 0.0, 1.0),
                r(1, 0.0, 1.0, 2.0),
                r(1, 1.0, 0.0, 3.0),
                r(1, 1.0, 1.0, 5.0),
                r(0, 0.0, 0.0, 0.0),
                r(0, 0.0, 0.0, 0.0),
                r(0, 0.0, 1.0, 0.0),
                r(0, 1.0, 1.0, 0.0),
            ],
        )
    }

    /// Sums over every (c, l, m) combination by re-scanning the raw rows.
    fn brute_force(ds: &Dataset) -> f64 {
        let recs = ds.records();
        let n = recs.len() as f64;
        let mut cs: Vec<Vec<f64>> = recs.iter().map(|r| r.c.clone()).collect();
        let mut ls: Vec<Vec<f64>> = recs.iter().map(|r| r.l.clone()).collect();
        let mut ms: Vec<f64> = recs.iter().map(|r| r.m).collect();
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cs.dedup();
        ls.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ls.dedup();
        ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ms.dedup();
        let mut total = 0.0;
        for c in &cs {
            let fc = recs.iter().filter(|r| &r.c == c).count() as f64 / n;
            let treated_c = recs.iter().filter(|r| r.a == 1 && &r.c == c).count() as f64;
            for l in &ls {
                let fl = recs.iter().filter(|r| r.a == 1 && &r.c == c && &r.l == l).count() as f64 / treated_c;
                let control_lc = recs.iter().filter(|r| r.a == 0 && &r.c == c && &r.l == l).count() as f64;
                for &m in &ms {
                    let hits = recs.iter().filter(|r| r.a == 0 && &r.c == c && &r.l == l && r.m == m).count() as f64;
                    if hits == 0.0 || fl == 0.0 {
                        continue;
                    }
                    let fm = hits / control_lc;
                    let ys: Vec<f64> = recs
                        .iter()
                        .filter(|r| r.a == 1 && &r.c == c && &r.l == l && r.m == m)
                        .map(|r| r.y)
                        .collect();
                    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
                    total += ybar * fm * fl * fc;
                }
            }
        }
        total
    }

    #[test]
    fn point_mass_tables() {
        let recs = (0..4)
            .map(|i| ObservedRecord::new((i % 2) as u8, vec![0.0], vec![0.0], 0.0, 7.0))
            .collect();
        let law = fit_discrete_laws(&Dataset::new(1, 1, recs)).unwrap();
        assert_eq!(law.c_table(), vec![(vec![0.0], 1.0)]);
        assert_eq!(law.l_table(&[0.0]), vec![(vec![0.0], 1.0)]);
        assert_eq!(law.m_table(&[0.0], &[0.0]), vec![(0.0, 1.0)]);
        assert_eq!(law.y_mean(0.0, &[0.0], &[0.0]), Some(7.0));
        assert_eq!(identify_ey1_i(&law), 7.0);
    }

    #[test]
    fn hand_counted_tables() {
        let law = fit_discrete_laws(&hand_dataset()).unwrap();
        assert_eq!(law.c_table(), vec![(vec![], 1.0)]);
        assert_eq!(law.l_table(&[]), vec![(vec![0.0], 0.5), (vec![1.0], 0.5)]);
        assert_eq!(law.m_table(&[0.0], &[]), vec![(0.0, 2.0 / 3.0), (1.0, 1.0 / 3.0)]);
        assert_eq!(law.m_table(&[1.0], &[]), vec![(1.0, 1.0)]);
        assert_eq!(law.y_mean(1.0, &[0.0], &[]), Some(2.0));
        assert_eq!(law.y_mean(1.0, &[1.0], &[]), Some(5.0));
        // 0.5·(2/3·1 + 1/3·2) + 0.5·5
        let expected = 0.5 * (2.0 / 3.0 + 2.0 / 3.0) + 2.5;
        assert!((identify_ey1_i(&law) - expected).abs() < 1e-15);
        assert!((identify_ey1_i(&law) - brute_force(&hand_dataset())).abs() < 1e-12);
        let e = identify_effects(&hand_dataset()).unwrap();
        assert_eq!(e.ey0(), 0.0);
        assert_eq!(e.ey1(), 2.75);
    }

    #[test]
    fn positivity_violation_names_cell() {
        let mut recs = hand_dataset().into_records();
        recs[3] = r(1, 1.0, 0.0, 5.0);
        let err = fit_discrete_laws(&Dataset::new(0, 1, recs)).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::IdentificationGap(_)));
        assert!(msg.contains("(m=1,l=1)"), "{msg}");
    }

    #[test]
    fn missing_control_cell_is_a_gap() {
        let mut recs = hand_dataset().into_records();
        recs[7] = r(0, 0.0, 1.0, 0.0);
        let err = fit_discrete_laws(&Dataset::new(0, 1, recs)).unwrap_err();
        assert!(err.to_string().contains("no control record with (l=1)"));
    }

    #[test]
    fn missing_treated_c_is_a_gap() {
        let recs = vec![
            ObservedRecord::new(1, vec![0.0], vec![], 0.0, 1.0),
            ObservedRecord::new(0, vec![0.0], vec![], 0.0, 1.0),
            ObservedRecord::new(0, vec![1.0], vec![], 0.0, 1.0),
        ];
        let err = fit_discrete_laws(&Dataset::new(1, 0, recs)).unwrap_err();
        assert!(err.to_string().contains("no treated record with (c=1)"));
    }

    #[test]
    fn smoothing_fills_conditional_tables() {
        let mut recs = hand_dataset().into_records();
        recs[7] = r(0, 0.0, 1.0, 0.0);
        let ds = Dataset::new(0, 1, recs);
        let opts = DiscreteOptions { smoothing: Some(1.0) };
        let law = fit_discrete_laws_with(&ds, &opts).unwrap();
        assert_eq!(law.m_table(&[1.0], &[]), vec![(0.0, 0.5), (1.0, 0.5)]);
        // 2 controls at m=0 and 2 at m=1 for l=0 after moving row 7.
        assert_eq!(law.m_table(&[0.0], &[]), vec![(0.0, 0.5), (1.0, 0.5)]);
        assert!(fit_discrete_laws_with(&ds, &DiscreteOptions { smoothing: Some(-1.0) }).is_err());
    }

    #[test]
    fn constant_outcome_gives_five() {
        let law = DiscreteLaw::builder(0, 1)
            .c(&[], 1.0)
            .l_given_c(&[], &[0.0], 0.3)
            .l_given_c(&[], &[1.0], 0.7)
            .m_given_lc(&[0.0], &[], 0.0, 0.4)
            .m_given_lc(&[0.0], &[], 1.0, 0.6)
            .m_given_lc(&[1.0], &[], 1.0, 1.0)
            .y_mean(0.0, &[0.0], &[], 5.0)
            .y_mean(1.0, &[0.0], &[], 5.0)
            .y_mean(1.0, &[1.0], &[], 5.0)
            .build()
            .unwrap();
        assert!((identify_ey1_i(&law) - 5.0).abs() < 1e-15);
    }

    fn binary_law(m_probs: [f64; 2], m_star: Option<f64>) -> DiscreteLaw {
        let mut b = DiscreteLaw::builder(0, 1)
            .c(&[], 1.0)
            .l_given_c(&[], &[0.0], 0.5)
            .l_given_c(&[], &[1.0], 0.5);
        for (li, &p1) in m_probs.iter().enumerate() {
            let l = li as f64;
            match m_star {
                Some(ms) => b = b.m_given_lc(&[l], &[], ms, 1.0),
                None => {
                    b = b.m_given_lc(&[l], &[], 0.0, 1.0 - p1).m_given_lc(&[l], &[], 1.0, p1);
                }
            }
            for m in [0.0, 1.0] {
                b = b.y_mean(m, &[l], &[], m + l);
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn binary_example_is_point_nine() {
        let law = binary_law([0.2, 0.6], None);
        let oracle: f64 = 0.5 * (0.2 * 1.0) + 0.5 * (0.6 * 2.0 + 0.4 * 1.0);
        assert!((oracle - 0.9).abs() < 1e-15);
        assert!((identify_ey1_i(&law) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn point_mass_mediator_collapses_inner_sum() {
        let law = binary_law([0.2, 0.6], Some(1.0));
        // Σ_l y(1, l) f(l) = 0.5·1 + 0.5·2
        assert!((identify_ey1_i(&law) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn builder_rejects_bad_tables() {
        let unnormalized = DiscreteLaw::builder(0, 0).c(&[], 0.9).build();
        assert!(matches!(unnormalized, Err(Error::InvalidArgument(_))));
        let gap = DiscreteLaw::builder(0, 0)
            .c(&[], 1.0)
            .l_given_c(&[], &[], 1.0)
            .m_given_lc(&[], &[], 0.0, 1.0)
            .build();
        assert!(matches!(gap, Err(Error::IdentificationGap(_))));
    }

    #[test]
    fn constant_outcome_dataset() {
        let recs = hand_dataset()
            .into_records()
            .into_iter()
            .map(|mut r| {
                r.y = 3.0;
                r
            })
            .collect();
        let e = identify_effects(&Dataset::new(0, 1, recs)).unwrap();
        assert_eq!((e.ey0(), e.ey1(), e.ey1_i()), (3.0, 3.0, 3.0));
        assert_eq!(e.organic_direct(), 0.0);
        assert_eq!(e.organic_indirect(), 0.0);
    }

    fn binary_rows(max: usize) -> impl Strategy<Value = Vec<(u8, u8, u8, u8, i32)>> {
        proptest::collection::vec((0u8..2, 0u8..2, 0u8..2, 0u8..2, -20i32..20), 2..max)
    }

    fn to_dataset(k: usize, rows: &[(u8, u8, u8, u8, i32)]) -> Dataset {
        let recs = rows
            .iter()
            .map(|&(a, c, l, m, y)| {
                let c = if k == 1 { vec![c as f64] } else { vec![] };
                ObservedRecord::new(a, c, vec![l as f64], m as f64, y as f64 / 4.0)
            })
            .collect();
        Dataset::new(k, 1, recs)
    }

    proptest! {
        #[test]
        fn tables_are_normalized_and_sum_matches_brute_force(rows in binary_rows(64), k in 0usize..2) {
            let ds = to_dataset(k, &rows);
            if let Ok(law) = fit_discrete_laws(&ds) {
                let fc: f64 = law.c_table().iter().map(|x| x.1).sum();
                prop_assert!((fc - 1.0).abs() <= 1e-12);
                for (c, _) in law.c_table() {
                    let fl: f64 = law.l_table(&c).iter().map(|x| x.1).sum();
                    prop_assert!((fl - 1.0).abs() <= 1e-12);
                    for (l, _) in law.l_table(&c) {
                        let fm: f64 = law.m_table(&l, &c).iter().map(|x| x.1).sum();
                        prop_assert!((fm - 1.0).abs() <= 1e-12);
                    }
                }
                let v = identify_ey1_i(&law);
                prop_assert!((v - brute_force(&ds)).abs() <= 1e-12);
                let lo = law.y_mean_cells().fold(f64::INFINITY, f64::min);
                let hi = law.y_mean_cells().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo - 1e-12 <= v && v <= hi + 1e-12);
            }
        }

        #[test]
        fn duplicating_records_changes_nothing(rows in binary_rows(32), k in 0usize..2) {
            let ds = to_dataset(k, &rows);
            if let Ok(e) = identify_effects(&ds) {
                let mut twice = rows.clone();
                twice.extend_from_slice(&rows);
                let e2 = identify_effects(&to_dataset(k, &twice)).unwrap();
                for (x, y) in e.values().to_array().iter().zip(e2.values().to_array()) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }
}
