//! Parametric plug-in pipeline.
//!
//! 1. Fit the mediator regression on both arms,
//!    `m ~ 1 + a + c + l + a·c + a·l + c⊗l`.
//! 2. Fit the outcome regression `f_θ(m, l, c)` on treated records.
//! 3. Average `f_θ(m − β1 − β4·c − β5·l, l, c)` over treated records.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{stable_sum, Dataset, EffectEstimates, FeatureSpec, OutcomeModelFit, ShiftModelFit};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Per-arm residual variance ratios outside this band raise a warning.
pub const VARIANCE_RATIO_BAND: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    labels: Vec<String>,
}

impl DesignMatrix {
    pub fn new(matrix: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if matrix.ncols() == 0 {
            return Err(Error::DegenerateDesign("design has no columns".into()));
        }
        if labels.len() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} column labels for {} columns",
                labels.len(),
                matrix.ncols()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidArgument(format!("duplicate column label `{l}`")));
            }
        }
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % matrix.nrows(), pos / matrix.nrows());
            return Err(Error::DegenerateDesign(format!(
                "non-finite entry at row {row}, column `{}`",
                labels[col]
            )));
        }
        Ok(DesignMatrix { matrix, labels })
    }

    /// Builds from row-major data.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let cols = labels.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "design row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        let matrix = DMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied());
        DesignMatrix::new(matrix, labels)
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub coefficients: Vec<f64>,
    pub residual_sd: f64,
    pub rank: usize,
    pub rank_ok: bool,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares through a Householder QR of `X` followed by an SVD
/// of the small triangular factor. Rank-deficient designs get the
/// minimum-norm solution and `rank_ok == false`.
pub fn least_squares(x: &DesignMatrix, y: &[f64]) -> Result<LeastSquaresFit> {
    let (n, q) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows but response has {} entries",
            y.len()
        )));
    }
    if n < q {
        return Err(Error::DegenerateDesign(format!(
            "{n} rows for {q} columns ({})",
            x.labels().join(",")
        )));
    }

    let qr = x.matrix.clone().qr();
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let r = qr.r();
    let svd = r.svd(true, true);
    let (u, v_t) = match (&svd.u, &svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateDesign("SVD did not converge".into())),
    };
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOLERANCE * largest;

    let mut projected = u.transpose() * qty.rows(0, q);
    let mut rank = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > cutoff && *s > 0.0 {
            projected[i] /= s;
            rank += 1;
        } else {
            projected[i] = 0.0;
        }
    }
    let beta = v_t.transpose() * projected;

    let fitted = &x.matrix * &beta;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(yi, fi)| yi - fi).collect();
    let rss = stable_sum(residuals.iter().map(|r| r * r));
    let residual_sd = if n > q { (rss / (n - q) as f64).sqrt() } else { 0.0 };

    Ok(LeastSquaresFit {
        coefficients: beta.iter().copied().collect(),
        residual_sd,
        rank,
        rank_ok: rank == q,
        residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftMode {
    /// One regression with treatment interactions over both arms.
    #[default]
    Joint,
    /// Separate `m ~ 1 + c + l + c⊗l` per arm; the shift coefficients are the
    /// arm differences and `β0, β2, β3, β6` come from the control arm.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitOptions {
    /// Turn rank deficiency into [`Error::DegenerateDesign`] instead of a warning.
    pub strict: bool,
    pub shift_mode: ShiftMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub fit: ShiftModelFit,
    pub rank_ok: bool,
    /// Residual variance among treated over residual variance among controls.
    pub variance_ratio: f64,
    pub warnings: Vec<String>,
}

fn shift_labels(k: usize, p: usize) -> Vec<String> {
    let mut labels = vec!["1".to_string(), "a".to_string()];
    labels.extend((1..=k).map(|i| format!("c{i}")));
    labels.extend((1..=p).map(|j| format!("l{j}")));
    labels.extend((1..=k).map(|i| format!("a*c{i}")));
    labels.extend((1..=p).map(|j| format!("a*l{j}")));
    for i in 1..=k {
        labels.extend((1..=p).map(|j| format!("c{i}*l{j}")));
    }
    labels
}

fn push_cl(row: &mut Vec<f64>, c: &[f64], l: &[f64]) {
    for ci in c {
        row.extend(l.iter().map(|lj| ci * lj));
    }
}

fn check_dims(dataset: &Dataset) -> Result<()> {
    dataset.ensure_estimable()
}

pub fn fit_shift_model(dataset: &Dataset) -> Result<ShiftModelFit> {
    fit_shift_model_with(dataset, &FitOptions::default()).map(|r| r.fit)
}

/// Fits the mediator regression and reports rank and arm-variance diagnostics.
pub fn fit_shift_model_with(dataset: &Dataset, options: &FitOptions) -> Result<ShiftReport> {
    check_dims(dataset)?;
    let (k, p) = (dataset.k(), dataset.p());
    let mut warnings = Vec::new();

    let (fit, rank_ok, residuals) = match options.shift_mode {
        ShiftMode::Joint => {
            let labels = shift_labels(k, p);
            let q = labels.len();
            if dataset.len() <= q {
                return Err(Error::DegenerateDesign(format!(
                    "mediator regression needs more than {q} records, got {}",
                    dataset.len()
                )));
            }
            let rows: Vec<Vec<f64>> = dataset
                .records()
                .iter()
                .map(|r| {
                    let a = r.a as f64;
                    let mut row = Vec::with_capacity(q);
                    row.push(1.0);
                    row.push(a);
                    row.extend_from_slice(&r.c);
                    row.extend_from_slice(&r.l);
                    row.extend(r.c.iter().map(|v| a * v));
                    row.extend(r.l.iter().map(|v| a * v));
                    push_cl(&mut row, &r.c, &r.l);
                    row
                })
                .collect();
            let ys: Vec<f64> = dataset.records().iter().map(|r| r.m).collect();
            let ls = least_squares(&DesignMatrix::from_rows(&rows, labels)?, &ys)?;
            let b = &ls.coefficients;
            let mut at = 2;
            let mut take = |len: usize| {
                let v = b[at..at + len].to_vec();
                at += len;
                v
            };
            let beta2 = take(k);
            let beta3 = take(p);
            let beta4 = take(k);
            let beta5 = take(p);
            let beta6 = (0..k).map(|_| take(p)).collect();
            let fit = ShiftModelFit {
                beta0: b[0],
                beta1: b[1],
                beta2,
                beta3,
                beta4,
                beta5,
                beta6,
                residual_sd: ls.residual_sd,
            };
            (fit, ls.rank_ok, ls.residuals)
        }
        ShiftMode::Stratified => {
            let mut per_arm = Vec::new();
            let mut rss = 0.0;
            for a in [0u8, 1] {
                let recs: Vec<_> = dataset.arm(a).collect();
                let mut labels = vec!["1".to_string()];
                labels.extend((1..=k).map(|i| format!("c{i}")));
                labels.extend((1..=p).map(|j| format!("l{j}")));
                for i in 1..=k {
                    labels.extend((1..=p).map(|j| format!("c{i}*l{j}")));
                }
                let q = labels.len();
                if recs.len() <= q {
                    return Err(Error::DegenerateDesign(format!(
                        "stratified mediator regression in arm {a} needs more than {q} records, got {}",
                        recs.len()
                    )));
                }
                let rows: Vec<Vec<f64>> = recs
                    .iter()
                    .map(|r| {
                        let mut row = vec![1.0];
                        row.extend_from_slice(&r.c);
                        row.extend_from_slice(&r.l);
                        push_cl(&mut row, &r.c, &r.l);
                        row
                    })
                    .collect();
                let ys: Vec<f64> = recs.iter().map(|r| r.m).collect();
                let ls = least_squares(&DesignMatrix::from_rows(&rows, labels)?, &ys)?;
                rss += stable_sum(ls.residuals.iter().map(|r| r * r));
                per_arm.push(ls);
            }
            let (c0, c1) = (&per_arm[0].coefficients, &per_arm[1].coefficients);
            let diff = |range: std::ops::Range<usize>| range.map(|i| c1[i] - c0[i]).collect::<Vec<_>>();
            let q = c0.len();
            let df = dataset.len().saturating_sub(2 * q);
            let fit = ShiftModelFit {
                beta0: c0[0],
                beta1: c1[0] - c0[0],
                beta2: c0[1..1 + k].to_vec(),
                beta3: c0[1 + k..1 + k + p].to_vec(),
                beta4: diff(1..1 + k),
                beta5: diff(1 + k..1 + k + p),
                beta6: (0..k)
                    .map(|i| c0[1 + k + p + i * p..1 + k + p + (i + 1) * p].to_vec())
                    .collect(),
                residual_sd: if df > 0 { (rss / df as f64).sqrt() } else { 0.0 },
            };
            let rank_ok = per_arm.iter().all(|f| f.rank_ok);
            // Residuals back in dataset order for the variance diagnostic.
            let mut cursor = [0usize; 2];
            let residuals = dataset
                .records()
                .iter()
                .map(|r| {
                    let i = r.a as usize;
                    cursor[i] += 1;
                    per_arm[i].residuals[cursor[i] - 1]
                })
                .collect();
            (fit, rank_ok, residuals)
        }
    };

    if !rank_ok {
        let msg = "mediator regression is rank deficient; using the minimum-norm solution".to_string();
        if options.strict {
            return Err(Error::DegenerateDesign(msg));
        }
        warnings.push(msg);
    }

    let variance_ratio = arm_variance_ratio(dataset, &residuals);
    let (lo, hi) = VARIANCE_RATIO_BAND;
    if !(lo..=hi).contains(&variance_ratio) {
        warnings.push(format!(
            "mediator residual variance ratio treated/control = {variance_ratio:.4} is outside [{lo}, {hi}]; \
             the error term may not share its distribution across arms"
        ));
    }

    Ok(ShiftReport {
        fit,
        rank_ok,
        variance_ratio,
        warnings,
    })
}

fn arm_variance_ratio(dataset: &Dataset, residuals: &[f64]) -> f64 {
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (r, e) in dataset.records().iter().zip(residuals) {
        sums[r.a as usize] += e * e;
        counts[r.a as usize] += 1;
    }
    let var = |a: usize| sums[a] / counts[a].max(1) as f64;
    let (v0, v1) = (var(0), var(1));
    let m_scale = dataset
        .records()
        .iter()
        .map(|r| r.m * r.m)
        .fold(0.0, f64::max)
        .max(1.0);
    // Exact fits leave rounding-level residuals whose ratio means nothing.
    let floor = 1e-24 * m_scale;
    if v0 <= floor && v1 <= floor {
        1.0
    } else {
        v1 / v0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeReport {
    pub fit: OutcomeModelFit,
    pub rank_ok: bool,
    pub residual_sd: f64,
    pub warnings: Vec<String>,
}

pub fn fit_outcome_model(dataset: &Dataset, spec: &FeatureSpec) -> Result<OutcomeModelFit> {
    fit_outcome_model_with(dataset, spec, &FitOptions::default()).map(|r| r.fit)
}

/// OLS of `y` on the spec's features among treated records.
pub fn fit_outcome_model_with(dataset: &Dataset, spec: &FeatureSpec, options: &FitOptions) -> Result<OutcomeReport> {
    spec.check_dims(dataset.k(), dataset.p())?;
    let treated: Vec<_> = dataset.arm(1).collect();
    if treated.is_empty() {
        return Err(Error::EmptyArm(1));
    }
    if treated.len() < spec.len() + 1 {
        return Err(Error::DegenerateDesign(format!(
            "outcome regression with {} features needs at least {} treated records, got {}",
            spec.len(),
            spec.len() + 1,
            treated.len()
        )));
    }
    let rows: Vec<Vec<f64>> = treated
        .iter()
        .map(|r| spec.features().iter().map(|f| f.eval(r.m, &r.l, &r.c)).collect())
        .collect();
    let ys: Vec<f64> = treated.iter().map(|r| r.y).collect();
    let ls = least_squares(&DesignMatrix::from_rows(&rows, spec.labels())?, &ys)?;
    let mut warnings = Vec::new();
    if !ls.rank_ok {
        let msg = "outcome regression is rank deficient; using the minimum-norm solution".to_string();
        if options.strict {
            return Err(Error::DegenerateDesign(msg));
        }
        warnings.push(msg);
    }
    Ok(OutcomeReport {
        fit: OutcomeModelFit::new(spec.clone(), ls.coefficients)?,
        rank_ok: ls.rank_ok,
        residual_sd: ls.residual_sd,
        warnings,
    })
}

/// Treated-arm average of `f_θ(m − shift(c, l), l, c)`.
pub fn plugin_ey1_i(dataset: &Dataset, shift: &ShiftModelFit, outcome: &OutcomeModelFit) -> Result<f64> {
    let (k, p) = (dataset.k(), dataset.p());
    let shift_dims_ok = shift.beta2.len() == k
        && shift.beta4.len() == k
        && shift.beta3.len() == p
        && shift.beta5.len() == p
        && shift.beta6.len() == k
        && shift.beta6.iter().all(|row| row.len() == p);
    if !shift_dims_ok {
        return Err(Error::DimensionMismatch(format!(
            "mediator model does not match dataset dimensions k={k}, p={p}"
        )));
    }
    outcome.features.check_dims(k, p)?;
    let values: Vec<f64> = dataset
        .arm(1)
        .map(|r| outcome.eval(r.m - shift.shift(&r.c, &r.l), &r.l, &r.c))
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyArm(1));
    }
    Ok(stable_sum(values.iter().copied()) / values.len() as f64)
}

/// Everything produced by one run of the parametric pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimation {
    pub effects: EffectEstimates,
    pub shift: ShiftModelFit,
    pub outcome: OutcomeModelFit,
    pub variance_ratio: f64,
    pub warnings: Vec<String>,
}

pub fn estimate_effects(dataset: &Dataset, spec: &FeatureSpec) -> Result<EffectEstimates> {
    estimate_effects_with(dataset, spec, &FitOptions::default()).map(|e| e.effects)
}

pub fn estimate_effects_with(dataset: &Dataset, spec: &FeatureSpec, options: &FitOptions) -> Result<Estimation> {
    check_dims(dataset)?;
    let shift = fit_shift_model_with(dataset, options)?;
    let outcome = fit_outcome_model_with(dataset, spec, options)?;
    let ey1_i = plugin_ey1_i(dataset, &shift.fit, &outcome.fit)?;
    let effects = EffectEstimates::new(dataset.arm_mean_y(0)?, dataset.arm_mean_y(1)?, ey1_i);
    let mut warnings = shift.warnings;
    warnings.extend(outcome.warnings);
    Ok(Estimation {
        effects,
        shift: shift.fit,
        outcome: outcome.fit,
        variance_ratio: shift.variance_ratio,
        warnings,
    })
}
