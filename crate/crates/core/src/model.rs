//! Domain types shared by the estimators: observed records, datasets, fitted
//! models and effect estimates.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::json;

/// One observational unit: treatment `a`, pre-treatment covariates `c`,
/// post-treatment covariates `l`, mediator `m` and outcome `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedRecord {
    pub a: u8,
    pub c: Vec<f64>,
    pub l: Vec<f64>,
    pub m: f64,
    pub y: f64,
}

impl ObservedRecord {
    pub fn new(a: u8, c: Vec<f64>, l: Vec<f64>, m: f64, y: f64) -> Self {
        ObservedRecord { a, c, l, m, y }
    }

    pub fn treated(&self) -> bool {
        self.a == 1
    }
}

/// An ordered collection of records sharing the covariate dimensions `k`
/// (length of `c`) and `p` (length of `l`).
///
/// Construction through [`Dataset::new`] performs no checks, so that
/// [`validate_dataset`] can report on arbitrary input. [`Dataset::checked`]
/// rejects any record-level violation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    k: usize,
    p: usize,
    records: Vec<ObservedRecord>,
}

impl Dataset {
    pub fn new(k: usize, p: usize, records: Vec<ObservedRecord>) -> Self {
        Dataset { k, p, records }
    }

    /// Builds a dataset, failing on non-binary treatment, non-finite values,
    /// dimension mismatches or an empty record list. Arm presence is left to
    /// the estimators.
    pub fn checked(k: usize, p: usize, records: Vec<ObservedRecord>) -> Result<Self> {
        let ds = Dataset::new(k, p, records);
        let mut report = validate_dataset(&ds);
        report
            .violations
            .retain(|v| !matches!(v, Violation::ArmAbsent(_)));
        if report.is_ok() {
            Ok(ds)
        } else {
            Err(Error::Validation(report))
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ObservedRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ObservedRecord> {
        self.records
    }

    pub fn arm(&self, a: u8) -> impl Iterator<Item = &ObservedRecord> {
        self.records.iter().filter(move |r| r.a == a)
    }

    pub fn arm_count(&self, a: u8) -> usize {
        self.arm(a).count()
    }

    /// Fails with [`Error::EmptyArm`] unless both arms have at least one record.
    pub fn require_both_arms(&self) -> Result<()> {
        for a in [0u8, 1] {
            if self.arm_count(a) == 0 {
                return Err(Error::EmptyArm(a));
            }
        }
        Ok(())
    }

    /// Record-level validity plus presence of both arms.
    pub fn ensure_estimable(&self) -> Result<()> {
        let mut report = validate_dataset(self);
        report
            .violations
            .retain(|v| !matches!(v, Violation::ArmAbsent(_)));
        if !report.is_ok() {
            return Err(Error::Validation(report));
        }
        self.require_both_arms()
    }

    /// Mean outcome within arm `a`.
    pub fn arm_mean_y(&self, a: u8) -> Result<f64> {
        let ys: Vec<f64> = self.arm(a).map(|r| r.y).collect();
        if ys.is_empty() {
            return Err(Error::EmptyArm(a));
        }
        Ok(mean(&ys))
    }
}

/// Compensated (Neumaier) sum, so that means are insensitive to record order
/// at the 1e-15 level.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    stable_sum(values.iter().copied()) / values.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    NonBinaryTreatment { index: usize, value: i64 },
    NonFinite { index: usize, field: String },
    DimensionMismatch {
        index: usize,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    ArmAbsent(u8),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "dataset has no records"),
            Violation::NonBinaryTreatment { index, value } => write!(
                f,
                "record {index}: a={value} violates the binary-treatment invariant (a must be 0 or 1)"
            ),
            Violation::NonFinite { index, field } => {
                write!(f, "record {index}: field {field} is not finite")
            }
            Violation::DimensionMismatch {
                index,
                field,
                expected,
                found,
            } => write!(
                f,
                "record {index}: field {field} has length {found}, expected {expected}"
            ),
            Violation::ArmAbsent(a) => write!(f, "arm {a} absent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Reports every invariant violation in `dataset`. Never fails.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    if dataset.records.is_empty() {
        violations.push(Violation::Empty);
    }
    for (index, r) in dataset.records.iter().enumerate() {
        if r.a > 1 {
            violations.push(Violation::NonBinaryTreatment {
                index,
                value: r.a as i64,
            });
        }
        if r.c.len() != dataset.k {
            violations.push(Violation::DimensionMismatch {
                index,
                field: "c",
                expected: dataset.k,
                found: r.c.len(),
            });
        }
        if r.l.len() != dataset.p {
            violations.push(Violation::DimensionMismatch {
                index,
                field: "l",
                expected: dataset.p,
                found: r.l.len(),
            });
        }
        for (i, v) in r.c.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFinite {
                    index,
                    field: format!("c{}", i + 1),
                });
            }
        }
        for (j, v) in r.l.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFinite {
                    index,
                    field: format!("l{}", j + 1),
                });
            }
        }
        if !r.m.is_finite() {
            violations.push(Violation::NonFinite {
                index,
                field: "m".into(),
            });
        }
        if !r.y.is_finite() {
            violations.push(Violation::NonFinite {
                index,
                field: "y".into(),
            });
        }
    }
    if !dataset.records.is_empty() {
        for a in [0u8, 1] {
            if !dataset.records.iter().any(|r| r.a == a) {
                violations.push(Violation::ArmAbsent(a));
            }
        }
    }
    ValidationReport { violations }
}

/// Fitted mediator regression
/// `m = β0 + β1·a + β2·c + β3·l + β4·(a·c) + β5·(a·l) + Σ β6[i][j]·c_i·l_j + ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftModelFit {
    #[serde(serialize_with = "json::f64_17")]
    pub beta0: f64,
    #[serde(serialize_with = "json::f64_17")]
    pub beta1: f64,
    #[serde(serialize_with = "json::vec_f64_17")]
    pub beta2: Vec<f64>,
    #[serde(serialize_with = "json::vec_f64_17")]
    pub beta3: Vec<f64>,
    #[serde(serialize_with = "json::vec_f64_17")]
    pub beta4: Vec<f64>,
    #[serde(serialize_with = "json::vec_f64_17")]
    pub beta5: Vec<f64>,
    /// k×p, row `i` holds the coefficients of `c_i·l_j`.
    #[serde(serialize_with = "json::matrix_f64_17")]
    pub beta6: Vec<Vec<f64>>,
    #[serde(serialize_with = "json::f64_17")]
    pub residual_sd: f64,
}

impl ShiftModelFit {
    /// Treatment-induced shift of the mediator at `(c, l)`: `β1 + β4·c + β5·l`.
    pub fn shift(&self, c: &[f64], l: &[f64]) -> f64 {
        self.beta1 + dot(&self.beta4, c) + dot(&self.beta5, l)
    }

    /// Conditional mean of the mediator in arm `a`.
    pub fn mean_mediator(&self, a: u8, c: &[f64], l: &[f64]) -> f64 {
        let mut v = self.beta0 + dot(&self.beta2, c) + dot(&self.beta3, l);
        for (i, row) in self.beta6.iter().enumerate() {
            v += c[i] * dot(row, l);
        }
        if a == 1 {
            v += self.shift(c, l);
        }
        v
    }

    pub fn is_zero_shift(&self) -> bool {
        self.beta1 == 0.0
            && self.beta4.iter().all(|&b| b == 0.0)
            && self.beta5.iter().all(|&b| b == 0.0)
    }

    /// Copy of this fit with `β1`, `β4` and `β5` set to zero.
    pub fn without_shift(&self) -> Self {
        ShiftModelFit {
            beta1: 0.0,
            beta4: vec![0.0; self.beta4.len()],
            beta5: vec![0.0; self.beta5.len()],
            ..self.clone()
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One regressor of the outcome model, a function of `(m, l, c)`.
/// Indices are zero-based; labels are one-based (`l1`, `c1`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Constant,
    M,
    L(usize),
    C(usize),
    ML(usize),
    MC(usize),
    CL { c: usize, l: usize },
}

impl Feature {
    pub fn eval(&self, m: f64, l: &[f64], c: &[f64]) -> f64 {
        match *self {
            Feature::Constant => 1.0,
            Feature::M => m,
            Feature::L(j) => l[j],
            Feature::C(i) => c[i],
            Feature::ML(j) => m * l[j],
            Feature::MC(i) => m * c[i],
            Feature::CL { c: i, l: j } => c[i] * l[j],
        }
    }

    fn fits(&self, k: usize, p: usize) -> bool {
        match *self {
            Feature::Constant | Feature::M => true,
            Feature::L(j) | Feature::ML(j) => j < p,
            Feature::C(i) | Feature::MC(i) => i < k,
            Feature::CL { c, l } => c < k && l < p,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Feature::Constant => write!(f, "1"),
            Feature::M => write!(f, "m"),
            Feature::L(j) => write!(f, "l{}", j + 1),
            Feature::C(i) => write!(f, "c{}", i + 1),
            Feature::ML(j) => write!(f, "m*l{}", j + 1),
            Feature::MC(i) => write!(f, "m*c{}", i + 1),
            Feature::CL { c, l } => write!(f, "c{}*l{}", c + 1, l + 1),
        }
    }
}

fn parse_indexed(token: &str, prefix: char) -> Option<usize> {
    let rest = token.strip_prefix(prefix)?;
    let idx: usize = rest.parse().ok()?;
    (idx >= 1).then(|| idx - 1)
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let bad = || Error::InvalidArgument(format!("unknown outcome feature `{token}`"));
        if token == "1" {
            return Ok(Feature::Constant);
        }
        if token == "m" {
            return Ok(Feature::M);
        }
        let parts: Vec<&str> = token.split('*').map(str::trim).collect();
        match parts.as_slice() {
            [single] => parse_indexed(single, 'l')
                .map(Feature::L)
                .or_else(|| parse_indexed(single, 'c').map(Feature::C))
                .ok_or_else(bad),
            [x, y] => {
                let (x, y) = if *y == "m" || (y.starts_with('c') && x.starts_with('l')) {
                    (*y, *x)
                } else {
                    (*x, *y)
                };
                if x == "m" {
                    parse_indexed(y, 'l')
                        .map(Feature::ML)
                        .or_else(|| parse_indexed(y, 'c').map(Feature::MC))
                        .ok_or_else(bad)
                } else {
                    match (parse_indexed(x, 'c'), parse_indexed(y, 'l')) {
                        (Some(c), Some(l)) => Ok(Feature::CL { c, l }),
                        _ => Err(bad()),
                    }
                }
            }
            _ => Err(bad()),
        }
    }
}

/// Ordered list of outcome-model regressors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec(Vec<Feature>);

impl FeatureSpec {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidArgument("outcome feature spec is empty".into()));
        }
        for (i, f) in features.iter().enumerate() {
            if features[..i].contains(f) {
                return Err(Error::InvalidArgument(format!(
                    "outcome feature `{f}` listed twice"
                )));
            }
        }
        Ok(FeatureSpec(features))
    }

    /// `[1, m, l…, c…, m·l…, m·c…]`.
    pub fn default_for(k: usize, p: usize) -> Self {
        let mut f = vec![Feature::Constant, Feature::M];
        f.extend((0..p).map(Feature::L));
        f.extend((0..k).map(Feature::C));
        f.extend((0..p).map(Feature::ML));
        f.extend((0..k).map(Feature::MC));
        FeatureSpec(f)
    }

    /// Parses a comma-separated list such as `1,m,l1,c1,m*l1`.
    pub fn parse(s: &str) -> Result<Self> {
        let features = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(Feature::from_str)
            .collect::<Result<Vec<_>>>()?;
        FeatureSpec::new(features)
    }

    pub fn check_dims(&self, k: usize, p: usize) -> Result<()> {
        match self.0.iter().find(|f| !f.fits(k, p)) {
            Some(f) => Err(Error::DimensionMismatch(format!(
                "outcome feature `{f}` does not exist with k={k}, p={p}"
            ))),
            None => Ok(()),
        }
    }

    pub fn features(&self) -> &[Feature] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.0.iter().map(|f| f.to_string()).collect()
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.labels().join(","))
    }
}

/// Fitted treated-arm outcome regression `f_θ(m, l, c) = Σ θ_j · feature_j(m, l, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModelFit {
    pub features: FeatureSpec,
    pub theta: Vec<f64>,
}

impl OutcomeModelFit {
    pub fn new(features: FeatureSpec, theta: Vec<f64>) -> Result<Self> {
        if features.len() != theta.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcome features but {} coefficients",
                features.len(),
                theta.len()
            )));
        }
        Ok(OutcomeModelFit { features, theta })
    }

    pub fn eval(&self, m: f64, l: &[f64], c: &[f64]) -> f64 {
        self.features
            .features()
            .iter()
            .zip(&self.theta)
            .map(|(f, t)| t * f.eval(m, l, c))
            .sum()
    }
}

impl Serialize for OutcomeModelFit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        #[derive(Serialize)]
        struct Theta<'a>(#[serde(serialize_with = "json::vec_f64_17")] &'a [f64]);
        let mut st = s.serialize_struct("OutcomeModelFit", 2)?;
        st.serialize_field("features", &self.features.labels())?;
        st.serialize_field("theta", &Theta(&self.theta))?;
        st.end()
    }
}

/// Point estimates of `E(Y0)`, `E(Y1)`, `E(Y1^I)` and the organic effects.
///
/// Only [`EffectEstimates::new`] builds values, which guarantees
/// `organic_direct == ey1I - ey0` and `organic_indirect == ey1 - ey1I`
/// bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectEstimates {
    #[serde(serialize_with = "json::f64_17")]
    ey0: f64,
    #[serde(serialize_with = "json::f64_17")]
    ey1: f64,
    #[serde(rename = "ey1I", serialize_with = "json::f64_17")]
    ey1_i: f64,
    #[serde(serialize_with = "json::f64_17")]
    organic_direct: f64,
    #[serde(serialize_with = "json::f64_17")]
    organic_indirect: f64,
}

impl EffectEstimates {
    pub fn new(ey0: f64, ey1: f64, ey1_i: f64) -> Self {
        EffectEstimates {
            ey0,
            ey1,
            ey1_i,
            organic_direct: ey1_i - ey0,
            organic_indirect: ey1 - ey1_i,
        }
    }

    pub fn ey0(&self) -> f64 {
        self.ey0
    }

    pub fn ey1(&self) -> f64 {
        self.ey1
    }

    pub fn ey1_i(&self) -> f64 {
        self.ey1_i
    }

    pub fn organic_direct(&self) -> f64 {
        self.organic_direct
    }

    pub fn organic_indirect(&self) -> f64 {
        self.organic_indirect
    }

    pub fn total(&self) -> f64 {
        self.ey1 - self.ey0
    }

    pub fn values(&self) -> EstimandValues {
        EstimandValues {
            ey0: self.ey0,
            ey1: self.ey1,
            ey1_i: self.ey1_i,
            organic_direct: self.organic_direct,
            organic_indirect: self.organic_indirect,
        }
    }
}

/// A plain per-estimand quantity (standard errors, interval bounds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct EstimandValues {
    #[serde(serialize_with = "json::f64_17")]
    pub ey0: f64,
    #[serde(serialize_with = "json::f64_17")]
    pub ey1: f64,
    #[serde(rename = "ey1I", serialize_with = "json::f64_17")]
    pub ey1_i: f64,
    #[serde(serialize_with = "json::f64_17")]
    pub organic_direct: f64,
    #[serde(serialize_with = "json::f64_17")]
    pub organic_indirect: f64,
}

impl EstimandValues {
    pub const NAMES: [&'static str; 5] = ["ey0", "ey1", "ey1I", "organic_direct", "organic_indirect"];

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.ey0,
            self.ey1,
            self.ey1_i,
            self.organic_direct,
            self.organic_indirect,
        ]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        EstimandValues {
            ey0: v[0],
            ey1: v[1],
            ey1_i: v[2],
            organic_direct: v[3],
            organic_indirect: v[4],
        }
    }
}
