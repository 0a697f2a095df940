//! Structural causal model generator for the DAG
//!
//! ```text
//!   C ──► L, M, Y      A ──► L ──► M ──► Y      A ──► M, Y      L ──► Y
//! ```
//!
//! with Gaussian noise, plus counterfactual draws that realize the organic
//! intervention directly: under treatment, the mediator is redrawn from the
//! control-arm mediator equation evaluated at the treated value of `L`, with
//! fresh mediator noise, and the treated outcome equation is applied to it.
//!
//! Within a unit, the potential values under `a = 0` and `a = 1` share their
//! noise draws. Only marginal laws enter any estimand, so the coupling is a
//! convenience for exact tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, stable_sum, Dataset, EffectEstimates, EstimandValues, ObservedRecord};
use crate::rng;

/// Independent Gaussian pre-treatment covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CovariateLaw {
    #[serde(default)]
    pub mean: Vec<f64>,
    #[serde(default)]
    pub sd: Vec<f64>,
}

/// `L_j = intercept_j + a_effect_j·a + Σ_i c_effect[j][i]·c_i + ε_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PostTreatmentEquation {
    #[serde(default)]
    pub intercept: Vec<f64>,
    #[serde(default)]
    pub a_effect: Vec<f64>,
    /// p×k; an empty list means no effect of `C`.
    #[serde(default)]
    pub c_effect: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise_sd: Vec<f64>,
}

/// `M = β0 + β1·a + β2·c + β3·l + β4·(a·c) + β5·(a·l) + c'β6 l + ε`.
/// Empty `beta4`, `beta5`, `beta6` mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MediatorEquation {
    pub beta0: f64,
    pub beta1: f64,
    #[serde(default)]
    pub beta2: Vec<f64>,
    #[serde(default)]
    pub beta3: Vec<f64>,
    #[serde(default)]
    pub beta4: Vec<f64>,
    #[serde(default)]
    pub beta5: Vec<f64>,
    #[serde(default)]
    pub beta6: Vec<Vec<f64>>,
    pub noise_sd: f64,
}

/// `Y = γ0 + γa·a + γm·m + γl·l + γc·c + γam·a·m + m·(γml·l) + m·(γmc·c) + ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutcomeEquation {
    pub gamma0: f64,
    pub gamma_a: f64,
    pub gamma_m: f64,
    #[serde(default)]
    pub gamma_l: Vec<f64>,
    #[serde(default)]
    pub gamma_c: Vec<f64>,
    #[serde(default)]
    pub gamma_am: f64,
    #[serde(default)]
    pub gamma_ml: Vec<f64>,
    #[serde(default)]
    pub gamma_mc: Vec<f64>,
    pub noise_sd: f64,
}

/// Generator configuration.
///
/// With `discretize`, `C`, `L` and `M` are replaced by the indicator of
/// being positive right after each is generated, and downstream equations
/// use the indicators. `Y` stays continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScmSpec {
    pub k: usize,
    pub p: usize,
    pub treat_prob: f64,
    #[serde(default)]
    pub c: CovariateLaw,
    #[serde(default)]
    pub l: PostTreatmentEquation,
    pub m: MediatorEquation,
    pub y: OutcomeEquation,
    #[serde(default)]
    pub discretize: bool,
}

fn fill(v: &mut Vec<f64>, len: usize) {
    if v.is_empty() {
        *v = vec![0.0; len];
    }
}

fn fill_matrix(v: &mut Vec<Vec<f64>>, rows: usize, cols: usize) {
    if v.is_empty() && cols > 0 {
        *v = vec![vec![0.0; cols]; rows];
    }
}

impl ScmSpec {
    /// Parses the JSON configuration format; omitted interaction terms
    /// default to zero.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut spec: ScmSpec = serde_json::from_str(text)?;
        spec.fill_defaults();
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Replaces omitted (empty) optional coefficient lists with zeros.
    pub fn fill_defaults(&mut self) {
        let (k, p) = (self.k, self.p);
        fill(&mut self.c.mean, k);
        fill(&mut self.c.sd, k);
        fill(&mut self.l.intercept, p);
        fill(&mut self.l.a_effect, p);
        fill_matrix(&mut self.l.c_effect, p, k);
        if k == 0 && self.l.c_effect.is_empty() {
            self.l.c_effect = vec![Vec::new(); p];
        }
        fill(&mut self.l.noise_sd, p);
        fill(&mut self.m.beta2, k);
        fill(&mut self.m.beta3, p);
        fill(&mut self.m.beta4, k);
        fill(&mut self.m.beta5, p);
        fill_matrix(&mut self.m.beta6, k, p);
        if p == 0 && self.m.beta6.is_empty() {
            self.m.beta6 = vec![Vec::new(); k];
        }
        fill(&mut self.y.gamma_l, p);
        fill(&mut self.y.gamma_c, k);
        fill(&mut self.y.gamma_ml, p);
        fill(&mut self.y.gamma_mc, k);
    }

    pub fn validate(&self) -> Result<()> {
        let (k, p) = (self.k, self.p);
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.treat_prob > 0.0 && self.treat_prob < 1.0) {
            return bad(format!("treat_prob must lie in (0, 1), got {}", self.treat_prob));
        }
        let lens: [(&str, usize, usize); 14] = [
            ("c.mean", self.c.mean.len(), k),
            ("c.sd", self.c.sd.len(), k),
            ("l.intercept", self.l.intercept.len(), p),
            ("l.a_effect", self.l.a_effect.len(), p),
            ("l.c_effect", self.l.c_effect.len(), p),
            ("l.noise_sd", self.l.noise_sd.len(), p),
            ("m.beta2", self.m.beta2.len(), k),
            ("m.beta3", self.m.beta3.len(), p),
            ("m.beta4", self.m.beta4.len(), k),
            ("m.beta5", self.m.beta5.len(), p),
            ("m.beta6", self.m.beta6.len(), k),
            ("y.gamma_l", self.y.gamma_l.len(), p),
            ("y.gamma_c", self.y.gamma_c.len(), k),
            ("y.gamma_ml", self.y.gamma_ml.len(), p),
        ];
        for (name, got, want) in lens {
            if got != want {
                return bad(format!("{name} has length {got}, expected {want}"));
            }
        }
        if self.y.gamma_mc.len() != k {
            return bad(format!("y.gamma_mc has length {}, expected {k}", self.y.gamma_mc.len()));
        }
        if self.l.c_effect.iter().any(|row| row.len() != k) {
            return bad(format!("l.c_effect rows must have length {k}"));
        }
        if self.m.beta6.iter().any(|row| row.len() != p) {
            return bad(format!("m.beta6 rows must have length {p}"));
        }
        let scalars = [
            self.m.beta0,
            self.m.beta1,
            self.m.noise_sd,
            self.y.gamma0,
            self.y.gamma_a,
            self.y.gamma_m,
            self.y.gamma_am,
            self.y.noise_sd,
        ];
        let all_finite = scalars.iter().all(|v| v.is_finite())
            && [
                &self.c.mean,
                &self.c.sd,
                &self.l.intercept,
                &self.l.a_effect,
                &self.l.noise_sd,
                &self.m.beta2,
                &self.m.beta3,
                &self.m.beta4,
                &self.m.beta5,
                &self.y.gamma_l,
                &self.y.gamma_c,
                &self.y.gamma_ml,
                &self.y.gamma_mc,
            ]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
            && self.l.c_effect.iter().flatten().all(|x| x.is_finite())
            && self.m.beta6.iter().flatten().all(|x| x.is_finite());
        if !all_finite {
            return bad("all coefficients must be finite".into());
        }
        let sds_ok = self.c.sd.iter().chain(&self.l.noise_sd).all(|s| *s >= 0.0)
            && self.m.noise_sd >= 0.0
            && self.y.noise_sd >= 0.0;
        if !sds_ok {
            return bad("standard deviations must be nonnegative".into());
        }
        Ok(())
    }

    /// Linear-Gaussian model with k = p = 1 whose estimands are
    /// `E(Y0) = 0`, `E(Y1^I) = 2`, `E(Y1) = 3`:
    /// `L = A + ε`, `M = A + L + ε`, `Y = A + M + ε`, all noise sd 1, `C ~ N(0, 1)`
    /// without downstream effects.
    pub fn example_linear_gaussian() -> Self {
        ScmSpec {
            k: 1,
            p: 1,
            treat_prob: 0.5,
            c: CovariateLaw {
                mean: vec![0.0],
                sd: vec![1.0],
            },
            l: PostTreatmentEquation {
                intercept: vec![0.0],
                a_effect: vec![1.0],
                c_effect: vec![vec![0.0]],
                noise_sd: vec![1.0],
            },
            m: MediatorEquation {
                beta0: 0.0,
                beta1: 1.0,
                beta2: vec![0.0],
                beta3: vec![1.0],
                beta4: vec![0.0],
                beta5: vec![0.0],
                beta6: vec![vec![0.0]],
                noise_sd: 1.0,
            },
            y: OutcomeEquation {
                gamma0: 0.0,
                gamma_a: 1.0,
                gamma_m: 1.0,
                gamma_l: vec![0.0],
                gamma_c: vec![0.0],
                gamma_am: 0.0,
                gamma_ml: vec![0.0],
                gamma_mc: vec![0.0],
                noise_sd: 1.0,
            },
            discretize: false,
        }
    }

    fn squash(&self, v: f64) -> f64 {
        if self.discretize {
            if v > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            v
        }
    }

    fn post_treatment(&self, a: f64, c: &[f64], noise: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|j| {
                let v = self.l.intercept[j] + self.l.a_effect[j] * a + dot(&self.l.c_effect[j], c) + noise[j];
                self.squash(v)
            })
            .collect()
    }

    fn mediator(&self, a: f64, c: &[f64], l: &[f64], noise: f64) -> f64 {
        let eq = &self.m;
        let mut v = eq.beta0 + eq.beta1 * a + dot(&eq.beta2, c) + dot(&eq.beta3, l);
        v += a * (dot(&eq.beta4, c) + dot(&eq.beta5, l));
        for (ci, row) in c.iter().zip(&eq.beta6) {
            v += ci * dot(row, l);
        }
        self.squash(v + noise)
    }

    fn outcome(&self, a: f64, c: &[f64], l: &[f64], m: f64, noise: f64) -> f64 {
        let eq = &self.y;
        eq.gamma0
            + eq.gamma_a * a
            + eq.gamma_m * m
            + dot(&eq.gamma_l, l)
            + dot(&eq.gamma_c, c)
            + eq.gamma_am * a * m
            + m * dot(&eq.gamma_ml, l)
            + m * dot(&eq.gamma_mc, c)
            + noise
    }

    fn has_interactions(&self) -> bool {
        let nonzero = |v: &[f64]| v.iter().any(|x| *x != 0.0);
        nonzero(&self.m.beta4)
            || nonzero(&self.m.beta5)
            || self.m.beta6.iter().any(|r| nonzero(r))
            || self.y.gamma_am != 0.0
            || nonzero(&self.y.gamma_ml)
            || nonzero(&self.y.gamma_mc)
    }
}

/// All potential values of one unit plus its assigned treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualDraw {
    pub a: u8,
    pub c: Vec<f64>,
    pub l0: Vec<f64>,
    pub l1: Vec<f64>,
    pub m0: f64,
    pub m1: f64,
    pub m1_i: f64,
    pub y0: f64,
    pub y1: f64,
    pub y1_i: f64,
}

impl CounterfactualDraw {
    /// The record seen under consistency: `(L, M, Y) = (L_a, M_a, Y_a)`.
    pub fn observed(&self) -> ObservedRecord {
        if self.a == 1 {
            ObservedRecord::new(1, self.c.clone(), self.l1.clone(), self.m1, self.y1)
        } else {
            ObservedRecord::new(0, self.c.clone(), self.l0.clone(), self.m0, self.y0)
        }
    }
}

fn draw_unit(spec: &ScmSpec, rng: &mut ChaCha8Rng) -> CounterfactualDraw {
    let a = if rng.random::<f64>() < spec.treat_prob { 1u8 } else { 0 };
    let mut normal = || rng.sample::<f64, _>(StandardNormal);
    let c: Vec<f64> = (0..spec.k)
        .map(|i| spec.squash(spec.c.mean[i] + spec.c.sd[i] * normal()))
        .collect();
    let l_noise: Vec<f64> = (0..spec.p).map(|j| spec.l.noise_sd[j] * normal()).collect();
    let m_noise = spec.m.noise_sd * normal();
    let m_noise_fresh = spec.m.noise_sd * normal();
    let y_noise = spec.y.noise_sd * normal();

    let l0 = spec.post_treatment(0.0, &c, &l_noise);
    let l1 = spec.post_treatment(1.0, &c, &l_noise);
    let m0 = spec.mediator(0.0, &c, &l0, m_noise);
    let m1 = spec.mediator(1.0, &c, &l1, m_noise);
    // control-arm mediator law at the treated L, fresh noise
    let m1_i = spec.mediator(0.0, &c, &l1, m_noise_fresh);
    let y0 = spec.outcome(0.0, &c, &l0, m0, y_noise);
    let y1 = spec.outcome(1.0, &c, &l1, m1, y_noise);
    let y1_i = spec.outcome(1.0, &c, &l1, m1_i, y_noise);
    CounterfactualDraw {
        a,
        c,
        l0,
        l1,
        m0,
        m1,
        m1_i,
        y0,
        y1,
        y1_i,
    }
}

/// `n` i.i.d. units; unit `i` uses its own RNG stream derived from `(seed, i)`.
pub fn draw_counterfactuals(spec: &ScmSpec, n: usize, seed: u64) -> Result<Vec<CounterfactualDraw>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| draw_unit(spec, &mut rng::stream(seed, rng::SIMULATION, i as u64)))
        .collect())
}

/// Observed data under randomized treatment and consistency.
pub fn simulate_observed(spec: &ScmSpec, n: usize, seed: u64) -> Result<Dataset> {
    let draws = draw_counterfactuals(spec, n, seed)?;
    Ok(Dataset::new(
        spec.k,
        spec.p,
        draws.iter().map(CounterfactualDraw::observed).collect(),
    ))
}

/// Monte Carlo means of the potential outcomes with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEffects {
    pub effects: EffectEstimates,
    /// `sd / sqrt(n)` per estimand, the effects using per-unit differences.
    pub se: EstimandValues,
    pub n: usize,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = stable_sum(values.iter().copied()) / n;
    let ss = stable_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

pub fn oracle_effects(spec: &ScmSpec, n: usize, seed: u64) -> Result<OracleEffects> {
    if n < 2 {
        return Err(Error::InvalidArgument("oracle needs n >= 2".into()));
    }
    let draws = draw_counterfactuals(spec, n, seed)?;
    let col = |f: &dyn Fn(&CounterfactualDraw) -> f64| draws.iter().map(f).collect::<Vec<f64>>();
    let (ey0, se0) = mean_and_se(&col(&|d| d.y0));
    let (ey1, se1) = mean_and_se(&col(&|d| d.y1));
    let (ey1_i, se1i) = mean_and_se(&col(&|d| d.y1_i));
    let (_, se_direct) = mean_and_se(&col(&|d| d.y1_i - d.y0));
    let (_, se_indirect) = mean_and_se(&col(&|d| d.y1 - d.y1_i));
    Ok(OracleEffects {
        effects: EffectEstimates::new(ey0, ey1, ey1_i),
        se: EstimandValues {
            ey0: se0,
            ey1: se1,
            ey1_i: se1i,
            organic_direct: se_direct,
            organic_indirect: se_indirect,
        },
        n,
    })
}

/// Result of [`closed_form_effects`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Exact(EffectEstimates),
    /// The spec lies outside the linear-Gaussian family without interactions.
    Unsupported(&'static str),
}

/// Exact expectations by linearity for specs without interaction terms and
/// without discretization.
pub fn closed_form_effects(spec: &ScmSpec) -> Result<ClosedForm> {
    spec.validate()?;
    if spec.discretize {
        return Ok(ClosedForm::Unsupported("discretized specs have no linear closed form"));
    }
    if spec.has_interactions() {
        return Ok(ClosedForm::Unsupported(
            "closed form requires beta4 = beta5 = beta6 = 0 and no outcome interactions",
        ));
    }
    let ec = &spec.c.mean;
    let el = |a: f64| -> Vec<f64> {
        (0..spec.p)
            .map(|j| spec.l.intercept[j] + a * spec.l.a_effect[j] + dot(&spec.l.c_effect[j], ec))
            .collect()
    };
    let (el0, el1) = (el(0.0), el(1.0));
    let m = &spec.m;
    let em0 = m.beta0 + dot(&m.beta2, ec) + dot(&m.beta3, &el0);
    let em1_i = m.beta0 + dot(&m.beta2, ec) + dot(&m.beta3, &el1);
    let em1 = em1_i + m.beta1;
    let y = &spec.y;
    let ey = |a: f64, em: f64, el: &[f64]| y.gamma0 + y.gamma_a * a + y.gamma_m * em + dot(&y.gamma_l, el) + dot(&y.gamma_c, ec);
    Ok(ClosedForm::Exact(EffectEstimates::new(
        ey(0.0, em0, &el0),
        ey(1.0, em1, &el1),
        ey(1.0, em1_i, &el1),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inert_spec(noise: f64) -> ScmSpec {
        let mut s = ScmSpec::example_linear_gaussian();
        s.l.a_effect = vec![0.0];
        s.l.noise_sd = vec![noise];
        s.m.beta1 = 0.0;
        s.m.noise_sd = noise;
        s.y.gamma_a = 0.0;
        s.y.noise_sd = noise;
        s
    }

    #[test]
    fn inert_noiseless_treatment_makes_worlds_equal() {
        for d in draw_counterfactuals(&inert_spec(0.0), 200, 5).unwrap() {
            assert_eq!(d.l0, d.l1);
            assert_eq!(d.m0, d.m1);
            assert_eq!(d.m1, d.m1_i);
            assert_eq!(d.y0, d.y1);
            assert_eq!(d.y1, d.y1_i);
        }
    }

    #[test]
    fn shared_noise_pairs_are_bitwise_equal() {
        for d in draw_counterfactuals(&inert_spec(1.0), 200, 6).unwrap() {
            assert!(d.l0.iter().zip(&d.l1).all(|(x, y)| x.to_bits() == y.to_bits()));
            assert_eq!(d.m0.to_bits(), d.m1.to_bits());
            assert_eq!(d.y0.to_bits(), d.y1.to_bits());
        }
    }

    #[test]
    fn outcome_ignoring_mediator_has_no_indirect_path() {
        let mut s = ScmSpec::example_linear_gaussian();
        s.y.gamma_m = 0.0;
        s.m.beta4 = vec![0.7];
        for d in draw_counterfactuals(&s, 300, 7).unwrap() {
            assert_eq!(d.y1_i, d.y1);
        }
        let o = oracle_effects(&s, 20_000, 8).unwrap();
        assert!(o.effects.organic_indirect().abs() <= 3.0 * o.se.organic_indirect.max(1e-300));
    }

    #[test]
    fn consistency_and_determinism() {
        let s = ScmSpec::example_linear_gaussian();
        let draws = draw_counterfactuals(&s, 500, 42).unwrap();
        assert_eq!(draws, draw_counterfactuals(&s, 500, 42).unwrap());
        assert_ne!(draws, draw_counterfactuals(&s, 500, 43).unwrap());
        let ds = simulate_observed(&s, 500, 42).unwrap();
        for (d, r) in draws.iter().zip(ds.records()) {
            if d.a == 1 {
                assert_eq!((&r.l, r.m, r.y), (&d.l1, d.m1, d.y1));
            } else {
                assert_eq!((&r.l, r.m, r.y), (&d.l0, d.m0, d.y0));
            }
        }
        // prefix property of per-unit streams
        assert_eq!(&draw_counterfactuals(&s, 100, 42).unwrap()[..], &draws[..100]);
    }

    #[test]
    fn intercept_only_spec() {
        let mut s = inert_spec(0.0);
        s.c.sd = vec![0.0];
        s.m.beta0 = 1.0;
        s.m.beta3 = vec![0.0];
        s.y.gamma0 = 2.0;
        s.y.gamma_m = 0.0;
        for r in simulate_observed(&s, 50, 1).unwrap().records() {
            assert_eq!((r.m, r.y), (1.0, 2.0));
        }
    }

    #[test]
    fn treated_fraction_within_binomial_bound() {
        let n = 100_000;
        let ds = simulate_observed(&ScmSpec::example_linear_gaussian(), n, 9).unwrap();
        let frac = ds.arm_count(1) as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt(), "{frac}");
    }

    #[test]
    fn control_mediator_mean_matches_moments() {
        let mut s = ScmSpec::example_linear_gaussian();
        s.c.mean = vec![0.5];
        s.l.intercept = vec![0.3];
        s.l.c_effect = vec![vec![0.8]];
        s.m.beta0 = -1.0;
        s.m.beta2 = vec![2.0];
        let ds = simulate_observed(&s, 100_000, 10).unwrap();
        let ms: Vec<f64> = ds.arm(0).map(|r| r.m).collect();
        let (mean, se) = mean_and_se(&ms);
        let el0 = 0.3 + 0.8 * 0.5;
        let expected = -1.0 + 2.0 * 0.5 + 1.0 * el0;
        assert!((mean - expected).abs() <= 4.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn closed_form_example_values() {
        let ClosedForm::Exact(e) = closed_form_effects(&ScmSpec::example_linear_gaussian()).unwrap() else {
            panic!("expected exact closed form");
        };
        assert_eq!((e.ey0(), e.ey1_i(), e.ey1()), (0.0, 2.0, 3.0));
        assert_eq!((e.organic_direct(), e.organic_indirect()), (2.0, 1.0));

        let ClosedForm::Exact(e) = closed_form_effects(&inert_spec(1.0)).unwrap() else {
            panic!("expected exact closed form");
        };
        assert_eq!(e.organic_direct(), 0.0);
        assert_eq!(e.organic_indirect(), 0.0);

        let mut s = ScmSpec::example_linear_gaussian();
        s.m.beta4 = vec![0.1];
        assert!(matches!(closed_form_effects(&s).unwrap(), ClosedForm::Unsupported(_)));
    }

    #[test]
    fn oracle_matches_closed_form_for_example() {
        let s = ScmSpec::example_linear_gaussian();
        let o = oracle_effects(&s, 50_000, 42).unwrap();
        let truth = [0.0, 3.0, 2.0, 2.0, 1.0];
        for ((est, se), t) in o.effects.values().to_array().iter().zip(o.se.to_array()).zip(truth) {
            assert!((est - t).abs() <= 4.0 * se, "{est} vs {t} (se {se})");
        }
        let inert = oracle_effects(&inert_spec(1.0), 20_000, 3).unwrap();
        assert!(inert.effects.organic_direct().abs() <= 3.0 * inert.se.organic_direct);
        assert_eq!(inert.effects.organic_indirect(), inert.effects.ey1() - inert.effects.ey1_i());
    }

    #[test]
    fn json_defaults_and_validation() {
        let text = r#"{"k":0,"p":1,"treat_prob":0.4,
            "l":{"intercept":[0.0],"a_effect":[1.0],"noise_sd":[1.0]},
            "m":{"beta0":0.0,"beta1":1.0,"beta3":[1.0],"noise_sd":1.0},
            "y":{"gamma0":0.0,"gamma_a":1.0,"gamma_m":1.0,"gamma_l":[0.5],"noise_sd":1.0}}"#;
        let spec = ScmSpec::from_json(text).unwrap();
        assert_eq!(spec.m.beta5, vec![0.0]);
        assert_eq!(spec.l.c_effect, vec![Vec::<f64>::new()]);
        assert_eq!(ScmSpec::from_json(&spec.to_json().unwrap()).unwrap(), spec);

        let mut bad = spec.clone();
        bad.treat_prob = 1.0;
        assert!(matches!(bad.validate(), Err(Error::InvalidSpec(_))));
        let mut bad = spec.clone();
        bad.m.beta3 = vec![1.0, 2.0];
        assert!(bad.validate().is_err());
        let mut bad = spec;
        bad.y.noise_sd = -1.0;
        assert!(bad.validate().is_err());
        assert!(ScmSpec::from_json(r#"{"k":0}"#).is_err());
    }

    #[test]
    fn discretized_values_are_binary() {
        let mut s = ScmSpec::example_linear_gaussian();
        s.discretize = true;
        for d in draw_counterfactuals(&s, 300, 2).unwrap() {
            for v in d.c.iter().chain(&d.l0).chain(&d.l1).chain([&d.m0, &d.m1, &d.m1_i]) {
                assert!(*v == 0.0 || *v == 1.0);
            }
        }
        assert!(matches!(closed_form_effects(&s).unwrap(), ClosedForm::Unsupported(_)));
    }
}
