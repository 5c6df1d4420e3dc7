//! Entropy functionals over the alphabet simplex, the recurrent-set
//! dimension formula for uniform-fibre carpets, and the matching
//! lower-bound objective with its maximizer.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::carpet::Carpet;
use crate::rate::Tau;

#[derive(Debug, Error, PartialEq)]
pub enum DimError {
    #[error("carpet does not have uniform fibres; columns (a1, N_j): {0:?}")]
    NonUniformFibre(Vec<(u32, usize)>),
    #[error("tau pair (tau1 = {tau1}, tau2 = {tau2}) violates tau2 = tau1 log_m2 m1 (expected {expected})")]
    InvalidTauPair { tau1: f64, tau2: f64, expected: f64 },
    #[error("tau values {0} and {1} are not a valid pair")]
    InvalidTauCombination(Tau, Tau),
    #[error("objective requires finite tau, got {0}")]
    NonFiniteTau(Tau),
    #[error("invalid probability weights: {0}")]
    InvalidWeights(String),
}

/// A probability vector over a carpet's alphabet, indexed in the
/// carpet's sorted pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(carpet: &Carpet, weights: Vec<f64>) -> Result<Self, DimError> {
        if weights.len() != carpet.alphabet_len() {
            return Err(DimError::InvalidWeights(format!(
                "expected {} weights, got {}",
                carpet.alphabet_len(),
                weights.len()
            )));
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(DimError::InvalidWeights(format!(
                    "weight {w} is not a finite nonnegative number"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DimError::InvalidWeights(format!(
                "weights sum to {sum}, expected 1 within 1e-12"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(carpet: &Carpet) -> Self {
        let n = carpet.alphabet_len();
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(carpet: &Carpet, index: usize) -> Result<Self, DimError> {
        if index >= carpet.alphabet_len() {
            return Err(DimError::InvalidWeights(format!(
                "index {index} out of range"
            )));
        }
        let mut weights = vec![0.0; carpet.alphabet_len()];
        weights[index] = 1.0;
        Ok(Self { weights })
    }

    /// Random interior point of the simplex (normalized exponentials).
    pub fn random<R: Rng>(carpet: &Carpet, rng: &mut R) -> Self {
        let n = carpet.alphabet_len();
        let mut weights: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln().max(1e-12))
            .collect();
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Column marginals `p_{a1} = sum_{b: b1 = a1} p_b`, in the carpet's
    /// column order.
    pub fn column_marginals(&self, carpet: &Carpet) -> Vec<f64> {
        let mut marg = vec![0.0; carpet.num_columns()];
        for (i, &(a1, _)) in carpet.alphabet().iter().enumerate() {
            let col = carpet.column_of(a1).expect("alphabet column present");
            marg[col] += self.weights[i];
        }
        marg
    }
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// The entropies `(H, H1, H2)`: full entropy of `p`, entropy of the
/// column marginal, and the conditional (row-within-column) entropy.
/// Terms with zero weight contribute zero.
pub fn entropies(carpet: &Carpet, p: &ProbabilityVector) -> (f64, f64, f64) {
    let h: f64 = -p.weights().iter().map(|&w| xlnx(w)).sum::<f64>();
    let marg = p.column_marginals(carpet);
    let h1: f64 = -marg.iter().map(|&w| xlnx(w)).sum::<f64>();
    let mut h2 = 0.0;
    for (i, &(a1, _)) in carpet.alphabet().iter().enumerate() {
        let w = p.weight(i);
        if w > 0.0 {
            let q = marg[carpet.column_of(a1).expect("column present")];
            h2 -= w * (w / q).ln();
        }
    }
    (h, h1, h2)
}

/// Case split of the dimension formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimCase {
    /// `log_{m1} m2 > 1 + tau1`.
    Case1,
    /// `log_{m1} m2 <= 1 + tau1`.
    Case2,
    /// `tau1 < 0`: the recurrent set has full dimension.
    EdgeNegativeTau,
    /// `tau1 = infinity`: dimension 0.
    EdgeInfiniteTau,
}

impl DimCase {
    pub fn label(self) -> &'static str {
        match self {
            DimCase::Case1 => "case1",
            DimCase::Case2 => "case2",
            DimCase::EdgeNegativeTau => "edge-negative-tau",
            DimCase::EdgeInfiniteTau => "edge-infinite-tau",
        }
    }
}

/// Which of the competing expressions attains the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Minimizer {
    First,
    Second,
    /// Exact float tie.
    Both,
    /// Edge cases carry a single expression.
    Edge,
}

impl Minimizer {
    pub fn label(self) -> &'static str {
        match self {
            Minimizer::First => "first",
            Minimizer::Second => "second",
            Minimizer::Both => "both",
            Minimizer::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimExpression {
    pub label: &'static str,
    pub value: f64,
}

/// Result of a dimension-formula evaluation: the value, the case split,
/// every competing expression, and the active minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct DimReport {
    pub value: f64,
    pub case: DimCase,
    pub expressions: Vec<DimExpression>,
    pub active: Minimizer,
}

fn require_uniform_fibre(carpet: &Carpet) -> Result<(usize, usize), DimError> {
    match carpet.uniform_fibre_count() {
        Some(n) => Ok((carpet.num_columns(), n)),
        None => Err(DimError::NonUniformFibre(carpet.columns().to_vec())),
    }
}

fn min_report(case: DimCase, e1: DimExpression, e2: DimExpression) -> DimReport {
    let (value, active) = if e1.value == e2.value {
        (e1.value, Minimizer::Both)
    } else if e1.value < e2.value {
        (e1.value, Minimizer::First)
    } else {
        (e2.value, Minimizer::Second)
    };
    DimReport {
        value,
        case,
        expressions: vec![e1, e2],
        active,
    }
}

fn recurrent_set_dimension_impl(
    carpet: &Carpet,
    tau1: Tau,
    tau2: Tau,
    check_linkage: bool,
) -> Result<DimReport, DimError> {
    let (m, n) = require_uniform_fibre(carpet)?;
    let lm1 = f64::from(carpet.m1()).ln();
    let lm2 = f64::from(carpet.m2()).ln();
    let log_m = (m as f64).ln();
    let log_n = (n as f64).ln();

    let (t1, t2) = match (tau1, tau2) {
        (Tau::Negative, Tau::Negative) => {
            return Ok(DimReport {
                value: carpet.hausdorff_dimension(),
                case: DimCase::EdgeNegativeTau,
                expressions: vec![DimExpression {
                    label: "hausdorff-dimension",
                    value: carpet.hausdorff_dimension(),
                }],
                active: Minimizer::Edge,
            })
        }
        (Tau::Infinite, Tau::Infinite) => {
            return Ok(DimReport {
                value: 0.0,
                case: DimCase::EdgeInfiniteTau,
                expressions: vec![DimExpression {
                    label: "zero",
                    value: 0.0,
                }],
                active: Minimizer::Edge,
            })
        }
        (Tau::Finite(t1), Tau::Finite(t2)) => (t1, t2),
        (a, b) => return Err(DimError::InvalidTauCombination(a, b)),
    };

    // Finite negative tau1 behaves like the negative edge.
    if t1 < 0.0 {
        return recurrent_set_dimension_impl(carpet, Tau::Negative, Tau::Negative, false);
    }
    if check_linkage {
        let expected = t1 * lm1 / lm2;
        if (t2 - expected).abs() > 1e-9 {
            return Err(DimError::InvalidTauPair {
                tau1: t1,
                tau2: t2,
                expected,
            });
        }
    }

    let e1 = DimExpression {
        label: "(log_m1 M + log_m2 N)/(1+tau2)",
        value: (log_m / lm1 + log_n / lm2) / (1.0 + t2),
    };
    if lm2 / lm1 > 1.0 + t1 {
        let e2 = DimExpression {
            label: "log_m1 M/(1+tau1) + log_m2 N",
            value: log_m / lm1 / (1.0 + t1) + log_n / lm2,
        };
        Ok(min_report(DimCase::Case1, e1, e2))
    } else {
        let e2 = DimExpression {
            label: "(log_m1 M + log_m1 N)/(1+tau1)",
            value: (log_m / lm1 + log_n / lm1) / (1.0 + t1),
        };
        Ok(min_report(DimCase::Case2, e1, e2))
    }
}

/// Dimension of the recurrent set for a uniform-fibre carpet.
///
/// The pair must satisfy the linkage `tau2 = tau1 log_{m2} m1` forced by
/// a single rate function driving both coordinates (tolerance 1e-9);
/// see [`recurrent_set_dimension_unlinked`] for the exploratory variant.
pub fn recurrent_set_dimension(carpet: &Carpet, tau1: Tau, tau2: Tau) -> Result<DimReport, DimError> {
    recurrent_set_dimension_impl(carpet, tau1, tau2, true)
}

/// Formula evaluator for independent `(tau1, tau2)` pairs. Such pairs do
/// not arise from a single rate function; this exists for exploratory
/// plots only.
pub fn recurrent_set_dimension_unlinked(
    carpet: &Carpet,
    tau1: f64,
    tau2: f64,
) -> Result<DimReport, DimError> {
    recurrent_set_dimension_impl(carpet, Tau::Finite(tau1), Tau::Finite(tau2), false)
}

fn finite_pair(tau1: Tau, tau2: Tau) -> Result<(f64, f64), DimError> {
    match (tau1, tau2) {
        (Tau::Finite(a), Tau::Finite(b)) if a >= 0.0 && b >= 0.0 => Ok((a, b)),
        (Tau::Finite(a), b) if a >= 0.0 => Err(DimError::NonFiniteTau(b)),
        (a, _) => Err(DimError::NonFiniteTau(a)),
    }
}

fn objective_terms(
    carpet: &Carpet,
    h1: f64,
    h2: f64,
    t1: f64,
    t2: f64,
    transposed_form: bool,
) -> (f64, f64) {
    let lm1 = f64::from(carpet.m1()).ln();
    let lm2 = f64::from(carpet.m2()).ln();
    let case1 = lm2 / lm1 > 1.0 + t1;
    if transposed_form {
        // Variant with the H1/H2 coefficient roles exchanged; kept for
        // comparison. At uniform p it does not reproduce the dimension
        // formula unless m1 = m2.
        let e1 = (h1 * lm1 / lm2 + h2) / ((1.0 + t2) * lm1);
        let e2 = if case1 {
            h1 / lm2 + h2 / ((1.0 + t1) * lm1)
        } else {
            (h1 + h2) / ((1.0 + t1) * lm1)
        };
        (e1, e2)
    } else {
        let e1 = (h1 / lm1 + h2 / lm2) / (1.0 + t2);
        let e2 = if case1 {
            h1 / ((1.0 + t1) * lm1) + h2 / lm2
        } else {
            (h1 + h2) / ((1.0 + t1) * lm1)
        };
        (e1, e2)
    }
}

/// The lower-bound objective: the case-dependent minimum of the two
/// entropy expressions whose value at uniform `p` equals the dimension
/// formula.
pub fn lower_objective(
    carpet: &Carpet,
    p: &ProbabilityVector,
    tau1: Tau,
    tau2: Tau,
) -> Result<f64, DimError> {
    require_uniform_fibre(carpet)?;
    let (t1, t2) = finite_pair(tau1, tau2)?;
    let (_, h1, h2) = entropies(carpet, p);
    let (e1, e2) = objective_terms(carpet, h1, h2, t1, t2, false);
    Ok(e1.min(e2))
}

/// Variant of the objective with the roles of `H1` and `H2` in the
/// coefficients exchanged (debug aid for comparing the two layouts; see
/// `lower_objective` for the form that matches the dimension formula at
/// uniform `p`).
pub fn lower_objective_transposed(
    carpet: &Carpet,
    p: &ProbabilityVector,
    tau1: Tau,
    tau2: Tau,
) -> Result<f64, DimError> {
    require_uniform_fibre(carpet)?;
    let (t1, t2) = finite_pair(tau1, tau2)?;
    let (_, h1, h2) = entropies(carpet, p);
    let (e1, e2) = objective_terms(carpet, h1, h2, t1, t2, true);
    Ok(e1.min(e2))
}

/// Options for [`maximize_objective`].
#[derive(Debug, Clone)]
pub struct MaximizeOpts {
    /// Seed for the random restarts; fixed seed gives a reproducible run.
    pub seed: u64,
    /// Number of random interior starting points besides uniform.
    pub restarts: usize,
    /// Gradient steps per temperature stage.
    pub iterations: usize,
    /// Certified slack: the returned value is within this of the best
    /// value seen at any evaluated point.
    pub tolerance: f64,
    /// Run the dense simplex-grid validation when the alphabet is at
    /// most this large.
    pub grid_max_alphabet: usize,
    /// Grid resolution (weights are multiples of 1/resolution).
    pub grid_resolution: usize,
}

impl Default for MaximizeOpts {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            iterations: 200,
            tolerance: 1e-6,
            grid_max_alphabet: 6,
            grid_resolution: 24,
        }
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let n = v.len();
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut total = 0.0;
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
        total += *x;
    }
    // Renormalize away accumulated rounding.
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    } else {
        for x in v.iter_mut() {
            *x = 1.0 / n as f64;
        }
    }
}

/// Maximize `lower_objective` over the simplex.
///
/// The objective is a minimum of concave entropy expressions, hence
/// concave; projected gradient ascent on a log-sum-exp smoothed minimum
/// with a decreasing temperature ladder converges from any start. Runs
/// from uniform and `opts.restarts` random interior points, keeps the
/// best exactly-evaluated point, and for small alphabets validates
/// against a dense simplex grid.
pub fn maximize_objective(
    carpet: &Carpet,
    tau1: Tau,
    tau2: Tau,
    opts: &MaximizeOpts,
) -> Result<(ProbabilityVector, f64), DimError> {
    require_uniform_fibre(carpet)?;
    let (t1, t2) = finite_pair(tau1, tau2)?;
    let k = carpet.alphabet_len();
    let lm1 = f64::from(carpet.m1()).ln();
    let lm2 = f64::from(carpet.m2()).ln();
    let case1 = lm2 / lm1 > 1.0 + t1;

    let eval = |w: &[f64]| -> f64 {
        let p = ProbabilityVector {
            weights: w.to_vec(),
        };
        let (_, h1, h2) = entropies(carpet, &p);
        let (e1, e2) = objective_terms(carpet, h1, h2, t1, t2, false);
        e1.min(e2)
    };

    let uniform = vec![1.0 / k as f64; k];
    let mut best = uniform.clone();
    let mut best_val = eval(&uniform);

    if k == 1 {
        return Ok((ProbabilityVector { weights: best }, best_val));
    }

    // Gradient of (e1, e2) in terms of dH1/dp and dH2/dp.
    let column_of: Vec<usize> = carpet
        .alphabet()
        .iter()
        .map(|&(a1, _)| carpet.column_of(a1).expect("column present"))
        .collect();
    let grad = |w: &[f64], weight1: f64, weight2: f64, out: &mut [f64]| {
        // weight1, weight2: softmax weights of the two expressions.
        let p = ProbabilityVector {
            weights: w.to_vec(),
        };
        let marg = p.column_marginals(carpet);
        // Coefficients (c1, c2) of H1 and H2 in each expression.
        let (a1c, a2c) = if case1 {
            (
                (1.0 / lm1 / (1.0 + t2), 1.0 / lm2 / (1.0 + t2)),
                (1.0 / ((1.0 + t1) * lm1), 1.0 / lm2),
            )
        } else {
            (
                (1.0 / lm1 / (1.0 + t2), 1.0 / lm2 / (1.0 + t2)),
                (1.0 / ((1.0 + t1) * lm1), 1.0 / ((1.0 + t1) * lm1)),
            )
        };
        let ch1 = weight1 * a1c.0 + weight2 * a2c.0;
        let ch2 = weight1 * a1c.1 + weight2 * a2c.1;
        for (i, g) in out.iter_mut().enumerate() {
            let pa = w[i].max(1e-18);
            let q = marg[column_of[i]].max(1e-18);
            let dh1 = -(1.0 + q.ln());
            let dh = -(1.0 + pa.ln());
            let dh2 = dh - dh1;
            *g = ch1 * dh1 + ch2 * dh2;
        }
    };

    let exprs = |w: &[f64]| -> (f64, f64) {
        let p = ProbabilityVector {
            weights: w.to_vec(),
        };
        let (_, h1, h2) = entropies(carpet, &p);
        objective_terms(carpet, h1, h2, t1, t2, false)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![uniform.clone()];
    for _ in 0..opts.restarts {
        starts.push(ProbabilityVector::random(carpet, &mut rng).weights.clone());
    }

    let temperatures = [0.1, 0.01, 0.001];
    let mut g = vec![0.0; k];
    for start in starts {
        let mut w = start;
        for &temp in &temperatures {
            let mut step = 0.25;
            for _ in 0..opts.iterations {
                let (e1, e2) = exprs(&w);
                // Softmax weights of the smoothed minimum.
                let m = e1.min(e2);
                let z1 = (-(e1 - m) / temp).exp();
                let z2 = (-(e2 - m) / temp).exp();
                let (s1, s2) = (z1 / (z1 + z2), z2 / (z1 + z2));
                grad(&w, s1, s2, &mut g);
                let cur = e1.min(e2);
                if cur > best_val {
                    best_val = cur;
                    best.copy_from_slice(&w);
                }
                let mut trial = w.clone();
                for i in 0..k {
                    trial[i] += step * g[i];
                }
                project_simplex(&mut trial);
                if eval(&trial) >= cur {
                    w = trial;
                } else {
                    step *= 0.5;
                    if step < 1e-12 {
                        break;
                    }
                }
            }
        }
        let final_val = eval(&w);
        if final_val > best_val {
            best_val = final_val;
            best.copy_from_slice(&w);
        }
    }

    // Dense grid validation for small alphabets.
    if k <= opts.grid_max_alphabet {
        let r = opts.grid_resolution;
        let mut comp = vec![0usize; k];
        let mut w = vec![0.0; k];
        grid_walk(&mut comp, 0, r, &mut |c| {
            for i in 0..k {
                w[i] = c[i] as f64 / r as f64;
            }
            let v = eval(&w);
            if v > best_val {
                best_val = v;
                best.copy_from_slice(&w);
            }
        });
    }

    Ok((ProbabilityVector { weights: best }, best_val))
}

/// Enumerate all compositions of `remaining` into `comp[pos..]`.
fn grid_walk(comp: &mut Vec<usize>, pos: usize, remaining: usize, f: &mut impl FnMut(&[usize])) {
    if pos == comp.len() - 1 {
        comp[pos] = remaining;
        f(comp);
        return;
    }
    for v in 0..=remaining {
        comp[pos] = v;
        grid_walk(comp, pos + 1, remaining - v, f);
    }
}
