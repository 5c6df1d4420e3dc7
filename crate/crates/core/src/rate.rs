//! Rate functions: the shrinking radius `psi(n)` of the recurrence
//! condition, the digit counts `l_i(n) = -log_{m_i} psi(n)` and their
//! ceilings, and the decay exponents `tau_i`.
//!
//! Ceilings and strict comparisons against `psi(n)` never go through a
//! bare float ceiling: where the parameters allow it, the comparison is
//! settled by exact integer powers (every `f64` is a dyadic rational).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::exact::{dyadic, ln_rational, rpow};
use crate::symbolic::Coord;

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("bases must satisfy 2 <= m1 <= m2, got ({0}, {1})")]
    BadBases(u32, u32),
    #[error("invalid rate parameter: {0}")]
    InvalidParameter(String),
    #[error("table rate is empty")]
    EmptyTable,
    #[error("n = {n} exceeds table horizon {horizon}")]
    HorizonExceeded { n: u64, horizon: u64 },
    #[error("table has no entry for n = {0}")]
    MissingEntry(u64),
    #[error("rate spec parse error: {0}")]
    Parse(String),
}

/// Decay exponent `tau_i = liminf -log_{m_i} psi(n) / n` as an extended
/// value. `Negative` flags rates that eventually exceed `m_i^{eps n}`;
/// formulas short-circuit on it rather than carrying a sentinel float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Negative,
    Finite(f64),
    Infinite,
}

impl Tau {
    pub fn finite(self) -> Option<f64> {
        match self {
            Tau::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl std::fmt::Display for Tau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tau::Negative => write!(f, "negative"),
            Tau::Finite(v) => write!(f, "{v}"),
            Tau::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Family {
    /// `psi(n) = c n^{-gamma} m1^{-t n}` with `t >= 0`, `c > 0`.
    PowerExp {
        t: f64,
        gamma: f64,
        c: f64,
        exact: PowExpExact,
    },
    /// Tabulated positive values; exact rationals so that extreme decay
    /// (far below `f64` underflow) still compares exactly.
    Table { values: BTreeMap<u64, BigRational> },
}

/// Exact dyadic decomposition of the parameters, precomputed once:
/// `t = t_num / t_den`, `gamma = g_num / g_den` (reduced, denominators
/// powers of two), `c = c_num / c_den`. Every finite `f64` decomposes
/// this way exactly.
#[derive(Debug, Clone, PartialEq)]
struct PowExpExact {
    t_num: u128,
    t_den: u128,
    g_num: i128,
    g_den: u128,
    c_num: BigUint,
    c_den: BigUint,
}

impl PowExpExact {
    fn new(t: f64, gamma: f64, c: f64) -> Option<Self> {
        let t_r = dyadic(t)?;
        let g_r = dyadic(gamma)?;
        let c_r = dyadic(c)?;
        Some(Self {
            t_num: t_r.numer().to_u128()?,
            t_den: t_r.denom().to_u128()?,
            g_num: g_r.numer().to_i128()?,
            g_den: g_r.denom().to_u128()?,
            c_num: c_r.numer().magnitude().clone(),
            c_den: c_r.denom().magnitude().clone(),
        })
    }
}

/// A rate function attached to a base pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    m1: u32,
    m2: u32,
    family: Family,
}

/// Parsed form of the rate mini-grammar, before any file I/O.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSpec {
    PowerExp { t: f64, gamma: f64, c: f64 },
    Table { path: String },
}

/// Parse `"powexp t=<real> gamma=<real> c=<real>"` (gamma and c optional,
/// defaulting to 0 and 1) or `"table <path>"`.
pub fn parse_rate_spec(s: &str) -> Result<RateSpec, RateError> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    match toks.first() {
        Some(&"powexp") => {
            let mut t: Option<f64> = None;
            let mut gamma = 0.0f64;
            let mut c = 1.0f64;
            for tok in &toks[1..] {
                let (key, val) = tok
                    .split_once('=')
                    .ok_or_else(|| RateError::Parse(format!("expected key=value, got '{tok}'")))?;
                let val: f64 = val
                    .parse()
                    .map_err(|_| RateError::Parse(format!("invalid number '{val}'")))?;
                match key {
                    "t" => t = Some(val),
                    "gamma" => gamma = val,
                    "c" => c = val,
                    _ => return Err(RateError::Parse(format!("unknown key '{key}'"))),
                }
            }
            let t = t.ok_or_else(|| RateError::Parse("powexp requires t=<real>".into()))?;
            Ok(RateSpec::PowerExp { t, gamma, c })
        }
        Some(&"table") => {
            if toks.len() != 2 {
                return Err(RateError::Parse("expected 'table <path>'".into()));
            }
            Ok(RateSpec::Table {
                path: toks[1].to_string(),
            })
        }
        _ => Err(RateError::Parse(format!(
            "expected 'powexp ...' or 'table <path>', got '{s}'"
        ))),
    }
}

impl RateFunction {
    pub fn power_exp(m1: u32, m2: u32, t: f64, gamma: f64, c: f64) -> Result<Self, RateError> {
        if m1 < 2 || m2 < m1 {
            return Err(RateError::BadBases(m1, m2));
        }
        if !t.is_finite() || t < 0.0 {
            return Err(RateError::InvalidParameter(format!("t = {t} must be >= 0")));
        }
        if !gamma.is_finite() {
            return Err(RateError::InvalidParameter("gamma must be finite".into()));
        }
        if !c.is_finite() || c <= 0.0 {
            return Err(RateError::InvalidParameter(format!("c = {c} must be > 0")));
        }
        Ok(Self {
            m1,
            m2,
            family: Family::PowerExp {
                t,
                gamma,
                c,
                exact: PowExpExact::new(t, gamma, c)
                    .expect("finite parameters decompose dyadically"),
            },
        })
    }

    pub fn table(m1: u32, m2: u32, values: BTreeMap<u64, BigRational>) -> Result<Self, RateError> {
        if m1 < 2 || m2 < m1 {
            return Err(RateError::BadBases(m1, m2));
        }
        if values.is_empty() {
            return Err(RateError::EmptyTable);
        }
        for (&n, v) in &values {
            if n == 0 || !v.is_positive() {
                return Err(RateError::InvalidParameter(format!(
                    "table entry at n = {n} must have n >= 1 and psi > 0"
                )));
            }
        }
        Ok(Self {
            m1,
            m2,
            family: Family::Table { values },
        })
    }

    /// Parse a table from CSV text `"n,psi"` with strictly increasing `n`.
    /// Lines starting with `#` and an optional literal `n,psi` header are
    /// skipped.
    pub fn table_from_csv(m1: u32, m2: u32, text: &str) -> Result<Self, RateError> {
        let mut values = BTreeMap::new();
        let mut last_n: Option<u64> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line == "n,psi" {
                continue;
            }
            let (ns, ps) = line
                .split_once(',')
                .ok_or_else(|| RateError::Parse(format!("line {}: expected 'n,psi'", idx + 1)))?;
            let n: u64 = ns
                .trim()
                .parse()
                .map_err(|_| RateError::Parse(format!("line {}: bad n '{ns}'", idx + 1)))?;
            let p: f64 = ps
                .trim()
                .parse()
                .map_err(|_| RateError::Parse(format!("line {}: bad psi '{ps}'", idx + 1)))?;
            if let Some(prev) = last_n {
                if n <= prev {
                    return Err(RateError::Parse(format!(
                        "line {}: n must be strictly increasing",
                        idx + 1
                    )));
                }
            }
            last_n = Some(n);
            let p = dyadic(p)
                .filter(|q| q.is_positive())
                .ok_or_else(|| RateError::Parse(format!("line {}: psi must be > 0", idx + 1)))?;
            values.insert(n, p);
        }
        Self::table(m1, m2, values)
    }

    pub fn from_spec(
        spec: &RateSpec,
        m1: u32,
        m2: u32,
        table_text: Option<&str>,
    ) -> Result<Self, RateError> {
        match spec {
            RateSpec::PowerExp { t, gamma, c } => Self::power_exp(m1, m2, *t, *gamma, *c),
            RateSpec::Table { path } => {
                let text = table_text.ok_or_else(|| {
                    RateError::Parse(format!("table '{path}' text not supplied"))
                })?;
                Self::table_from_csv(m1, m2, text)
            }
        }
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    pub fn is_power_exp(&self) -> bool {
        matches!(self.family, Family::PowerExp { .. })
    }

    pub fn power_exp_params(&self) -> Option<(f64, f64, f64)> {
        match self.family {
            Family::PowerExp { t, gamma, c, .. } => Some((t, gamma, c)),
            Family::Table { .. } => None,
        }
    }

    /// Largest tabulated `n`; `None` for parametric rates.
    pub fn horizon(&self) -> Option<u64> {
        match &self.family {
            Family::PowerExp { .. } => None,
            Family::Table { values } => values.keys().next_back().copied(),
        }
    }

    fn check_table_n(&self, n: u64) -> Result<(), RateError> {
        if let Family::Table { values } = &self.family {
            let horizon = *values.keys().next_back().expect("nonempty");
            if n > horizon {
                return Err(RateError::HorizonExceeded { n, horizon });
            }
            if !values.contains_key(&n) {
                return Err(RateError::MissingEntry(n));
            }
        }
        if n == 0 {
            return Err(RateError::InvalidParameter("n must be >= 1".into()));
        }
        Ok(())
    }

    /// `ln psi(n)`.
    pub fn ln_psi(&self, n: u64) -> Result<f64, RateError> {
        self.check_table_n(n)?;
        match &self.family {
            Family::PowerExp { t, gamma, c, .. } => {
                Ok(c.ln() - gamma * (n as f64).ln() - t * n as f64 * f64::from(self.m1).ln())
            }
            Family::Table { values } => Ok(ln_rational(&values[&n])),
        }
    }

    /// `psi(n)` as a float; may underflow to 0 for extreme table decay,
    /// use `ln_psi` or `cmp_psi` where that matters.
    pub fn psi(&self, n: u64) -> Result<f64, RateError> {
        self.check_table_n(n)?;
        match &self.family {
            Family::PowerExp { .. } => Ok(self.ln_psi(n)?.exp()),
            Family::Table { values } => Ok(values[&n].to_f64().unwrap_or(0.0)),
        }
    }

    /// `l_i(n) = -log_{m_i} psi(n)`.
    pub fn ell(&self, coord: Coord, n: u64) -> Result<f64, RateError> {
        let base = coord.base(self.m1, self.m2);
        Ok(-self.ln_psi(n)? / f64::from(base).ln())
    }

    /// Compare `psi(n)` against a rational `q`.
    ///
    /// Exact whenever the parameters permit raising the inequality to an
    /// integer-exponent form of manageable size (always for tables, and
    /// for `PowerExp` with small dyadic denominators in `t` and `gamma`,
    /// which covers parameters like 0.5 or 1.5 exactly). Otherwise falls
    /// back to a log-domain float comparison where ties within 1e-12
    /// report `Equal`.
    pub fn cmp_psi(&self, n: u64, q: &BigRational) -> Result<Ordering, RateError> {
        self.check_table_n(n)?;
        if !q.is_positive() {
            return Ok(Ordering::Greater);
        }
        match &self.family {
            Family::Table { values } => Ok(values[&n].cmp(q)),
            Family::PowerExp { exact, .. } => {
                if let Some(ord) = self.cmp_psi_exact(exact, n, q) {
                    return Ok(ord);
                }
                let lq = ln_rational(q);
                let lp = self.ln_psi(n)?;
                let scale = lp.abs().max(lq.abs()).max(1.0);
                if (lp - lq).abs() <= 1e-12 * scale {
                    Ok(Ordering::Equal)
                } else if lp < lq {
                    Ok(Ordering::Less)
                } else {
                    Ok(Ordering::Greater)
                }
            }
        }
    }

    /// Exact path for `psi(n) = c n^{-gamma} m1^{-t n}` vs `q`:
    /// with `t = at/bt` and `gamma = ag/bg` (reduced dyadics) and
    /// `Q = lcm(bt, bg)`, the inequality is equivalent to
    /// `c^Q  vs  q^Q n^{gamma Q} m1^{t n Q}`, all integer exponents;
    /// cross-multiplied into two unsigned integers so no rational
    /// reductions run on the hot path.
    fn cmp_psi_exact(&self, e: &PowExpExact, n: u64, q: &BigRational) -> Option<Ordering> {
        const MAX_DEN: u128 = 64;
        const MAX_BITS: f64 = 4_000_000.0;

        if e.t_den > MAX_DEN || e.g_den > MAX_DEN {
            return None;
        }
        // Dyadic denominators: lcm is the larger one.
        let q_exp = e.t_den.max(e.g_den);
        let alpha = e
            .t_num
            .checked_mul(n as u128)?
            .checked_mul(q_exp / e.t_den)?;
        let gamma_exp = e.g_num.checked_mul((q_exp / e.g_den) as i128)?;

        let m1_bits = f64::from(self.m1).log2();
        let n_bits = (n.max(2) as f64).log2();
        let q_bits = (q.numer().bits() + q.denom().bits()) as f64;
        if alpha as f64 * m1_bits > MAX_BITS
            || gamma_exp.unsigned_abs() as f64 * n_bits > MAX_BITS
            || q_exp as f64 * q_bits > MAX_BITS
        {
            return None;
        }

        let qq = u32::try_from(q_exp).ok()?;
        let g_abs = u32::try_from(gamma_exp.unsigned_abs()).ok()?;
        let alpha = u32::try_from(alpha).ok()?;
        // c^Q ? q^Q n^{gamma Q} m1^{alpha}, as positive integers:
        // c_num^Q qd^Q [n^{-gQ}] ? c_den^Q qn^Q [n^{gQ}] m1^{alpha}.
        let qn = q.numer().magnitude();
        let qd = q.denom().magnitude();
        let mut lhs = e.c_num.pow(qq) * qd.pow(qq);
        let mut rhs = e.c_den.pow(qq) * qn.pow(qq) * BigUint::from(self.m1).pow(alpha);
        if gamma_exp >= 0 {
            rhs *= BigUint::from(n).pow(g_abs);
        } else {
            lhs *= BigUint::from(n).pow(g_abs);
        }
        Some(lhs.cmp(&rhs))
    }

    /// `ceil(l_i(n))` under the convention `ceil = min{k in N, k >= l}`
    /// with `N` containing 0, so rates with `psi(n) >= 1` give 0.
    /// The boundary `l_i(n)` exactly integer is settled by `cmp_psi`.
    pub fn hat_ell(&self, coord: Coord, n: u64) -> Result<u64, RateError> {
        let base = coord.base(self.m1, self.m2);
        // k >= l_i(n) iff psi(n) >= base^{-k}.
        let sat = |k: u64| -> Result<bool, RateError> {
            Ok(self.cmp_psi(n, &rpow(base, -(k as i64)))? != Ordering::Less)
        };
        let guess = self.ell(coord, n)?.ceil();
        let mut k = if guess.is_finite() && guess > 0.0 {
            guess as u64
        } else {
            0
        };
        while k > 0 && sat(k - 1)? {
            k -= 1;
        }
        while !sat(k)? {
            k += 1;
        }
        Ok(k)
    }

    /// Decay exponent. Closed form for `PowerExp` (`tau_1 = t`,
    /// `tau_2 = t log_{m2} m1`); for tables, a liminf proxy: the minimum
    /// of `l_i(n)/n` over the tail window `[horizon/2, horizon]`,
    /// labelled an estimate by `tau_is_estimated`.
    pub fn tau(&self, coord: Coord) -> Tau {
        match &self.family {
            Family::PowerExp { t, .. } => match coord {
                Coord::X => Tau::Finite(*t),
                Coord::Y => Tau::Finite(*t * f64::from(self.m1).ln() / f64::from(self.m2).ln()),
            },
            Family::Table { values } => {
                let horizon = *values.keys().next_back().expect("nonempty");
                let lo = horizon / 2;
                let base = coord.base(self.m1, self.m2);
                let mut min: Option<f64> = None;
                for (&n, v) in values.range(lo.max(1)..=horizon) {
                    let r = -ln_rational(v) / f64::from(base).ln() / n as f64;
                    min = Some(min.map_or(r, |m: f64| m.min(r)));
                }
                let proxy = min.unwrap_or(0.0);
                if proxy < 0.0 {
                    Tau::Negative
                } else {
                    Tau::Finite(proxy)
                }
            }
        }
    }

    /// True when `tau` is the numeric tail-window proxy rather than a
    /// closed form.
    pub fn tau_is_estimated(&self) -> bool {
        !self.is_power_exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::upow;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn ell_examples() {
        // psi(2) = 3^{-3}: l1(2) = 3 exactly, l2(2) = 3 log_4 3.
        let r = RateFunction::power_exp(3, 4, 1.5, 0.0, 1.0).unwrap();
        assert!((r.ell(Coord::X, 2).unwrap() - 3.0).abs() < 1e-12);
        let want = 3.0 * 3f64.ln() / 4f64.ln();
        assert!((r.ell(Coord::Y, 2).unwrap() - want).abs() < 1e-12);
        assert!((r.ell(Coord::Y, 2).unwrap() - 2.377443751).abs() < 1e-6);

        // psi = 1 constant: l = 0.
        let one = RateFunction::power_exp(3, 4, 0.0, 0.0, 1.0).unwrap();
        for n in [1u64, 5, 100] {
            assert_eq!(one.ell(Coord::X, n).unwrap(), 0.0);
            assert_eq!(one.ell(Coord::Y, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn hat_ell_examples_and_boundaries() {
        let r = RateFunction::power_exp(3, 4, 1.5, 0.0, 1.0).unwrap();
        assert_eq!(r.hat_ell(Coord::X, 2).unwrap(), 3); // exactly 3
        assert_eq!(r.hat_ell(Coord::Y, 2).unwrap(), 3); // ceil(2.377)

        let one = RateFunction::power_exp(3, 4, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(one.hat_ell(Coord::X, 7).unwrap(), 0);

        // Exact integer boundaries l in {1, 2, 3} must not round up.
        let half = RateFunction::power_exp(3, 4, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(half.hat_ell(Coord::X, 2).unwrap(), 1);
        assert_eq!(half.hat_ell(Coord::X, 4).unwrap(), 2);
        assert_eq!(half.hat_ell(Coord::X, 6).unwrap(), 3);
        // And odd n genuinely rounds up.
        assert_eq!(half.hat_ell(Coord::X, 3).unwrap(), 2);

        // Table with exactly representable psi: 0.25 = 2^{-2}.
        let mut vals = BTreeMap::new();
        vals.insert(1u64, rat(1, 4));
        vals.insert(2, rat(1, 8));
        let tab = RateFunction::table(2, 3, vals).unwrap();
        assert_eq!(tab.hat_ell(Coord::X, 1).unwrap(), 2);
        assert_eq!(tab.hat_ell(Coord::X, 2).unwrap(), 3);
    }

    #[test]
    fn hat_ell_psi_above_one_clamps_to_zero() {
        // psi(n) = 4 > 1: l < 0, hat l = 0 under the min-over-N convention.
        let r = RateFunction::power_exp(3, 4, 0.0, 0.0, 4.0).unwrap();
        assert_eq!(r.hat_ell(Coord::X, 3).unwrap(), 0);
    }

    #[test]
    fn tau_examples() {
        let r = RateFunction::power_exp(2, 8, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(r.tau(Coord::X), Tau::Finite(0.5));
        let t2 = r.tau(Coord::Y).finite().unwrap();
        assert!((t2 - 1.0 / 6.0).abs() < 1e-12);
        assert!(!r.tau_is_estimated());

        // Polynomial factor does not move the exponential rate.
        let r = RateFunction::power_exp(3, 4, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(r.tau(Coord::X), Tau::Finite(1.0));

        // Table: psi(n) = 3^{-n} for even n, 3^{-2n} for odd n.
        let mut vals = BTreeMap::new();
        for n in 1u64..=10_000 {
            let e = if n % 2 == 0 { n } else { 2 * n };
            vals.insert(n, rpow(3, -(e as i64)));
        }
        let tab = RateFunction::table(3, 4, vals).unwrap();
        let proxy = tab.tau(Coord::X).finite().unwrap();
        assert!((proxy - 1.0).abs() < 1e-9);
        assert!(tab.tau_is_estimated());
    }

    #[test]
    fn tau_negative_flag() {
        // psi(n) = 2^n grows: l_1(n)/n = -1.
        let mut vals = BTreeMap::new();
        for n in 1u64..=64 {
            vals.insert(n, BigRational::from_integer(upow(2, n).into()));
        }
        let tab = RateFunction::table(2, 3, vals).unwrap();
        assert_eq!(tab.tau(Coord::X), Tau::Negative);
    }

    #[test]
    fn tau_linkage_for_power_exp() {
        for (m1, m2) in [(2u32, 3u32), (3, 4), (2, 8), (5, 5)] {
            for t in [0.0, 0.3, 0.5, 1.0, 2.75] {
                let r = RateFunction::power_exp(m1, m2, t, 0.0, 1.0).unwrap();
                let t1 = r.tau(Coord::X).finite().unwrap();
                let t2 = r.tau(Coord::Y).finite().unwrap();
                let linked = t1 * f64::from(m1).ln() / f64::from(m2).ln();
                assert!((t2 - linked).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hat_ell_brackets_ell() {
        // hat l - 1 < l <= hat l, including a non-monotone table.
        let mut vals = BTreeMap::new();
        for n in 1u64..=40 {
            let e = if n % 3 == 0 { 1 } else { n as i64 };
            vals.insert(n, rpow(2, -e) * rat(3, 2));
        }
        let tab = RateFunction::table(2, 4, vals).unwrap();
        for rate in [
            RateFunction::power_exp(2, 4, 0.7, 1.3, 0.4).unwrap(),
            tab,
        ] {
            for n in 1u64..=40 {
                for coord in [Coord::X, Coord::Y] {
                    let l = rate.ell(coord, n).unwrap();
                    let h = rate.hat_ell(coord, n).unwrap() as f64;
                    assert!(h - 1.0 < l + 1e-9 && l <= h + 1e-9, "n={n} l={l} h={h}");
                }
            }
        }
    }

    #[test]
    fn cmp_psi_exact_boundary() {
        // psi(4) = 3^{-2} exactly (t = 0.5): equal against 1/9.
        let r = RateFunction::power_exp(3, 4, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(r.cmp_psi(4, &rat(1, 9)).unwrap(), Ordering::Equal);
        assert_eq!(r.cmp_psi(4, &rat(1, 10)).unwrap(), Ordering::Greater);
        assert_eq!(r.cmp_psi(4, &rat(1, 8)).unwrap(), Ordering::Less);
        // Nonpositive comparand: psi > 0 always.
        assert_eq!(r.cmp_psi(4, &rat(0, 1)).unwrap(), Ordering::Greater);
        assert_eq!(r.cmp_psi(4, &rat(-1, 2)).unwrap(), Ordering::Greater);
    }

    #[test]
    fn table_horizon_errors() {
        let mut vals = BTreeMap::new();
        vals.insert(2u64, rat(1, 2));
        vals.insert(4, rat(1, 4));
        let tab = RateFunction::table(2, 3, vals).unwrap();
        assert_eq!(
            tab.ell(Coord::X, 9).unwrap_err(),
            RateError::HorizonExceeded { n: 9, horizon: 4 }
        );
        assert_eq!(tab.ell(Coord::X, 3).unwrap_err(), RateError::MissingEntry(3));
    }

    #[test]
    fn rate_spec_grammar() {
        assert_eq!(
            parse_rate_spec("powexp t=0.5 gamma=0 c=1").unwrap(),
            RateSpec::PowerExp {
                t: 0.5,
                gamma: 0.0,
                c: 1.0
            }
        );
        assert_eq!(
            parse_rate_spec("powexp t=1").unwrap(),
            RateSpec::PowerExp {
                t: 1.0,
                gamma: 0.0,
                c: 1.0
            }
        );
        assert_eq!(
            parse_rate_spec("table rates.csv").unwrap(),
            RateSpec::Table {
                path: "rates.csv".to_string()
            }
        );
        assert!(parse_rate_spec("powexp").is_err());
        assert!(parse_rate_spec("gauss sigma=1").is_err());
    }

    #[test]
    fn table_csv_parses_and_rejects() {
        let r = RateFunction::table_from_csv(2, 3, "n,psi\n1,0.5\n2,0.25\n# tail\n3,0.125\n")
            .unwrap();
        assert_eq!(r.horizon(), Some(3));
        assert_eq!(r.hat_ell(Coord::X, 3).unwrap(), 3);
        assert!(RateFunction::table_from_csv(2, 3, "1,0.5\n1,0.25\n").is_err());
        assert!(RateFunction::table_from_csv(2, 3, "1,0.0\n").is_err());
        assert!(RateFunction::table_from_csv(2, 3, "1;0.5\n").is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(RateFunction::power_exp(3, 4, -0.1, 0.0, 1.0).is_err());
        assert!(RateFunction::power_exp(3, 4, 0.5, 0.0, 0.0).is_err());
        assert!(RateFunction::power_exp(3, 4, 0.5, f64::NAN, 1.0).is_err());
        assert!(RateFunction::power_exp(1, 4, 0.5, 0.0, 1.0).is_err());
        assert_eq!(
            RateFunction::table(2, 3, BTreeMap::new()).unwrap_err(),
            RateError::EmptyTable
        );
    }
}
