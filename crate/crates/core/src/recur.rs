//! Recurrence predicates, the per-cylinder return regions around periodic
//! fixed points, exact covering counts by approximate squares, and the
//! closed-form covering bounds they are checked against.
//!
//! Covering counts must decide strict inequalities, so regions are kept
//! symbolic: a region's half-width is `psi(n)/(m_i^n - 1)`, and every
//! comparison against it routes through the rate's exact comparator
//! instead of an outward-rounded approximation.

use std::cmp::Ordering;
use std::collections::HashSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::carpet::Carpet;
use crate::exact::{rpow, upow};
use crate::rate::{RateError, RateFunction};
use crate::symbolic::{
    vertical_depth, Coord, CylinderWord, Rect, SymbolicError, SymbolicPoint,
};

#[derive(Debug, Error, PartialEq)]
pub enum RecurError {
    #[error("bases of rate ({0}, {1}) do not match ({2}, {3})")]
    BaseMismatch(u32, u32, u32, u32),
    #[error("word is not an equal-length word over the carpet alphabet")]
    WordNotInAlphabet,
    #[error("word must be nonempty")]
    EmptyWord,
    #[error("carpet does not have uniform fibres; columns (a1, N_j): {0:?}")]
    NonUniformFibre(Vec<(u32, usize)>),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("covering level {0} too deep for exact index arithmetic")]
    LevelTooDeep(u64),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// Budget guard for cylinder enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverBudget {
    /// Maximum number of cylinder words `|A|^n` enumerated per call.
    pub max_cylinders: u64,
    /// Maximum number of candidate approximate squares tested per call.
    pub max_square_tests: u64,
}

impl Default for CoverBudget {
    fn default() -> Self {
        Self {
            max_cylinders: 1_000_000,
            max_square_tests: 10_000_000,
        }
    }
}

impl CoverBudget {
    /// Budget with `max_cylinders = cylinders` and a 10x square allowance,
    /// the convention used by the CLI's budget override.
    pub fn from_cylinders(cylinders: u64) -> Self {
        Self {
            max_cylinders: cylinders,
            max_square_tests: cylinders.saturating_mul(10),
        }
    }
}

/// Tri-state answer of the recurrence check at a single time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recurrence {
    Yes,
    No,
    /// The truncation depth cannot decide the strict inequality.
    Unknown,
}

fn check_rate_bases(m1: u32, m2: u32, r: &RateFunction) -> Result<(), RecurError> {
    if r.m1() != m1 || r.m2() != m2 {
        return Err(RecurError::BaseMismatch(r.m1(), r.m2(), m1, m2));
    }
    Ok(())
}

/// Decide whether `|x - T^n x| < psi(n)` holds in both coordinates, from
/// the truncated digits alone: the enclosure of `coord_distance_bounds`
/// applied to the point (truncated to the shift's depth) and its shift.
/// `Yes` iff both upper distance bounds lie strictly below `psi(n)`,
/// `No` iff some lower bound reaches it, `Unknown` when the enclosure
/// straddles the threshold.
pub fn is_recurrent_at(
    x: &SymbolicPoint,
    n: u64,
    r: &RateFunction,
) -> Result<Recurrence, RecurError> {
    check_rate_bases(x.m1(), x.m2(), r)?;
    let n_us = usize::try_from(n).expect("n fits usize");
    if n_us >= x.depth() {
        return Err(SymbolicError::ShiftTooDeep {
            n: n_us,
            depth: x.depth(),
        }
        .into());
    }
    let d = x.depth() - n_us;
    let mut all_yes = true;
    for coord in [Coord::X, Coord::Y] {
        let digits = x.digits(coord);
        let base = coord.base(x.m1(), x.m2());
        let (lo, hi) = crate::symbolic::distance_bounds_slices(base, &digits[..d], &digits[n_us..]);
        // psi(n) <= lo: certainly not recurrent at time n.
        if r.cmp_psi(n, &lo)? != Ordering::Greater {
            return Ok(Recurrence::No);
        }
        // Need psi(n) > hi for a certain yes.
        if all_yes && r.cmp_psi(n, &hi)? != Ordering::Greater {
            all_yes = false;
        }
    }
    Ok(if all_yes {
        Recurrence::Yes
    } else {
        Recurrence::Unknown
    })
}

/// Covering levels attached to a query time: `L_{i,n}` is the exact
/// ceiling of `-log_{m1} (4 psi(n) m_i^{-n})`, negative when the target
/// scale exceeds the unit square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceQuery {
    pub n: u64,
    pub level1: i64,
    pub level2: i64,
}

impl RecurrenceQuery {
    pub fn new(carpet: &Carpet, r: &RateFunction, n: u64) -> Result<Self, RecurError> {
        check_rate_bases(carpet.m1(), carpet.m2(), r)?;
        Ok(Self {
            n,
            level1: cover_level(carpet, r, n, Coord::X)?,
            level2: cover_level(carpet, r, n, Coord::Y)?,
        })
    }

    pub fn level(&self, coord: Coord) -> i64 {
        match coord {
            Coord::X => self.level1,
            Coord::Y => self.level2,
        }
    }
}

/// `L_{i,n} = ceil(-log_{m1} 4 psi(n) m_i^{-n})`, settled exactly:
/// the smallest integer `k` with `4 psi(n) m1^k >= m_i^n`.
pub fn cover_level(
    carpet: &Carpet,
    r: &RateFunction,
    n: u64,
    coord: Coord,
) -> Result<i64, RecurError> {
    check_rate_bases(carpet.m1(), carpet.m2(), r)?;
    let m1 = carpet.m1();
    let mi = coord.base(m1, carpet.m2());
    // k >= -log_m1(4 psi(n) m_i^{-n})  iff  psi(n) >= m_i^n / (4 m1^k).
    let sat = |k: i64| -> Result<bool, RecurError> {
        let q = rpow(mi, n as i64) / (rpow(m1, k) * BigRational::from_integer(4.into()));
        Ok(r.cmp_psi(n, &q)? != Ordering::Less)
    };
    let lm1 = f64::from(m1).ln();
    let guess =
        (n as f64 * f64::from(mi).ln() / lm1 - r.ln_psi(n)? / lm1 - 4f64.ln() / lm1).ceil();
    let mut k = if guess.is_finite() { guess as i64 } else { 0 };
    while sat(k - 1)? {
        k -= 1;
    }
    while !sat(k)? {
        k += 1;
    }
    Ok(k)
}

/// The exact return region of a cylinder word `w` of `A^n`: the open box
/// of half-width `psi(n)/(m_i^n - 1)` per coordinate around the fixed
/// point of the cylinder's affine branch. Contains every point of the
/// cylinder returning within `psi(n)` at time `n`, and is itself
/// contained in the covering rectangle of size `4 psi(n) m_i^{-n}`.
///
/// Half-widths are irrational for general rates, so the region is kept
/// symbolic; predicates are decided through the rate's exact comparator
/// and `enclosing_rect` produces a rigorous outward dyadic enclosure.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRect {
    m1: u32,
    m2: u32,
    n: u64,
    center: (BigRational, BigRational),
    rate: RateFunction,
}

/// Region of points that can return to the cylinder word's fixed point:
/// see [`FixedPointRect`].
pub fn fixed_point_rect(w: &CylinderWord, r: &RateFunction) -> Result<FixedPointRect, RecurError> {
    check_rate_bases(w.m1(), w.m2(), r)?;
    if w.n1() == 0 || w.n1() != w.n2() {
        return Err(if w.n1() == 0 {
            RecurError::EmptyWord
        } else {
            RecurError::WordNotInAlphabet
        });
    }
    let n = w.n1() as u64;
    let cx = BigRational::new(w.value1().into(), (upow(w.m1(), n) - BigUint::one()).into());
    let cy = BigRational::new(w.value2().into(), (upow(w.m2(), n) - BigUint::one()).into());
    Ok(FixedPointRect {
        m1: w.m1(),
        m2: w.m2(),
        n,
        center: (cx, cy),
        rate: r.clone(),
    })
}

impl FixedPointRect {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// The fixed point `pi(w^infinity)` of the cylinder's affine branch,
    /// exactly.
    pub fn center(&self) -> &(BigRational, BigRational) {
        &self.center
    }

    fn base(&self, coord: Coord) -> u32 {
        coord.base(self.m1, self.m2)
    }

    fn center_coord(&self, coord: Coord) -> &BigRational {
        match coord {
            Coord::X => &self.center.0,
            Coord::Y => &self.center.1,
        }
    }

    /// Compare the half-width `delta_i = psi(n)/(m_i^n - 1)` against a
    /// rational.
    pub fn half_width_cmp(&self, coord: Coord, q: &BigRational) -> Result<Ordering, RecurError> {
        let scale = rpow(self.base(coord), self.n as i64) - BigRational::one();
        Ok(self.rate.cmp_psi(self.n, &(q * scale))?)
    }

    /// Exact membership of a rational point in the open region.
    pub fn contains(&self, p: &(BigRational, BigRational)) -> Result<bool, RecurError> {
        for (coord, v) in [(Coord::X, &p.0), (Coord::Y, &p.1)] {
            let dist = (v - self.center_coord(coord)).abs();
            // Need delta > dist, i.e. psi(n) > dist (m^n - 1).
            if self.half_width_cmp(coord, &dist)? != Ordering::Greater {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Does the open coordinate interval `(c - delta, c + delta)` meet
    /// the half-open interval `[lo, hi)`?
    pub fn coord_overlaps(
        &self,
        coord: Coord,
        lo: &BigRational,
        hi: &BigRational,
    ) -> Result<bool, RecurError> {
        let c = self.center_coord(coord);
        // lo < c + delta  and  c - delta < hi.
        Ok(self.half_width_cmp(coord, &(lo - c))? == Ordering::Greater
            && self.half_width_cmp(coord, &(c - hi))? == Ordering::Greater)
    }

    /// Whether the unclipped open box escapes `[0,1)^2`, per coordinate.
    pub fn is_clipped(&self) -> Result<(bool, bool), RecurError> {
        let mut out = [false, false];
        for (slot, coord) in [(0usize, Coord::X), (1, Coord::Y)] {
            let c = self.center_coord(coord);
            let lo_escape = self.half_width_cmp(coord, c)? == Ordering::Greater;
            let hi_escape =
                self.half_width_cmp(coord, &(BigRational::one() - c))? != Ordering::Less;
            out[slot] = lo_escape || hi_escape;
        }
        Ok((out[0], out[1]))
    }

    /// `delta_i <= 2 psi(n) m_i^{-n}` for both coordinates, i.e. the
    /// region sits inside the covering rectangle of length
    /// `4 psi(n) m_1^{-n}` and width `4 psi(n) m_2^{-n}` around the fixed
    /// point. The ratio of the two widths is rational, so this is exact.
    pub fn contained_in_covering_rect(&self) -> bool {
        // delta / (2 psi m^{-n}) = m^n / (2 (m^n - 1)) <= 1 iff m^n >= 2.
        for coord in [Coord::X, Coord::Y] {
            let mn = rpow(self.base(coord), self.n as i64);
            let ratio = &mn / (BigRational::from_integer(2.into()) * (&mn - BigRational::one()));
            if ratio > BigRational::one() {
                return false;
            }
        }
        true
    }

    /// Rigorous outward dyadic enclosure of the region, clipped to
    /// `[0,1)^2`: the smallest half-widths of the form `k 2^{-precision}`
    /// that dominate the exact ones, found by binary search through the
    /// exact comparator.
    pub fn enclosing_rect(&self, precision: u32) -> Result<Rect, RecurError> {
        let mut bounds = Vec::with_capacity(4);
        for coord in [Coord::X, Coord::Y] {
            let delta_up = self.half_width_upper(coord, precision)?;
            let c = self.center_coord(coord);
            let lo = (c - &delta_up).max(BigRational::zero());
            let hi = (c + &delta_up).min(BigRational::one());
            bounds.push((lo, hi));
        }
        let (y_lo, y_hi) = bounds.pop().expect("two coords");
        let (x_lo, x_hi) = bounds.pop().expect("two coords");
        Ok(Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        })
    }

    /// Smallest dyadic `k / 2^precision >= delta_i`.
    fn half_width_upper(&self, coord: Coord, precision: u32) -> Result<BigRational, RecurError> {
        let unit = rpow(2, -(precision as i64));
        // Find an upper bracket by doubling, then binary search.
        let mut hi: u64 = 1;
        while self.half_width_cmp(coord, &(&unit * BigRational::from_integer(hi.into())))?
            == Ordering::Greater
        {
            hi = hi.checked_mul(2).ok_or(RecurError::LevelTooDeep(hi))?;
        }
        let mut lo: u64 = 0;
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if self.half_width_cmp(coord, &(&unit * BigRational::from_integer(mid.into())))?
                == Ordering::Greater
            {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(&unit * BigRational::from_integer(hi.into()))
    }
}

/// Index range `[j_min, j_max]` of the level-`L` digit intervals
/// `[j b^{-L}, (j+1) b^{-L})` meeting the region's open interval in one
/// coordinate, clipped to `[0, b^L - 1]`. `None` when empty after
/// clipping.
fn square_index_range(
    region: &FixedPointRect,
    coord: Coord,
    level: u64,
    psi_f: f64,
    steps_budget: u64,
) -> Result<Option<(u128, u128)>, RecurError> {
    let base = region.base(coord);
    let bits = level as f64 * f64::from(base).log2();
    if bits > 120.0 {
        return Err(RecurError::LevelTooDeep(level));
    }
    let pow: u128 = (0..level).fold(1u128, |acc, _| acc * base as u128);
    let unit = BigRational::new(1.into(), num_bigint::BigInt::from(pow));
    let c = region.center_coord(coord).clone();

    // Float guesses, refined by the exact predicates. Clamping keeps the
    // guess finite even when psi_f over/underflows; the walks below then
    // reach the true boundary, metered against the step budget.
    let c_f = c.to_f64().unwrap_or(0.5);
    let delta_f = psi_f / (f64::from(base).powi(region.n as i32) - 1.0);
    let clamp = |v: f64| -> i128 {
        if v.is_finite() {
            (v as i128).clamp(-2, pow as i128 + 2)
        } else if v > 0.0 {
            pow as i128 + 2
        } else {
            -2
        }
    };
    let approx_lo = clamp(((c_f - delta_f) * pow as f64).floor() - 2.0);
    let approx_hi = clamp(((c_f + delta_f) * pow as f64).ceil() + 2.0);

    let mut walked: u64 = 0;
    let step = |walked: &mut u64| -> Result<(), RecurError> {
        *walked += 1;
        if *walked > steps_budget {
            return Err(RecurError::BudgetExceeded(format!(
                "boundary search at level {level} exceeded {steps_budget} steps"
            )));
        }
        Ok(())
    };

    // pred_left(j): (j+1) b^{-L} > c - delta  <=>  delta > c - (j+1) b^{-L}.
    let pred_left = |j: i128| -> Result<bool, RecurError> {
        let q = &c - &unit * BigRational::from_integer(num_bigint::BigInt::from(j + 1));
        Ok(region.half_width_cmp(coord, &q)? == Ordering::Greater)
    };
    // pred_right(j): j b^{-L} < c + delta  <=>  delta > j b^{-L} - c.
    let pred_right = |j: i128| -> Result<bool, RecurError> {
        let q = &unit * BigRational::from_integer(num_bigint::BigInt::from(j)) - &c;
        Ok(region.half_width_cmp(coord, &q)? == Ordering::Greater)
    };

    let mut j_min = approx_lo;
    while j_min > -2 && pred_left(j_min - 1)? {
        step(&mut walked)?;
        j_min -= 1;
    }
    while !pred_left(j_min)? {
        step(&mut walked)?;
        j_min += 1;
    }
    let mut j_max = approx_hi;
    while j_max < pow as i128 + 2 && pred_right(j_max + 1)? {
        step(&mut walked)?;
        j_max += 1;
    }
    while !pred_right(j_max)? {
        step(&mut walked)?;
        j_max -= 1;
    }

    let lo = j_min.max(0);
    let hi = j_max.min(pow as i128 - 1);
    if lo > hi {
        return Ok(None);
    }
    Ok(Some((lo as u128, hi as u128)))
}

fn digits_of(mut value: u128, base: u32, len: u64) -> Vec<u32> {
    let mut out = vec![0u32; len as usize];
    for slot in out.iter_mut().rev() {
        *slot = (value % base as u128) as u32;
        value /= base as u128;
    }
    out
}

/// Number of distinct level-`level` approximate squares meeting the union
/// of the return regions of all `w` in `A^n`, counting only squares whose
/// digit constraints are satisfiable within the alphabet (squares meeting
/// the carpet). Exact for the region union; an upper count for the true
/// returning sets the regions enclose.
pub fn exact_cover_count(
    carpet: &Carpet,
    r: &RateFunction,
    n: u64,
    level: u64,
    budget: &CoverBudget,
) -> Result<u64, RecurError> {
    check_rate_bases(carpet.m1(), carpet.m2(), r)?;
    let a = carpet.alphabet_len() as u64;
    let cylinders = a
        .checked_pow(u32::try_from(n).map_err(|_| RecurError::LevelTooDeep(n))?)
        .ok_or_else(|| RecurError::BudgetExceeded(format!("|A|^{n} overflows")))?;
    if cylinders > budget.max_cylinders {
        return Err(RecurError::BudgetExceeded(format!(
            "|A|^{n} = {cylinders} cylinders exceeds budget {}",
            budget.max_cylinders
        )));
    }
    let level2 = vertical_depth(carpet.m1(), carpet.m2(), level);
    let psi_f = r.psi(n)?;

    let column_ok: Vec<bool> = (0..carpet.m1())
        .map(|a1| carpet.contains_column(a1))
        .collect();

    let mut seen: HashSet<(u128, u128)> = HashSet::new();
    let mut tested: u64 = 0;
    let mut word = vec![0usize; n as usize];
    let alphabet = carpet.alphabet();
    loop {
        let pairs: Vec<(u32, u32)> = word.iter().map(|&i| alphabet[i]).collect();
        let w = CylinderWord::from_pairs(carpet.m1(), carpet.m2(), &pairs)
            .expect("alphabet digits in range");
        let region = fixed_point_rect(&w, r)?;
        let xr = square_index_range(&region, Coord::X, level, psi_f, budget.max_square_tests)?;
        let yr = square_index_range(&region, Coord::Y, level2, psi_f, budget.max_square_tests)?;
        if let (Some((x0, x1)), Some((y0, y1))) = (xr, yr) {
            let span = (x1 - x0 + 1).saturating_mul(y1 - y0 + 1);
            tested = tested.saturating_add(span.min(u64::MAX as u128) as u64);
            if tested > budget.max_square_tests {
                return Err(RecurError::BudgetExceeded(format!(
                    "{tested} square tests exceed budget {}",
                    budget.max_square_tests
                )));
            }
            for j1 in x0..=x1 {
                'squares: for j2 in y0..=y1 {
                    if seen.contains(&(j1, j2)) {
                        continue;
                    }
                    let d1 = digits_of(j1, carpet.m1(), level);
                    let d2 = digits_of(j2, carpet.m2(), level2);
                    for k in 0..level2 as usize {
                        if !carpet.contains_pair((d1[k], d2[k])) {
                            continue 'squares;
                        }
                    }
                    for &d in &d1[level2 as usize..] {
                        if !column_ok[d as usize] {
                            continue 'squares;
                        }
                    }
                    seen.insert((j1, j2));
                }
            }
        }

        // Advance the odometer over A^n.
        let mut pos = word.len();
        loop {
            if pos == 0 {
                return Ok(seen.len() as u64);
            }
            pos -= 1;
            word[pos] += 1;
            if word[pos] < alphabet.len() {
                break;
            }
            word[pos] = 0;
        }
    }
}

/// The closed-form covering bound for coordinate `i` at time `n`:
/// vertical (`i = 2`): `9 M^{(log_{m1} m2 - 1) n} (MN)^n`;
/// horizontal (`i = 1`): `3 (MN)^{n log_{m2} m1 + l2(n)}
/// M^{(1 - log_{m2} m1) n - l2(n)}` when
/// `ceil(log_{m2} m1 L_{1,n}) <= n`, else `9 (MN)^n`.
/// Requires uniform fibres (the regime where the bound applies).
pub fn analytic_cover_bound(
    carpet: &Carpet,
    r: &RateFunction,
    n: u64,
    coord: Coord,
) -> Result<f64, RecurError> {
    check_rate_bases(carpet.m1(), carpet.m2(), r)?;
    let nn = match carpet.uniform_fibre_count() {
        Some(v) => v as f64,
        None => return Err(RecurError::NonUniformFibre(carpet.columns().to_vec())),
    };
    let m = carpet.num_columns() as f64;
    let lm1 = f64::from(carpet.m1()).ln();
    let lm2 = f64::from(carpet.m2()).ln();
    let nf = n as f64;
    match coord {
        Coord::Y => Ok(9.0 * m.powf((lm2 / lm1 - 1.0) * nf) * (m * nn).powf(nf)),
        Coord::X => {
            let l1 = cover_level(carpet, r, n, Coord::X)?;
            let refined = if l1 <= 0 {
                true
            } else {
                vertical_depth(carpet.m1(), carpet.m2(), l1 as u64) <= n
            };
            if refined {
                let theta = lm1 / lm2;
                let ell2 = r.ell(Coord::Y, n)?;
                Ok(3.0
                    * (m * nn).powf(theta * nf + ell2)
                    * m.powf((1.0 - theta) * nf - ell2))
            } else {
                Ok(9.0 * (m * nn).powf(nf))
            }
        }
    }
}

/// One row of a covering verification: the exact count at the covering
/// level against the closed-form bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub n: u64,
    pub coord: Coord,
    /// Covering level actually used (the raw `L_{i,n}` clamped to 0).
    pub level: u64,
    pub exact_count: u64,
    pub bound: f64,
}

impl CoverReport {
    /// `exact_count / bound`; at most 1 when the bound holds.
    pub fn slack(&self) -> f64 {
        self.exact_count as f64 / self.bound
    }

    pub fn satisfied(&self) -> bool {
        self.exact_count as f64 <= self.bound
    }

    pub fn csv_header() -> &'static str {
        "n,i,level,exact_count,bound,slack"
    }
}

/// Run `exact_cover_count` at the covering level `L_{i,n}` for each `n`
/// in the range and pair it with the closed-form bound.
pub fn verify_covering(
    carpet: &Carpet,
    r: &RateFunction,
    ns: std::ops::RangeInclusive<u64>,
    coord: Coord,
    budget: &CoverBudget,
) -> Result<Vec<CoverReport>, RecurError> {
    let mut out = Vec::new();
    for n in ns {
        let raw = cover_level(carpet, r, n, coord)?;
        let level = raw.max(0) as u64;
        let exact_count = exact_cover_count(carpet, r, n, level, budget)?;
        let bound = analytic_cover_bound(carpet, r, n, coord)?;
        out.push(CoverReport {
            n,
            coord,
            level,
            exact_count,
            bound,
        });
    }
    Ok(out)
}

/// Exact distance `|x - T^n x|` of a finite digit point in one
/// coordinate, treating the point as its zero-extension (so `T^n` is the
/// exact digit shift). Used to cross-check the interval predicates
/// against the affine identity.
pub fn exact_self_distance(
    x: &SymbolicPoint,
    n: u64,
    coord: Coord,
) -> Result<BigRational, RecurError> {
    let n_us = usize::try_from(n).expect("n fits usize");
    let shifted = x.shift(n_us)?;
    let (px, py) = x.coding_point();
    let (sx, sy) = shifted.coding_point();
    Ok(match coord {
        Coord::X => (px - sx).abs(),
        Coord::Y => (py - sy).abs(),
    })
}
