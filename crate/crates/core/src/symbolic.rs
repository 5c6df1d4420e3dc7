//! Exact digit-level arithmetic: the coding map, shifts, cylinders,
//! approximate squares, and rigorous distance enclosures.
//!
//! All geometry here is exact rational. A truncated point stands for the
//! cylinder of all its infinite extensions, so distance queries return
//! intervals rather than scalars.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::carpet::Carpet;
use crate::exact::{ceil_log_ratio, rpow, upow};

/// Coordinate selector: `X` is the horizontal coordinate (base `m1`),
/// `Y` the vertical one (base `m2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    X,
    Y,
}

impl Coord {
    pub fn base(self, m1: u32, m2: u32) -> u32 {
        match self {
            Coord::X => m1,
            Coord::Y => m2,
        }
    }

    /// 1-based index used in file formats (`1` for X, `2` for Y).
    pub fn index(self) -> u8 {
        match self {
            Coord::X => 1,
            Coord::Y => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Coord::X),
            2 => Some(Coord::Y),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("digit sequences must be nonempty")]
    EmptyDigits,
    #[error("digit sequences have mismatched lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("digit {digit} out of range for base {base}")]
    DigitOutOfRange { digit: u32, base: u32 },
    #[error("shift by {n} too deep for depth {depth}")]
    ShiftTooDeep { n: usize, depth: usize },
    #[error("operation needs depth {needed}, point has depth {depth}")]
    DepthExceeded { needed: usize, depth: usize },
    #[error("points have mismatched depths {0} and {1}")]
    DepthMismatch(usize, usize),
    #[error("bases do not match: ({0}, {1}) vs ({2}, {3})")]
    BaseMismatch(u32, u32, u32, u32),
}

fn check_digits(digits: &[u32], base: u32) -> Result<(), SymbolicError> {
    for &d in digits {
        if d >= base {
            return Err(SymbolicError::DigitOutOfRange { digit: d, base });
        }
    }
    Ok(())
}

/// Value of a digit word as an integer in its base: `sum d_k base^{n-k}`.
fn word_value(digits: &[u32], base: u32) -> BigUint {
    let mut v = BigUint::zero();
    for &d in digits {
        v = v * base + d;
    }
    v
}

/// A point of the carpet coded by two finite digit sequences of equal
/// depth. Stands for the cylinder of all infinite extensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicPoint {
    m1: u32,
    m2: u32,
    digits1: Vec<u32>,
    digits2: Vec<u32>,
}

impl SymbolicPoint {
    pub fn new(
        m1: u32,
        m2: u32,
        digits1: Vec<u32>,
        digits2: Vec<u32>,
    ) -> Result<Self, SymbolicError> {
        if digits1.is_empty() {
            return Err(SymbolicError::EmptyDigits);
        }
        if digits1.len() != digits2.len() {
            return Err(SymbolicError::LengthMismatch(digits1.len(), digits2.len()));
        }
        check_digits(&digits1, m1)?;
        check_digits(&digits2, m2)?;
        Ok(Self {
            m1,
            m2,
            digits1,
            digits2,
        })
    }

    pub fn from_pairs(m1: u32, m2: u32, pairs: &[(u32, u32)]) -> Result<Self, SymbolicError> {
        let digits1 = pairs.iter().map(|p| p.0).collect();
        let digits2 = pairs.iter().map(|p| p.1).collect();
        Self::new(m1, m2, digits1, digits2)
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    pub fn depth(&self) -> usize {
        self.digits1.len()
    }

    pub fn digits1(&self) -> &[u32] {
        &self.digits1
    }

    pub fn digits2(&self) -> &[u32] {
        &self.digits2
    }

    pub fn digits(&self, coord: Coord) -> &[u32] {
        match coord {
            Coord::X => &self.digits1,
            Coord::Y => &self.digits2,
        }
    }

    /// True iff every digit pair lies in the carpet's alphabet.
    pub fn in_alphabet(&self, carpet: &Carpet) -> bool {
        self.m1 == carpet.m1()
            && self.m2 == carpet.m2()
            && self
                .digits1
                .iter()
                .zip(&self.digits2)
                .all(|(&a, &b)| carpet.contains_pair((a, b)))
    }

    /// The coding map: `(sum_k d1_k / m1^k, sum_k d2_k / m2^k)` as exact
    /// rationals.
    pub fn coding_point(&self) -> (BigRational, BigRational) {
        let d = self.depth() as u64;
        let x = BigRational::new(
            word_value(&self.digits1, self.m1).into(),
            upow(self.m1, d).into(),
        );
        let y = BigRational::new(
            word_value(&self.digits2, self.m2).into(),
            upow(self.m2, d).into(),
        );
        (x, y)
    }

    /// Drop the first `n` digits of both coordinates; on codings this is
    /// the `n`-fold application of the expanding map.
    pub fn shift(&self, n: usize) -> Result<Self, SymbolicError> {
        if n >= self.depth() {
            return Err(SymbolicError::ShiftTooDeep {
                n,
                depth: self.depth(),
            });
        }
        Ok(Self {
            m1: self.m1,
            m2: self.m2,
            digits1: self.digits1[n..].to_vec(),
            digits2: self.digits2[n..].to_vec(),
        })
    }

    /// Keep only the first `depth` digits.
    pub fn truncated(&self, depth: usize) -> Result<Self, SymbolicError> {
        if depth == 0 {
            return Err(SymbolicError::EmptyDigits);
        }
        if depth > self.depth() {
            return Err(SymbolicError::DepthExceeded {
                needed: depth,
                depth: self.depth(),
            });
        }
        Ok(Self {
            m1: self.m1,
            m2: self.m2,
            digits1: self.digits1[..depth].to_vec(),
            digits2: self.digits2[..depth].to_vec(),
        })
    }

    /// The `n1`-th level approximate square containing the point: the
    /// cylinder on `n1` horizontal digits and `n2 = ceil(n1 log_{m2} m1)`
    /// vertical ones.
    pub fn approx_square(&self, n1: usize) -> Result<CylinderWord, SymbolicError> {
        let n2 = vertical_depth(self.m1, self.m2, n1 as u64) as usize;
        let needed = n1.max(n2);
        if needed > self.depth() {
            return Err(SymbolicError::DepthExceeded {
                needed,
                depth: self.depth(),
            });
        }
        Ok(CylinderWord {
            m1: self.m1,
            m2: self.m2,
            word1: self.digits1[..n1].to_vec(),
            word2: self.digits2[..n2].to_vec(),
        })
    }
}

/// Vertical depth of an `n1`-th level approximate square:
/// `ceil(n1 log_{m2} m1)`, decided by integer powers.
pub fn vertical_depth(m1: u32, m2: u32, n1: u64) -> u64 {
    ceil_log_ratio(m1, m2, n1)
}

/// A cylinder word: digit prefixes of possibly different lengths per
/// coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderWord {
    m1: u32,
    m2: u32,
    word1: Vec<u32>,
    word2: Vec<u32>,
}

impl CylinderWord {
    pub fn new(m1: u32, m2: u32, word1: Vec<u32>, word2: Vec<u32>) -> Result<Self, SymbolicError> {
        check_digits(&word1, m1)?;
        check_digits(&word2, m2)?;
        Ok(Self {
            m1,
            m2,
            word1,
            word2,
        })
    }

    /// Equal-length word from alphabet pairs (a word of `A^n`).
    pub fn from_pairs(m1: u32, m2: u32, pairs: &[(u32, u32)]) -> Result<Self, SymbolicError> {
        Self::new(
            m1,
            m2,
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    pub fn n1(&self) -> usize {
        self.word1.len()
    }

    pub fn n2(&self) -> usize {
        self.word2.len()
    }

    pub fn word1(&self) -> &[u32] {
        &self.word1
    }

    pub fn word2(&self) -> &[u32] {
        &self.word2
    }

    /// Integer value of the horizontal word in base `m1`.
    pub fn value1(&self) -> BigUint {
        word_value(&self.word1, self.m1)
    }

    /// Integer value of the vertical word in base `m2`.
    pub fn value2(&self) -> BigUint {
        word_value(&self.word2, self.m2)
    }

    /// True iff the word is an equal-length word over the carpet's
    /// alphabet (an element of `A^n`).
    pub fn is_alphabet_word(&self, carpet: &Carpet) -> bool {
        self.m1 == carpet.m1()
            && self.m2 == carpet.m2()
            && self.word1.len() == self.word2.len()
            && self
                .word1
                .iter()
                .zip(&self.word2)
                .all(|(&a, &b)| carpet.contains_pair((a, b)))
    }

    /// The half-open rectangle coded by the word.
    pub fn rect(&self) -> Rect {
        let x_lo = BigRational::new(self.value1().into(), upow(self.m1, self.n1() as u64).into());
        let y_lo = BigRational::new(self.value2().into(), upow(self.m2, self.n2() as u64).into());
        let x_hi = &x_lo + rpow(self.m1, -(self.n1() as i64));
        let y_hi = &y_lo + rpow(self.m2, -(self.n2() as i64));
        Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }
}

/// Axis-aligned half-open rectangle `[x_lo, x_hi) x [y_lo, y_hi)` with
/// exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rect {
    pub x_lo: BigRational,
    pub x_hi: BigRational,
    pub y_lo: BigRational,
    pub y_hi: BigRational,
}

impl Rect {
    pub fn unit() -> Self {
        use num_traits::One;
        Rect {
            x_lo: BigRational::zero(),
            x_hi: BigRational::one(),
            y_lo: BigRational::zero(),
            y_hi: BigRational::one(),
        }
    }

    pub fn width(&self) -> BigRational {
        &self.x_hi - &self.x_lo
    }

    pub fn height(&self) -> BigRational {
        &self.y_hi - &self.y_lo
    }

    pub fn contains_point(&self, p: &(BigRational, BigRational)) -> bool {
        p.0 >= self.x_lo && p.0 < self.x_hi && p.1 >= self.y_lo && p.1 < self.y_hi
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x_lo >= self.x_lo
            && other.x_hi <= self.x_hi
            && other.y_lo >= self.y_lo
            && other.y_hi <= self.y_hi
    }
}

/// Core of the distance enclosure, over raw equal-length digit slices in
/// one base; shared with the recurrence predicate's allocation-free path.
pub(crate) fn distance_bounds_slices(
    base: u32,
    xs: &[u32],
    ys: &[u32],
) -> (BigRational, BigRational) {
    debug_assert_eq!(xs.len(), ys.len());
    let d = xs.len() as u64;
    let xv = word_value(xs, base);
    let yv = word_value(ys, base);
    let diff = if xv >= yv { xv - &yv } else { yv - &xv };
    let t = BigRational::new(diff.into(), upow(base, d).into());
    let tail = rpow(base, -(d as i64));
    let lo = if t >= tail {
        &t - &tail
    } else {
        BigRational::zero()
    };
    let hi = &t + &tail;
    (lo, hi)
}

/// Rigorous enclosure of `|x_c - y_c|` over all infinite extensions of
/// two truncated points: returns exact rationals `lo <= |x_c - y_c| <= hi`
/// with `hi - lo <= 2 base^{-D}`.
pub fn coord_distance_bounds(
    x: &SymbolicPoint,
    y: &SymbolicPoint,
    coord: Coord,
) -> Result<(BigRational, BigRational), SymbolicError> {
    if x.m1 != y.m1 || x.m2 != y.m2 {
        return Err(SymbolicError::BaseMismatch(x.m1, x.m2, y.m1, y.m2));
    }
    if x.depth() != y.depth() {
        return Err(SymbolicError::DepthMismatch(x.depth(), y.depth()));
    }
    let base = coord.base(x.m1, x.m2);
    Ok(distance_bounds_slices(
        base,
        x.digits(coord),
        y.digits(coord),
    ))
}
