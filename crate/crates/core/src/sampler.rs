//! The recurrence-forcing measure: growth schedules, digit-repetition
//! constraints after each scheduled time, conditional column draws, and
//! the induced cylinder masses.
//!
//! Sampling is left to right. Positions fall into three kinds: free
//! positions draw a digit pair from `p`; for a scheduled time `n_i` the
//! positions `n_i + 1 ..= n_i + hl2(n_i)` copy the pair at the matching
//! prefix position, and positions `n_i + hl2(n_i) + 1 ..= n_i + hl1(n_i)`
//! copy only the column digit and draw the row from the conditional law
//! within that column. Digit agreement to depth `hl_i(n)` forces the
//! coordinate distance below `m_i^{-hl_i(n)} <= psi(n)`, so every sampled
//! point is recurrent at every scheduled time realized below the depth.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::boxcount::PointCloud;
use crate::carpet::Carpet;
use crate::dimtheory::ProbabilityVector;
use crate::rate::{RateError, RateFunction};
use crate::symbolic::{Coord, CylinderWord, SymbolicPoint};

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("sampler requires a parametric (powexp) rate")]
    TableRateUnsupported,
    #[error("growth margin must be >= 2, got {0}")]
    GrowthMarginTooSmall(u64),
    #[error("first scheduled time {n1} needs depth {needed}, target depth is {depth}")]
    DepthTooSmall { n1: u64, needed: u64, depth: u64 },
    #[error("schedule must start at n1 >= 1")]
    BadFirstEntry,
    #[error("scheduled blocks overlap: n = {n} with window {window} reaches past next entry {next}")]
    ScheduleOverlap { n: u64, window: u64, next: u64 },
    #[error("weights must be strictly positive on the alphabet for sampling")]
    WeightsNotStrictlyPositive,
    #[error("bases of rate ({0}, {1}) do not match carpet ({2}, {3})")]
    BaseMismatch(u32, u32, u32, u32),
    #[error("cylinder length {len} not supported at depth {depth}")]
    UnsupportedLength { len: usize, depth: u64 },
    #[error("word is not an equal-length cylinder word on the carpet bases")]
    BadWord,
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// A finite prefix of the growth schedule `n_1 < n_2 < ...` with
/// `margin * 2^i * sum_{j<=i} n_j <= n_{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    entries: Vec<u64>,
    growth_margin: u64,
}

impl Schedule {
    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn growth_margin(&self) -> u64 {
        self.growth_margin
    }
}

pub const DEFAULT_FIRST_ENTRY: u64 = 6;

/// Build the schedule with the default first entry `n_1 = 6`.
pub fn make_schedule(
    rate: &RateFunction,
    target_depth: u64,
    growth_margin: u64,
) -> Result<Schedule, SampleError> {
    make_schedule_from(rate, target_depth, growth_margin, DEFAULT_FIRST_ENTRY)
}

/// Build the schedule `n_1 = first`, `n_{i+1} = margin * 2^{i+1} *
/// sum_{j<=i} n_j`, truncated to entries whose constraint window fits the
/// target depth (`n + hl1(n) <= target_depth`). The next entry is bumped
/// past `n_i + hl1(n_i)` when a steep rate would otherwise overlap
/// blocks; the growth invariant only gains from the bump.
pub fn make_schedule_from(
    rate: &RateFunction,
    target_depth: u64,
    growth_margin: u64,
    first: u64,
) -> Result<Schedule, SampleError> {
    if !rate.is_power_exp() {
        return Err(SampleError::TableRateUnsupported);
    }
    if growth_margin < 2 {
        return Err(SampleError::GrowthMarginTooSmall(growth_margin));
    }
    if first == 0 {
        return Err(SampleError::BadFirstEntry);
    }
    let window = |n: u64| -> Result<u64, SampleError> { Ok(n + rate.hat_ell(Coord::X, n)?) };
    if window(first)? > target_depth {
        return Err(SampleError::DepthTooSmall {
            n1: first,
            needed: window(first)?,
            depth: target_depth,
        });
    }
    let mut entries = vec![first];
    let mut sum = first;
    loop {
        let i = entries.len() as u32;
        let last = *entries.last().expect("nonempty");
        let Some(grown) = 2u64
            .checked_pow(i + 1)
            .and_then(|p| p.checked_mul(growth_margin))
            .and_then(|p| p.checked_mul(sum))
        else {
            break;
        };
        let next = grown.max(window(last)? + 1);
        if window(next)? > target_depth {
            break;
        }
        entries.push(next);
        sum += next;
    }
    Ok(Schedule {
        entries,
        growth_margin,
    })
}

/// How a digit position is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PosKind {
    Free,
    /// Copy the full pair from the 0-based source position.
    CopyBoth { src: usize },
    /// Copy the column digit from the source; draw the row from the
    /// conditional law within that column.
    CopyColumn { src: usize },
}

/// A validated sampling configuration: carpet, strictly positive weights,
/// parametric rate, schedule, depth and root seed.
#[derive(Debug, Clone)]
pub struct SampleConfig {
    carpet: Carpet,
    weights: ProbabilityVector,
    rate: RateFunction,
    schedule: Schedule,
    depth: u64,
    seed: u64,
    plan: Vec<PosKind>,
    /// Per column: (alphabet indices, marginal weight).
    columns: Vec<(Vec<usize>, f64)>,
}

impl SampleConfig {
    pub fn new(
        carpet: Carpet,
        weights: ProbabilityVector,
        rate: RateFunction,
        schedule: Schedule,
        depth: u64,
        seed: u64,
    ) -> Result<Self, SampleError> {
        if !rate.is_power_exp() {
            return Err(SampleError::TableRateUnsupported);
        }
        if rate.m1() != carpet.m1() || rate.m2() != carpet.m2() {
            return Err(SampleError::BaseMismatch(
                rate.m1(),
                rate.m2(),
                carpet.m1(),
                carpet.m2(),
            ));
        }
        if weights.len() != carpet.alphabet_len()
            || weights.weights().iter().any(|&w| w <= 0.0)
        {
            return Err(SampleError::WeightsNotStrictlyPositive);
        }

        // Build the position plan and validate the schedule windows.
        let mut plan = vec![PosKind::Free; depth as usize];
        let entries = schedule.entries();
        for (k, &n) in entries.iter().enumerate() {
            let l1 = rate.hat_ell(Coord::X, n)?;
            let l2 = rate.hat_ell(Coord::Y, n)?;
            if n + l1 > depth {
                return Err(SampleError::DepthTooSmall {
                    n1: n,
                    needed: n + l1,
                    depth,
                });
            }
            if let Some(&next) = entries.get(k + 1) {
                if n + l1 >= next {
                    return Err(SampleError::ScheduleOverlap {
                        n,
                        window: n + l1,
                        next,
                    });
                }
            }
            for j in 1..=l1 {
                let pos = (n + j - 1) as usize; // 0-based target
                let src = (j - 1) as usize;
                plan[pos] = if j <= l2 {
                    PosKind::CopyBoth { src }
                } else {
                    PosKind::CopyColumn { src }
                };
            }
        }

        let mut columns = Vec::with_capacity(carpet.num_columns());
        for &(a1, _) in carpet.columns() {
            let idxs: Vec<usize> = carpet
                .alphabet()
                .iter()
                .enumerate()
                .filter(|(_, &(b1, _))| b1 == a1)
                .map(|(i, _)| i)
                .collect();
            let mass: f64 = idxs.iter().map(|&i| weights.weight(i)).sum();
            columns.push((idxs, mass));
        }

        Ok(Self {
            carpet,
            weights,
            rate,
            schedule,
            depth,
            seed,
            plan,
            columns,
        })
    }

    pub fn carpet(&self) -> &Carpet {
        &self.carpet
    }

    pub fn weights(&self) -> &ProbabilityVector {
        &self.weights
    }

    pub fn rate(&self) -> &RateFunction {
        &self.rate
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Scheduled times whose constraint window is realized below the
    /// depth; sampled points are certified recurrent at these.
    pub fn certified_times(&self) -> &[u64] {
        self.schedule.entries()
    }

    fn draw_pair<R: Rng>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &w) in self.weights.weights().iter().enumerate() {
            acc += w;
            if r < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    fn draw_in_column<R: Rng>(&self, col: usize, rng: &mut R) -> usize {
        let (idxs, mass) = &self.columns[col];
        let r: f64 = rng.gen::<f64>() * mass;
        let mut acc = 0.0;
        for &i in idxs {
            acc += self.weights.weight(i);
            if r < acc {
                return i;
            }
        }
        *idxs.last().expect("nonempty column")
    }
}

/// SplitMix64 step; the documented seed-splitting rule is
/// `splitmix64(root XOR index * 0x9E3779B97F4A7C15)`.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-point seed derived from the root seed, independent of worker
/// scheduling.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    splitmix64(root ^ index.wrapping_mul(0x9E3779B97F4A7C15))
}

/// Draw one point with an explicit seed.
pub fn sample_point_seeded(cfg: &SampleConfig, seed: u64) -> SymbolicPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = cfg.depth as usize;
    let mut digits1 = Vec::with_capacity(depth);
    let mut digits2 = Vec::with_capacity(depth);
    let alphabet = cfg.carpet.alphabet();
    for k in 0..depth {
        let (d1, d2) = match cfg.plan[k] {
            PosKind::Free => alphabet[cfg.draw_pair(&mut rng)],
            PosKind::CopyBoth { src } => (digits1[src], digits2[src]),
            PosKind::CopyColumn { src } => {
                let col_digit = digits1[src];
                let col = cfg
                    .carpet
                    .column_of(col_digit)
                    .expect("copied digit is an alphabet column");
                let idx = cfg.draw_in_column(col, &mut rng);
                (alphabet[idx].0, alphabet[idx].1)
            }
        };
        digits1.push(d1);
        digits2.push(d2);
    }
    SymbolicPoint::new(cfg.carpet.m1(), cfg.carpet.m2(), digits1, digits2)
        .expect("sampled digits are valid")
}

/// Draw one point using the configuration's root seed.
pub fn sample_point(cfg: &SampleConfig) -> SymbolicPoint {
    sample_point_seeded(cfg, cfg.seed)
}

/// Draw `count` points in parallel; point `i` uses `derive_seed(root, i)`,
/// so the cloud is identical for any thread count.
pub fn sample_cloud(cfg: &SampleConfig, count: usize) -> PointCloud {
    use rayon::prelude::*;
    let points: Vec<SymbolicPoint> = (0..count)
        .into_par_iter()
        .map(|i| sample_point_seeded(cfg, derive_seed(cfg.seed, i as u64)))
        .collect();
    PointCloud::new(
        cfg.carpet.m1(),
        cfg.carpet.m2(),
        cfg.depth as usize,
        Some(cfg.seed),
        points,
    )
    .expect("sampled cloud is uniform")
}

/// Measure of the cylinder of an equal-length word under the sampling
/// law: zero if a copy constraint is violated, otherwise the product of
/// `p` over free positions and conditional factors over column-copy
/// positions. The left-to-right product is the closed form of the
/// extension sums for every length up to the depth.
pub fn cylinder_mass(cfg: &SampleConfig, w: &CylinderWord) -> Result<f64, SampleError> {
    if w.m1() != cfg.carpet.m1() || w.m2() != cfg.carpet.m2() || w.n1() != w.n2() {
        return Err(SampleError::BadWord);
    }
    let len = w.n1();
    if len as u64 > cfg.depth {
        return Err(SampleError::UnsupportedLength {
            len,
            depth: cfg.depth,
        });
    }
    let mut mass = 1.0f64;
    for k in 0..len {
        let pair = (w.word1()[k], w.word2()[k]);
        let Some(idx) = cfg.carpet.pair_index(pair) else {
            return Ok(0.0);
        };
        match cfg.plan[k] {
            PosKind::Free => mass *= cfg.weights.weight(idx),
            PosKind::CopyBoth { src } => {
                if w.word1()[src] != pair.0 || w.word2()[src] != pair.1 {
                    return Ok(0.0);
                }
            }
            PosKind::CopyColumn { src } => {
                if w.word1()[src] != pair.0 {
                    return Ok(0.0);
                }
                let col = cfg.carpet.column_of(pair.0).expect("alphabet column");
                mass *= cfg.weights.weight(idx) / cfg.columns[col].1;
            }
        }
    }
    Ok(mass)
}
