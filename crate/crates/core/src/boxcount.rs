//! Point clouds and empirical dimension estimation by approximate-square
//! counting with a log-log regression, plus a Euclidean-grid counter for
//! cross-checking.

use std::collections::HashSet;

use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::upow;
use crate::symbolic::{vertical_depth, SymbolicPoint};

#[derive(Debug, Error, PartialEq)]
pub enum BoxcountError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("cloud is not uniform: {0}")]
    MixedCloud(String),
    #[error("level {level} needs depth {needed}, cloud depth is {depth}")]
    DepthExceeded {
        level: u64,
        needed: u64,
        depth: u64,
    },
    #[error("need at least {need} usable levels, have {have}: {msg}")]
    InsufficientLevels { need: usize, have: usize, msg: String },
    #[error("digit-string serialization supports bases up to 36, got {0}")]
    UnsupportedBase(u32),
    #[error("cloud csv line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A finite multiset of sampled points with provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    m1: u32,
    m2: u32,
    depth: usize,
    seed: Option<u64>,
    points: Vec<SymbolicPoint>,
}

impl PointCloud {
    pub fn new(
        m1: u32,
        m2: u32,
        depth: usize,
        seed: Option<u64>,
        points: Vec<SymbolicPoint>,
    ) -> Result<Self, BoxcountError> {
        if points.is_empty() {
            return Err(BoxcountError::EmptyCloud);
        }
        for p in &points {
            if p.m1() != m1 || p.m2() != m2 {
                return Err(BoxcountError::MixedCloud(format!(
                    "point bases ({}, {}) differ from cloud ({m1}, {m2})",
                    p.m1(),
                    p.m2()
                )));
            }
            if p.depth() != depth {
                return Err(BoxcountError::MixedCloud(format!(
                    "point depth {} differs from cloud depth {depth}",
                    p.depth()
                )));
            }
        }
        Ok(Self {
            m1,
            m2,
            depth,
            seed,
            points,
        })
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SymbolicPoint] {
        &self.points
    }

    /// Union of two clouds over the same bases and depth; the seed is
    /// dropped (the union is no longer a single seeded run).
    pub fn merge(&self, other: &PointCloud) -> Result<PointCloud, BoxcountError> {
        if self.m1 != other.m1 || self.m2 != other.m2 || self.depth != other.depth {
            return Err(BoxcountError::MixedCloud(
                "merge requires equal bases and depth".to_string(),
            ));
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        PointCloud::new(self.m1, self.m2, self.depth, None, points)
    }

    /// Serialize to the cloud CSV format (see `docs/formats.md`):
    /// metadata header and values, a row header, then one row per point
    /// with base-36 digit strings, optionally followed by exact rational
    /// coordinates.
    pub fn to_csv(&self, include_coords: bool) -> Result<String, BoxcountError> {
        if self.m1 > 36 || self.m2 > 36 {
            return Err(BoxcountError::UnsupportedBase(self.m1.max(self.m2)));
        }
        let mut out = String::new();
        out.push_str("depth,m1,m2,seed\n");
        match self.seed {
            Some(s) => out.push_str(&format!("{},{},{},{}\n", self.depth, self.m1, self.m2, s)),
            None => out.push_str(&format!("{},{},{},\n", self.depth, self.m1, self.m2)),
        }
        out.push_str(if include_coords {
            "digits1,digits2,x,y\n"
        } else {
            "digits1,digits2\n"
        });
        for p in &self.points {
            out.push_str(&digits_to_string(p.digits1()));
            out.push(',');
            out.push_str(&digits_to_string(p.digits2()));
            if include_coords {
                let (x, y) = p.coding_point();
                out.push_str(&format!(",{}/{},{}/{}", x.numer(), x.denom(), y.numer(), y.denom()));
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parse the cloud CSV format. Extra columns (the optional exact
    /// coordinates) are ignored: the digit strings are the exact record.
    pub fn from_csv(text: &str) -> Result<Self, BoxcountError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(BoxcountError::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        if header != "depth,m1,m2,seed" {
            return Err(BoxcountError::Parse {
                line: 1,
                msg: format!("expected 'depth,m1,m2,seed', got '{header}'"),
            });
        }
        let (_, meta) = lines.next().ok_or(BoxcountError::Parse {
            line: 2,
            msg: "missing metadata".into(),
        })?;
        let fields: Vec<&str> = meta.split(',').collect();
        if fields.len() != 4 {
            return Err(BoxcountError::Parse {
                line: 2,
                msg: "expected 4 metadata fields".into(),
            });
        }
        let parse = |s: &str, what: &str| -> Result<u64, BoxcountError> {
            s.parse().map_err(|_| BoxcountError::Parse {
                line: 2,
                msg: format!("bad {what} '{s}'"),
            })
        };
        let depth = parse(fields[0], "depth")? as usize;
        let m1 = parse(fields[1], "m1")? as u32;
        let m2 = parse(fields[2], "m2")? as u32;
        let seed = if fields[3].is_empty() {
            None
        } else {
            Some(parse(fields[3], "seed")?)
        };
        let (_, row_header) = lines.next().ok_or(BoxcountError::Parse {
            line: 3,
            msg: "missing row header".into(),
        })?;
        if row_header != "digits1,digits2" && row_header != "digits1,digits2,x,y" {
            return Err(BoxcountError::Parse {
                line: 3,
                msg: format!("unexpected row header '{row_header}'"),
            });
        }
        let mut points = Vec::new();
        for (idx, row) in lines {
            if row.is_empty() {
                continue;
            }
            let mut fields = row.split(',');
            let d1 = fields.next().unwrap_or("");
            let d2 = fields.next().ok_or(BoxcountError::Parse {
                line: idx + 1,
                msg: "expected at least two fields".into(),
            })?;
            let digits1 = string_to_digits(d1, m1, idx + 1)?;
            let digits2 = string_to_digits(d2, m2, idx + 1)?;
            let p = SymbolicPoint::new(m1, m2, digits1, digits2).map_err(|e| {
                BoxcountError::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                }
            })?;
            points.push(p);
        }
        PointCloud::new(m1, m2, depth, seed, points)
    }
}

fn digit_char(d: u32) -> char {
    char::from_digit(d, 36).expect("digit below 36")
}

fn digits_to_string(digits: &[u32]) -> String {
    digits.iter().map(|&d| digit_char(d)).collect()
}

fn string_to_digits(s: &str, base: u32, line: usize) -> Result<Vec<u32>, BoxcountError> {
    s.chars()
        .map(|c| {
            c.to_digit(36)
                .filter(|&d| d < base)
                .ok_or(BoxcountError::Parse {
                    line,
                    msg: format!("invalid digit '{c}' for base {base}"),
                })
        })
        .collect()
}

fn check_level(cloud: &PointCloud, level: u64) -> Result<u64, BoxcountError> {
    let n2 = vertical_depth(cloud.m1, cloud.m2, level);
    let needed = level.max(n2);
    if needed > cloud.depth as u64 {
        return Err(BoxcountError::DepthExceeded {
            level,
            needed,
            depth: cloud.depth as u64,
        });
    }
    Ok(n2)
}

/// Number of distinct level-`level` approximate squares containing at
/// least one cloud point. Partition-parallel with set union, so the
/// count is independent of the thread count.
pub fn count_squares(cloud: &PointCloud, level: u64) -> Result<u64, BoxcountError> {
    let n2 = check_level(cloud, level)?;
    let l1 = level as usize;
    let l2 = n2 as usize;
    let keys: HashSet<(&[u32], &[u32])> = cloud
        .points
        .par_iter()
        .fold(HashSet::new, |mut acc, p| {
            acc.insert((&p.digits1()[..l1], &p.digits2()[..l2]));
            acc
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    Ok(keys.len() as u64)
}

/// Euclidean cross-check: distinct cells of the square grid with side
/// `m1^{-level}` containing a cloud point, computed by exact rational
/// floor.
pub fn count_grid_cells(cloud: &PointCloud, level: u64) -> Result<u64, BoxcountError> {
    check_level(cloud, level)?;
    let d = cloud.depth as u64;
    let l = level;
    // floor(x m1^l) = value1 / m1^{d-l}; floor(y m1^l) = value2 m1^l / m2^d.
    let m1pow_dl = upow(cloud.m1, d - l);
    let m1pow_l = upow(cloud.m1, l);
    let m2pow_d = upow(cloud.m2, d);
    let keys: HashSet<(BigUint, BigUint)> = cloud
        .points
        .par_iter()
        .fold(HashSet::new, |mut acc, p| {
            let w1 = crate::symbolic::CylinderWord::new(
                cloud.m1,
                cloud.m2,
                p.digits1().to_vec(),
                p.digits2().to_vec(),
            )
            .expect("cloud digits valid");
            let cx = w1.value1() / &m1pow_dl;
            let cy = w1.value2() * &m1pow_l / &m2pow_d;
            acc.insert((cx, cy));
            acc
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    Ok(keys.len() as u64)
}

/// Counts at one level, with the geometric scale used for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCount {
    pub level: u64,
    /// Vertical digit depth of the level's approximate squares.
    pub n2: u64,
    pub count: u64,
    /// `-ln` of the squares' geometric-mean side:
    /// `(level ln m1 + n2 ln m2) / 2`.
    pub scale: f64,
    /// Count reached a tenth of the cloud size; excluded from the fit.
    pub saturated: bool,
}

/// Least-squares fit of `ln count` against the per-level box scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub levels: Vec<LevelCount>,
    /// Some requested level was saturated and dropped from the fit.
    pub saturation_warning: bool,
}

/// Estimate the cloud's box dimension from approximate-square counts over
/// an inclusive level range.
///
/// The regression pairs `ln count` with the log of each level's box
/// scale, `(n1 ln m1 + n2 ln m2)/2`; using the true (slightly
/// anisotropic) box scale rather than `n1 ln m1` alone removes the
/// staircase the ceiling in `n2` would otherwise imprint on small level
/// windows. Levels whose count reaches `|cloud|/10` are saturated (the
/// cloud cannot resolve them) and are dropped from the fit, with a
/// warning flag; at least 3 levels must be requested and at least 2 must
/// survive.
pub fn estimate_dimension(
    cloud: &PointCloud,
    levels: std::ops::RangeInclusive<u64>,
) -> Result<DimensionEstimate, BoxcountError> {
    let requested: Vec<u64> = levels.collect();
    if requested.len() < 3 {
        return Err(BoxcountError::InsufficientLevels {
            need: 3,
            have: requested.len(),
            msg: "regression needs at least 3 requested levels".into(),
        });
    }
    let lm1 = f64::from(cloud.m1).ln();
    let lm2 = f64::from(cloud.m2).ln();
    let mut rows = Vec::with_capacity(requested.len());
    for &level in &requested {
        let count = count_squares(cloud, level)?;
        let n2 = vertical_depth(cloud.m1, cloud.m2, level);
        let saturated = count.saturating_mul(10) >= cloud.len() as u64;
        rows.push(LevelCount {
            level,
            n2,
            count,
            scale: (level as f64 * lm1 + n2 as f64 * lm2) / 2.0,
            saturated,
        });
    }
    let fit: Vec<&LevelCount> = rows.iter().filter(|r| !r.saturated).collect();
    if fit.len() < 2 {
        return Err(BoxcountError::InsufficientLevels {
            need: 2,
            have: fit.len(),
            msg: "too few unsaturated levels; enlarge the cloud or lower the levels".into(),
        });
    }
    let n = fit.len() as f64;
    let xs: Vec<f64> = fit.iter().map(|r| r.scale).collect();
    let ys: Vec<f64> = fit.iter().map(|r| (r.count as f64).ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let saturation_warning = rows.iter().any(|r| r.saturated);
    Ok(DimensionEstimate {
        slope,
        intercept,
        r_squared,
        levels: rows,
        saturation_warning,
    })
}
