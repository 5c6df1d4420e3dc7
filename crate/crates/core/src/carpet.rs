//! Carpets defined by a digit alphabet on a base pair, their column
//! profiles, and the classical dimension formulas.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CarpetError {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("bases must satisfy 2 <= m1 <= m2, got ({0}, {1})")]
    BadBases(u32, u32),
    #[error("digit pair ({0}, {1}) out of range")]
    DigitOutOfRange(u32, u32),
    #[error("duplicate digit pair ({0}, {1})")]
    DuplicatePair(u32, u32),
    #[error("carpet spec line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A Bedford-McMullen carpet: the attractor of the affine maps
/// `(x, y) -> ((x + a1)/m1, (y + a2)/m2)` over the digit pairs `(a1, a2)`
/// of the alphabet.
///
/// Immutable after construction. The alphabet is stored sorted by
/// `(a1, a2)`, and the column profile lists nonempty columns in ascending
/// `a1` order, so serialization and probability-vector indexing are
/// deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Carpet {
    m1: u32,
    m2: u32,
    alphabet: Vec<(u32, u32)>,
    columns: Vec<(u32, usize)>,
}

impl Carpet {
    pub fn new(m1: u32, m2: u32, pairs: &[(u32, u32)]) -> Result<Self, CarpetError> {
        if m1 < 2 || m2 < m1 {
            return Err(CarpetError::BadBases(m1, m2));
        }
        if pairs.is_empty() {
            return Err(CarpetError::EmptyAlphabet);
        }
        let mut alphabet = Vec::with_capacity(pairs.len());
        for &(a1, a2) in pairs {
            if a1 >= m1 || a2 >= m2 {
                return Err(CarpetError::DigitOutOfRange(a1, a2));
            }
            alphabet.push((a1, a2));
        }
        alphabet.sort_unstable();
        for w in alphabet.windows(2) {
            if w[0] == w[1] {
                return Err(CarpetError::DuplicatePair(w[0].0, w[0].1));
            }
        }
        let mut columns: Vec<(u32, usize)> = Vec::new();
        for &(a1, _) in &alphabet {
            match columns.last_mut() {
                Some((col, count)) if *col == a1 => *count += 1,
                _ => columns.push((a1, 1)),
            }
        }
        Ok(Self {
            m1,
            m2,
            alphabet,
            columns,
        })
    }

    /// Full alphabet on the given bases (the torus case).
    pub fn full(m1: u32, m2: u32) -> Result<Self, CarpetError> {
        let pairs: Vec<(u32, u32)> = (0..m1)
            .flat_map(|a1| (0..m2).map(move |a2| (a1, a2)))
            .collect();
        Self::new(m1, m2, &pairs)
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    /// Digit pairs sorted by `(a1, a2)`.
    pub fn alphabet(&self) -> &[(u32, u32)] {
        &self.alphabet
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet.len()
    }

    /// Nonempty columns as `(a1, N_j)`, ascending in `a1`.
    pub fn columns(&self) -> &[(u32, usize)] {
        &self.columns
    }

    /// Number of nonempty columns (`M`).
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Index of the pair in the sorted alphabet, if present.
    pub fn pair_index(&self, pair: (u32, u32)) -> Option<usize> {
        self.alphabet.binary_search(&pair).ok()
    }

    pub fn contains_pair(&self, pair: (u32, u32)) -> bool {
        self.pair_index(pair).is_some()
    }

    /// Index into `columns()` of the column with first digit `a1`.
    pub fn column_of(&self, a1: u32) -> Option<usize> {
        self.columns.binary_search_by_key(&a1, |&(c, _)| c).ok()
    }

    pub fn contains_column(&self, a1: u32) -> bool {
        self.column_of(a1).is_some()
    }

    /// True iff all nonempty columns hold the same number of pairs
    /// (`N_j = N`); exactly the carpets with `dim_H = dim_B`.
    pub fn is_uniform_fibre(&self) -> bool {
        self.columns.windows(2).all(|w| w[0].1 == w[1].1)
    }

    /// The common fibre count `N` when the carpet has uniform fibres.
    pub fn uniform_fibre_count(&self) -> Option<usize> {
        if self.is_uniform_fibre() {
            Some(self.columns[0].1)
        } else {
            None
        }
    }

    /// `log_{m1} M + log_{m2} (#A / M)`.
    pub fn box_dimension(&self) -> f64 {
        let m = self.num_columns() as f64;
        let a = self.alphabet.len() as f64;
        m.ln() / f64::from(self.m1).ln() + (a / m).ln() / f64::from(self.m2).ln()
    }

    /// McMullen's formula `log_{m1} sum_j N_j^{log_{m2} m1}`.
    pub fn hausdorff_dimension(&self) -> f64 {
        let theta = f64::from(self.m1).ln() / f64::from(self.m2).ln();
        let sum: f64 = self
            .columns
            .iter()
            .map(|&(_, n)| (n as f64).powf(theta))
            .sum();
        sum.ln() / f64::from(self.m1).ln()
    }

    /// Parse the plain-text carpet spec format:
    ///
    /// ```text
    /// # comment
    /// bases <m1> <m2>
    /// <a1> <a2>
    /// ...
    /// ```
    ///
    /// Lines are trimmed; blank lines and lines starting with `#` are
    /// skipped. Any extra token on a line is rejected.
    pub fn parse_spec(text: &str) -> Result<Self, CarpetError> {
        let mut bases: Option<(u32, u32)> = None;
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let lineno = idx + 1;
            if bases.is_none() {
                if toks.len() != 3 || toks[0] != "bases" {
                    return Err(CarpetError::Parse {
                        line: lineno,
                        msg: format!("expected 'bases <m1> <m2>', got '{line}'"),
                    });
                }
                let m1 = parse_u32(toks[1], lineno)?;
                let m2 = parse_u32(toks[2], lineno)?;
                bases = Some((m1, m2));
            } else {
                if toks.len() != 2 {
                    return Err(CarpetError::Parse {
                        line: lineno,
                        msg: format!("expected '<a1> <a2>', got '{line}'"),
                    });
                }
                let a1 = parse_u32(toks[0], lineno)?;
                let a2 = parse_u32(toks[1], lineno)?;
                pairs.push((a1, a2));
            }
        }
        let (m1, m2) = bases.ok_or(CarpetError::Parse {
            line: 0,
            msg: "missing 'bases' line".to_string(),
        })?;
        Self::new(m1, m2, &pairs)
    }

    /// Serialize in the spec text format; `parse_spec` round-trips it.
    pub fn to_spec(&self) -> String {
        let mut out = format!("bases {} {}\n", self.m1, self.m2);
        for &(a1, a2) in &self.alphabet {
            out.push_str(&format!("{a1} {a2}\n"));
        }
        out
    }
}

fn parse_u32(tok: &str, line: usize) -> Result<u32, CarpetError> {
    tok.parse::<u32>().map_err(|_| CarpetError::Parse {
        line,
        msg: format!("invalid integer '{tok}'"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor_product() -> Carpet {
        let pairs: Vec<(u32, u32)> = [0u32, 2]
            .iter()
            .flat_map(|&a| [0u32, 1, 3].iter().map(move |&b| (a, b)))
            .collect();
        Carpet::new(3, 4, &pairs).unwrap()
    }

    #[test]
    fn cantor_product_profile() {
        let c = cantor_product();
        assert_eq!(c.num_columns(), 2);
        assert_eq!(c.columns(), &[(0, 3), (2, 3)]);
        assert!(c.is_uniform_fibre());
        assert_eq!(c.uniform_fibre_count(), Some(3));
    }

    #[test]
    fn full_square_profile() {
        let c = Carpet::full(2, 2).unwrap();
        assert_eq!(c.num_columns(), 2);
        assert_eq!(c.columns(), &[(0, 2), (1, 2)]);
        assert!(c.is_uniform_fibre());
    }

    #[test]
    fn non_uniform_profile() {
        let c = Carpet::new(2, 3, &[(0, 0), (0, 2), (1, 1)]).unwrap();
        assert_eq!(c.num_columns(), 2);
        assert_eq!(c.columns(), &[(0, 2), (1, 1)]);
        assert!(!c.is_uniform_fibre());
        assert_eq!(c.uniform_fibre_count(), None);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            Carpet::new(3, 4, &[]).unwrap_err(),
            CarpetError::EmptyAlphabet
        );
        assert_eq!(
            Carpet::new(1, 4, &[(0, 0)]).unwrap_err(),
            CarpetError::BadBases(1, 4)
        );
        assert_eq!(
            Carpet::new(4, 3, &[(0, 0)]).unwrap_err(),
            CarpetError::BadBases(4, 3)
        );
        assert_eq!(
            Carpet::new(3, 4, &[(3, 0)]).unwrap_err(),
            CarpetError::DigitOutOfRange(3, 0)
        );
        assert_eq!(
            Carpet::new(3, 4, &[(0, 1), (0, 1)]).unwrap_err(),
            CarpetError::DuplicatePair(0, 1)
        );
    }

    #[test]
    fn box_dimension_examples() {
        // log_3 2 + log_4 3
        assert!((cantor_product().box_dimension() - 1.4234110039320355).abs() < 1e-12);
        assert!((Carpet::full(5, 7).unwrap().box_dimension() - 2.0).abs() < 1e-12);
        let c = Carpet::new(2, 3, &[(0, 0), (0, 2), (1, 1)]).unwrap();
        let want = 1.0 + (1.5f64).ln() / 3f64.ln();
        assert!((c.box_dimension() - want).abs() < 1e-12);
        assert!((c.box_dimension() - 1.3690702464285426).abs() < 1e-9);
    }

    #[test]
    fn hausdorff_dimension_examples() {
        assert!((cantor_product().hausdorff_dimension() - 1.4234110039320355).abs() < 1e-12);
        let c = Carpet::new(2, 3, &[(0, 0), (0, 2), (1, 1)]).unwrap();
        // log_2(2^{log_3 2} + 1)
        let theta = 2f64.ln() / 3f64.ln();
        let want = (2f64.powf(theta) + 1.0).ln() / 2f64.ln();
        assert!((c.hausdorff_dimension() - want).abs() < 1e-12);
        assert!((c.hausdorff_dimension() - 1.3496838201955776).abs() < 1e-9);
    }

    #[test]
    fn uniform_fibre_dims_agree() {
        for c in [
            cantor_product(),
            Carpet::full(2, 2).unwrap(),
            Carpet::new(2, 5, &[(0, 0), (0, 3), (1, 1), (1, 4)]).unwrap(),
        ] {
            assert!((c.box_dimension() - c.hausdorff_dimension()).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_roundtrip_and_rejections() {
        let text = "# a carpet\nbases 3 4\n0 0\n0 1\n0 3\n2 0\n2 1\n2 3\n";
        let c = Carpet::parse_spec(text).unwrap();
        assert_eq!(c, cantor_product());
        assert_eq!(Carpet::parse_spec(&c.to_spec()).unwrap(), c);

        assert!(matches!(
            Carpet::parse_spec("bases 3 4 9\n0 0\n"),
            Err(CarpetError::Parse { .. })
        ));
        assert!(matches!(
            Carpet::parse_spec("bases 3 4\n0 0 7\n"),
            Err(CarpetError::Parse { .. })
        ));
        assert!(matches!(
            Carpet::parse_spec("0 0\n"),
            Err(CarpetError::Parse { .. })
        ));
        assert_eq!(
            Carpet::parse_spec("bases 3 4\n0 0\n0 0\n").unwrap_err(),
            CarpetError::DuplicatePair(0, 0)
        );
        assert!(matches!(
            Carpet::parse_spec("bases 3 4\n"),
            Err(CarpetError::EmptyAlphabet)
        ));
    }
}
