//! Binary entanglement matrices.
//!
//! A configuration on `n_q` qubits is an `n_q x n_q` matrix of bits where
//! entry `(i, j)` set means "CNOT with control `i` and target `j`". The
//! diagonal is always zero. Every public interface in this module uses
//! 1-based qubit indices; storage is a flat row-major buffer.

use std::fmt;

use num_bigint::BigUint;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EntanglementMatrix {
    n_q: usize,
    bits: Vec<u8>,
}

/// A broken invariant found by [`validate`]. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SelfEntanglement {
        qubit: usize,
    },
    NonBinary {
        row: usize,
        col: usize,
        value: u8,
    },
    Ragged {
        row: usize,
        len: usize,
        expected: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfEntanglement { qubit } => {
                write!(f, "self-entanglement at qubit {qubit}")
            }
            Violation::NonBinary { row, col, value } => {
                write!(f, "non-binary entry {value} at ({row}, {col})")
            }
            Violation::Ragged { row, len, expected } => {
                write!(f, "row {row} has {len} entries, expected {expected}")
            }
        }
    }
}

/// Checks raw rows against the matrix invariants: square shape, entries in
/// {0, 1}, zero diagonal.
pub fn validate(rows: &[Vec<u8>]) -> std::result::Result<(), Vec<Violation>> {
    let n = rows.len();
    let mut violations = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            violations.push(Violation::Ragged {
                row: i + 1,
                len: row.len(),
                expected: n,
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if v > 1 {
                violations.push(Violation::NonBinary {
                    row: i + 1,
                    col: j + 1,
                    value: v,
                });
            } else if i == j && v == 1 {
                violations.push(Violation::SelfEntanglement { qubit: i + 1 });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl EntanglementMatrix {
    pub fn zeros(n_q: usize) -> Result<Self> {
        if n_q == 0 {
            return Err(Error::TooFewQubits { n_q, min: 1 });
        }
        Ok(Self {
            n_q,
            bits: vec![0; n_q * n_q],
        })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::TooFewQubits { n_q: 0, min: 1 });
        }
        validate(rows).map_err(|v| Error::InvalidMatrix(join_violations(&v)))?;
        Ok(Self {
            n_q: rows.len(),
            bits: rows.iter().flatten().copied().collect(),
        })
    }

    /// Builds a matrix from 1-based `(control, target)` pairs.
    pub fn from_edges(n_q: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut m = Self::zeros(n_q)?;
        for &(c, t) in edges {
            m.check_index(c)?;
            m.check_index(t)?;
            if c == t {
                return Err(Error::SelfEntanglement(c));
            }
            m.bits[(c - 1) * n_q + (t - 1)] = 1;
        }
        Ok(m)
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n_q {
            Err(Error::QubitOutOfRange {
                index: i,
                n_q: self.n_q,
            })
        } else {
            Ok(())
        }
    }

    /// Entry for 1-based `(control, target)`.
    pub fn get(&self, control: usize, target: usize) -> Result<bool> {
        self.check_index(control)?;
        self.check_index(target)?;
        Ok(self.bits[(control - 1) * self.n_q + (target - 1)] == 1)
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.bits.chunks(self.n_q).map(|r| r.to_vec()).collect()
    }

    /// CNOT pairs as 0-based `(control, target)`, in canonical application
    /// order: ascending control, then ascending target.
    pub(crate) fn cnot_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_q;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.bits[i * n + j] == 1)
            .collect()
    }

    /// 1-based `(control, target)` pairs in canonical order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.cnot_pairs()
            .into_iter()
            .map(|(c, t)| (c + 1, t + 1))
            .collect()
    }

    /// Number of entanglements initiated by qubit `i` (1-based).
    pub fn per_qubit_count(&self, i: usize) -> Result<usize> {
        self.check_index(i)?;
        let row = &self.bits[(i - 1) * self.n_q..i * self.n_q];
        Ok(row.iter().map(|&b| b as usize).sum())
    }

    pub fn row_counts(&self) -> Vec<usize> {
        self.bits
            .chunks(self.n_q)
            .map(|r| r.iter().map(|&b| b as usize).sum())
            .collect()
    }

    pub fn total_entanglements(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Entanglement density in percent: `100 * E / (n_q (n_q - 1))`.
    pub fn density(&self) -> Result<f64> {
        if self.n_q < 2 {
            return Err(Error::TooFewQubits {
                n_q: self.n_q,
                min: 2,
            });
        }
        let max = self.n_q * (self.n_q - 1);
        Ok(100.0 * self.total_entanglements() as f64 / max as f64)
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        validate(&self.rows())
    }

    /// Comma-separated rows of 0/1, one line per control qubit.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n_q * self.n_q * 2);
        for row in self.bits.chunks(self.n_q) {
            let line: Vec<&str> = row
                .iter()
                .map(|&b| if b == 1 { "1" } else { "0" })
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| match tok.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::Parse {
                        line: ln + 1,
                        msg: format!("non-binary token {other:?}"),
                    }),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty matrix".into(),
            });
        }
        let n = rows.len();
        if let Some(pos) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Parse {
                line: pos + 1,
                msg: format!("ragged row: {} entries, expected {n}", rows[pos].len()),
            });
        }
        Self::from_rows(&rows)
    }
}

impl fmt::Debug for EntanglementMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "EntanglementMatrix({}x{})\n{}",
            self.n_q,
            self.n_q,
            self.to_csv()
        )
    }
}

/// Density of a constrained configuration with `k` entanglements per qubit.
pub fn constrained_density(n_q: usize, k: usize) -> Result<f64> {
    if n_q < 2 {
        return Err(Error::TooFewQubits { n_q, min: 2 });
    }
    if k > n_q - 1 {
        return Err(Error::InvalidSpec(format!(
            "k = {k} exceeds n_q - 1 = {}",
            n_q - 1
        )));
    }
    Ok(100.0 * k as f64 / (n_q - 1) as f64)
}

/// Number of distinct configurations on `n_q` qubits, `2^(n_q(n_q-1))` for
/// directed gates or `2^(n_q(n_q-1)/2)` for symmetric ones.
pub fn count_configurations(n_q: usize, symmetric: bool) -> BigUint {
    let off_diag = n_q * n_q.saturating_sub(1);
    let exp = if symmetric { off_diag / 2 } else { off_diag };
    BigUint::from(1u8) << exp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingMode {
    Unconstrained {
        #[serde(rename = "E")]
        e: usize,
    },
    Constrained {
        k: usize,
    },
    SemiConstrained {
        k_max: usize,
    },
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingMode::Unconstrained { e } => write!(f, "unconstrained(E={e})"),
            SamplingMode::Constrained { k } => write!(f, "constrained(k={k})"),
            SamplingMode::SemiConstrained { k_max } => write!(f, "semi_constrained(k_max={k_max})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingSpec {
    pub n_q: usize,
    pub mode: SamplingMode,
}

impl SamplingSpec {
    pub fn new(n_q: usize, mode: SamplingMode) -> Result<Self> {
        let spec = Self { n_q, mode };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        let n = self.n_q;
        if n == 0 {
            return Err(Error::TooFewQubits { n_q: 0, min: 1 });
        }
        let max_row = n - 1;
        match self.mode {
            SamplingMode::Unconstrained { e } if e > n * max_row => Err(Error::InvalidSpec(
                format!("E = {e} exceeds n_q(n_q - 1) = {}", n * max_row),
            )),
            SamplingMode::Constrained { k: 0 } => {
                Err(Error::InvalidSpec("constrained mode needs k >= 1".into()))
            }
            SamplingMode::Constrained { k } if k > max_row => Err(Error::InvalidSpec(format!(
                "k = {k} exceeds n_q - 1 = {max_row}"
            ))),
            SamplingMode::SemiConstrained { k_max } if k_max > max_row => Err(Error::InvalidSpec(
                format!("k_max = {k_max} exceeds n_q - 1 = {max_row}"),
            )),
            _ => Ok(()),
        }
    }

    /// Draws one configuration.
    ///
    /// * unconstrained: `E` off-diagonal cells, uniform over all `E`-subsets;
    /// * constrained: each row picks `k` targets, uniform over `k`-subsets of
    ///   the other qubits, rows independent;
    /// * semi-constrained: each row draws its count uniformly from
    ///   `0..=k_max`, then that many targets as above.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EntanglementMatrix> {
        self.check()?;
        let n = self.n_q;
        let mut m = EntanglementMatrix::zeros(n)?;
        match self.mode {
            SamplingMode::Unconstrained { e } => {
                // Off-diagonal cell c maps to row c / (n-1), and to the c % (n-1)-th
                // column of that row skipping the diagonal.
                for cell in index::sample(rng, n * (n - 1), e) {
                    let row = cell / (n - 1);
                    let mut col = cell % (n - 1);
                    if col >= row {
                        col += 1;
                    }
                    m.bits[row * n + col] = 1;
                }
            }
            SamplingMode::Constrained { k } => {
                for row in 0..n {
                    fill_row(&mut m, row, k, rng);
                }
            }
            SamplingMode::SemiConstrained { k_max } => {
                for row in 0..n {
                    let count = rng.random_range(0..=k_max);
                    fill_row(&mut m, row, count, rng);
                }
            }
        }
        Ok(m)
    }
}

fn fill_row<R: Rng + ?Sized>(m: &mut EntanglementMatrix, row: usize, count: usize, rng: &mut R) {
    let n = m.n_q;
    for pick in index::sample(rng, n - 1, count) {
        let col = if pick >= row { pick + 1 } else { pick };
        m.bits[row * n + col] = 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Ring,
    NearestNeighbor,
    NoEntanglement,
    FullyEntangled,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [
        TopologyKind::Ring,
        TopologyKind::NearestNeighbor,
        TopologyKind::NoEntanglement,
        TopologyKind::FullyEntangled,
    ];

    /// The conventional topology on `n_q` qubits. Ring and nearest-neighbour
    /// connect each qubit to its successor; the ring also closes `n_q -> 1`.
    pub fn build(self, n_q: usize) -> Result<EntanglementMatrix> {
        if n_q < 2 {
            return Err(Error::TooFewQubits { n_q, min: 2 });
        }
        let mut m = EntanglementMatrix::zeros(n_q)?;
        match self {
            TopologyKind::Ring | TopologyKind::NearestNeighbor => {
                for i in 0..n_q - 1 {
                    m.bits[i * n_q + i + 1] = 1;
                }
                if self == TopologyKind::Ring && n_q > 2 {
                    m.bits[(n_q - 1) * n_q] = 1;
                }
            }
            TopologyKind::NoEntanglement => {}
            TopologyKind::FullyEntangled => {
                for i in 0..n_q {
                    for j in 0..n_q {
                        if i != j {
                            m.bits[i * n_q + j] = 1;
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn label(self) -> &'static str {
        match self {
            TopologyKind::Ring => "Ring topology",
            TopologyKind::NearestNeighbor => "Nearest-neighbor topology",
            TopologyKind::NoEntanglement => "No entanglement",
            TopologyKind::FullyEntangled => "Fully entangled",
        }
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ring" => Ok(TopologyKind::Ring),
            "nn" | "nearest_neighbor" | "nearest_neighbour" | "linear" => {
                Ok(TopologyKind::NearestNeighbor)
            }
            "none" | "no_entanglement" => Ok(TopologyKind::NoEntanglement),
            "full" | "fully_entangled" => Ok(TopologyKind::FullyEntangled),
            other => Err(Error::InvalidArgument(format!(
                "unknown topology {other:?}"
            ))),
        }
    }
}

/// Where a matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Origin {
    Unconstrained {
        #[serde(rename = "E")]
        e: usize,
    },
    Constrained {
        k: usize,
    },
    SemiConstrained {
        k_max: usize,
    },
    Topology {
        kind: TopologyKind,
    },
    Explicit,
}

impl From<SamplingMode> for Origin {
    fn from(m: SamplingMode) -> Self {
        match m {
            SamplingMode::Unconstrained { e } => Origin::Unconstrained { e },
            SamplingMode::Constrained { k } => Origin::Constrained { k },
            SamplingMode::SemiConstrained { k_max } => Origin::SemiConstrained { k_max },
        }
    }
}

/// JSON wrapper for a matrix: `{n_q, mode, k|E|k_max, seed, matrix_csv}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDescriptor {
    pub n_q: usize,
    #[serde(flatten)]
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub matrix_csv: String,
}

impl ConfigDescriptor {
    pub fn new(matrix: &EntanglementMatrix, origin: Origin, seed: Option<u64>) -> Self {
        Self {
            n_q: matrix.n_q(),
            origin,
            seed,
            matrix_csv: matrix.to_csv(),
        }
    }

    pub fn matrix(&self) -> Result<EntanglementMatrix> {
        let m = EntanglementMatrix::parse_csv(&self.matrix_csv)?;
        if m.n_q() != self.n_q {
            return Err(Error::dim("descriptor n_q", self.n_q, m.n_q()));
        }
        Ok(m)
    }
}
