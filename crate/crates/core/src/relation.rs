// Copyright 2026 The joinsize Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Binary relations, input formats, and grouping by the join attribute.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A tuple of two attribute ids.
pub type Pair = (u32, u32);

/// Which side of the join a relation plays.
///
/// The left relation has schema `(a, b)` and the right one `(b, c)`, with `b`
/// the join attribute in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

/// Supported text formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// One `left right` pair per line; `#` starts a comment line.
    Edges,
    /// One transaction per line; tuples are `(line index, item)`.
    Fimi,
    /// Coordinate pattern matrix: header, dimension line, 1-based entries.
    MtxPattern,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edges" => Ok(InputFormat::Edges),
            "fimi" => Ok(InputFormat::Fimi),
            "mtx-pattern" => Ok(InputFormat::MtxPattern),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: value `{token}` does not fit in 32 bits")]
    Range { line: usize, token: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A duplicate-free set of tuples, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    side: Side,
    tuples: Vec<Pair>,
}

impl Relation {
    pub fn new<I: IntoIterator<Item = Pair>>(side: Side, tuples: I) -> Self {
        let mut tuples: Vec<Pair> = tuples.into_iter().collect();
        tuples.sort_unstable();
        tuples.dedup();
        Relation { side, tuples }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn tuples(&self) -> &[Pair] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Swaps the two attributes of every tuple and flips the side tag.
    pub fn mirrored(&self) -> Relation {
        Relation::new(self.side.flip(), self.tuples.iter().map(|&(l, r)| (r, l)))
    }

    /// The join attribute of a tuple under this relation's side.
    #[inline]
    pub fn join_value(&self, t: Pair) -> u32 {
        match self.side {
            Side::Left => t.1,
            Side::Right => t.0,
        }
    }

    /// The non-join attribute (`a` on the left, `c` on the right).
    #[inline]
    pub fn outer_value(&self, t: Pair) -> u32 {
        match self.side {
            Side::Left => t.0,
            Side::Right => t.1,
        }
    }

    /// Number of distinct non-join values (`n_a` or `n_c`).
    pub fn distinct_outer(&self) -> usize {
        let mut v: Vec<u32> = self.tuples.iter().map(|&t| self.outer_value(t)).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    /// Writes the relation in the `edges` format.
    pub fn write_edges<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(l, r) in &self.tuples {
            writeln!(out, "{l} {r}")?;
        }
        Ok(())
    }
}

/// Parses `source` into a left-tagged relation.
pub fn parse_relation<R: BufRead>(source: R, format: InputFormat) -> Result<Relation, ParseError> {
    let tuples = match format {
        InputFormat::Edges => parse_edges(source)?,
        InputFormat::Fimi => parse_fimi(source)?,
        InputFormat::MtxPattern => parse_mtx_pattern(source)?,
    };
    Ok(Relation::new(Side::Left, tuples))
}

fn parse_attr(token: &str, line: usize) -> Result<u32, ParseError> {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::Malformed {
            line,
            message: format!("expected a non-negative integer, found `{token}`"),
        });
    }
    token.parse::<u32>().map_err(|_| ParseError::Range {
        line,
        token: token.to_string(),
    })
}

fn parse_edges<R: BufRead>(source: R) -> Result<Vec<Pair>, ParseError> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let (Some(l), Some(r), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(ParseError::Malformed {
                line: lineno,
                message: "expected exactly two values".into(),
            });
        };
        out.push((parse_attr(l, lineno)?, parse_attr(r, lineno)?));
    }
    Ok(out)
}

fn parse_fimi<R: BufRead>(source: R) -> Result<Vec<Pair>, ParseError> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let row = u32::try_from(idx).map_err(|_| ParseError::Range {
            line: idx + 1,
            token: idx.to_string(),
        })?;
        for token in line.split_whitespace() {
            out.push((row, parse_attr(token, idx + 1)?));
        }
    }
    Ok(out)
}

fn parse_mtx_pattern<R: BufRead>(source: R) -> Result<Vec<Pair>, ParseError> {
    let mut lines = source.lines().enumerate();
    let malformed = |line: usize, message: &str| ParseError::Malformed {
        line,
        message: message.to_string(),
    };

    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(malformed(1, "missing %%MatrixMarket header")),
    };
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5
        || fields[0] != "%%matrixmarket"
        || fields[1] != "matrix"
        || fields[2] != "coordinate"
    {
        return Err(malformed(1, "expected `%%MatrixMarket matrix coordinate pattern <symmetry>`"));
    }
    if fields[3] != "pattern" {
        return Err(malformed(1, "only the `pattern` field type is supported"));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        _ => return Err(malformed(1, "symmetry must be `general` or `symmetric`")),
    };

    let mut dims: Option<(u32, u32, usize)> = None;
    let mut out = Vec::new();
    let mut entries = 0usize;
    let mut last_line = 1;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        last_line = lineno;
        let body = line.trim();
        if body.is_empty() || body.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match dims {
            None => {
                if tokens.len() != 3 {
                    return Err(malformed(lineno, "dimension line must be `rows cols entries`"));
                }
                let rows = parse_attr(tokens[0], lineno)?;
                let cols = parse_attr(tokens[1], lineno)?;
                let nnz = parse_attr(tokens[2], lineno)? as usize;
                dims = Some((rows, cols, nnz));
                out.reserve(nnz);
            }
            Some((rows, cols, nnz)) => {
                if tokens.len() != 2 {
                    return Err(malformed(lineno, "pattern entries must be `row col`"));
                }
                if entries == nnz {
                    return Err(malformed(lineno, "more entries than declared"));
                }
                entries += 1;
                let i = parse_attr(tokens[0], lineno)?;
                let j = parse_attr(tokens[1], lineno)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(malformed(lineno, "entry outside the declared dimensions"));
                }
                out.push((i, j));
                if symmetric && i != j {
                    out.push((j, i));
                }
            }
        }
    }
    let Some((_, _, nnz)) = dims else {
        return Err(malformed(last_line, "missing dimension line"));
    };
    if entries != nnz {
        return Err(malformed(
            last_line,
            &format!("declared {nnz} entries, found {entries}"),
        ));
    }
    Ok(out)
}

/// One join value `b` with its distinct partners on each side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub key: u32,
    /// `A_b`: distinct `a` with `(a, b)` in the left relation.
    pub left: Vec<u32>,
    /// `C_b`: distinct `c` with `(b, c)` in the right relation.
    pub right: Vec<u32>,
}

impl Group {
    pub fn product(&self) -> u128 {
        self.left.len() as u128 * self.right.len() as u128
    }
}

/// Join input clustered by `b`, with non-matching tuples removed.
///
/// Immutable once built and safe to share across concurrent runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupedInput {
    groups: Vec<Group>,
    n: usize,
    max_product: u128,
}

impl GroupedInput {
    /// Builds from explicit groups; duplicates are removed and groups with an
    /// empty side are dropped.
    pub fn from_groups<I: IntoIterator<Item = Group>>(groups: I) -> Self {
        let mut kept: Vec<Group> = groups
            .into_iter()
            .filter_map(|mut g| {
                g.left.sort_unstable();
                g.left.dedup();
                g.right.sort_unstable();
                g.right.dedup();
                (!g.left.is_empty() && !g.right.is_empty()).then_some(g)
            })
            .collect();
        kept.sort_by_key(|g| g.key);
        let n = kept.iter().map(|g| g.left.len() + g.right.len()).sum();
        let max_product = kept.iter().map(Group::product).max().unwrap_or(0);
        GroupedInput {
            groups: kept,
            n,
            max_product,
        }
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// Total surviving tuples, `sum |A_b| + |C_b|`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_product(&self) -> u128 {
        self.max_product
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// `sum |A_b| * |C_b|`, the number of join tuples before projection.
    pub fn join_size(&self) -> u128 {
        self.groups.iter().map(Group::product).sum()
    }
}

/// Clusters both relations by `b` and keeps only join values present on both
/// sides.
///
/// Groups are ordered by key. The order carries no meaning for the estimate.
pub fn group_and_prune(left: &Relation, right: &Relation) -> GroupedInput {
    debug_assert_eq!(left.side(), Side::Left);
    debug_assert_eq!(right.side(), Side::Right);

    let mut by_key: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(a, b) in left.tuples() {
        by_key.entry(b).or_default().push(a);
    }
    let mut rights: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(b, c) in right.tuples() {
        if by_key.contains_key(&b) {
            rights.entry(b).or_default().push(c);
        }
    }
    let groups = rights.into_iter().map(|(key, right)| Group {
        key,
        left: by_key.remove(&key).unwrap_or_default(),
        right,
    });
    GroupedInput::from_groups(groups)
}

/// Left and right relations of a self-join on one stored relation.
///
/// The stored tuples `(l, r)` join on `l`: the left side is the mirror image
/// and the right side is the relation itself, so the result holds pairs of
/// `r` values that share an `l`. For a transaction file this is the set of
/// co-occurring item pairs.
pub fn self_join(relation: &Relation) -> (Relation, Relation) {
    let right = relation.clone().with_side(Side::Right);
    let left = right.mirrored();
    (left, right)
}
