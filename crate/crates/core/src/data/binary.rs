use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::matrix::DenseMatrix;
use crate::{Error, Result};

/// Set of matrix positions with O(log n) membership.
///
/// Either the listed positions themselves, or (when `complement` is set)
/// every position of the `rows × cols` grid except the listed ones. The
/// complement form keeps the unobserved set Ω̄ as cheap as Ω itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationSet {
    rows: usize,
    cols: usize,
    listed: Vec<(usize, usize)>,
    complement: bool,
}

impl ObservationSet {
    pub fn new(rows: usize, cols: usize, mut positions: Vec<(usize, usize)>) -> Result<Self> {
        validate_positions(rows, cols, &mut positions)?;
        Ok(Self { rows, cols, listed: positions, complement: false })
    }

    pub(crate) fn from_sorted(rows: usize, cols: usize, listed: Vec<(usize, usize)>, complement: bool) -> Self {
        debug_assert!(listed.windows(2).all(|w| w[0] < w[1]));
        Self { rows, cols, listed, complement }
    }

    /// All positions not in `self`.
    pub fn complement(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            listed: self.listed.clone(),
            complement: !self.complement,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_complement(&self) -> bool {
        self.complement
    }

    /// The explicitly stored positions (members, or non-members when
    /// [`is_complement`](Self::is_complement)).
    pub fn listed(&self) -> &[(usize, usize)] {
        &self.listed
    }

    pub fn len(&self) -> usize {
        if self.complement {
            self.rows * self.cols - self.listed.len()
        } else {
            self.listed.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i >= self.rows || j >= self.cols {
            return false;
        }
        self.listed.binary_search(&(i, j)).is_ok() != self.complement
    }

    /// Members in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let explicit = (!self.complement).then(|| self.listed.iter().copied());
        let implicit = self.complement.then(|| {
            let mut skip = self.listed.iter().peekable();
            (0..self.rows)
                .flat_map(move |i| (0..self.cols).map(move |j| (i, j)))
                .filter(move |p| {
                    if skip.peek() == Some(&p) {
                        skip.next();
                        false
                    } else {
                        true
                    }
                })
        });
        explicit.into_iter().flatten().chain(implicit.into_iter().flatten())
    }
}

fn validate_positions(rows: usize, cols: usize, positions: &mut [(usize, usize)]) -> Result<()> {
    if let Some(&(i, j)) = positions.iter().find(|&&(i, j)| i >= rows || j >= cols) {
        return Err(Error::IndexOutOfRange { i, j, rows, cols });
    }
    positions.sort_unstable();
    if let Some(w) = positions.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateEntry(w[0].0, w[0].1));
    }
    Ok(())
}

/// 0-1 matrix stored as its dimensions and sorted set of positive positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    positives: Vec<(usize, usize)>,
}

impl BinaryMatrix {
    pub fn new(rows: usize, cols: usize, mut positives: Vec<(usize, usize)>) -> Result<Self> {
        validate_positions(rows, cols, &mut positives)?;
        Ok(Self { rows, cols, positives })
    }

    pub(crate) fn from_sorted(rows: usize, cols: usize, positives: Vec<(usize, usize)>) -> Self {
        debug_assert!(positives.windows(2).all(|w| w[0] < w[1]));
        Self { rows, cols, positives }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, positives: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn positives(&self) -> &[(usize, usize)] {
        &self.positives
    }

    pub fn nnz(&self) -> usize {
        self.positives.len()
    }

    pub fn density(&self) -> f64 {
        if self.rows * self.cols == 0 {
            return 0.0;
        }
        self.positives.len() as f64 / (self.rows * self.cols) as f64
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.positives.binary_search(&(i, j)).is_ok()
    }

    /// Positive positions as an observation set (Ω₁ for a ground truth, Ω for
    /// an observation matrix).
    pub fn positive_set(&self) -> ObservationSet {
        ObservationSet::from_sorted(self.rows, self.cols, self.positives.clone(), false)
    }

    /// Entrywise complement `1 − M`.
    pub fn flipped(&self) -> Self {
        let positives = self.positive_set().complement().iter().collect();
        Self::from_sorted(self.rows, self.cols, positives)
    }

    /// `|self ∩ other|`, by merging the two sorted position lists.
    pub fn overlap(&self, other: &BinaryMatrix) -> usize {
        let (mut a, mut b) = (self.positives.iter().peekable(), other.positives.iter().peekable());
        let mut count = 0;
        while let (Some(x), Some(y)) = (a.peek(), b.peek()) {
            match x.cmp(y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    count += 1;
                    a.next();
                    b.next();
                }
            }
        }
        count
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = faer::Mat::<f64>::zeros(self.rows, self.cols);
        for &(i, j) in &self.positives {
            m[(i, j)] = 1.0;
        }
        DenseMatrix::from_faer(m).expect("0-1 entries are finite")
    }
}

/// Writes `m n nnz` followed by one `i j` line per position (1-based). A
/// fourth header token `complement` marks an index set given by its
/// non-members.
fn write_positions(path: &Path, rows: usize, cols: usize, listed: &[(usize, usize)], complement: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if complement {
        writeln!(w, "{rows} {cols} {} complement", listed.len())?;
    } else {
        writeln!(w, "{rows} {cols} {}", listed.len())?;
    }
    for &(i, j) in listed {
        writeln!(w, "{} {}", i + 1, j + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Header fields and 0-based positions of a matrix or index-set file.
struct PositionFile {
    rows: usize,
    cols: usize,
    positions: Vec<(usize, usize)>,
    complement: bool,
}

fn read_positions(path: &Path) -> Result<PositionFile> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('%')));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Parse(format!("{}: bad {what} `{s}` in header", path.display())))
    };
    if fields.len() < 3 || fields.len() > 4 {
        return Err(Error::Parse(format!("{}: header must be `m n nnz`", path.display())));
    }
    let rows = parse(fields[0], "row count")?;
    let cols = parse(fields[1], "column count")?;
    let nnz = parse(fields[2], "entry count")?;
    let complement = match fields.get(3) {
        None => false,
        Some(&"complement") => true,
        Some(other) => {
            return Err(Error::Parse(format!("{}: unexpected header token `{other}`", path.display())))
        }
    };
    let mut positions = Vec::with_capacity(nnz);
    for (lineno, line) in lines {
        let line = line?;
        let mut it = line.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| Error::Parse(format!("{}:{}: expected `i j`", path.display(), lineno + 1)))?;
            let v: usize = tok
                .parse()
                .map_err(|_| Error::Parse(format!("{}:{}: bad index `{tok}`", path.display(), lineno + 1)))?;
            v.checked_sub(1)
                .ok_or_else(|| Error::Parse(format!("{}:{}: indices are 1-based", path.display(), lineno + 1)))
        };
        let i = next()?;
        let j = next()?;
        positions.push((i, j));
    }
    if positions.len() != nnz {
        return Err(Error::Parse(format!(
            "{}: header announces {nnz} entries, found {}",
            path.display(),
            positions.len()
        )));
    }
    Ok(PositionFile { rows, cols, positions, complement })
}

pub fn write_binary_matrix(path: impl AsRef<Path>, m: &BinaryMatrix) -> Result<()> {
    write_positions(path.as_ref(), m.rows, m.cols, &m.positives, false)
}

pub fn read_binary_matrix(path: impl AsRef<Path>) -> Result<BinaryMatrix> {
    let path = path.as_ref();
    let PositionFile { rows, cols, positions, complement } = read_positions(path)?;
    if complement {
        return Err(Error::Parse(format!(
            "{}: complement index sets are not binary matrices",
            path.display()
        )));
    }
    BinaryMatrix::new(rows, cols, positions)
}

pub fn write_index_set(path: impl AsRef<Path>, set: &ObservationSet) -> Result<()> {
    write_positions(path.as_ref(), set.rows, set.cols, &set.listed, set.complement)
}

pub fn read_index_set(path: impl AsRef<Path>) -> Result<ObservationSet> {
    let PositionFile { rows, cols, positions, complement } = read_positions(path.as_ref())?;
    let set = ObservationSet::new(rows, cols, positions)?;
    Ok(if complement { set.complement() } else { set })
}
