use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::BinaryMatrix;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Delimiter {
    Tab,
    Comma,
    Semicolon,
    DoubleColon,
    Whitespace,
}

impl Delimiter {
    fn sniff(line: &str) -> Self {
        if line.contains("::") {
            Delimiter::DoubleColon
        } else if line.contains('\t') {
            Delimiter::Tab
        } else if line.contains(',') {
            Delimiter::Comma
        } else if line.contains(';') {
            Delimiter::Semicolon
        } else {
            Delimiter::Whitespace
        }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Semicolon => line.split(';').map(str::trim).collect(),
            Delimiter::DoubleColon => line.split("::").map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

/// Binarized ratings plus the bookkeeping needed to map back to raw ids.
#[derive(Clone, Debug)]
pub struct RatingsData {
    pub matrix: BinaryMatrix,
    /// Raw user id of each row.
    pub users: Vec<String>,
    /// Raw item id of each column.
    pub items: Vec<String>,
    /// Distinct (user, item) pairs kept.
    pub ratings: usize,
    pub malformed: usize,
    pub duplicates: usize,
    pub threshold: f64,
}

impl RatingsData {
    /// Writes `kind<TAB>index<TAB>raw id` lines, 1-based.
    pub fn write_id_map(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (k, id) in self.users.iter().enumerate() {
            writeln!(w, "user\t{}\t{id}", k + 1)?;
        }
        for (k, id) in self.items.iter().enumerate() {
            writeln!(w, "item\t{}\t{id}", k + 1)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sorts ids numerically when they all parse as integers, lexically otherwise.
fn index_ids(ids: impl Iterator<Item = String>) -> BTreeMap<String, usize> {
    let mut distinct: Vec<String> = ids.collect();
    distinct.sort();
    distinct.dedup();
    if distinct.iter().all(|s| s.parse::<i64>().is_ok()) {
        distinct.sort_by_key(|s| s.parse::<i64>().unwrap());
    }
    distinct.into_iter().enumerate().map(|(k, s)| (s, k)).collect()
}

/// Reads `user, item, rating[, ...]` records and marks a pair positive when
/// its rating is at least `threshold` (default: mean of the kept ratings).
///
/// The delimiter is sniffed from the first nonblank line. A first line
/// whose rating field is not numeric is taken as a header. Later lines that
/// do not parse are counted as malformed and skipped. For repeated pairs the
/// last record wins.
pub fn ingest_ratings(path: impl AsRef<Path>, threshold: Option<f64>) -> Result<RatingsData> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut delim = None;
    let mut first = true;
    let mut malformed = 0usize;
    let mut duplicates = 0usize;
    let mut order: Vec<(String, String)> = Vec::new();
    let mut latest: HashMap<(String, String), f64> = HashMap::new();

    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let d = *delim.get_or_insert_with(|| Delimiter::sniff(trimmed));
        let fields = d.split(trimmed);
        let was_first = std::mem::replace(&mut first, false);
        let parsed = (fields.len() >= 3)
            .then(|| fields[2].parse::<f64>().ok().filter(|r| r.is_finite()))
            .flatten()
            .filter(|_| !fields[0].is_empty() && !fields[1].is_empty());
        let Some(rating) = parsed else {
            if !was_first {
                malformed += 1;
            }
            continue;
        };
        let key = (fields[0].to_string(), fields[1].to_string());
        if latest.insert(key.clone(), rating).is_some() {
            duplicates += 1;
        } else {
            order.push(key);
        }
    }
    if order.is_empty() {
        return Err(Error::NoRecords(path.display().to_string()));
    }
    if malformed > 0 {
        log::warn!("{}: skipped {malformed} malformed lines", path.display());
    }
    if duplicates > 0 {
        log::warn!("{}: {duplicates} repeated (user, item) pairs, last rating kept", path.display());
    }

    let threshold = match threshold {
        Some(t) if !t.is_finite() => return Err(Error::NonFinite("rating threshold")),
        Some(t) => t,
        None => latest.values().sum::<f64>() / latest.len() as f64,
    };
    let users = index_ids(order.iter().map(|(u, _)| u.clone()));
    let items = index_ids(order.iter().map(|(_, i)| i.clone()));
    let positives: Vec<(usize, usize)> = order
        .iter()
        .filter(|key| latest[*key] >= threshold)
        .map(|(u, i)| (users[u], items[i]))
        .collect();
    let matrix = BinaryMatrix::new(users.len(), items.len(), positives)?;

    let mut user_ids = vec![String::new(); users.len()];
    for (id, k) in users {
        user_ids[k] = id;
    }
    let mut item_ids = vec![String::new(); items.len()];
    for (id, k) in items {
        item_ids[k] = id;
    }
    Ok(RatingsData {
        matrix,
        users: user_ids,
        items: item_ids,
        ratings: order.len(),
        malformed,
        duplicates,
        threshold,
    })
}
