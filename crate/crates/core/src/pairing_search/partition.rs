use std::fmt;

use crate::effective_capacity::validate_powers;
use crate::{Error, Result};

/// Users `1..=M` split into equal-size NOMA groups. Indices are global
/// weak-to-strong ranks; within a group they are ascending, so position `k`
/// of a group is its `(k+1)`-th weakest member and takes `group_powers[g][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
    group_powers: Vec<Vec<f64>>,
}

impl Partition {
    pub fn new(groups: Vec<Vec<usize>>, group_powers: Vec<Vec<f64>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::domain("partition has no groups"));
        }
        if group_powers.len() != groups.len() {
            return Err(Error::domain("one power vector per group is required"));
        }
        let size = groups[0].len();
        if !(size == 2 || size == 3) {
            return Err(Error::domain(format!("group size {size} not supported (2 or 3)")));
        }
        let m = size * groups.len();
        let mut seen = vec![false; m + 1];
        for (g, p) in groups.iter().zip(&group_powers) {
            if g.len() != size {
                return Err(Error::domain("groups must all have the same size"));
            }
            if g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::domain(format!("group {g:?} is not strictly ascending")));
            }
            for &u in g {
                if u == 0 || u > m || seen[u] {
                    return Err(Error::domain(format!("groups do not partition 1..={m}")));
                }
                seen[u] = true;
            }
            if p.len() != size {
                return Err(Error::domain(format!("group {g:?} has {} power coefficients", p.len())));
            }
            validate_powers(p)?;
        }
        Ok(Self { groups, group_powers })
    }

    /// Same power vector in every group.
    pub fn with_uniform_powers(groups: Vec<Vec<usize>>, powers: &[f64]) -> Result<Self> {
        let group_powers = vec![powers.to_vec(); groups.len()];
        Self::new(groups, group_powers)
    }

    /// Parses labels like `(1,4)-(2,3)`.
    pub fn parse(label: &str, powers: &[f64]) -> Result<Self> {
        let mut groups = Vec::new();
        for part in label.split('-') {
            let inner = part
                .trim()
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::domain(format!("malformed group {part:?} in {label:?}")))?;
            let group = inner
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::domain(format!("bad user index in {label:?}: {e}")))?;
            groups.push(group);
        }
        Self::with_uniform_powers(groups, powers)
    }

    pub fn m(&self) -> usize {
        self.groups.len() * self.group_size()
    }

    pub fn group_size(&self) -> usize {
        self.groups[0].len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_powers(&self) -> &[Vec<f64>] {
        &self.group_powers
    }

    /// Groups with their powers, ordered by smallest member.
    pub fn canonical_groups(&self) -> Vec<(&[usize], &[f64])> {
        let mut v: Vec<_> = self
            .groups
            .iter()
            .zip(&self.group_powers)
            .map(|(g, p)| (g.as_slice(), p.as_slice()))
            .collect();
        v.sort_by_key(|(g, _)| g[0]);
        v
    }

    /// Copy with groups ordered by smallest member.
    pub fn canonical(&self) -> Self {
        let (groups, group_powers) = self
            .canonical_groups()
            .into_iter()
            .map(|(g, p)| (g.to_vec(), p.to_vec()))
            .unzip();
        Self { groups, group_powers }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            let names: Vec<String> = g.iter().map(|u| u.to_string()).collect();
            write!(f, "({})", names.join(","))?;
        }
        Ok(())
    }
}
