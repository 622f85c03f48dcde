use serde::{Deserialize, Serialize};

use super::CaseDefinition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureMode {
    Independent,
    Coalitional,
    All,
}

/// Placement of H-MGs (by case index) into an upper-level group and
/// lower-level groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoalitionStructure {
    pub upper: Vec<usize>,
    pub lower: Vec<Vec<usize>>,
    pub label: String,
}

impl CoalitionStructure {
    pub fn new(case: &CaseDefinition, upper: Vec<usize>, lower: Vec<Vec<usize>>) -> Self {
        let name = |g: &[usize]| g.iter().map(|&i| case.hmgs[i].id.as_str()).collect::<String>();
        let mut parts = vec![name(&upper)];
        parts.extend(lower.iter().map(|g| name(g)));
        let label = format!("{{{}}}", parts.join(","));
        CoalitionStructure { upper, lower, label }
    }

    /// Upper group first, then the lower groups in order.
    pub fn groups(&self) -> Vec<&[usize]> {
        let mut g: Vec<&[usize]> = vec![&self.upper];
        g.extend(self.lower.iter().map(|v| v.as_slice()));
        g
    }

    pub fn group_of(&self, hmg: usize) -> Option<usize> {
        self.groups().iter().position(|g| g.contains(&hmg))
    }

    pub fn group_label(&self, case: &CaseDefinition, group: usize) -> String {
        self.groups()[group].iter().map(|&i| case.hmgs[i].id.as_str()).collect()
    }

    /// Parses a label such as `{B,AC}` against the case's H-MG ids.
    pub fn parse(case: &CaseDefinition, label: &str) -> Option<Self> {
        let inner = label.trim().strip_prefix('{')?.strip_suffix('}')?;
        let mut groups = Vec::new();
        for part in inner.split(',') {
            groups.push(split_ids(case, part.trim())?);
        }
        let upper = groups.remove(0);
        let s = CoalitionStructure::new(case, upper, groups);
        let mut all: Vec<usize> = s.groups().concat();
        all.sort_unstable();
        (all == (0..case.hmgs.len()).collect::<Vec<_>>()).then_some(s)
    }
}

/// Splits concatenated ids greedily, longest id first.
fn split_ids(case: &CaseDefinition, mut s: &str) -> Option<Vec<usize>> {
    let mut ids: Vec<(usize, &str)> = case.hmgs.iter().enumerate().map(|(i, h)| (i, h.id.as_str())).collect();
    ids.sort_by_key(|(_, id)| std::cmp::Reverse(id.len()));
    let mut out = Vec::new();
    while !s.is_empty() {
        let &(i, id) = ids.iter().find(|(_, id)| s.starts_with(id))?;
        out.push(i);
        s = &s[id.len()..];
    }
    if out.is_empty() {
        return None;
    }
    out.sort_unstable();
    Some(out)
}

pub fn enumerate_structures(case: &CaseDefinition, mode: StructureMode) -> Vec<CoalitionStructure> {
    let n = case.hmgs.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    if matches!(mode, StructureMode::Coalitional | StructureMode::All) {
        for mask in 1u64..(1u64 << n) {
            let upper: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let rest: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
            if rest.is_empty() && n > 2 {
                continue;
            }
            let lower = if rest.is_empty() { vec![] } else { vec![rest] };
            out.push(CoalitionStructure::new(case, upper, lower));
        }
    }
    if matches!(mode, StructureMode::Independent | StructureMode::All) {
        let lower = (1..n).map(|i| vec![i]).collect();
        out.push(CoalitionStructure::new(case, vec![0], lower));
    }
    out.sort_by(|a, b| a.label.cmp(&b.label));
    out.dedup_by(|a, b| a.upper == b.upper && a.lower == b.lower);
    out
}
