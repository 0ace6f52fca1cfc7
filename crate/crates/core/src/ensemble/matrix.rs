//! Agent × finding coverage incidence.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub problem_id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub agent: String,
    pub problem_id: String,
    pub text: String,
    #[serde(default)]
    pub matched_finding: Option<String>,
}

/// Fixed-width bitset over findings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits(Vec<u64>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    pub fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub fn intersection_count(&self, other: &Bits) -> usize {
        self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn union_count(&self, other: &Bits) -> usize {
        self.0.iter().zip(&other.0).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Members of `other` missing from `self`.
    pub fn gain(&self, other: &Bits) -> usize {
        self.0.iter().zip(&other.0).map(|(a, b)| (b & !a).count_ones() as usize).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct CoverageMatrix {
    agents: Vec<String>,
    findings: Vec<String>,
    rows: Vec<Vec<bool>>,
    bits: Vec<Bits>,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    agents: Vec<String>,
    findings: Vec<String>,
    rows: Vec<Vec<bool>>,
}

impl TryFrom<MatrixFile> for CoverageMatrix {
    type Error = Error;
    fn try_from(f: MatrixFile) -> Result<Self> {
        CoverageMatrix::new(f.agents, f.findings, f.rows)
    }
}

impl From<CoverageMatrix> for MatrixFile {
    fn from(m: CoverageMatrix) -> Self {
        MatrixFile { agents: m.agents, findings: m.findings, rows: m.rows }
    }
}

fn check_unique(kind: &str, names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::Data(format!("duplicate {kind} '{n}'")));
        }
    }
    Ok(())
}

impl CoverageMatrix {
    pub fn new(agents: Vec<String>, findings: Vec<String>, rows: Vec<Vec<bool>>) -> Result<Self> {
        if agents.is_empty() || findings.is_empty() {
            return Err(Error::Data("coverage matrix needs at least one agent and one finding".into()));
        }
        if rows.len() != agents.len() {
            return Err(Error::Data(format!("{} agents but {} rows", agents.len(), rows.len())));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != findings.len()) {
            return Err(Error::Data(format!(
                "row for '{}' has {} cells, expected {}",
                agents[i],
                r.len(),
                findings.len()
            )));
        }
        check_unique("agent", &agents)?;
        check_unique("finding", &findings)?;
        let bits = rows
            .iter()
            .map(|r| {
                let mut b = Bits::zeros(findings.len());
                r.iter().enumerate().filter(|(_, &c)| c).for_each(|(j, _)| b.set(j));
                b
            })
            .collect();
        Ok(CoverageMatrix { agents, findings, rows, bits })
    }

    /// Builds a matrix from each agent's covered finding indices.
    pub fn from_sets(agents: Vec<String>, findings: Vec<String>, covered: &[Vec<usize>]) -> Result<Self> {
        let rows = covered
            .iter()
            .map(|set| {
                let mut row = vec![false; findings.len()];
                for &j in set {
                    *row.get_mut(j).ok_or_else(|| Error::Data(format!("finding index {j} out of range")))? = true;
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        CoverageMatrix::new(agents, findings, rows)
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn findings(&self) -> &[String] {
        &self.findings
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_findings(&self) -> usize {
        self.findings.len()
    }

    pub fn bits(&self, agent: usize) -> &Bits {
        &self.bits[agent]
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    /// Findings covered by `agent`.
    pub fn covered(&self, agent: usize) -> usize {
        self.bits[agent].count()
    }

    /// Number of agents covering each finding.
    pub fn finding_multiplicity(&self) -> Vec<usize> {
        (0..self.n_findings()).map(|j| self.bits.iter().filter(|b| b.get(j)).count()).collect()
    }

    pub fn union_bits(&self, agents: impl IntoIterator<Item = usize>) -> Bits {
        let mut acc = Bits::zeros(self.n_findings());
        for a in agents {
            acc.union_with(&self.bits[a]);
        }
        acc
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with header `agent,<finding ids...>` and 0/1 cells.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        let findings: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut agents = Vec::new();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let mut cells = rec.iter();
            agents.push(cells.next().unwrap_or_default().to_owned());
            rows.push(
                cells
                    .map(|c| match c.trim() {
                        "1" | "true" => Ok(true),
                        "0" | "false" => Ok(false),
                        other => Err(Error::Data(format!("bad coverage cell '{other}'"))),
                    })
                    .collect::<Result<Vec<bool>>>()?,
            );
        }
        CoverageMatrix::new(agents, findings, rows)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(std::iter::once("agent").chain(self.findings.iter().map(String::as_str)))?;
        for (agent, row) in self.agents.iter().zip(&self.rows) {
            w.write_record(std::iter::once(agent.as_str()).chain(row.iter().map(|&c| if c { "1" } else { "0" })))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
    }

    /// Reads JSON or, for a `.csv` extension, CSV.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::from_csv(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            self.to_csv()?
        } else {
            self.to_json()?
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// The 16 × 51 synthetic reference matrix shipped with the crate.
    pub fn reference() -> Self {
        Self::from_json(include_str!("../../data/coverage_matrix.json")).expect("shipped matrix is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn shape_checks() {
        assert!(CoverageMatrix::new(vec![], names("f", 1), vec![]).is_err());
        assert!(CoverageMatrix::new(names("a", 1), vec![], vec![vec![]]).is_err());
        assert!(CoverageMatrix::new(names("a", 2), names("f", 2), vec![vec![true, false]]).is_err());
        assert!(CoverageMatrix::new(names("a", 1), names("f", 2), vec![vec![true]]).is_err());
        assert!(
            CoverageMatrix::new(vec!["x".into(), "x".into()], names("f", 1), vec![vec![true], vec![false]]).is_err()
        );
    }

    #[test]
    fn json_and_csv_round_trip() {
        let m =
            CoverageMatrix::from_sets(names("a", 3), names("f", 70), &[vec![0, 65], vec![], vec![1, 2, 69]]).unwrap();
        assert_eq!(CoverageMatrix::from_json(&m.to_json().unwrap()).unwrap(), m);
        let csv = m.to_csv().unwrap();
        assert!(csv.starts_with("agent,f0,f1"));
        assert_eq!(CoverageMatrix::from_csv(&csv).unwrap(), m);
        assert_eq!(m.covered(0), 2);
        assert_eq!(m.union_bits([0, 2]).count(), 5);
    }

    #[test]
    fn json_rejects_bad_shape() {
        let bad = r#"{"agents":["a"],"findings":["f1","f2"],"rows":[[true]]}"#;
        assert!(CoverageMatrix::from_json(bad).is_err());
    }

    #[test]
    fn reference_shape() {
        let m = CoverageMatrix::reference();
        assert_eq!((m.n_agents(), m.n_findings()), (16, 51));
        let mut k = m.finding_multiplicity();
        k.sort();
        assert_eq!(&k[..3], &[1, 3, 4]);
    }
}
