//! Judge-model operations: claim extraction, claim-to-finding matching and
//! claim clustering. The prompt templates ship with the crate and their
//! hashes go into every report built from judged data.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use futures::StreamExt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matrix::{Claim, CoverageMatrix, Finding};
use crate::error::{Error, Result};
use crate::runner::{CallFailure, ChatClient, ChatRequest, ModelEndpoint, RetryPolicy};

pub const EXTRACT_CLAIMS_PROMPT: &str = include_str!("../../data/prompts/extract_claims.txt");
pub const MATCH_FINDING_PROMPT: &str = include_str!("../../data/prompts/match_finding.txt");
pub const CLUSTER_CLAIMS_PROMPT: &str = include_str!("../../data/prompts/cluster_claims.txt");

const LIST_REMINDER: &str =
    "Format reminder: reply only with numbered lines such as \"1. claim\", or with the single word NONE.";
const MATCH_REMINDER: &str = "Format reminder: reply with exactly one word, MATCH or NO_MATCH.";
const CLUSTER_REMINDER: &str = "Format reminder: reply with exactly one word, SAME or DIFFERENT.";

/// SHA-256 of each shipped template, keyed by template name.
pub fn prompt_hashes() -> BTreeMap<String, String> {
    [
        ("extract_claims", EXTRACT_CLAIMS_PROMPT),
        ("match_finding", MATCH_FINDING_PROMPT),
        ("cluster_claims", CLUSTER_CLAIMS_PROMPT),
    ]
    .into_iter()
    .map(|(name, text)| (name.to_owned(), hex::encode(Sha256::digest(text.as_bytes()))))
    .collect()
}

/// A model endpoint queried deterministically for judgments.
#[derive(Clone)]
pub struct Judge {
    client: ChatClient,
}

impl Judge {
    pub fn new(endpoint: &ModelEndpoint, retry: RetryPolicy) -> Result<Self> {
        Ok(Judge { client: ChatClient::new(endpoint, retry)? })
    }

    async fn ask(&self, system: &str, user: String) -> Result<String> {
        let req = ChatRequest { system: system.to_owned(), user, temperature: 0.0 };
        match self.client.complete(&req).await? {
            Ok(reply) => Ok(reply.text),
            Err((CallFailure::Timeout(m) | CallFailure::Transport(m), _)) => Err(Error::Transport(m)),
        }
    }

    /// Asks once, then once more with a format reminder if `parse` rejects
    /// the first reply.
    async fn ask_parsed<T>(
        &self,
        system: &str,
        user: String,
        reminder: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<T> {
        let first = self.ask(system, user.clone()).await?;
        if let Some(v) = parse(&first) {
            return Ok(v);
        }
        let second = self.ask(system, format!("{user}\n\n{reminder}")).await?;
        parse(&second).ok_or_else(|| Error::JudgeFormat(format!("unusable reply after retry: {:?}", second.trim())))
    }
}

/// Numbered items of a list reply; `Some(empty)` for NONE.
pub fn parse_claim_list(reply: &str) -> Option<Vec<String>> {
    let trimmed = reply.trim();
    if trimmed.trim_end_matches('.').eq_ignore_ascii_case("none") {
        return Some(Vec::new());
    }
    let items: Vec<String> = trimmed
        .lines()
        .filter_map(|line| {
            let line = line.trim_start();
            let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
            if digits == 0 {
                return None;
            }
            let rest = line[digits..].strip_prefix(['.', ')'])?;
            let text = rest.trim();
            (!text.is_empty()).then(|| text.to_owned())
        })
        .collect();
    (!items.is_empty()).then_some(items)
}

fn parse_verdict(reply: &str, yes: &str, no: &str) -> Option<bool> {
    let word = reply.trim().trim_end_matches('.').to_ascii_uppercase().replace(' ', "_");
    if word == yes {
        Some(true)
    } else if word == no {
        Some(false)
    } else {
        None
    }
}

pub async fn extract_claims(agent_output: &str, agent: &str, problem_id: &str, judge: &Judge) -> Result<Vec<Claim>> {
    if agent_output.trim().is_empty() {
        return Ok(Vec::new());
    }
    let items =
        judge.ask_parsed(EXTRACT_CLAIMS_PROMPT, agent_output.to_owned(), LIST_REMINDER, parse_claim_list).await?;
    Ok(items
        .into_iter()
        .map(|text| Claim { agent: agent.to_owned(), problem_id: problem_id.to_owned(), text, matched_finding: None })
        .collect())
}

async fn judge_match(claim: &Claim, finding: &Finding, judge: &Judge) -> Result<bool> {
    let user = format!("Finding: {}\nClaim: {}", finding.description, claim.text);
    judge.ask_parsed(MATCH_FINDING_PROMPT, user, MATCH_REMINDER, |r| parse_verdict(r, "MATCH", "NO_MATCH")).await
}

/// Judges every claim against every finding. A claim keeps the first
/// finding it matches; the returned row marks each finding matched by any
/// claim.
pub async fn match_ground_truth(
    claims: &[Claim],
    findings: &[Finding],
    judge: &Judge,
) -> Result<(Vec<Claim>, Vec<bool>)> {
    if let (Some(c), Some(f)) = (claims.first(), findings.first()) {
        let problem = &f.problem_id;
        if findings.iter().any(|x| &x.problem_id != problem) || claims.iter().any(|x| &x.problem_id != problem) {
            return Err(Error::Data(format!(
                "claims for '{}' and findings for '{problem}' must share one problem",
                c.problem_id
            )));
        }
    }
    let mut row = vec![false; findings.len()];
    let mut out = Vec::with_capacity(claims.len());
    for claim in claims {
        let mut claim = claim.clone();
        claim.matched_finding = None;
        for (j, finding) in findings.iter().enumerate() {
            if judge_match(&claim, finding, judge).await? {
                row[j] = true;
                claim.matched_finding.get_or_insert_with(|| finding.id.clone());
            }
        }
        out.push(claim);
    }
    Ok((out, row))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimCluster {
    pub problem_id: String,
    pub claims: Vec<Claim>,
    pub agents: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DivergenceMap {
    /// Clusters asserted by two or more agents.
    pub convergent: Vec<ClaimCluster>,
    /// Clusters asserted by exactly one agent.
    pub unique: Vec<ClaimCluster>,
}

impl DivergenceMap {
    /// Cluster identifiers per agent, for claim-basis overlap.
    pub fn agent_sets(&self, agents: &[String]) -> Vec<BTreeSet<usize>> {
        let mut sets = vec![BTreeSet::new(); agents.len()];
        for (id, cluster) in self.convergent.iter().chain(&self.unique).enumerate() {
            for a in &cluster.agents {
                if let Some(i) = agents.iter().position(|x| x == a) {
                    sets[i].insert(id);
                }
            }
        }
        sets
    }
}

/// Clusters claims within each problem. Each claim joins the first cluster
/// whose founding claim the judge calls the same issue, else starts one.
pub async fn divergence_map(claims: &[Claim], judge: &Judge) -> Result<DivergenceMap> {
    let mut by_problem: BTreeMap<&str, Vec<&Claim>> = BTreeMap::new();
    for c in claims {
        by_problem.entry(c.problem_id.as_str()).or_default().push(c);
    }
    let mut map = DivergenceMap::default();
    for (problem, group) in by_problem {
        let mut clusters: Vec<ClaimCluster> = Vec::new();
        for claim in group {
            let mut home = None;
            for (i, cluster) in clusters.iter().enumerate() {
                let user = format!("Claim 1: {}\nClaim 2: {}", cluster.claims[0].text, claim.text);
                let same = judge
                    .ask_parsed(CLUSTER_CLAIMS_PROMPT, user, CLUSTER_REMINDER, |r| {
                        parse_verdict(r, "SAME", "DIFFERENT")
                    })
                    .await?;
                if same {
                    home = Some(i);
                    break;
                }
            }
            match home {
                Some(i) => {
                    clusters[i].claims.push(claim.clone());
                    clusters[i].agents.insert(claim.agent.clone());
                }
                None => clusters.push(ClaimCluster {
                    problem_id: problem.to_owned(),
                    claims: vec![claim.clone()],
                    agents: BTreeSet::from([claim.agent.clone()]),
                }),
            }
        }
        for c in clusters {
            if c.agents.len() >= 2 {
                map.convergent.push(c);
            } else {
                map.unique.push(c);
            }
        }
    }
    Ok(map)
}

/// One agent's report on one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentOutput {
    pub agent: String,
    pub problem_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeFailure {
    pub agent: String,
    pub problem_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedCoverage {
    pub claims: Vec<Claim>,
    pub matrix: CoverageMatrix,
    /// Outputs whose judging failed; their findings count as uncovered.
    pub failures: Vec<JudgeFailure>,
    pub prompt_hashes: BTreeMap<String, String>,
}

/// Claims of one output with the findings they hit.
type MatchedRow = (Vec<Claim>, Vec<bool>);

/// Extracts and matches claims for every output, judging up to
/// `concurrency` outputs at once. Agents appear in the matrix in order of
/// first appearance, findings in the given order.
pub async fn judge_outputs(
    outputs: &[AgentOutput],
    findings: &[Finding],
    judge: &Judge,
    concurrency: usize,
) -> Result<JudgedCoverage> {
    let mut agents: Vec<String> = Vec::new();
    for o in outputs {
        if !agents.contains(&o.agent) {
            agents.push(o.agent.clone());
        }
    }
    let mut by_problem: HashMap<&str, Vec<Finding>> = HashMap::new();
    for f in findings {
        by_problem.entry(f.problem_id.as_str()).or_default().push(f.clone());
    }
    let column: HashMap<&str, usize> = findings.iter().enumerate().map(|(j, f)| (f.id.as_str(), j)).collect();
    if column.len() != findings.len() {
        return Err(Error::Data("duplicate finding id".into()));
    }

    let mut results: Vec<(usize, Result<MatchedRow>)> =
        futures::stream::iter(outputs.iter().enumerate().map(|(i, o)| {
            let problem_findings = by_problem.get(o.problem_id.as_str()).cloned().unwrap_or_default();
            async move {
                let res = async {
                    let claims = extract_claims(&o.text, &o.agent, &o.problem_id, judge).await?;
                    match_ground_truth(&claims, &problem_findings, judge).await
                }
                .await;
                (i, res)
            }
        }))
        .buffer_unordered(concurrency.max(1))
        .collect()
        .await;
    results.sort_by_key(|(i, _)| *i);

    let mut rows = vec![vec![false; findings.len()]; agents.len()];
    let mut claims = Vec::new();
    let mut failures = Vec::new();
    for (i, res) in results {
        let o = &outputs[i];
        match res {
            Ok((matched, partial)) => {
                let a = agents.iter().position(|x| x == &o.agent).expect("agent indexed");
                let problem_findings = &by_problem[o.problem_id.as_str()];
                for (f, hit) in problem_findings.iter().zip(partial) {
                    if hit {
                        rows[a][column[f.id.as_str()]] = true;
                    }
                }
                claims.extend(matched);
            }
            Err(e) if e.is_abort() => return Err(e),
            Err(e) => failures.push(JudgeFailure {
                agent: o.agent.clone(),
                problem_id: o.problem_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let ids = findings.iter().map(|f| f.id.clone()).collect();
    Ok(JudgedCoverage {
        claims,
        matrix: CoverageMatrix::new(agents, ids, rows)?,
        failures,
        prompt_hashes: prompt_hashes(),
    })
}
