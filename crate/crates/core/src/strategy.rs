//! Relatedness, single-addition simulations (SSSET) and bloc experiments.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::complexity::{analyze, raw6, ComplexityReport};
use crate::error::{Error, Result};
use crate::ingest::InvestmentSlice;
use crate::specialization::{binarize, compute_rva_slice, SpecializationMatrix};

/// Domain × domain co-specialization counts with a zero diagonal.
/// `exclude` leaves one country's row out of the count.
pub fn phi_matrix(m: &SpecializationMatrix, exclude: Option<usize>) -> Vec<Vec<u32>> {
    let k = m.n_domains();
    let mut phi = vec![vec![0u32; k]; k];
    for (i, row) in m.rows().iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        for a in 0..k {
            if row[a] == 0 {
                continue;
            }
            for b in 0..k {
                if a != b && row[b] == 1 {
                    phi[a][b] += 1;
                }
            }
        }
    }
    phi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RelatednessOptions {
    /// Count co-specializations only in countries other than the focal one.
    pub exclude_focal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateScore {
    pub domain: String,
    pub score: u32,
    /// 1 = most related; equal scores share the better rank.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelatednessTable {
    pub country: String,
    pub phi: Vec<Vec<u32>>,
    /// Non-specialized domains, most related first, equal scores by label.
    pub candidates: Vec<CandidateScore>,
}

impl RelatednessTable {
    pub fn candidate(&self, domain: &str) -> Option<&CandidateScore> {
        self.candidates.iter().find(|c| c.domain == domain)
    }
}

pub fn relatedness(m: &SpecializationMatrix, country: &str) -> Result<RelatednessTable> {
    relatedness_with(m, country, RelatednessOptions::default())
}

pub fn relatedness_with(
    m: &SpecializationMatrix,
    country: &str,
    options: RelatednessOptions,
) -> Result<RelatednessTable> {
    let ci = m
        .country_index(country)
        .ok_or_else(|| Error::UnknownCountry(country.to_owned()))?;
    let phi = phi_matrix(m, options.exclude_focal.then_some(ci));
    let row = &m.rows()[ci];
    let mut candidates: Vec<CandidateScore> = (0..m.n_domains())
        .filter(|&j| row[j] == 0)
        .map(|j| CandidateScore {
            domain: m.domains()[j].clone(),
            score: (0..m.n_domains())
                .filter(|&l| row[l] == 1)
                .map(|l| phi[j][l])
                .sum(),
            rank: 0,
        })
        .collect();
    candidates.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.domain.cmp(&b.domain)));
    for i in 0..candidates.len() {
        candidates[i].rank = if i > 0 && candidates[i].score == candidates[i - 1].score {
            candidates[i - 1].rank
        } else {
            i + 1
        };
    }
    Ok(RelatednessTable {
        country: country.to_owned(),
        phi,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub country: String,
    pub candidate_domain: String,
    pub new_gci: f64,
    pub baseline_rank: usize,
    pub new_rank: usize,
    /// Positive means the country moved up.
    pub rank_change: i64,
    pub relatedness_score: u32,
    pub relatedness_rank: usize,
}

/// Rank a country holds in `report`; countries without a GCI sit just below
/// every ranked country.
fn effective_rank(report: &ComplexityReport, i: usize) -> usize {
    report.country_rank[i].unwrap_or_else(|| report.country_rank.iter().flatten().count() + 1)
}

/// Baseline analysis shared by every toggle of one matrix.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    matrix: &'m SpecializationMatrix,
    baseline: ComplexityReport,
    options: RelatednessOptions,
}

impl<'m> Simulator<'m> {
    pub fn new(matrix: &'m SpecializationMatrix) -> Result<Self> {
        Self::with_options(matrix, RelatednessOptions::default())
    }

    pub fn with_options(matrix: &'m SpecializationMatrix, options: RelatednessOptions) -> Result<Self> {
        Ok(Self {
            matrix,
            baseline: analyze(matrix)?,
            options,
        })
    }

    pub fn baseline(&self) -> &ComplexityReport {
        &self.baseline
    }

    pub fn simulate(&self, country: &str, domain: &str) -> Result<SimulationOutcome> {
        let table = relatedness_with(self.matrix, country, self.options)?;
        self.simulate_with(&table, domain)
    }

    fn simulate_with(&self, table: &RelatednessTable, domain: &str) -> Result<SimulationOutcome> {
        let m = self.matrix;
        let ci = m
            .country_index(&table.country)
            .ok_or_else(|| Error::UnknownCountry(table.country.clone()))?;
        let dj = m
            .domain_index(domain)
            .ok_or_else(|| Error::UnknownDomain(domain.to_owned()))?;
        if m.get(ci, dj) {
            return Err(Error::AlreadySpecialized {
                country: table.country.clone(),
                domain: domain.to_owned(),
            });
        }
        let toggled = m.with_cell(ci, dj, true);
        let after = analyze(&toggled)?;
        let baseline_rank = effective_rank(&self.baseline, ci);
        let new_rank = effective_rank(&after, ci);
        let cand = table
            .candidate(domain)
            .expect("unspecialized domain is a candidate");
        Ok(SimulationOutcome {
            country: table.country.clone(),
            candidate_domain: domain.to_owned(),
            new_gci: after.gci[ci].expect("toggled country has a specialization"),
            baseline_rank,
            new_rank,
            rank_change: baseline_rank as i64 - new_rank as i64,
            relatedness_score: cand.score,
            relatedness_rank: cand.rank,
        })
    }
}

/// Toggles one cell from 0 to 1 and reports the country's rank movement.
pub fn simulate_addition(
    m: &SpecializationMatrix,
    country: &str,
    domain: &str,
) -> Result<SimulationOutcome> {
    Simulator::new(m)?.simulate(country, domain)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SssetRow {
    pub country: String,
    /// Empty when no addition improves the rank.
    pub domains: Vec<String>,
    /// Zero for empty rows.
    pub rank_change: i64,
    pub relatedness_rank: Option<usize>,
    pub relatedness_score: Option<u32>,
    /// Candidates whose simulation could not be ranked.
    pub indeterminate: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SssetReport {
    pub rows: Vec<SssetRow>,
}

impl SssetReport {
    pub fn row(&self, country: &str) -> Option<&SssetRow> {
        self.rows.iter().find(|r| r.country == country)
    }

    /// `ssset.csv` body.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("country,ssset_domains,rank_change,relatedness_rank,relatedness_score\n");
        for r in &self.rows {
            let domains = if r.domains.is_empty() {
                "NONE".to_owned()
            } else {
                r.domains.join("|")
            };
            let change = match r.rank_change {
                0 => "=".to_owned(),
                n if n > 0 => format!("+{n}"),
                n => n.to_string(),
            };
            let rank = r.relatedness_rank.map(|v| v.to_string()).unwrap_or_default();
            let score = r.relatedness_score.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{domains},{change},{rank},{score}\n", r.country));
        }
        out
    }
}

fn none_row(country: &str, indeterminate: Vec<String>) -> SssetRow {
    SssetRow {
        country: country.to_owned(),
        domains: Vec::new(),
        rank_change: 0,
        relatedness_rank: None,
        relatedness_score: None,
        indeterminate,
    }
}

pub fn find_ssset(m: &SpecializationMatrix) -> Result<SssetReport> {
    find_ssset_with(m, RelatednessOptions::default())
}

/// For every country: the additions with the largest rank gain, narrowed to
/// the most related among them. Candidates whose recomputation fails are
/// listed as indeterminate and skipped.
pub fn find_ssset_with(m: &SpecializationMatrix, options: RelatednessOptions) -> Result<SssetReport> {
    let sim = match Simulator::with_options(m, options) {
        Ok(sim) => sim,
        Err(e) => {
            log::warn!("baseline indices unavailable ({e}); no country can gain rank");
            return Ok(SssetReport {
                rows: m.countries().iter().map(|c| none_row(c, Vec::new())).collect(),
            });
        }
    };
    let mut rows = Vec::with_capacity(m.n_countries());
    for country in m.countries() {
        let table = relatedness_with(m, country, options)?;
        let mut outcomes = Vec::new();
        let mut indeterminate = Vec::new();
        for cand in &table.candidates {
            match sim.simulate_with(&table, &cand.domain) {
                Ok(o) => outcomes.push(o),
                Err(e) => {
                    log::debug!("{country} + {}: indeterminate ({e})", cand.domain);
                    indeterminate.push(cand.domain.clone());
                }
            }
        }
        indeterminate.sort();
        let best_change = outcomes.iter().map(|o| o.rank_change).max();
        let row = match best_change {
            Some(best) if best > 0 => {
                let top: Vec<&SimulationOutcome> =
                    outcomes.iter().filter(|o| o.rank_change == best).collect();
                let best_rel = top.iter().map(|o| o.relatedness_rank).min().expect("non-empty");
                let chosen: Vec<&&SimulationOutcome> =
                    top.iter().filter(|o| o.relatedness_rank == best_rel).collect();
                let mut domains: Vec<String> =
                    chosen.iter().map(|o| o.candidate_domain.clone()).collect();
                domains.sort();
                SssetRow {
                    country: country.clone(),
                    domains,
                    rank_change: best,
                    relatedness_rank: Some(best_rel),
                    relatedness_score: Some(chosen[0].relatedness_score),
                    indeterminate,
                }
            }
            _ => none_row(country, indeterminate),
        };
        rows.push(row);
    }
    Ok(SssetReport { rows })
}

/// How member rows combine into one bloc row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlocRule {
    /// Specialized where any member is.
    AnyMember,
    /// Specialized where at least `k` members are.
    AtLeast(usize),
}

impl fmt::Display for BlocRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlocRule::AnyMember => f.write_str("any"),
            BlocRule::AtLeast(k) => write!(f, "k:{k}"),
        }
    }
}

impl FromStr for BlocRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "any" {
            return Ok(BlocRule::AnyMember);
        }
        let k = s
            .strip_prefix("k:")
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidBloc(format!("unknown rule `{s}` (expected any or k:N)")))?;
        if k == 0 {
            return Err(Error::InvalidBloc("k must be at least 1".into()));
        }
        Ok(BlocRule::AtLeast(k))
    }
}

fn member_indices(m: &SpecializationMatrix, members: &[String], rule: BlocRule) -> Result<Vec<usize>> {
    if members.is_empty() {
        return Err(Error::InvalidBloc("member set is empty".into()));
    }
    let mut idx = Vec::with_capacity(members.len());
    for c in members {
        let i = m
            .country_index(c)
            .ok_or_else(|| Error::UnknownCountry(c.clone()))?;
        if idx.contains(&i) {
            return Err(Error::InvalidBloc(format!("member `{c}` listed twice")));
        }
        idx.push(i);
    }
    if let BlocRule::AtLeast(k) = rule {
        if k == 0 {
            return Err(Error::InvalidBloc("k must be at least 1".into()));
        }
        if k > members.len() {
            return Err(Error::InvalidBloc(format!(
                "k = {k} exceeds the {} members",
                members.len()
            )));
        }
    }
    Ok(idx)
}

/// The bloc's specialization row under `rule`.
pub fn bloc_matrix(m: &SpecializationMatrix, members: &[String], rule: BlocRule) -> Result<Vec<u8>> {
    let idx = member_indices(m, members, rule)?;
    let k = match rule {
        BlocRule::AnyMember => 1,
        BlocRule::AtLeast(k) => k,
    };
    Ok((0..m.n_domains())
        .map(|j| {
            let count = idx.iter().filter(|&&i| m.get(i, j)).count();
            u8::from(count >= k)
        })
        .collect())
}

fn replace_members(
    m: &SpecializationMatrix,
    idx: &[usize],
    label: &str,
    row: Vec<u8>,
) -> Result<SpecializationMatrix> {
    let first = *idx.iter().min().expect("non-empty");
    let mut countries = Vec::new();
    let mut cells = Vec::new();
    for i in 0..m.n_countries() {
        if i == first {
            countries.push(label.to_owned());
            cells.push(row.clone());
        } else if !idx.contains(&i) {
            countries.push(m.countries()[i].clone());
            cells.push(m.rows()[i].clone());
        }
    }
    Ok(SpecializationMatrix::new(countries, m.domains().to_vec(), cells)?
        .with_year(m.year())
        .with_variant(m.variant()))
}

/// The bloc's standing when member flows are summed before computing RVA.
/// Rank and GCI are absent when the pooled matrix has no usable spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveSumOutcome {
    pub bloc_domains: Vec<String>,
    pub bloc_rank: Option<usize>,
    pub bloc_gci: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlocOutcome {
    pub members: Vec<String>,
    pub rule: BlocRule,
    pub bloc_label: String,
    pub bloc_domains: Vec<String>,
    pub bloc_rank: Option<usize>,
    pub bloc_gci: Option<f64>,
    pub member_baseline_ranks: Vec<(String, Option<usize>)>,
    pub naive_sum: Option<NaiveSumOutcome>,
}

pub fn bloc_experiment(
    m: &SpecializationMatrix,
    members: &[String],
    rule: BlocRule,
) -> Result<BlocOutcome> {
    bloc_experiment_with_flows(m, None, members, rule)
}

/// Replaces the members by one bloc row, recomputes every index, and, when
/// the investment slice is given, repeats the exercise with member flows
/// summed before specialization.
pub fn bloc_experiment_with_flows(
    m: &SpecializationMatrix,
    flows: Option<&InvestmentSlice>,
    members: &[String],
    rule: BlocRule,
) -> Result<BlocOutcome> {
    let idx = member_indices(m, members, rule)?;
    let row = bloc_matrix(m, members, rule)?;
    let label = members.join("+");
    if m.country_index(&label).is_some() && members.len() > 1 {
        return Err(Error::InvalidBloc(format!("label `{label}` clashes with a country")));
    }
    let baseline = analyze(m)?;
    let bloc_domains = domains_of(m.domains(), &row);
    let reduced = replace_members(m, &idx, &label, row)?;
    let after = analyze(&reduced)?;
    let naive_sum = flows
        .map(|slice| naive_sum_outcome(slice, members, &label))
        .transpose()?;
    Ok(BlocOutcome {
        members: members.to_vec(),
        rule,
        bloc_domains,
        bloc_rank: after.rank_of(&label),
        bloc_gci: after.gci_of(&label),
        member_baseline_ranks: members
            .iter()
            .map(|c| (c.clone(), baseline.rank_of(c)))
            .collect(),
        bloc_label: label,
        naive_sum,
    })
}

fn domains_of(domains: &[String], row: &[u8]) -> Vec<String> {
    domains
        .iter()
        .zip(row)
        .filter(|(_, &v)| v == 1)
        .map(|(d, _)| d.clone())
        .collect()
}

fn naive_sum_outcome(
    slice: &InvestmentSlice,
    members: &[String],
    label: &str,
) -> Result<NaiveSumOutcome> {
    let mut pooled = vec![0.0; slice.domains.len()];
    let mut countries = Vec::new();
    let mut values = Vec::new();
    let mut placed = false;
    for (c, row) in slice.countries.iter().zip(&slice.values) {
        if members.contains(c) {
            for (p, v) in pooled.iter_mut().zip(row) {
                *p += v;
            }
            if !placed {
                countries.push(label.to_owned());
                values.push(Vec::new());
                placed = true;
            }
        } else {
            countries.push(c.clone());
            values.push(row.clone());
        }
    }
    for c in members {
        if !slice.countries.contains(c) {
            return Err(Error::UnknownCountry(c.clone()));
        }
    }
    let pos = countries.iter().position(|c| c == label).expect("placed");
    values[pos] = pooled;
    let merged = InvestmentSlice::new(slice.year, countries, slice.domains.clone(), values)?;
    let m = binarize(&compute_rva_slice(&merged)?);
    let bloc_domains = match m.country_index(label) {
        Some(i) => domains_of(m.domains(), &m.rows()[i]),
        None => Vec::new(),
    };
    let report = analyze(&m)
        .map_err(|e| log::warn!("naive-sum indices unavailable: {e}"))
        .ok();
    Ok(NaiveSumOutcome {
        bloc_domains,
        bloc_rank: report.as_ref().and_then(|r| r.rank_of(label)),
        bloc_gci: report.as_ref().and_then(|r| r.gci_of(label)),
    })
}

#[derive(Serialize)]
struct MemberRank<'a> {
    id: &'a str,
    baseline_rank: Option<usize>,
}

#[derive(Serialize)]
struct NaiveDoc<'a> {
    bloc_domains: &'a [String],
    bloc_rank: Option<usize>,
    bloc_gci: Option<Box<serde_json::value::RawValue>>,
}

#[derive(Serialize)]
struct BlocDoc<'a> {
    members: &'a [String],
    rule: String,
    bloc_label: &'a str,
    bloc_domains: &'a [String],
    bloc_rank: Option<usize>,
    bloc_gci: Option<Box<serde_json::value::RawValue>>,
    member_baseline_ranks: Vec<MemberRank<'a>>,
    naive_sum: Option<NaiveDoc<'a>>,
}

impl BlocOutcome {
    /// `bloc.json` body.
    pub fn to_json(&self) -> String {
        let doc = BlocDoc {
            members: &self.members,
            rule: self.rule.to_string(),
            bloc_label: &self.bloc_label,
            bloc_domains: &self.bloc_domains,
            bloc_rank: self.bloc_rank,
            bloc_gci: self.bloc_gci.map(raw6),
            member_baseline_ranks: self
                .member_baseline_ranks
                .iter()
                .map(|(id, r)| MemberRank {
                    id,
                    baseline_rank: *r,
                })
                .collect(),
            naive_sum: self.naive_sum.as_ref().map(|n| NaiveDoc {
                bloc_domains: &n.bloc_domains,
                bloc_rank: n.bloc_rank,
                bloc_gci: n.bloc_gci.map(raw6),
            }),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}
