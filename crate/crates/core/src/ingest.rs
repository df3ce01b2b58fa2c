//! Deal-level input parsing, sampling filters and aggregation into the
//! yearly country × domain investment tensor.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Read;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::exact_order_sum;

const DEALS_HEADER: [&str; 4] = ["firm_id", "country", "year", "amount_usd"];
const CLASSIFICATIONS_HEADER: [&str; 3] = ["firm_id", "domain_id", "probability"];
const DEFAULT_TAXONOMY: &str = include_str!("../assets/taxonomy.json");

/// One funding event.
#[derive(Debug, Clone, PartialEq)]
pub struct DealRecord {
    pub firm_id: String,
    pub country: String,
    pub year: i32,
    pub amount_usd: f64,
}

/// A (firm, domain) membership with classifier confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationAssignment {
    pub firm_id: String,
    pub domain_id: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub id: String,
    pub name: String,
}

/// Ordered list of technology domains. Column order everywhere downstream
/// follows this order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    domains: Vec<Domain>,
}

impl Taxonomy {
    pub fn new(domains: Vec<Domain>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::Taxonomy("taxonomy has no domains".into()));
        }
        let mut seen = HashSet::new();
        for d in &domains {
            if d.id.trim().is_empty() {
                return Err(Error::Taxonomy("empty domain id".into()));
            }
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Taxonomy(format!("duplicate domain id `{}`", d.id)));
            }
        }
        Ok(Self { domains })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let domains: Vec<Domain> =
            serde_json::from_str(text).map_err(|e| Error::Taxonomy(e.to_string()))?;
        Self::new(domains)
    }

    /// The 18 emerging-technology domains, ids `D01`..`D18`.
    pub fn default_emerging() -> Self {
        Self::from_json(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid")
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn ids(&self) -> Vec<String> {
        self.domains.iter().map(|d| d.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.domains.iter().position(|d| d.id == id)
    }

    pub fn name(&self, id: &str) -> Option<&str> {
        self.domains
            .iter()
            .find(|d| d.id == id)
            .map(|d| d.name.as_str())
    }
}

/// How a firm classified into two domains attributes its funding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attribution {
    /// Full amount to every assigned domain.
    #[default]
    Full,
    /// Amount divided evenly across assigned domains.
    Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    pub top_n_firms: usize,
    pub min_raise_usd: f64,
    pub min_classified_firms: usize,
    pub probability_threshold: f64,
    pub attribution: Attribution,
    pub years: RangeInclusive<i32>,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            top_n_firms: 3000,
            min_raise_usd: 1_000_000.0,
            min_classified_firms: 500,
            probability_threshold: 0.5,
            attribution: Attribution::Full,
            years: 2014..=2024,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.top_n_firms == 0 {
            return Err(Error::InvalidParameter("top_n_firms must be at least 1".into()));
        }
        if !(self.min_raise_usd >= 0.0 && self.min_raise_usd.is_finite()) {
            return Err(Error::InvalidParameter(
                "min_raise_usd must be a non-negative number".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.probability_threshold) {
            return Err(Error::InvalidParameter(
                "probability_threshold must lie in [0, 1]".into(),
            ));
        }
        if self.years.is_empty() {
            return Err(Error::InvalidParameter("year range is empty".into()));
        }
        Ok(())
    }
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::parse(
            1,
            "header",
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn csv_reader(stream: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(stream)
}

fn field<'r>(record: &'r csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<&'r str> {
    match record.get(idx) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::parse(line, name, format!("missing field `{name}`"))),
    }
}

fn number(raw: &str, name: &str, line: u64) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(
            line,
            name,
            format!("invalid value `{raw}` for field `{name}`"),
        )),
    }
}

/// Parses `firm_id,country,year,amount_usd` rows with the default year range.
pub fn parse_deals(stream: impl Read) -> Result<Vec<DealRecord>> {
    parse_deals_in_range(stream, &FilterParams::default().years)
}

pub fn parse_deals_in_range(
    stream: impl Read,
    years: &RangeInclusive<i32>,
) -> Result<Vec<DealRecord>> {
    let mut reader = csv_reader(stream);
    check_header(&mut reader, &DEALS_HEADER)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != DEALS_HEADER.len() {
            return Err(Error::parse(
                line,
                "row",
                format!("expected {} fields, found {}", DEALS_HEADER.len(), record.len()),
            ));
        }
        let firm_id = field(&record, 0, "firm_id", line)?.to_owned();
        let country = field(&record, 1, "country", line)?.to_owned();
        let year_raw = field(&record, 2, "year", line)?;
        let year: i32 = year_raw.parse().map_err(|_| {
            Error::parse(line, "year", format!("invalid value `{year_raw}` for field `year`"))
        })?;
        if !years.contains(&year) {
            return Err(Error::parse(
                line,
                "year",
                format!(
                    "year {year} outside {}..={}",
                    years.start(),
                    years.end()
                ),
            ));
        }
        let amount_usd = number(field(&record, 3, "amount_usd", line)?, "amount_usd", line)?;
        if amount_usd < 0.0 {
            return Err(Error::parse(line, "amount_usd", "negative amount"));
        }
        out.push(DealRecord {
            firm_id,
            country,
            year,
            amount_usd,
        });
    }
    Ok(out)
}

/// Parses `firm_id,domain_id,probability` rows.
pub fn parse_classifications(stream: impl Read) -> Result<Vec<ClassificationAssignment>> {
    let mut reader = csv_reader(stream);
    check_header(&mut reader, &CLASSIFICATIONS_HEADER)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != CLASSIFICATIONS_HEADER.len() {
            return Err(Error::parse(
                line,
                "row",
                format!(
                    "expected {} fields, found {}",
                    CLASSIFICATIONS_HEADER.len(),
                    record.len()
                ),
            ));
        }
        let firm_id = field(&record, 0, "firm_id", line)?.to_owned();
        let domain_id = field(&record, 1, "domain_id", line)?.to_owned();
        let probability = number(field(&record, 2, "probability", line)?, "probability", line)?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::parse(line, "probability", "probability outside [0, 1]"));
        }
        out.push(ClassificationAssignment {
            firm_id,
            domain_id,
            probability,
        });
    }
    Ok(out)
}

/// Identifies one firm inside one country-year list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FirmKey {
    pub country: String,
    pub year: i32,
    pub firm_id: String,
}

fn firm_year_totals(deals: &[DealRecord]) -> BTreeMap<FirmKey, f64> {
    let mut amounts: BTreeMap<FirmKey, Vec<f64>> = BTreeMap::new();
    for d in deals {
        amounts
            .entry(FirmKey {
                country: d.country.clone(),
                year: d.year,
                firm_id: d.firm_id.clone(),
            })
            .or_default()
            .push(d.amount_usd);
    }
    amounts
        .into_iter()
        .map(|(k, mut v)| (k, exact_order_sum(&mut v)))
        .collect()
}

/// Per (country, year): firms whose calendar-year raise reaches
/// `min_raise_usd`, ranked by that raise, top `top_n_firms` kept. Equal
/// raises at the cutoff go to the lexicographically smaller firm id.
pub fn select_firms(deals: &[DealRecord], params: &FilterParams) -> BTreeSet<FirmKey> {
    let mut lists: BTreeMap<(String, i32), Vec<(String, f64)>> = BTreeMap::new();
    for (key, total) in firm_year_totals(deals) {
        if total >= params.min_raise_usd {
            lists
                .entry((key.country, key.year))
                .or_default()
                .push((key.firm_id, total));
        }
    }
    let mut selected = BTreeSet::new();
    for ((country, year), mut firms) in lists {
        firms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for (firm_id, _) in firms.into_iter().take(params.top_n_firms) {
            selected.insert(FirmKey {
                country: country.clone(),
                year,
                firm_id,
            });
        }
    }
    selected
}

/// Drops assignments below the probability threshold and keeps at most the
/// two most probable domains per firm (equal probabilities resolved by
/// taxonomy order). Surviving domains are returned in taxonomy order.
pub fn threshold_classifications(
    assignments: &[ClassificationAssignment],
    taxonomy: &Taxonomy,
    params: &FilterParams,
) -> Result<BTreeMap<String, Vec<String>>> {
    let mut by_firm: BTreeMap<&str, HashMap<usize, f64>> = BTreeMap::new();
    for a in assignments {
        let pos = taxonomy
            .position(&a.domain_id)
            .ok_or_else(|| Error::UnknownDomain(a.domain_id.clone()))?;
        if a.probability < params.probability_threshold {
            continue;
        }
        let slot = by_firm.entry(a.firm_id.as_str()).or_default();
        let p = slot.entry(pos).or_insert(a.probability);
        *p = p.max(a.probability);
    }
    let mut out = BTreeMap::new();
    for (firm, domains) in by_firm {
        let mut ranked: Vec<(usize, f64)> = domains.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(2);
        ranked.sort_by_key(|&(pos, _)| pos);
        let ids = ranked
            .into_iter()
            .map(|(pos, _)| taxonomy.domains()[pos].id.clone())
            .collect();
        out.insert(firm.to_owned(), ids);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
struct CountryYear {
    values: Vec<f64>,
    firms: BTreeSet<String>,
}

/// Investment S per (country, domain, year), in USD.
///
/// Every aggregated (country, year) block is kept internally so that pooled
/// windows can re-evaluate coverage on the union of firms, but only blocks
/// that pass the coverage filter are visible through [`value`] and
/// [`slice`].
///
/// [`value`]: InvestmentTensor::value
/// [`slice`]: InvestmentTensor::slice
#[derive(Debug, Clone, PartialEq)]
pub struct InvestmentTensor {
    countries: Vec<String>,
    domains: Vec<String>,
    years: Vec<i32>,
    blocks: BTreeMap<(i32, usize), CountryYear>,
    min_classified_firms: usize,
}

/// One year of the tensor: dense rows for the countries that are present.
#[derive(Debug, Clone, PartialEq)]
pub struct InvestmentSlice {
    pub year: i32,
    pub countries: Vec<String>,
    pub domains: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl InvestmentSlice {
    pub fn new(
        year: i32,
        countries: Vec<String>,
        domains: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if values.len() != countries.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows for {} countries",
                values.len(),
                countries.len()
            )));
        }
        for (c, row) in countries.iter().zip(&values) {
            if row.len() != domains.len() {
                return Err(Error::InvalidParameter(format!(
                    "row `{c}` has {} entries for {} domains",
                    row.len(),
                    domains.len()
                )));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "row `{c}` contains a negative or non-finite amount"
                )));
            }
        }
        crate::numeric::ensure_unique(&countries, "country")?;
        crate::numeric::ensure_unique(&domains, "domain")?;
        Ok(Self {
            year,
            countries,
            domains,
            values,
        })
    }

    pub fn total(&self) -> f64 {
        let mut all: Vec<f64> = self.values.iter().flatten().copied().collect();
        exact_order_sum(&mut all)
    }

    pub fn row(&self, country: &str) -> Option<&[f64]> {
        self.countries
            .iter()
            .position(|c| c == country)
            .map(|i| self.values[i].as_slice())
    }
}

impl InvestmentTensor {
    /// Builds a tensor with no firm bookkeeping; every block counts as covered.
    pub fn from_slices(slices: Vec<InvestmentSlice>) -> Result<Self> {
        let domains = match slices.first() {
            Some(s) => s.domains.clone(),
            None => return Err(Error::InvalidParameter("no slices given".into())),
        };
        let mut countries: BTreeSet<String> = BTreeSet::new();
        for s in &slices {
            if s.domains != domains {
                return Err(Error::InvalidParameter(
                    "slices disagree on domain labels".into(),
                ));
            }
            countries.extend(s.countries.iter().cloned());
        }
        let countries: Vec<String> = countries.into_iter().collect();
        let mut years = Vec::new();
        let mut blocks = BTreeMap::new();
        for s in slices {
            if years.contains(&s.year) {
                return Err(Error::InvalidParameter(format!("year {} given twice", s.year)));
            }
            years.push(s.year);
            for (c, row) in s.countries.iter().zip(s.values) {
                let ci = countries.binary_search(c).expect("collected above");
                blocks.insert(
                    (s.year, ci),
                    CountryYear {
                        values: row,
                        firms: BTreeSet::new(),
                    },
                );
            }
        }
        years.sort_unstable();
        Ok(Self {
            countries,
            domains,
            years,
            blocks,
            min_classified_firms: 0,
        })
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn domains(&self) -> &[String] {
        &self.domains
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn min_classified_firms(&self) -> usize {
        self.min_classified_firms
    }

    fn covered(&self, block: &CountryYear) -> bool {
        block.firms.len() >= self.min_classified_firms
    }

    /// `None` when the (country, year) block is absent or failed coverage.
    pub fn value(&self, country: &str, domain: &str, year: i32) -> Option<f64> {
        let ci = self.countries.binary_search_by(|c| c.as_str().cmp(country)).ok()?;
        let di = self.domains.iter().position(|d| d == domain)?;
        let block = self.blocks.get(&(year, ci))?;
        self.covered(block).then(|| block.values[di])
    }

    /// Number of selected, classified firms behind a (country, year) block,
    /// whether or not it passed coverage.
    pub fn firm_count(&self, country: &str, year: i32) -> Option<usize> {
        let ci = self.countries.binary_search_by(|c| c.as_str().cmp(country)).ok()?;
        self.blocks.get(&(year, ci)).map(|b| b.firms.len())
    }

    pub fn is_present(&self, country: &str, year: i32) -> bool {
        self.countries
            .binary_search_by(|c| c.as_str().cmp(country))
            .ok()
            .and_then(|ci| self.blocks.get(&(year, ci)))
            .is_some_and(|b| self.covered(b))
    }

    pub fn slice(&self, year: i32) -> Result<InvestmentSlice> {
        if !self.years.contains(&year) {
            return Err(Error::MissingYear(year));
        }
        let mut countries = Vec::new();
        let mut values = Vec::new();
        for (ci, c) in self.countries.iter().enumerate() {
            if let Some(block) = self.blocks.get(&(year, ci)) {
                if self.covered(block) {
                    countries.push(c.clone());
                    values.push(block.values.clone());
                }
            }
        }
        Ok(InvestmentSlice {
            year,
            countries,
            domains: self.domains.clone(),
            values,
        })
    }

    /// Per-cell sums over `years`, with coverage re-evaluated on the union of
    /// each country's firms across those years.
    pub(crate) fn pooled(&self, label_year: i32, years: &[i32]) -> Result<InvestmentSlice> {
        for y in years {
            if !self.years.contains(y) {
                return Err(Error::MissingYear(*y));
            }
        }
        let mut countries = Vec::new();
        let mut values = Vec::new();
        for (ci, c) in self.countries.iter().enumerate() {
            let blocks: Vec<&CountryYear> = years
                .iter()
                .filter_map(|y| self.blocks.get(&(*y, ci)))
                .collect();
            if blocks.is_empty() {
                continue;
            }
            let firms: BTreeSet<&String> = blocks.iter().flat_map(|b| b.firms.iter()).collect();
            if firms.len() < self.min_classified_firms {
                continue;
            }
            let row = (0..self.domains.len())
                .map(|d| {
                    let mut cell: Vec<f64> = blocks.iter().map(|b| b.values[d]).collect();
                    exact_order_sum(&mut cell)
                })
                .collect();
            countries.push(c.clone());
            values.push(row);
        }
        Ok(InvestmentSlice {
            year: label_year,
            countries,
            domains: self.domains.clone(),
            values,
        })
    }
}

/// Per-domain deal amounts and contributing firms of one (country, year).
type Contribution = (Vec<Vec<f64>>, BTreeSet<String>);

/// S[country][domain][year] = sum of selected deals of firms classified in
/// the domain. Coverage: a (country, year) block backed by fewer than
/// `min_classified_firms` selected, classified firms is hidden.
pub fn aggregate(
    deals: &[DealRecord],
    selected: &BTreeSet<FirmKey>,
    firm_domains: &BTreeMap<String, Vec<String>>,
    taxonomy: &Taxonomy,
    params: &FilterParams,
) -> Result<InvestmentTensor> {
    let n_domains = taxonomy.len();
    let mut contributions: BTreeMap<(String, i32), Contribution> = BTreeMap::new();
    for d in deals {
        let key = FirmKey {
            country: d.country.clone(),
            year: d.year,
            firm_id: d.firm_id.clone(),
        };
        if !selected.contains(&key) {
            continue;
        }
        let Some(domains) = firm_domains.get(&d.firm_id) else {
            continue;
        };
        if domains.is_empty() {
            continue;
        }
        let share = match params.attribution {
            Attribution::Full => d.amount_usd,
            Attribution::Split => d.amount_usd / domains.len() as f64,
        };
        let entry = contributions
            .entry((d.country.clone(), d.year))
            .or_insert_with(|| (vec![Vec::new(); n_domains], BTreeSet::new()));
        entry.1.insert(d.firm_id.clone());
        for dom in domains {
            let pos = taxonomy
                .position(dom)
                .ok_or_else(|| Error::UnknownDomain(dom.clone()))?;
            entry.0[pos].push(share);
        }
    }

    let countries: Vec<String> = contributions
        .keys()
        .map(|(c, _)| c.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let years: Vec<i32> = contributions
        .keys()
        .map(|(_, y)| *y)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut blocks = BTreeMap::new();
    for ((country, year), (cells, firms)) in contributions {
        let ci = countries.binary_search(&country).expect("collected above");
        let values = cells
            .into_iter()
            .map(|mut cell| exact_order_sum(&mut cell))
            .collect();
        blocks.insert((year, ci), CountryYear { values, firms });
    }
    let tensor = InvestmentTensor {
        countries,
        domains: taxonomy.ids(),
        years,
        blocks,
        min_classified_firms: params.min_classified_firms,
    };
    for ((year, ci), block) in &tensor.blocks {
        if !tensor.covered(block) {
            log::info!(
                "coverage filter: {} {} has {} classified firms (< {})",
                tensor.countries[*ci],
                year,
                block.firms.len(),
                tensor.min_classified_firms
            );
        }
    }
    Ok(tensor)
}

/// Runs selection, thresholding and aggregation in sequence.
pub fn build_tensor(
    deals: &[DealRecord],
    assignments: &[ClassificationAssignment],
    taxonomy: &Taxonomy,
    params: &FilterParams,
) -> Result<InvestmentTensor> {
    params.validate()?;
    let selected = select_firms(deals, params);
    let firm_domains = threshold_classifications(assignments, taxonomy, params)?;
    aggregate(deals, &selected, &firm_domains, taxonomy, params)
}
