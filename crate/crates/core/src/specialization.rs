//! Revealed Venture Advantage, the binary specialization matrix, and the two
//! robustness variants of the investment slice.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{InvestmentSlice, InvestmentTensor};
use crate::numeric::{ensure_unique, exact_order_sum, fmt6};

/// Ratios within this relative distance below 1 are treated as 1, so that a
/// share ratio that is exactly 1 in real arithmetic is never lost to
/// rounding.
pub const RVA_TOLERANCE: f64 = 1e-12;

/// Which investment slice a matrix was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Plain,
    Rounded,
    Windowed,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Rounded => "rounded",
            Variant::Windowed => "windowed",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Variant::Plain),
            "rounded" => Ok(Variant::Rounded),
            "windowed" => Ok(Variant::Windowed),
            other => Err(Error::InvalidParameter(format!(
                "unknown variant `{other}` (expected plain, rounded or windowed)"
            ))),
        }
    }
}

/// A variant together with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariantSpec {
    Plain,
    Rounded { quantum: f64 },
    Windowed { window: usize },
}

impl VariantSpec {
    pub fn tag(&self) -> Variant {
        match self {
            VariantSpec::Plain => Variant::Plain,
            VariantSpec::Rounded { .. } => Variant::Rounded,
            VariantSpec::Windowed { .. } => Variant::Windowed,
        }
    }

    /// The investment slice this variant analyses for `year`.
    pub fn slice(&self, tensor: &InvestmentTensor, year: i32) -> Result<InvestmentSlice> {
        match *self {
            VariantSpec::Plain => tensor.slice(year),
            VariantSpec::Rounded { quantum } => round_up_variant(tensor, year, quantum),
            VariantSpec::Windowed { window } => windowed_variant(tensor, year, window),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RvaMatrix {
    pub year: i32,
    pub countries: Vec<String>,
    pub domains: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl RvaMatrix {
    pub fn get(&self, country: &str, domain: &str) -> Option<f64> {
        let i = self.countries.iter().position(|c| c == country)?;
        let j = self.domains.iter().position(|d| d == domain)?;
        Some(self.values[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = header_line(&self.domains);
        for (c, row) in self.countries.iter().zip(&self.values) {
            out.push_str(c);
            for v in row {
                out.push(',');
                out.push_str(&fmt6(*v));
            }
            out.push('\n');
        }
        out
    }
}

fn header_line(domains: &[String]) -> String {
    let mut out = String::from("country");
    for d in domains {
        out.push(',');
        out.push_str(d);
    }
    out.push('\n');
    out
}

/// Binary country × domain matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecializationMatrix {
    year: i32,
    variant: Variant,
    countries: Vec<String>,
    domains: Vec<String>,
    cells: Vec<Vec<u8>>,
}

impl SpecializationMatrix {
    /// Builds a matrix from 0/1 rows; labels must be unique.
    pub fn new(countries: Vec<String>, domains: Vec<String>, cells: Vec<Vec<u8>>) -> Result<Self> {
        if cells.len() != countries.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows for {} countries",
                cells.len(),
                countries.len()
            )));
        }
        for (c, row) in countries.iter().zip(&cells) {
            if row.len() != domains.len() {
                return Err(Error::InvalidParameter(format!(
                    "row `{c}` has {} entries for {} domains",
                    row.len(),
                    domains.len()
                )));
            }
            if row.iter().any(|&v| v > 1) {
                return Err(Error::InvalidParameter(format!("row `{c}` is not binary")));
            }
        }
        ensure_unique(&countries, "country")?;
        ensure_unique(&domains, "domain")?;
        Ok(Self {
            year: 0,
            variant: Variant::Plain,
            countries,
            domains,
            cells,
        })
    }

    /// Convenience constructor with generated labels `c0..` and `d0..`.
    pub fn from_cells(cells: Vec<Vec<u8>>) -> Result<Self> {
        let n = cells.len();
        let m = cells.first().map_or(0, Vec::len);
        let countries = (0..n).map(|i| format!("c{i}")).collect();
        let domains = (0..m).map(|j| format!("d{j}")).collect();
        Self::new(countries, domains, cells)
    }

    pub fn with_year(mut self, year: i32) -> Self {
        self.year = year;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn domains(&self) -> &[String] {
        &self.domains
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.cells
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_domains(&self) -> usize {
        self.domains.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i][j] == 1
    }

    pub fn country_index(&self, label: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == label)
    }

    pub fn domain_index(&self, label: &str) -> Option<usize> {
        self.domains.iter().position(|d| d == label)
    }

    /// Copy with one cell overwritten.
    pub fn with_cell(&self, i: usize, j: usize, value: bool) -> Self {
        let mut out = self.clone();
        out.cells[i][j] = u8::from(value);
        out
    }

    pub fn transpose(&self) -> Self {
        let cells = (0..self.n_domains())
            .map(|j| self.cells.iter().map(|row| row[j]).collect())
            .collect();
        Self {
            year: self.year,
            variant: self.variant,
            countries: self.domains.clone(),
            domains: self.countries.clone(),
            cells,
        }
    }

    /// Copy keeping only the given rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self {
            year: self.year,
            variant: self.variant,
            countries: rows.iter().map(|&i| self.countries[i].clone()).collect(),
            domains: cols.iter().map(|&j| self.domains[j].clone()).collect(),
            cells: rows
                .iter()
                .map(|&i| cols.iter().map(|&j| self.cells[i][j]).collect())
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = header_line(&self.domains);
        for (c, row) in self.countries.iter().zip(&self.cells) {
            out.push_str(c);
            for v in row {
                out.push(',');
                out.push(if *v == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// RVA of the tensor's `year` slice.
pub fn compute_rva(tensor: &InvestmentTensor, year: i32) -> Result<RvaMatrix> {
    compute_rva_slice(&tensor.slice(year)?)
}

/// Share of global investment in each domain relative to the country's share
/// of all investment. Domains nobody invested in and countries with no
/// investment are dropped first.
pub fn compute_rva_slice(slice: &InvestmentSlice) -> Result<RvaMatrix> {
    let n = slice.countries.len();
    let m = slice.domains.len();
    let column_totals: Vec<f64> = (0..m)
        .map(|j| {
            let mut col: Vec<f64> = slice.values.iter().map(|row| row[j]).collect();
            exact_order_sum(&mut col)
        })
        .collect();
    let keep_cols: Vec<usize> = (0..m).filter(|&j| column_totals[j] > 0.0).collect();
    let row_totals: Vec<f64> = slice
        .values
        .iter()
        .map(|row| {
            let mut r = row.clone();
            exact_order_sum(&mut r)
        })
        .collect();
    let keep_rows: Vec<usize> = (0..n).filter(|&i| row_totals[i] > 0.0).collect();
    if keep_rows.is_empty() || keep_cols.is_empty() {
        return Err(Error::NoInvestment(slice.year));
    }
    for (j, d) in slice.domains.iter().enumerate() {
        if column_totals[j] <= 0.0 {
            log::debug!("dropping domain {d}: no investment in {}", slice.year);
        }
    }
    let mut all = row_totals.clone();
    let total = exact_order_sum(&mut all);
    let values = keep_rows
        .iter()
        .map(|&i| {
            keep_cols
                .iter()
                .map(|&j| {
                    let domain_share = slice.values[i][j] / column_totals[j];
                    let overall_share = row_totals[i] / total;
                    domain_share / overall_share
                })
                .collect()
        })
        .collect();
    Ok(RvaMatrix {
        year: slice.year,
        countries: keep_rows.iter().map(|&i| slice.countries[i].clone()).collect(),
        domains: keep_cols.iter().map(|&j| slice.domains[j].clone()).collect(),
        values,
    })
}

/// M = 1 where RVA ≥ 1.
pub fn binarize(rva: &RvaMatrix) -> SpecializationMatrix {
    let cells = rva
        .values
        .iter()
        .map(|row| row.iter().map(|&v| u8::from(v >= 1.0 - RVA_TOLERANCE)).collect())
        .collect();
    SpecializationMatrix {
        year: rva.year,
        variant: Variant::Plain,
        countries: rva.countries.clone(),
        domains: rva.domains.clone(),
        cells,
    }
}

/// Smallest multiple of `quantum` that is ≥ `s`; zero stays zero.
pub fn round_up(s: f64, quantum: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let mut k = (s / quantum).ceil().max(1.0);
    while k > 1.0 && (k - 1.0) * quantum >= s {
        k -= 1.0;
    }
    while k * quantum < s {
        k += 1.0;
    }
    k * quantum
}

fn check_quantum(quantum: f64) -> Result<()> {
    if quantum > 0.0 && quantum.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "quantum must be positive, got {quantum}"
        )))
    }
}

/// Every nonzero cell rounded up to the next multiple of `quantum`.
pub fn round_up_slice(slice: &InvestmentSlice, quantum: f64) -> Result<InvestmentSlice> {
    check_quantum(quantum)?;
    let mut out = slice.clone();
    for row in &mut out.values {
        for v in row {
            *v = round_up(*v, quantum);
        }
    }
    Ok(out)
}

pub fn round_up_variant(
    tensor: &InvestmentTensor,
    year: i32,
    quantum: f64,
) -> Result<InvestmentSlice> {
    check_quantum(quantum)?;
    round_up_slice(&tensor.slice(year)?, quantum)
}

/// Cell sums over the `window` years ending at `year`.
pub fn windowed_variant(
    tensor: &InvestmentTensor,
    year: i32,
    window: usize,
) -> Result<InvestmentSlice> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    let first = year - (window as i32 - 1);
    let years: Vec<i32> = (first..=year).collect();
    tensor.pooled(year, &years)
}

/// RVA and the binary matrix for one year under the chosen variant.
pub fn specialize(
    tensor: &InvestmentTensor,
    year: i32,
    variant: &VariantSpec,
) -> Result<(RvaMatrix, SpecializationMatrix)> {
    let slice = variant.slice(tensor, year)?;
    let rva = compute_rva_slice(&slice)?;
    let m = binarize(&rva).with_variant(variant.tag());
    Ok((rva, m))
}
