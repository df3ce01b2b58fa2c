//! Diversity, ubiquity, the eigenvector-based domain index (ETGCI) and the
//! country index (GCI), with deterministic rankings.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::numeric::{fmt6, spearman};
use crate::specialization::{SpecializationMatrix, Variant};

/// Input to [`top_eigenpairs`] must be symmetric within this bound.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Every returned pair satisfies ‖Av − λv‖∞ ≤ this bound.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Relative gap under which two eigenvalues count as equal.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;
/// Scores are compared at this resolution when ranking, so rounding noise
/// cannot separate values that are equal in exact arithmetic.
pub const RANK_RESOLUTION: f64 = 1e9;

const MAX_SWEEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// M Mᵀ, countries × countries.
    Country,
    /// Mᵀ M, domains × domains.
    Domain,
}

/// Leading eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

pub fn diversity(m: &SpecializationMatrix) -> Vec<usize> {
    m.rows()
        .iter()
        .map(|row| row.iter().map(|&v| v as usize).sum())
        .collect()
}

pub fn ubiquity(m: &SpecializationMatrix) -> Vec<usize> {
    (0..m.n_domains())
        .map(|j| m.rows().iter().map(|row| row[j] as usize).sum())
        .collect()
}

/// M Mᵀ or Mᵀ M as a dense matrix of co-specialization counts.
pub fn cooccurrence(m: &SpecializationMatrix, kind: MatrixKind) -> DMatrix<f64> {
    let (n, k) = (m.n_countries(), m.n_domains());
    let x = DMatrix::from_fn(n, k, |i, j| f64::from(m.rows()[i][j]));
    match kind {
        MatrixKind::Country => &x * x.transpose(),
        MatrixKind::Domain => x.transpose() * &x,
    }
}

/// Components of a unit vector closer than this count as equal in magnitude
/// when fixing the sign.
const SIGN_TIE: f64 = 1e-9;

/// Rank correlations this close to zero (or NaN) carry no orientation.
const SPEARMAN_ZERO: f64 = 1e-12;

/// Flips `v` so its largest-magnitude entry is positive; among entries within
/// [`SIGN_TIE`] of the largest magnitude the first one decides.
fn fix_sign(v: &mut [f64]) {
    let top = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let lead = v.iter().position(|x| x.abs() >= top - SIGN_TIE);
    if lead.is_some_and(|i| v[i] < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual(a: &DMatrix<f64>, lambda: f64, v: &[f64]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let av: f64 = (0..n).map(|j| a[(i, j)] * v[j]).sum();
            (av - lambda * v[i]).abs()
        })
        .fold(0.0, f64::max)
}

fn full_spectrum(a: &DMatrix<f64>) -> Result<EigenResult> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "eigenproblem needs a non-empty square matrix, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (a[(i, j)] - a[(j, i)]).abs();
            if diff.is_nan() || diff > SYMMETRY_TOLERANCE {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, MAX_SWEEPS).ok_or(
        Error::Convergence {
            iterations: MAX_SWEEPS,
            residual: f64::NAN,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    let mut worst = 0.0_f64;
    for idx in order {
        let lambda = eig.eigenvalues[idx];
        let col = eig.eigenvectors.column(idx);
        let norm = col.norm();
        let mut v: Vec<f64> = col.iter().map(|x| x / norm).collect();
        fix_sign(&mut v);
        worst = worst.max(residual(a, lambda, &v));
        eigenvalues.push(lambda);
        eigenvectors.push(v);
    }
    if worst.is_nan() || worst > RESIDUAL_TOLERANCE {
        return Err(Error::Convergence {
            iterations: MAX_SWEEPS,
            residual: worst,
        });
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// The `k` largest eigenpairs of a symmetric matrix. Vectors have unit norm
/// and a fixed sign (largest-magnitude component positive).
pub fn top_eigenpairs(a: &DMatrix<f64>, k: usize) -> Result<EigenResult> {
    if k == 0 || k > a.nrows() {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {}×{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut full = full_spectrum(a)?;
    full.eigenvalues.truncate(k);
    full.eigenvectors.truncate(k);
    Ok(full)
}

/// Per-domain scores aligned with the matrix columns; `None` for domains no
/// country is specialized in.
pub fn compute_etgci(m: &SpecializationMatrix) -> Result<Vec<Option<f64>>> {
    let div = diversity(m);
    let ubi = ubiquity(m);
    let rows: Vec<usize> = (0..m.n_countries()).filter(|&i| div[i] > 0).collect();
    let cols: Vec<usize> = (0..m.n_domains()).filter(|&j| ubi[j] > 0).collect();
    if cols.len() < 2 {
        return Err(Error::Insufficient(format!(
            "need at least 2 domains with a specialized country, found {}",
            cols.len()
        )));
    }
    if rows.len() < 2 {
        return Err(Error::Insufficient(format!(
            "need at least 2 countries with a specialization, found {}",
            rows.len()
        )));
    }
    let core = m.submatrix(&rows, &cols);
    let spectrum = full_spectrum(&cooccurrence(&core, MatrixKind::Domain))?;
    let lambda = &spectrum.eigenvalues;
    let tol = DEGENERACY_TOLERANCE * lambda[0].abs().max(1.0);
    let gap_above = lambda[0] - lambda[1];
    let gap_below = lambda.get(2).map_or(f64::INFINITY, |l3| lambda[1] - l3);
    let gap = gap_above.min(gap_below);
    if gap <= tol || lambda[1] <= tol {
        return Err(Error::DegenerateSpectrum {
            index: 2,
            value: lambda[1],
            gap,
        });
    }
    let mut y = spectrum.eigenvectors[1].clone();

    // Identical columns share a score exactly.
    let k = cols.len();
    let column = |j: usize| -> Vec<u8> { core.rows().iter().map(|r| r[j]).collect() };
    let mut group = vec![usize::MAX; k];
    for j in 0..k {
        if group[j] != usize::MAX {
            continue;
        }
        let cj = column(j);
        let members: Vec<usize> = (j..k)
            .filter(|&l| group[l] == usize::MAX && column(l) == cj)
            .collect();
        let mean = members.iter().map(|&l| y[l]).sum::<f64>() / members.len() as f64;
        for l in members {
            group[l] = j;
            y[l] = mean;
        }
    }

    let core_ubi: Vec<f64> = cols.iter().map(|&j| ubi[j] as f64).collect();
    let coarse: Vec<f64> = y.iter().map(|v| (v * RANK_RESOLUTION).round()).collect();
    let rho = spearman(&coarse, &core_ubi);
    let flip = if rho.abs() > SPEARMAN_ZERO {
        rho > 0.0
    } else {
        // No ubiquity signal: the largest entry with the smallest label is
        // made positive, so the result does not depend on column order.
        let top = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let lead = (0..k)
            .filter(|&p| y[p].abs() >= top - SIGN_TIE)
            .min_by(|&a, &b| core.domains()[a].cmp(&core.domains()[b]))
            .expect("non-empty vector");
        y[lead] < 0.0
    };
    if flip {
        y.iter_mut().for_each(|v| *v = -*v);
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::DegenerateSpectrum {
            index: 2,
            value: lambda[1],
            gap: 0.0,
        });
    }
    let mut out = vec![None; m.n_domains()];
    for (pos, &j) in cols.iter().enumerate() {
        out[j] = Some((y[pos] - lo) / (hi - lo));
    }
    Ok(out)
}

/// Mean ETGCI over each country's specializations; `None` (with a warning)
/// for countries with none.
pub fn compute_gci(m: &SpecializationMatrix, etgci: &[Option<f64>]) -> Result<Vec<Option<f64>>> {
    if etgci.len() != m.n_domains() {
        return Err(Error::InvalidParameter(format!(
            "{} ETGCI values for {} domains",
            etgci.len(),
            m.n_domains()
        )));
    }
    let mut out = Vec::with_capacity(m.n_countries());
    for (c, row) in m.countries().iter().zip(m.rows()) {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (j, &cell) in row.iter().enumerate() {
            if cell == 1 {
                let score = etgci[j].ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "country `{c}` is specialized in `{}`, which has no ETGCI",
                        m.domains()[j]
                    ))
                })?;
                sum += score;
                count += 1;
            }
        }
        if count == 0 {
            log::warn!("country {c} has no specialization; excluded from GCI");
            out.push(None);
        } else {
            out.push(Some(sum / count as f64));
        }
    }
    Ok(out)
}

fn rank_key(score: f64) -> i64 {
    (score * RANK_RESOLUTION).round() as i64
}

/// Strict 1-based ranks by score descending, equal scores ordered by label.
/// Entries without a score get no rank.
pub fn rank_scores(labels: &[String], scores: &[Option<f64>]) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..labels.len()).filter(|&i| scores[i].is_some()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (rank_key(scores[a].unwrap()), rank_key(scores[b].unwrap()));
        kb.cmp(&ka).then_with(|| labels[a].cmp(&labels[b]))
    });
    let mut ranks = vec![None; labels.len()];
    for (r, i) in order.into_iter().enumerate() {
        ranks[i] = Some(r + 1);
    }
    ranks
}

/// All indices for one specialization matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub year: i32,
    pub variant: Variant,
    pub countries: Vec<String>,
    pub domains: Vec<String>,
    pub diversity: Vec<usize>,
    pub ubiquity: Vec<usize>,
    pub etgci: Vec<Option<f64>>,
    pub gci: Vec<Option<f64>>,
    pub country_rank: Vec<Option<usize>>,
    pub domain_rank: Vec<Option<usize>>,
}

pub fn analyze(m: &SpecializationMatrix) -> Result<ComplexityReport> {
    let etgci = compute_etgci(m)?;
    let gci = compute_gci(m, &etgci)?;
    Ok(ComplexityReport {
        year: m.year(),
        variant: m.variant(),
        countries: m.countries().to_vec(),
        domains: m.domains().to_vec(),
        diversity: diversity(m),
        ubiquity: ubiquity(m),
        country_rank: rank_scores(m.countries(), &gci),
        domain_rank: rank_scores(m.domains(), &etgci),
        etgci,
        gci,
    })
}

#[derive(Serialize)]
struct CountryEntry<'a> {
    id: &'a str,
    diversity: usize,
    gci: Option<Box<RawValue>>,
    rank: Option<usize>,
}

#[derive(Serialize)]
struct DomainEntry<'a> {
    id: &'a str,
    ubiquity: usize,
    etgci: Option<Box<RawValue>>,
    rank: Option<usize>,
}

#[derive(Serialize)]
struct IndicesDoc<'a> {
    year: i32,
    variant: &'a str,
    countries: Vec<CountryEntry<'a>>,
    domains: Vec<DomainEntry<'a>>,
}

pub(crate) fn raw6(x: f64) -> Box<RawValue> {
    RawValue::from_string(fmt6(x)).expect("fixed-point literal is valid JSON")
}

impl ComplexityReport {
    pub fn country_index(&self, label: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == label)
    }

    pub fn domain_index(&self, label: &str) -> Option<usize> {
        self.domains.iter().position(|d| d == label)
    }

    pub fn gci_of(&self, country: &str) -> Option<f64> {
        self.country_index(country).and_then(|i| self.gci[i])
    }

    pub fn rank_of(&self, country: &str) -> Option<usize> {
        self.country_index(country).and_then(|i| self.country_rank[i])
    }

    pub fn etgci_of(&self, domain: &str) -> Option<f64> {
        self.domain_index(domain).and_then(|j| self.etgci[j])
    }

    /// Countries with a GCI, best first.
    pub fn ranked_countries(&self) -> Vec<&str> {
        let mut v: Vec<(usize, &str)> = self
            .countries
            .iter()
            .zip(&self.country_rank)
            .filter_map(|(c, r)| r.map(|r| (r, c.as_str())))
            .collect();
        v.sort_unstable();
        v.into_iter().map(|(_, c)| c).collect()
    }

    /// `indices.json` body. Domains in `all_domains` that are absent from
    /// the matrix (dropped for lack of investment) are listed with null
    /// scores; pass an empty slice to list only the matrix columns.
    pub fn to_indices_json(&self, all_domains: &[String]) -> String {
        let countries = self
            .countries
            .iter()
            .enumerate()
            .map(|(i, c)| CountryEntry {
                id: c,
                diversity: self.diversity[i],
                gci: self.gci[i].map(raw6),
                rank: self.country_rank[i],
            })
            .collect();
        let listed: Vec<&String> = if all_domains.is_empty() {
            self.domains.iter().collect()
        } else {
            all_domains.iter().collect()
        };
        let domains = listed
            .into_iter()
            .map(|d| match self.domain_index(d) {
                Some(j) => DomainEntry {
                    id: d,
                    ubiquity: self.ubiquity[j],
                    etgci: self.etgci[j].map(raw6),
                    rank: self.domain_rank[j],
                },
                None => DomainEntry {
                    id: d,
                    ubiquity: 0,
                    etgci: None,
                    rank: None,
                },
            })
            .collect();
        let doc = IndicesDoc {
            year: self.year,
            variant: self.variant.as_str(),
            countries,
            domains,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}
