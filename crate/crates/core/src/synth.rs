//! Deterministic synthetic deal and classification files with a tunable
//! near-nested specialization structure.
//!
//! At `nestedness = 1` the countries fall into three tiers and the domains
//! into three tiers `X`, `Y`, `Z` (`Z` rarest):
//!
//! ```text
//!            X  Y  Z
//!   top      .  1  1
//!   middle   1  1  .
//!   bottom   1  .  .
//! ```
//!
//! A perfect staircase cannot come out of the RVA ≥ 1 rule (a domain every
//! country holds forces every country to the same shares), so the pattern
//! above is the closest reachable target. It keeps diversity and ubiquity
//! strictly ordered between tiers and gives every specialized cell an RVA of
//! at least 1.25.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const COUNTRY_CODES: [&str; 40] = [
    "US", "IL", "CN", "FR", "JP", "DE", "KR", "SG", "CH", "IN", "NL", "GB", "BR", "CA", "AU", "SE",
    "ES", "IT", "FI", "DK", "NO", "BE", "AT", "IE", "PL", "PT", "MX", "AR", "CL", "CO", "ZA", "NG",
    "KE", "EG", "AE", "SA", "TR", "ID", "VN", "NZ",
];
const MAX_DOMAINS: usize = 18;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub countries: usize,
    pub domains: usize,
    pub firms_per_country: usize,
    pub nestedness: f64,
    /// Latest year generated; the year before is generated too.
    pub year: i32,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 0,
            countries: 16,
            domains: 18,
            firms_per_country: 600,
            nestedness: 1.0,
            year: 2024,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if !(2..=COUNTRY_CODES.len()).contains(&self.countries) {
            return Err(Error::InvalidParameter(format!(
                "countries must lie in 2..={}",
                COUNTRY_CODES.len()
            )));
        }
        if !(2..=MAX_DOMAINS).contains(&self.domains) {
            return Err(Error::InvalidParameter(format!(
                "domains must lie in 2..={MAX_DOMAINS}"
            )));
        }
        if self.firms_per_country < self.domains {
            return Err(Error::InvalidParameter(
                "firms_per_country must be at least the number of domains".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.nestedness) {
            return Err(Error::InvalidParameter("nestedness must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOutput {
    pub deals_csv: String,
    pub classifications_csv: String,
}

/// Tier sizes (top, middle, bottom) and (X, Y, Z).
fn tier_sizes(countries: usize, domains: usize) -> ([usize; 3], [usize; 3]) {
    let a = (countries / 3).max(1);
    let b = (countries / 5).max(1);
    let c = countries.saturating_sub(a + b);
    let x = (domains / 5).max(1);
    let y = (domains / 5).max(1);
    let z = domains.saturating_sub(x + y);
    ([a, b, c], [x, y, z])
}

/// Target amount per (country, domain) cell before noise, in whole dollars.
fn target_amounts(
    params: &SynthParams,
    country_tier: &[usize],
    domain_tier: &[usize],
) -> Vec<Vec<f64>> {
    let (ct, dt) = tier_sizes(params.countries, params.domains);
    let total =
        9.0 * params.countries as f64 * params.domains as f64 * params.firms_per_country as f64 * 4e6;
    // top: Y, Z; middle: X, Y; bottom: X.
    let holds = |c: usize, d: usize| matches!((c, d), (0, 1) | (0, 2) | (1, 0) | (1, 1) | (2, 0));
    country_tier
        .iter()
        .map(|&c| {
            domain_tier
                .iter()
                .map(|&d| {
                    if holds(c, d) {
                        let w = 1.0 / (3.0 * ct[c] as f64);
                        let v = 1.0 / (3.0 * dt[d] as f64);
                        (total * w * v).round()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Splits `amount` whole dollars into `parts` positive whole-dollar pieces
/// with weights drawn from U(0.5, 1.5).
fn split_amount(rng: &mut ChaCha8Rng, amount: f64, parts: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..parts).map(|_| rng.random_range(0.5..1.5)).collect();
    let sum: f64 = weights.iter().sum();
    let mut out: Vec<f64> = weights.iter().map(|w| (amount * w / sum).floor()).collect();
    let assigned: f64 = out.iter().sum();
    *out.last_mut().expect("parts ≥ 1") += amount - assigned;
    out
}

pub fn generate(params: &SynthParams) -> Result<SynthOutput> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (ct, dt) = tier_sizes(params.countries, params.domains);

    let codes: Vec<&str> = COUNTRY_CODES[..params.countries].to_vec();
    let mut country_order: Vec<usize> = (0..params.countries).collect();
    country_order.shuffle(&mut rng);
    let mut country_tier = vec![0; params.countries];
    for (pos, &ci) in country_order.iter().enumerate() {
        country_tier[ci] = if pos < ct[0] {
            0
        } else if pos < ct[0] + ct[1] {
            1
        } else {
            2
        };
    }
    let mut domain_order: Vec<usize> = (0..params.domains).collect();
    domain_order.shuffle(&mut rng);
    let mut domain_tier = vec![0; params.domains];
    for (pos, &dj) in domain_order.iter().enumerate() {
        domain_tier[dj] = if pos < dt[0] {
            0
        } else if pos < dt[0] + dt[1] {
            1
        } else {
            2
        };
    }
    let domain_ids: Vec<String> = (1..=params.domains).map(|j| format!("D{j:02}")).collect();
    let target = target_amounts(params, &country_tier, &domain_tier);
    let n = params.nestedness;
    let mean_cell = {
        let s: f64 = target.iter().flatten().sum();
        s / (params.countries * params.domains) as f64
    };

    // Every firm keeps one primary domain across both years.
    let mut firm_cells: Vec<Vec<(String, usize)>> = Vec::with_capacity(params.countries);
    let mut classifications = String::from("firm_id,domain_id,probability\n");
    for (ci, code) in codes.iter().enumerate() {
        let active: Vec<usize> = if n >= 1.0 {
            (0..params.domains).filter(|&d| target[ci][d] > 0.0).collect()
        } else {
            (0..params.domains).collect()
        };
        let mut firms = Vec::with_capacity(params.firms_per_country);
        for f in 0..params.firms_per_country {
            let d = active[f % active.len()];
            let id = format!("{code}{f:05}");
            let p: f64 = rng.random_range(0.8..0.99);
            writeln!(classifications, "{id},{},{p:.4}", domain_ids[d]).expect("string write");
            if rng.random_bool(0.3) {
                let mut decoy = rng.random_range(0..params.domains);
                if decoy == d {
                    decoy = (decoy + 1) % params.domains;
                }
                let q: f64 = rng.random_range(0.05..0.45);
                writeln!(classifications, "{id},{},{q:.4}", domain_ids[decoy])
                    .expect("string write");
            }
            firms.push((id, d));
        }
        firm_cells.push(firms);
    }

    let mut deals = String::from("firm_id,country,year,amount_usd\n");
    for year in [params.year - 1, params.year] {
        for (ci, code) in codes.iter().enumerate() {
            for d in 0..params.domains {
                let members: Vec<&String> = firm_cells[ci]
                    .iter()
                    .filter(|(_, fd)| *fd == d)
                    .map(|(id, _)| id)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let noise = if n < 1.0 {
                    (1.0 - n) * rng.random_range(0.0..2.0) * mean_cell
                } else {
                    0.0
                };
                let cell = (n * target[ci][d] + noise).round();
                let per_firm = split_amount(&mut rng, cell, members.len());
                for (id, amount) in members.into_iter().zip(per_firm) {
                    let k = rng.random_range(1..=3);
                    for part in split_amount(&mut rng, amount, k) {
                        writeln!(deals, "{id},{code},{year},{part:.0}").expect("string write");
                    }
                }
            }
        }
    }
    Ok(SynthOutput {
        deals_csv: deals,
        classifications_csv: classifications,
    })
}
