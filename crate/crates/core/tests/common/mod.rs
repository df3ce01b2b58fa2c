//! Fixtures and brute-force oracles shared by the integration tests. The
//! oracles re-derive every quantity from scratch with their own linear
//! algebra so they do not share code paths with the library.

#![allow(dead_code)]

use geoecon::SpecializationMatrix;

pub const COUNTRIES_2024: [&str; 16] = [
    "US", "IL", "CN", "FR", "JP", "DE", "KR", "SG", "CH", "IN", "NL", "GB", "BR", "CA", "AU", "SE",
];

/// A 2024 specialization matrix with the published per-country diversities
/// and per-domain ubiquities, whose GCI ordering reproduces the published
/// country ranking. Columns are D01..D18.
pub const ROWS_2024: [&str; 16] = [
    "101010111110100010",
    "111110010010000111",
    "111000001001110010",
    "110000110001100000",
    "100000101010111100",
    "010101101101000101",
    "100000111001001101",
    "000101100001100000",
    "000000100000101101",
    "100100110001011000",
    "000000110001101000",
    "010000000001011100",
    "000000110001010001",
    "000001010000010100",
    "000001110000010100",
    "000000010000011000",
];

pub const CLOUD: &str = "D05";
pub const CYBER: &str = "D03";
pub const QUANTUM: &str = "D07";
pub const ENERGY: &str = "D08";
pub const AUTONOMOUS: &str = "D09";
pub const MOBILITY: &str = "D14";
pub const RAW_MATERIALS: &str = "D15";
pub const MEDTECH: &str = "D17";

pub fn domain_ids(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("D{j:02}")).collect()
}

pub fn matrix_2024() -> SpecializationMatrix {
    let cells = ROWS_2024
        .iter()
        .map(|r| r.bytes().map(|b| b - b'0').collect())
        .collect();
    SpecializationMatrix::new(
        COUNTRIES_2024.iter().map(|c| c.to_string()).collect(),
        domain_ids(18),
        cells,
    )
    .unwrap()
    .with_year(2024)
}

pub fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Deterministic xorshift stream for tests that must not depend on the
/// library's RNG choices.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn binary(&mut self, rows: usize, cols: usize, density: f64) -> Vec<Vec<u8>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| u8::from(self.unit() < density)).collect())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Linear algebra

/// Cyclic Jacobi rotations; returns eigenvalues descending with unit vectors.
pub fn jacobi(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let col: Vec<f64> = v.iter().map(|row| row[i]).collect();
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            col.iter().map(|x| x / norm).collect()
        })
        .collect();
    (values, vectors)
}

/// Number of eigenvalues of symmetric `a` strictly below `x`, from the signs
/// of the pivots of an LDLᵀ elimination of `a − xI`.
pub fn count_below(a: &[Vec<f64>], x: f64) -> usize {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= x;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut pivot = m[k][k];
        if pivot == 0.0 {
            pivot = -1e-300;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
        for i in (k + 1)..n {
            let f = m[i][k] / pivot;
            for j in (k + 1)..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    negatives
}

/// Determinant by elimination with partial pivoting.
pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        if m[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            m.swap(p, k);
            d = -d;
        }
        d *= m[k][k];
        for i in (k + 1)..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    d
}

/// All eigenvalues, descending, by bisection on the root count of
/// det(A − λI).
pub fn eigenvalues_by_bisection(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let bound = a
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let mut out = Vec::with_capacity(n);
    for k in (0..n).rev() {
        // The (k+1)-th smallest eigenvalue: smallest x with count_below(x) > k.
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(a, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-14 * bound {
                break;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

/// Solves `m x = b` by Gaussian elimination with partial pivoting.
pub fn solve(m: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(p, k);
        let piv = if a[k][k] == 0.0 { 1e-300 } else { a[k][k] };
        for i in (k + 1)..n {
            let f = a[i][k] / piv;
            for j in k..=n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| a[k][j] * x[j]).sum();
        let piv = if a[k][k] == 0.0 { 1e-300 } else { a[k][k] };
        x[k] = (a[k][n] - s) / piv;
    }
    x
}

/// Unit eigenvector for a known eigenvalue by inverse iteration.
pub fn eigenvector_for(a: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let n = a.len();
    let shift = lambda + 1e-10 * (1.0 + lambda.abs());
    let shifted: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] - if i == j { shift } else { 0.0 }).collect())
        .collect();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    for _ in 0..6 {
        let w = solve(&shifted, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Index oracles

pub const TIE: f64 = 1e9;

fn avg_ranks(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let below = v.iter().filter(|&&x| x < v[i]).count() as f64;
            let equal = v.iter().filter(|&&x| x == v[i]).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// ETGCI from scratch; `None` when the matrix is too small or the second
/// eigenvalue is not simple.
pub fn etgci_oracle(cells: &[Vec<u8>]) -> Option<Vec<Option<f64>>> {
    let n = cells.len();
    let k = cells.first().map_or(0, Vec::len);
    let rows: Vec<usize> = (0..n).filter(|&i| cells[i].iter().any(|&v| v == 1)).collect();
    let cols: Vec<usize> = (0..k).filter(|&j| cells.iter().any(|r| r[j] == 1)).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return None;
    }
    let a: Vec<Vec<f64>> = cols
        .iter()
        .map(|&p| {
            cols.iter()
                .map(|&q| rows.iter().filter(|&&i| cells[i][p] == 1 && cells[i][q] == 1).count() as f64)
                .collect()
        })
        .collect();
    let (vals, vecs) = jacobi(&a);
    let tol = 1e-9 * vals[0].abs().max(1.0);
    let gap = (vals[0] - vals[1]).min(vals.get(2).map_or(f64::INFINITY, |l| vals[1] - l));
    if gap <= tol || vals[1] <= tol {
        return None;
    }
    let mut y = vecs[1].clone();
    let top = y.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let lead = y.iter().position(|x| x.abs() >= top - 1e-9).unwrap();
    if y[lead] < 0.0 {
        y.iter_mut().for_each(|x| *x = -*x);
    }
    let ubi: Vec<f64> = cols
        .iter()
        .map(|&j| cells.iter().filter(|r| r[j] == 1).count() as f64)
        .collect();
    let coarse: Vec<f64> = y.iter().map(|x| (x * TIE).round()).collect();
    let rho = pearson(&avg_ranks(&coarse), &avg_ranks(&ubi));
    if rho > 1e-12 {
        y.iter_mut().for_each(|x| *x = -*x);
    } else if !(rho < -1e-12) {
        // Generated labels d0, d1, … sort like their indices below 10.
        let top = y.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let lead = (0..y.len())
            .filter(|&p| y[p].abs() >= top - 1e-9)
            .min_by_key(|&p| format!("d{}", cols[p]))
            .unwrap();
        if y[lead] < 0.0 {
            y.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        return None;
    }
    let mut out = vec![None; k];
    for (p, &j) in cols.iter().enumerate() {
        out[j] = Some((y[p] - lo) / (hi - lo));
    }
    Some(out)
}

pub fn gci_oracle(cells: &[Vec<u8>], etgci: &[Option<f64>]) -> Vec<Option<f64>> {
    cells
        .iter()
        .map(|row| {
            let picked: Vec<f64> = row
                .iter()
                .zip(etgci)
                .filter(|(v, _)| **v == 1)
                .map(|(_, e)| e.unwrap())
                .collect();
            (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
        })
        .collect()
}

/// Strict ranks; unscored entries rank just below every scored one.
pub fn ranks_oracle(labels: &[String], scores: &[Option<f64>]) -> Vec<usize> {
    let scored = scores.iter().flatten().count();
    (0..labels.len())
        .map(|i| match scores[i] {
            None => scored + 1,
            Some(s) => {
                let key = (s * TIE).round() as i64;
                1 + (0..labels.len())
                    .filter(|&o| {
                        o != i
                            && scores[o].is_some_and(|t| {
                                let ko = (t * TIE).round() as i64;
                                ko > key || (ko == key && labels[o] < labels[i])
                            })
                    })
                    .count()
            }
        })
        .collect()
}

pub fn country_ranks_oracle(labels: &[String], cells: &[Vec<u8>]) -> Option<Vec<usize>> {
    let e = etgci_oracle(cells)?;
    Some(ranks_oracle(labels, &gci_oracle(cells, &e)))
}

/// (score, rank) of every unspecialized domain of country `c`.
pub fn relatedness_oracle(cells: &[Vec<u8>], c: usize) -> Vec<(usize, u32, usize)> {
    let k = cells[0].len();
    let phi = |a: usize, b: usize| -> u32 {
        if a == b {
            0
        } else {
            cells.iter().filter(|r| r[a] == 1 && r[b] == 1).count() as u32
        }
    };
    let scores: Vec<(usize, u32)> = (0..k)
        .filter(|&j| cells[c][j] == 0)
        .map(|j| (j, (0..k).filter(|&l| cells[c][l] == 1).map(|l| phi(j, l)).sum()))
        .collect();
    scores
        .iter()
        .map(|&(j, s)| (j, s, 1 + scores.iter().filter(|(_, t)| *t > s).count()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRow {
    pub domains: Vec<String>,
    pub rank_change: i64,
    pub relatedness_rank: Option<usize>,
    pub relatedness_score: Option<u32>,
    pub indeterminate: Vec<String>,
}

/// Enumerates every toggle and applies the two-key selection.
pub fn ssset_oracle(countries: &[String], domains: &[String], cells: &[Vec<u8>]) -> Vec<OracleRow> {
    let base = country_ranks_oracle(countries, cells);
    (0..cells.len())
        .map(|c| {
            let mut outcomes = Vec::new();
            let mut indeterminate = Vec::new();
            for (j, score, rel_rank) in relatedness_oracle(cells, c) {
                let mut toggled = cells.to_vec();
                toggled[c][j] = 1;
                match (&base, country_ranks_oracle(countries, &toggled)) {
                    (Some(b), Some(after)) => {
                        outcomes.push((b[c] as i64 - after[c] as i64, rel_rank, score, j))
                    }
                    (Some(_), None) => indeterminate.push(domains[j].clone()),
                    (None, _) => {}
                }
            }
            indeterminate.sort();
            let best = outcomes.iter().map(|o| o.0).max().unwrap_or(0);
            if best <= 0 {
                return OracleRow {
                    domains: vec![],
                    rank_change: 0,
                    relatedness_rank: None,
                    relatedness_score: None,
                    indeterminate,
                };
            }
            let best_rel = outcomes.iter().filter(|o| o.0 == best).map(|o| o.1).min().unwrap();
            let chosen: Vec<_> = outcomes.iter().filter(|o| o.0 == best && o.1 == best_rel).collect();
            let mut names: Vec<String> = chosen.iter().map(|o| domains[o.3].clone()).collect();
            names.sort();
            OracleRow {
                domains: names,
                rank_change: best,
                relatedness_rank: Some(best_rel),
                relatedness_score: Some(chosen[0].2),
                indeterminate,
            }
        })
        .collect()
}
