//! Finite metric spaces: diameters, Hausdorff distances and the 2-Lipschitz
//! relation between them.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for the triangle inequality at construction.
pub const TRIANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinitePointCloud {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    /// Set when distances are upper estimates rather than exact values.
    caveat: Option<String>,
}

impl FinitePointCloud {
    /// Validates shape, symmetry, zero diagonal, nonnegativity and the triangle
    /// inequality.
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::Argument(format!("distance matrix must be {n}×{n}")));
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::Argument(format!("nonzero diagonal at {}", labels[i])));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::Argument(format!(
                        "distance {} → {} is negative or not finite",
                        labels[i], labels[j]
                    )));
                }
                if d != dist[j][i] {
                    return Err(Error::Argument(format!(
                        "distance matrix is not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + TRIANGLE_TOL {
                        return Err(Error::Argument(format!(
                            "triangle inequality fails for ({}, {}, {})",
                            labels[i], labels[j], labels[k]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            labels,
            dist,
            caveat: None,
        })
    }

    /// Builds a cloud from upper bounds of an underlying semi-metric: the matrix is
    /// symmetrized by the smaller entry and closed under shortest paths, which keeps
    /// every entry an upper bound. The cloud records the caveat.
    pub fn from_upper_estimates(labels: Vec<String>, mut dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::Argument(format!("distance matrix must be {n}×{n}")));
        }
        for i in 0..n {
            dist[i][i] = 0.0;
            for j in 0..i {
                let m = dist[i][j].min(dist[j][i]);
                dist[i][j] = m;
                dist[j][i] = m;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }
        let mut cloud = Self::new(labels, dist)?;
        cloud.caveat = Some("distances are upper estimates".into());
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn caveat(&self) -> Option<&str> {
        self.caveat.as_deref()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    fn check_subset(&self, a: &[usize]) -> Result<()> {
        if a.is_empty() {
            return Err(Error::Argument("empty subset".into()));
        }
        if let Some(i) = a.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Argument(format!("index {i} out of range")));
        }
        Ok(())
    }

    pub fn diameter(&self, a: &[usize]) -> Result<f64> {
        self.check_subset(a)?;
        let mut d: f64 = 0.0;
        for &i in a {
            for &j in a {
                d = d.max(self.dist[i][j]);
            }
        }
        Ok(d)
    }

    /// `dist(x, A)`.
    pub fn point_to_set(&self, x: usize, a: &[usize]) -> Result<f64> {
        self.check_subset(a)?;
        Ok(a.iter().map(|&j| self.dist[x][j]).fold(f64::INFINITY, f64::min))
    }

    /// `max(sup_a dist(a, B), sup_b dist(b, A))`.
    pub fn hausdorff(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        self.check_subset(a)?;
        self.check_subset(b)?;
        let directed = |from: &[usize], to: &[usize]| {
            from.iter()
                .map(|&x| to.iter().map(|&y| self.dist[x][y]).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        Ok(directed(a, b).max(directed(b, a)))
    }

    /// Matrix CSV: header `label, l₁, …, lₙ`, then one row per label.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for (label, row) in self.labels.iter().zip(&self.dist) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|d| format!("{d:.16e}")));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let bad = |m: String| Error::Argument(format!("cloud csv: {m}"));
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut dist = Vec::with_capacity(labels.len());
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.get(0) != labels.get(i).map(String::as_str) {
                return Err(bad(format!("row {} label does not match the header", i + 1)));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1))))
                .collect::<Result<Vec<_>>>()?;
            dist.push(row);
        }
        Self::new(labels, dist)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzRow {
    pub diam_a: f64,
    pub diam_b: f64,
    pub hausdorff: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub rows: Vec<LipschitzRow>,
    pub pass: bool,
}

/// `|diam A − diam B| ≤ 2 d_H(A, B) + 1e-12` for each pair.
pub fn diam_lipschitz_check(cloud: &FinitePointCloud, pairs: &[(Vec<usize>, Vec<usize>)]) -> Result<LipschitzReport> {
    let rows = pairs
        .iter()
        .map(|(a, b)| {
            let diam_a = cloud.diameter(a)?;
            let diam_b = cloud.diameter(b)?;
            let hausdorff = cloud.hausdorff(a, b)?;
            Ok(LipschitzRow {
                diam_a,
                diam_b,
                hausdorff,
                pass: (diam_a - diam_b).abs() <= 2.0 * hausdorff + 1e-12,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LipschitzReport {
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::seq::index::sample;
    use rand::Rng;

    fn line(xs: &[f64]) -> FinitePointCloud {
        let labels = (0..xs.len()).map(|i| format!("x{i}")).collect();
        let dist = xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect();
        FinitePointCloud::new(labels, dist).unwrap()
    }

    fn plane(n: usize, seed: u64) -> FinitePointCloud {
        let mut rng = sampling::rng(seed, 0, 0);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
        let labels = (0..n).map(|i| format!("p{i}")).collect();
        let dist = pts
            .iter()
            .map(|a| {
                pts.iter()
                    .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                    .collect()
            })
            .collect();
        FinitePointCloud::new(labels, dist).unwrap()
    }

    #[test]
    fn diameter_examples() {
        let c = line(&[0.0, 1.0]);
        assert_eq!(c.diameter(&[0, 1]).unwrap(), 1.0);
        assert_eq!(c.diameter(&[1]).unwrap(), 0.0);
        assert!(c.diameter(&[]).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let c = line(&[0.0, 1.0]);
        assert_eq!(c.hausdorff(&[0], &[0, 1]).unwrap(), 1.0);
        assert_eq!(c.hausdorff(&[0, 1], &[0, 1]).unwrap(), 0.0);
        assert!(c.hausdorff(&[], &[0]).is_err());
        // B is a 0.3-net of A and A ⊆ B.
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let c = line(&xs);
        let a: Vec<usize> = (0..=20).collect();
        let b: Vec<usize> = (0..=20).step_by(6).chain([20]).collect();
        assert!(c.hausdorff(&a, &b).unwrap() <= 0.3 + 1e-12);
    }

    #[test]
    fn construction_rejects_bad_matrices() {
        let l = vec!["a".to_string(), "b".into(), "c".into()];
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(FinitePointCloud::new(l.clone(), bad.clone()).is_err());
        let fixed = FinitePointCloud::from_upper_estimates(l.clone(), bad).unwrap();
        assert_eq!(fixed.dist(0, 2), 2.0);
        assert!(fixed.caveat().is_some());
        let asym = vec![vec![0.0, 1.0, 1.0], vec![1.5, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(FinitePointCloud::new(l, asym).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = plane(6, 3);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = FinitePointCloud::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn lipschitz_on_random_subsets() {
        let c = plane(40, 7);
        let mut rng = sampling::rng(7, 1, 0);
        let mut pairs = vec![(vec![0], vec![0, 1]), (vec![2, 3], vec![2, 3])];
        for _ in 0..50 {
            let ka = rng.gen_range(1..10);
            let kb = rng.gen_range(1..10);
            pairs.push((sample(&mut rng, 40, ka).into_vec(), sample(&mut rng, 40, kb).into_vec()));
        }
        let r = diam_lipschitz_check(&c, &pairs).unwrap();
        assert!(r.pass);
        assert_eq!(r.rows[1].hausdorff, 0.0);
    }

    #[test]
    fn hausdorff_is_a_semi_metric_on_samples() {
        let c = plane(30, 9);
        let mut rng = sampling::rng(9, 2, 0);
        for _ in 0..100 {
            let s: Vec<Vec<usize>> = (0..3)
                .map(|_| {
                    let k = rng.gen_range(1..8);
                    sample(&mut rng, 30, k).into_vec()
                })
                .collect();
            let ab = c.hausdorff(&s[0], &s[1]).unwrap();
            assert_eq!(ab, c.hausdorff(&s[1], &s[0]).unwrap());
            let bc = c.hausdorff(&s[1], &s[2]).unwrap();
            let ac = c.hausdorff(&s[0], &s[2]).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }
}
