//! Natural visibility graph of a series, its value-weighted enhancement and
//! the row-sum compression back to a series of the same length.
//!
//! Node `i` sits at abscissa `i` unless explicit abscissae are supplied.
//! Nodes `i < j` see each other when every intermediate point lies strictly
//! below the chord joining them. Scanning left from `j`, that is the same as
//! the backward slope `(v_i - v_j) / (x_j - x_i)` being a strict new running
//! maximum, so one pass per `j` decides every pair.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, DvsError, Result};
use crate::series::format_sig17;

/// Slope as a fraction with positive denominator; compared by
/// cross-multiplication so collinear points tie exactly.
#[derive(Clone, Copy, Debug)]
struct Slope {
    num: f64,
    den: f64,
}

impl Slope {
    #[inline]
    fn gt(self, other: Slope) -> bool {
        self.num * other.den > other.num * self.den
    }
}

/// Calls `visit(i, j)` for every visible pair `i < j`, in order of
/// increasing `j` and decreasing `i`.
fn scan_visible_pairs(xs: &[f64], values: &[f64], mut visit: impl FnMut(usize, usize)) {
    let n = values.len();
    let mut prefix_max = Vec::with_capacity(n);
    let mut running = f64::NEG_INFINITY;
    for &v in values {
        running = running.max(v);
        prefix_max.push(running);
    }

    for j in 1..n {
        let (xj, vj) = (xs[j], values[j]);
        let mut best: Option<Slope> = None;
        for i in (0..j).rev() {
            if let Some(b) = best {
                // Largest slope any point in 0..=i could still reach. Once it
                // cannot beat the running maximum, nothing further left is
                // visible from j.
                let rise = prefix_max[i] - vj;
                let bound = if rise >= 0.0 {
                    Slope {
                        num: rise,
                        den: xj - xs[i],
                    }
                } else {
                    Slope {
                        num: rise,
                        den: xj - xs[0],
                    }
                };
                if !bound.gt(b) {
                    break;
                }
            }
            let s = Slope {
                num: values[i] - vj,
                den: xj - xs[i],
            };
            match best {
                Some(b) if !s.gt(b) => {}
                _ => {
                    visit(i, j);
                    best = Some(s);
                }
            }
        }
    }
}

fn check_input(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(DvsError::Length(values.len()));
    }
    ensure_finite(values, "values")
}

fn unit_abscissa(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

fn check_abscissa(xs: &[f64], values: &[f64]) -> Result<()> {
    if xs.len() != values.len() {
        return Err(DvsError::DimensionMismatch {
            expected: values.len(),
            got: xs.len(),
        });
    }
    ensure_finite(xs, "abscissa")?;
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DvsError::Shape(
            "abscissa must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Symmetric 0/1 visibility matrix, stored as sorted neighbour lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct EdgeListJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl AdjacencyMatrix {
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// 0-based pairs with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.neighbors.iter().enumerate() {
            out.extend(row.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let n = self.n();
        self.neighbors
            .iter()
            .map(|row| {
                let mut dense = vec![0u8; n];
                for &j in row {
                    dense[j] = 1;
                }
                dense
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EdgeListJson {
            n: self.n(),
            edges: self.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EdgeListJson = serde_json::from_str(text)?;
        let mut neighbors = vec![Vec::new(); doc.n];
        for [i, j] in doc.edges {
            if i >= doc.n || j >= doc.n || i == j {
                return Err(DvsError::Shape(format!(
                    "bad edge [{i},{j}] for n={}",
                    doc.n
                )));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for row in &mut neighbors {
            row.sort_unstable();
            row.dedup();
        }
        Ok(AdjacencyMatrix { neighbors })
    }

    /// Dense 0/1 rows, comma separated, no header.
    pub fn to_dense_csv(&self) -> String {
        let mut out = String::new();
        for row in self.to_dense() {
            let cells: Vec<&str> = row
                .iter()
                .map(|&b| if b == 1 { "1" } else { "0" })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn visibility_adjacency(values: &[f64]) -> Result<AdjacencyMatrix> {
    check_input(values)?;
    Ok(build_adjacency(&unit_abscissa(values.len()), values))
}

/// Visibility with explicit node positions, e.g. raw timestamps of an
/// irregularly sampled series.
pub fn visibility_adjacency_at(abscissa: &[f64], values: &[f64]) -> Result<AdjacencyMatrix> {
    check_input(values)?;
    check_abscissa(abscissa, values)?;
    Ok(build_adjacency(abscissa, values))
}

fn build_adjacency(xs: &[f64], values: &[f64]) -> AdjacencyMatrix {
    let mut neighbors = vec![Vec::new(); values.len()];
    scan_visible_pairs(xs, values, |i, j| {
        neighbors[i].push(j);
        neighbors[j].push(i);
    });
    for row in &mut neighbors {
        row.sort_unstable();
    }
    AdjacencyMatrix { neighbors }
}

pub fn node_degrees(adjacency: &AdjacencyMatrix) -> Vec<usize> {
    adjacency.neighbors.iter().map(Vec::len).collect()
}

/// `B[i][j] = A[i][j] * v[j] / degree(i)`, kept sparse on the support of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnhancedMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    degrees: Vec<usize>,
}

impl EnhancedMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Nonzero `(column, weight)` entries of row `i`, by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; n];
                for &(j, b) in row {
                    dense[j] = b;
                }
                dense
            })
            .collect()
    }

    pub fn to_dense_csv(&self) -> String {
        let mut out = String::new();
        for row in self.to_dense() {
            let cells: Vec<String> = row
                .iter()
                .map(|&b| {
                    if b == 0.0 {
                        "0".to_string()
                    } else {
                        format_sig17(b)
                    }
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn enhanced_matrix(adjacency: &AdjacencyMatrix, values: &[f64]) -> Result<EnhancedMatrix> {
    if adjacency.n() != values.len() {
        return Err(DvsError::DimensionMismatch {
            expected: adjacency.n(),
            got: values.len(),
        });
    }
    ensure_finite(values, "values")?;
    let degrees = node_degrees(adjacency);
    let rows = adjacency
        .neighbors
        .iter()
        .zip(&degrees)
        .map(|(row, &deg)| {
            let d = deg as f64;
            row.iter().map(|&j| (j, values[j] / d)).collect()
        })
        .collect();
    Ok(EnhancedMatrix { rows, degrees })
}

/// Network-informed series: entry `i` is the mean of the values node `i`
/// can see.
#[derive(Clone, Debug, PartialEq)]
pub struct ZipSeries {
    pub z: Vec<f64>,
}

impl ZipSeries {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `index,zip` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,zip\n");
        for (i, z) in self.z.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", format_sig17(*z)));
        }
        out
    }
}

pub fn dvs_compress(enhanced: &EnhancedMatrix) -> ZipSeries {
    let z = enhanced
        .rows
        .iter()
        .map(|row| row.iter().map(|&(_, b)| b).sum())
        .collect();
    ZipSeries { z }
}

/// Adjacency, enhancement and compression in one O(n) memory pass.
pub fn dvs_transform(values: &[f64]) -> Result<ZipSeries> {
    check_input(values)?;
    Ok(fused_transform(&unit_abscissa(values.len()), values))
}

pub fn dvs_transform_at(abscissa: &[f64], values: &[f64]) -> Result<ZipSeries> {
    check_input(values)?;
    check_abscissa(abscissa, values)?;
    Ok(fused_transform(abscissa, values))
}

fn fused_transform(xs: &[f64], values: &[f64]) -> ZipSeries {
    let n = values.len();
    let mut sums = vec![0.0; n];
    let mut degrees = vec![0usize; n];
    scan_visible_pairs(xs, values, |i, j| {
        sums[i] += values[j];
        sums[j] += values[i];
        degrees[i] += 1;
        degrees[j] += 1;
    });
    let z = sums
        .iter()
        .zip(&degrees)
        .map(|(&s, &d)| s / d as f64)
        .collect();
    ZipSeries { z }
}
