//! Data-generating designs of the simulation study.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::distributions::{CmsnParams, CmsnSampler};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    A,
    B,
}

/// Generating case. `Msn` is the uncontaminated skew-normal mixture shared
/// by the noise cases before any replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
    C,
    D,
    E,
    Msn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Proximity {
    Close,
    Far,
}

impl FromStr for Part {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Part::A),
            "B" => Ok(Part::B),
            _ => Err(Error::InvalidParameter(format!("unknown part '{s}' (expected A or B)"))),
        }
    }
}

impl FromStr for Case {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Case::A),
            "b" => Ok(Case::B),
            "c" => Ok(Case::C),
            "d" => Ok(Case::D),
            "e" => Ok(Case::E),
            "msn" => Ok(Case::Msn),
            _ => Err(Error::InvalidParameter(format!("unknown case '{s}' (expected a-e or msn)"))),
        }
    }
}

impl FromStr for Proximity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "close" => Ok(Proximity::Close),
            "far" => Ok(Proximity::Far),
            _ => Err(Error::InvalidParameter(format!("unknown proximity '{s}' (expected close or far)"))),
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Part::A => "A",
            Part::B => "B",
        })
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
            Case::E => "e",
            Case::Msn => "msn",
        })
    }
}

impl fmt::Display for Proximity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Proximity::Close => "close",
            Proximity::Far => "far",
        })
    }
}

/// One experiment: a generating case and the grid of missing-row fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub part: Part,
    pub case: Case,
    pub n: usize,
    pub proximity: Proximity,
    pub missing_fractions: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 50 {
            return Err(Error::InvalidParameter(format!("n = {} < 50", self.n)));
        }
        if self.missing_fractions.is_empty() {
            return Err(Error::InvalidParameter("empty missing-fraction grid".into()));
        }
        if let Some(f) = self.missing_fractions.iter().find(|f| !(0.0..=0.95).contains(*f)) {
            return Err(Error::InvalidParameter(format!("missing fraction {f} not in [0, 0.95]")));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        check_case(self.part, self.case)
    }

    pub fn clusters(&self) -> usize {
        match self.part {
            Part::A => 2,
            Part::B => 1,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<(DataMatrix, GroundTruth)> {
        match self.part {
            Part::A => generate_part_a(self.case, self.n, self.proximity, seed),
            Part::B => generate_part_b(self.case, self.n, seed),
        }
    }
}

fn check_case(part: Part, case: Case) -> Result<()> {
    match (part, case) {
        (Part::B, Case::C | Case::D | Case::E) => {
            Err(Error::InvalidParameter(format!("part B has cases a, b and msn, not {case}")))
        }
        _ => Ok(()),
    }
}

/// What the generator knows about each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: Vec<usize>,
    /// `false` for bad points, including rows replaced by noise.
    pub good_flags: Vec<bool>,
    pub noise_rows: Vec<bool>,
    /// Row-major, `true` = observed.
    pub mask: Vec<bool>,
    /// `false` when the design has no notion of bad points.
    pub has_outlier_truth: bool,
}

impl GroundTruth {
    pub fn bad_flags(&self) -> Vec<bool> {
        self.good_flags.iter().map(|g| !g).collect()
    }
}

/// The fixed two-cluster parameters of part A.
pub fn part_a_components(proximity: Proximity) -> [(f64, CmsnParams); 2] {
    let mu1 = match proximity {
        Proximity::Close => [0.0, -1.0],
        Proximity::Far => [0.0, -3.0],
    };
    let c1 = CmsnParams::new(
        DVector::from_column_slice(&mu1),
        DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]),
        DVector::from_column_slice(&[3.0, 5.0]),
        1.0,
        1.001,
    )
    .expect("fixed parameters are valid");
    let c2 = CmsnParams::new(
        DVector::from_column_slice(&[0.0, 3.0]),
        DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
        DVector::from_column_slice(&[4.0, 2.0]),
        1.0,
        1.001,
    )
    .expect("fixed parameters are valid");
    [(0.3, c1), (0.7, c2)]
}

/// The single cluster of part B: `mu = 0`, `Sigma = I_10`, `lambda = (0_9, 10)`.
pub fn part_b_component() -> CmsnParams {
    let mut lambda = DVector::zeros(10);
    lambda[9] = 10.0;
    CmsnParams::new(DVector::zeros(10), DMatrix::identity(10, 10), lambda, 1.0, 1.001).expect("fixed parameters are valid")
}

fn replace_count(frac: f64, n: usize) -> usize {
    (frac * n as f64).round() as usize
}

/// Part A: two clusters in the plane, with the case's contamination.
pub fn generate_part_a(case: Case, n: usize, proximity: Proximity, seed: u64) -> Result<(DataMatrix, GroundTruth)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut comps = part_a_components(proximity);
    if case == Case::B {
        comps[0].1.alpha = 0.9;
        comps[0].1.beta = 20.0;
        comps[1].1.alpha = 0.8;
        comps[1].1.beta = 30.0;
    }
    let samplers = [CmsnSampler::new(&comps[0].1)?, CmsnSampler::new(&comps[1].1)?];
    let nu = [4.0, 10.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    let mut good = Vec::with_capacity(n);
    for i in 0..n {
        let g = usize::from(rng.random::<f64>() >= comps[0].0);
        let (row, is_good) = if case == Case::A {
            let w: f64 = ChiSquared::new(nu[g]).expect("positive dof").sample(&mut rng);
            let dev = samplers[g].draw_deviation(&mut rng);
            (samplers[g].location() + dev / (w / nu[g]).sqrt(), true)
        } else {
            samplers[g].draw(&mut rng)
        };
        x.set_row(i, &row.transpose());
        labels.push(g);
        good.push(is_good);
    }
    let frac = match case {
        Case::C => 0.01,
        Case::D => 0.05,
        Case::E => 0.20,
        _ => 0.0,
    };
    let mut noise_rows = vec![false; n];
    let k = replace_count(frac, n);
    if k > 0 {
        let picked = sample(&mut rng, n, k).into_vec();
        for &i in &picked {
            let (a, b) = if case == Case::C {
                (0.0, rng.sample(Uniform::new(10.0, 15.0).expect("valid range")))
            } else {
                let u = Uniform::new(0.0, 10.0).expect("valid range");
                (rng.sample(u), rng.sample(u))
            };
            x[(i, 0)] = a;
            x[(i, 1)] = b;
            noise_rows[i] = true;
            good[i] = false;
        }
    }
    let data = DataMatrix::complete(&x)?;
    let truth = GroundTruth {
        labels,
        good_flags: good,
        noise_rows,
        mask: vec![true; n * 2],
        has_outlier_truth: case != Case::A,
    };
    Ok((data, truth))
}

/// Part B: one ten-dimensional cluster skewed along the last coordinate.
pub fn generate_part_b(case: Case, n: usize, seed: u64) -> Result<(DataMatrix, GroundTruth)> {
    check_case(Part::B, case)?;
    let p = 10;
    let k = match case {
        Case::A => {
            let k = replace_count(0.01, n);
            if k < 10 {
                return Err(Error::InvalidParameter(format!(
                    "part B case a needs round(0.01 n) >= 10 altered rows, n = {n} gives {k}"
                )));
            }
            k
        }
        Case::B => replace_count(0.05, n),
        _ => 0,
    };
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let sampler = CmsnSampler::new(&part_b_component())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let (row, _) = sampler.draw(&mut rng);
        x.set_row(i, &row.transpose());
    }
    let mut noise_rows = vec![false; n];
    if k > 0 {
        let picked = sample(&mut rng, n, k).into_vec();
        let zeroed = k / 2;
        for (r, &i) in picked.iter().enumerate() {
            match case {
                Case::A if r < zeroed => x.row_mut(i).fill(0.0),
                Case::A => {
                    let u = Uniform::new(10.0, 15.0).expect("valid range");
                    for j in 0..p {
                        x[(i, j)] = rng.sample(u);
                    }
                }
                _ => {
                    let u = Uniform::new(-5.0, 5.0).expect("valid range");
                    let shared = rng.sample(u);
                    for j in 0..p - 1 {
                        x[(i, j)] = shared;
                    }
                    x[(i, p - 1)] = rng.sample(u);
                }
            }
            noise_rows[i] = true;
        }
    }
    let data = DataMatrix::complete(&x)?;
    let truth = GroundTruth {
        labels: vec![0; n],
        good_flags: noise_rows.iter().map(|b| !b).collect(),
        noise_rows,
        mask: vec![true; n * p],
        has_outlier_truth: true,
    };
    Ok((data, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_counts_are_exact() {
        let (d, t) = generate_part_a(Case::D, 800, Proximity::Far, 5).unwrap();
        assert_eq!(t.noise_rows.iter().filter(|&&b| b).count(), 40);
        for i in (0..800).filter(|&i| t.noise_rows[i]) {
            let r = d.row(i);
            assert!(r.iter().all(|&v| v > 0.0 && v < 10.0));
            assert!(!t.good_flags[i]);
        }
        let (d, t) = generate_part_a(Case::C, 300, Proximity::Close, 5).unwrap();
        let rows: Vec<usize> = (0..300).filter(|&i| t.noise_rows[i]).collect();
        assert_eq!(rows.len(), 3);
        for i in rows {
            assert_eq!(d.row(i)[0], 0.0);
            assert!((10.0..15.0).contains(&d.row(i)[1]));
        }
    }

    #[test]
    fn part_b_cases() {
        let (d, t) = generate_part_b(Case::A, 1000, 1).unwrap();
        let rows: Vec<usize> = (0..1000).filter(|&i| t.noise_rows[i]).collect();
        assert_eq!(rows.len(), 10);
        let zero_rows = rows.iter().filter(|&&i| d.row(i).iter().all(|&v| v == 0.0)).count();
        assert_eq!(zero_rows, 5);
        let (d, t) = generate_part_b(Case::B, 1000, 1).unwrap();
        let rows: Vec<usize> = (0..1000).filter(|&i| t.noise_rows[i]).collect();
        assert_eq!(rows.len(), 50);
        for i in rows {
            let r = d.row(i);
            assert!(r[..9].iter().all(|&v| v == r[0]));
        }
        assert!(generate_part_b(Case::A, 900, 1).is_err());
    }

    #[test]
    fn generators_are_reproducible() {
        let a = generate_part_a(Case::B, 300, Proximity::Far, 11).unwrap();
        let b = generate_part_a(Case::B, 300, Proximity::Far, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.n(), 300);
    }
}
