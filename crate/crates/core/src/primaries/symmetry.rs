//! Dihedral symmetry claims and their certification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::orbit::MassedOrbit;

/// A permutation of body indices, stored as 0-based images.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &j in &images {
            if j >= n || seen[j] {
                return Err(Error::Config(format!(
                    "not a permutation of 0..{n}: {images:?}"
                )));
            }
            seen[j] = true;
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    /// Parse from 1-based images as written in sidecar files.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        let shifted: Vec<usize> = images
            .iter()
            .map(|&j| {
                j.checked_sub(1)
                    .ok_or_else(|| Error::Parse("permutation entries are 1-based".into()))
            })
            .collect::<Result<_>>()?;
        Permutation::new(shifted)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&j| j + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, j: usize) -> usize {
        self.0[j]
    }

    pub fn compose(&self, other: &Permutation) -> Permutation {
        // (self ∘ other)(j) = self(other(j))
        Permutation(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn pow(&self, k: u32) -> Permutation {
        let mut acc = Permutation::identity(self.len());
        for _ in 0..k {
            acc = self.compose(&acc);
        }
        acc
    }
}

/// Claimed D_d symmetry: a rotation permutation, a time-reversal
/// permutation, and the spatial reflection that accompanies it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetrySpec {
    pub d: u32,
    pub zeta1: Permutation,
    pub zeta2: Permutation,
    pub reflection: [[f64; 2]; 2],
}

impl SymmetrySpec {
    /// Structural validation: zeta1^d = id, zeta2^2 = id, R an orthogonal
    /// involution.
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config(format!("d = {} must be at least 2", self.d)));
        }
        if self.zeta1.len() != self.zeta2.len() {
            return Err(Error::Config("zeta1 and zeta2 act on different sets".into()));
        }
        if !self.zeta1.pow(self.d).is_identity() {
            return Err(Error::Config(
                "zeta1 order does not divide d".into(),
            ));
        }
        if !self.zeta2.compose(&self.zeta2).is_identity() {
            return Err(Error::Config("zeta2 is not an involution".into()));
        }
        let r = &self.reflection;
        let rr = [
            [
                r[0][0] * r[0][0] + r[0][1] * r[1][0],
                r[0][0] * r[0][1] + r[0][1] * r[1][1],
            ],
            [
                r[1][0] * r[0][0] + r[1][1] * r[1][0],
                r[1][0] * r[0][1] + r[1][1] * r[1][1],
            ],
        ];
        let dev = (rr[0][0] - 1.0).abs()
            + rr[0][1].abs()
            + rr[1][0].abs()
            + (rr[1][1] - 1.0).abs();
        if dev > 1e-10 {
            return Err(Error::Config("reflection R is not an involution".into()));
        }
        let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
        if (det.abs() - 1.0).abs() > 1e-10 {
            return Err(Error::Config("reflection R is not orthogonal".into()));
        }
        Ok(())
    }

    /// Elements of the permutation group generated by zeta1 and zeta2.
    pub fn group_elements(&self) -> Vec<Permutation> {
        let mut elems = vec![Permutation::identity(self.zeta1.len())];
        let gens = [self.zeta1.clone(), self.zeta2.clone()];
        let mut frontier = elems.clone();
        while let Some(g) = frontier.pop() {
            for gen in &gens {
                let h = gen.compose(&g);
                if !elems.contains(&h) {
                    if elems.len() > 4096 {
                        return elems;
                    }
                    elems.push(h.clone());
                    frontier.push(h);
                }
            }
        }
        elems
    }
}

/// Residuals of the symmetry conditions over a dense time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryCertificate {
    pub passed: bool,
    pub max_rotation_residual: f64,
    pub max_reversal_residual: f64,
    pub max_mass_residual: f64,
    pub tolerance: f64,
    pub grid_size: usize,
}

/// Measure the three residuals on `grid` points of [0, pi).
/// Always returns a certificate; failure is `passed = false`.
pub fn certify_symmetry(
    orbits: &[MassedOrbit],
    spec: &SymmetrySpec,
    tol: f64,
    grid: usize,
) -> Result<SymmetryCertificate> {
    spec.validate()?;
    if spec.zeta1.len() != orbits.len() {
        return Err(Error::Config(format!(
            "symmetry acts on {} bodies but ensemble has {}",
            spec.zeta1.len(),
            orbits.len()
        )));
    }
    let angle = 2.0 * std::f64::consts::PI / spec.d as f64;
    let (rs, rc) = angle.sin_cos();
    let refl = spec.reflection;

    let mut rot_res = 0.0_f64;
    let mut rev_res = 0.0_f64;
    for k in 0..grid {
        let t = k as f64 * std::f64::consts::PI / grid as f64;
        for (j, orbit) in orbits.iter().enumerate() {
            let q = orbit.position(t);
            let rotated = [rc * q[0] - rs * q[1], rs * q[0] + rc * q[1]];
            let q_rot = orbits[spec.zeta1.apply(j)].position(t);
            rot_res = rot_res
                .max(((q_rot[0] - rotated[0]).powi(2) + (q_rot[1] - rotated[1]).powi(2)).sqrt());

            let q_neg = orbit.position(-t);
            let reflected = [
                refl[0][0] * q_neg[0] + refl[0][1] * q_neg[1],
                refl[1][0] * q_neg[0] + refl[1][1] * q_neg[1],
            ];
            let q_rev = orbits[spec.zeta2.apply(j)].position(t);
            rev_res = rev_res.max(
                ((q_rev[0] - reflected[0]).powi(2) + (q_rev[1] - reflected[1]).powi(2)).sqrt(),
            );
        }
    }

    let mut mass_res = 0.0_f64;
    for sigma in spec.group_elements() {
        for (j, orbit) in orbits.iter().enumerate() {
            mass_res = mass_res.max((orbits[sigma.apply(j)].mass - orbit.mass).abs());
        }
    }

    Ok(SymmetryCertificate {
        passed: rot_res <= tol && rev_res <= tol && mass_res <= tol,
        max_rotation_residual: rot_res,
        max_reversal_residual: rev_res,
        max_mass_residual: mass_res,
        tolerance: tol,
        grid_size: grid,
    })
}
