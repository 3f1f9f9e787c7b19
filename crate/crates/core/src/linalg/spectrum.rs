//! Eigenvalues of general complex matrices via the complex Schur form.
//!
//! Defective eigenvalues split under rounding by about eps^{1/k}; clusters
//! report the mean of each group, which is well conditioned.

use nalgebra::Schur;
use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let schur = Schur::try_new(m.as_dmatrix().clone(), f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCluster {
    pub center: C64,
    pub multiplicity: usize,
    /// Largest distance of a member from the center.
    pub spread: f64,
}

/// Groups eigenvalues closer than `1e-5·max(1, ‖M‖₁)` (single linkage).
pub fn spectrum_clusters(m: &ComplexMatrix) -> Result<Vec<SpectrumCluster>> {
    let eig = eigenvalues(m)?;
    let radius = 1e-5 * m.one_norm().max(1.0);
    let n = eig.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eig[i] - eig[j]).norm() <= radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<(usize, Vec<C64>)> = Vec::new();
    for i in 0..n {
        let root = find(&mut label, i);
        match clusters.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(eig[i]),
            None => clusters.push((root, vec![eig[i]])),
        }
    }
    let mut out: Vec<SpectrumCluster> = clusters
        .into_iter()
        .map(|(_, members)| {
            let center = members.iter().sum::<C64>() / members.len() as f64;
            let spread = members.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
            SpectrumCluster { center, multiplicity: members.len(), spread }
        })
        .collect();
    out.sort_by(|a, b| b.center.re.total_cmp(&a.center.re).then(a.center.im.total_cmp(&b.center.im)));
    Ok(out)
}

/// max Re over the spectrum (cluster centers).
pub fn spectral_abscissa(m: &ComplexMatrix) -> Result<f64> {
    Ok(spectrum_clusters(m)?.iter().map(|c| c.center.re).fold(f64::NEG_INFINITY, f64::max))
}
