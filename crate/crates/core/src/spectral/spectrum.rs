//! Spectrum of `S` assembled from exact subspace blocks and Arnoldi on the
//! core block.

use std::io::Write;

use num_complex::Complex64;

use super::arnoldi::{arnoldi, ritz_values, RitzValue};
use crate::decompose::Decomposition;
use crate::dense;
use crate::error::{Error, Result};
use crate::operator::{format_f64, StochasticOperator};

/// Eigenvalues within this distance of 1 count as unit eigenvalues.
pub const UNIT_TOLERANCE: f64 = 1e-10;

/// Default size limit for dense diagonalization of a subspace block.
pub const DEFAULT_DENSE_LIMIT: usize = 10_000;

/// Exact eigenvalues of one diagonal block of `S_ss`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEigenvalues {
    pub subspace: usize,
    pub eigenvalues: Vec<Complex64>,
}

impl SubspaceEigenvalues {
    pub fn unit_count(&self) -> usize {
        count_unit(&self.eigenvalues)
    }
}

pub fn count_unit(eigs: &[Complex64]) -> usize {
    eigs.iter()
        .filter(|z| (*z - Complex64::new(1.0, 0.0)).norm() < UNIT_TOLERANCE)
        .count()
}

/// Dense eigenvalues of every subspace block, multiplicities retained.
pub fn subspace_spectrum(
    op: &StochasticOperator,
    d: &Decomposition,
    dense_limit: usize,
) -> Result<Vec<SubspaceEigenvalues>> {
    d.subspaces
        .iter()
        .enumerate()
        .map(|(id, s)| {
            if s.dim() > dense_limit {
                return Err(Error::SubspaceTooLarge {
                    id,
                    dim: s.dim(),
                    limit: dense_limit,
                });
            }
            let block = dense::dense_block(op, &s.members, &s.members);
            let mut eigenvalues = dense::eigenvalues(&block)?;
            eigenvalues.sort_by(dense::spectral_order);
            Ok(SubspaceEigenvalues {
                subspace: id,
                eigenvalues,
            })
        })
        .collect()
}

/// Number of unit eigenvalues of `S`.
///
/// Each subspace block contributes its own unit eigenvalues. The core block
/// is strictly contracting as soon as one subspace exists; without any
/// subspace the core is all of `S`, which is stochastic and irreducible and
/// carries exactly one unit eigenvalue.
pub fn unit_eigenvalue_count(blocks: &[SubspaceEigenvalues], d: &Decomposition) -> usize {
    let from_blocks: usize = blocks.iter().map(SubspaceEigenvalues::unit_count).sum();
    from_blocks + usize::from(d.subspaces.is_empty() && d.core_size() > 0)
}

/// Ritz values of the core-projected block `S_cc`, Arnoldi from the uniform
/// core vector.
pub fn core_spectrum(op: &StochasticOperator, d: &Decomposition, n_a: usize) -> Result<Vec<RitzValue>> {
    if d.core_size() == 0 {
        return Err(Error::EmptyCore);
    }
    let start = vec![1.0 / d.core_size() as f64; d.core_size()];
    let f = arnoldi(
        |x, y| op.apply_core_projected_into(d, x, y).map(|_| ()),
        &start,
        n_a,
    )?;
    ritz_values(&f)
}

/// Points `(|lambda_j|, j / N)` with eigenvalues sorted by modulus descending.
pub fn spectrum_fraction_curve(eigs: &[Complex64], n: usize) -> Vec<(f64, f64)> {
    let mut moduli: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    moduli
        .into_iter()
        .enumerate()
        .map(|(j, m)| (m, (j + 1) as f64 / n as f64))
        .collect()
}

/// Where an eigenvalue came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenSource {
    Subspace(usize),
    Core,
}

/// Subspace and core spectra of `S`.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub subspace_eigs: Vec<(Complex64, usize)>,
    pub core_ritz: Vec<RitzValue>,
    pub unit_count: usize,
    /// Over subspace eigenvalues and core Ritz values together.
    pub fraction_curve: Vec<(f64, f64)>,
    /// Over core Ritz values only.
    pub core_fraction_curve: Vec<(f64, f64)>,
}

/// Assembles the full report. An empty core yields no Ritz values.
pub fn spectrum_report(
    op: &StochasticOperator,
    d: &Decomposition,
    n_a: usize,
    dense_limit: usize,
) -> Result<SpectrumReport> {
    let blocks = subspace_spectrum(op, d, dense_limit)?;
    let unit_count = unit_eigenvalue_count(&blocks, d);
    let subspace_eigs: Vec<(Complex64, usize)> = blocks
        .iter()
        .flat_map(|b| b.eigenvalues.iter().map(move |&z| (z, b.subspace)))
        .collect();
    let core_ritz = if d.core_size() > 0 {
        core_spectrum(op, d, n_a)?
    } else {
        Vec::new()
    };
    let n = op.dim();
    let all: Vec<Complex64> = subspace_eigs
        .iter()
        .map(|(z, _)| *z)
        .chain(core_ritz.iter().map(|r| r.value))
        .collect();
    let core_only: Vec<Complex64> = core_ritz.iter().map(|r| r.value).collect();
    Ok(SpectrumReport {
        fraction_curve: spectrum_fraction_curve(&all, n),
        core_fraction_curve: spectrum_fraction_curve(&core_only, n),
        subspace_eigs,
        core_ritz,
        unit_count,
    })
}

impl SpectrumReport {
    /// `re,im,source,residual`; source is the subspace id or `core`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "re,im,source,residual")?;
        for (z, id) in &self.subspace_eigs {
            writeln!(w, "{},{},{},{}", format_f64(z.re), format_f64(z.im), id, format_f64(0.0))?;
        }
        for r in &self.core_ritz {
            writeln!(
                w,
                "{},{},core,{}",
                format_f64(r.value.re),
                format_f64(r.value.im),
                format_f64(r.residual)
            )?;
        }
        Ok(())
    }

    /// `abs_lambda,fraction` for the chosen curve.
    pub fn write_fraction_csv<W: Write>(curve: &[(f64, f64)], mut w: W) -> Result<()> {
        writeln!(w, "abs_lambda,fraction")?;
        for (m, f) in curve {
            writeln!(w, "{},{}", format_f64(*m), format_f64(*f))?;
        }
        Ok(())
    }
}
