use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ansatz::AnsatzFamily;
use crate::linalg::complex_nullspace;
use crate::rational::{lex_cmp_points, same_point, Laurent, PointExt, RationalFn};

/// The form whose residue a row prescribes, with `omega = F dz` (or the
/// fixed `omega` when the unknown is `g0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Omega,
    G,
    G2,
    G0,
    GG0,
    G0Sq,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowLabel {
    pub point: Complex64,
    pub moment: Moment,
}

/// Homogeneous residue conditions on the ansatz coefficients.
#[derive(Clone, Debug)]
pub struct ResidueSystem {
    pub matrix: DMatrix<Complex64>,
    pub row_labels: Vec<RowLabel>,
    pub col_labels: Vec<String>,
}

/// Residues at `p` of `m_1 ... m_r * basis_u * dz` for every `u`, sharing
/// the expansion of the multiplier.
pub(crate) fn residue_row(p: PointExt, multipliers: &[&RationalFn], basis: &[RationalFn]) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    if multipliers.iter().any(|m| m.is_zero()) {
        return vec![zero; basis.len()];
    }
    let mut base_order: i32 = match p {
        PointExt::Finite(_) => 0,
        PointExt::Infinity => -2,
    };
    base_order += multipliers.iter().map(|m| m.order_bound(p)).sum::<i32>();
    let worst = basis.iter().map(|b| b.order_bound(p)).min().unwrap_or(0);
    let needed = -(base_order + worst);
    if needed <= 0 {
        return vec![zero; basis.len()];
    }
    let n = needed as usize;
    let mut acc = match p {
        PointExt::Finite(_) => Laurent::new(0, vec![Complex64::new(1.0, 0.0)]),
        PointExt::Infinity => Laurent::new(-2, vec![Complex64::new(-1.0, 0.0)]),
    };
    for m in multipliers {
        acc = acc.mul(&m.laurent(p, n), n);
    }
    basis
        .iter()
        .map(|b| {
            if b.is_zero() {
                return zero;
            }
            let total = base_order + b.order_bound(p);
            if total >= 0 {
                return zero;
            }
            let k = (-total) as usize;
            acc.mul(&b.laurent(p, k), k).residue()
        })
        .collect()
}

/// Finite points where some of the functions has a pole, merged and sorted.
pub(crate) fn finite_pole_points<'a>(fs: impl IntoIterator<Item = &'a RationalFn>) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = Vec::new();
    for f in fs {
        for &(p, _) in f.poles() {
            if !pts.iter().any(|q| same_point(*q, p)) {
                pts.push(p);
            }
        }
    }
    pts.sort_by(|a, b| lex_cmp_points(*a, *b));
    pts
}

/// Builds rows for each point and moment, drops rows that vanish and scales
/// the rest to unit max-abs entry.
pub(crate) fn assemble_rows(
    points: &[Complex64],
    moments: &[(Moment, Vec<&RationalFn>)],
    family: &AnsatzFamily,
) -> ResidueSystem {
    let mut rows: Vec<(RowLabel, Vec<Complex64>)> = Vec::new();
    for &p in points {
        for (moment, mults) in moments {
            let row = residue_row(PointExt::Finite(p), mults, &family.basis);
            rows.push((RowLabel { point: p, moment: *moment }, row));
        }
    }
    let global = rows
        .iter()
        .flat_map(|(_, r)| r.iter().map(|c| c.norm()))
        .fold(0.0, f64::max);
    rows.retain(|(_, r)| r.iter().map(|c| c.norm()).fold(0.0, f64::max) > 1e-13 * global);
    let ncols = family.len();
    let mut matrix = DMatrix::zeros(rows.len(), ncols);
    for (i, (_, r)) in rows.iter().enumerate() {
        let s = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (j, v) in r.iter().enumerate() {
            matrix[(i, j)] = v / s;
        }
    }
    ResidueSystem {
        matrix,
        row_labels: rows.into_iter().map(|(l, _)| l).collect(),
        col_labels: family.labels.clone(),
    }
}

/// Rows `Res(F), Res(g F), Res(g^2 F)` at every finite pole of `g` or of a
/// basis element.
pub fn assemble_residue_system(g: &RationalFn, family: &AnsatzFamily) -> ResidueSystem {
    let points = finite_pole_points(std::iter::once(g).chain(family.basis.iter()));
    let moments = vec![(Moment::Omega, vec![]), (Moment::G, vec![g]), (Moment::G2, vec![g, g])];
    assemble_rows(&points, &moments, family)
}

/// Orthonormal kernel basis at the default rank tolerance `1e-9`.
pub fn nullspace(system: &ResidueSystem) -> Vec<DVector<Complex64>> {
    nullspace_with_tol(system, 1e-9)
}

pub fn nullspace_with_tol(system: &ResidueSystem, rank_tol: f64) -> Vec<DVector<Complex64>> {
    complex_nullspace(&system.matrix, rank_tol)
}
