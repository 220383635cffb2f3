//! Built-in operator catalog: named problems with known solution metadata,
//! covering the regular, singular, nonsmooth, and unsolvable regimes plus a
//! deliberately non-monotone fixture for detection tests.

use crate::error::Result;
use crate::hilbert::Vector;
use crate::operator::{KnownSolutionSet, OperatorInstance, OperatorSpec, ScalarMap};
use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    /// Human-readable formula.
    pub summary: &'static str,
    /// Why the map is monotone (or a warning for the fixture).
    pub monotonicity: &'static str,
    /// Fixtures are excluded from default experiment sweeps.
    pub test_only: bool,
    pub instance: OperatorInstance,
}

fn known(y: Vec<f64>, tag: &str) -> Option<KnownSolutionSet> {
    Some(KnownSolutionSet {
        has_solution: true,
        minimal_norm_y: Some(Vector::new(y).expect("catalog metadata")),
        oracle_tag: tag.to_string(),
    })
}

/// The full catalog. Construction is infallible for the built-in entries;
/// the Result surfaces only if an entry is edited into an invalid state.
pub fn catalog() -> Result<Vec<CatalogEntry>> {
    let mut entries = Vec::new();

    entries.push(CatalogEntry {
        name: "affine-1d",
        summary: "B(u) = u - 1",
        monotonicity: "identity matrix is positive definite",
        test_only: false,
        instance: OperatorInstance::new(
            OperatorSpec::Affine {
                matrix: DMatrix::identity(1, 1),
                shift: Vector::new(vec![1.0])?,
            },
            known(vec![1.0], "analytic"),
        )?,
    });

    entries.push(CatalogEntry {
        name: "singular-2d",
        summary: "B(u) = diag(1,0) u - (1,0)",
        monotonicity: "diagonal matrix with nonnegative entries is positive semidefinite",
        test_only: false,
        instance: OperatorInstance::new(
            OperatorSpec::Affine {
                matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
                shift: Vector::new(vec![1.0, 0.0])?,
            },
            // Solution set is {(1, t)}; (1, 0) is its minimal-norm member.
            known(vec![1.0, 0.0], "analytic"),
        )?,
    });

    entries.push(CatalogEntry {
        name: "relu-1d",
        summary: "B(u) = u + relu(u) - 1.5",
        monotonicity: "sum of nondecreasing scalar maps",
        test_only: false,
        instance: OperatorInstance::new(
            OperatorSpec::Componentwise {
                maps: vec![ScalarMap::IdentityPlusRelu],
                shift: Some(Vector::new(vec![1.5])?),
            },
            known(vec![0.75], "analytic"),
        )?,
    });

    entries.push(CatalogEntry {
        name: "exp-1d",
        summary: "B(u) = e^u - 2",
        monotonicity: "e^u is strictly increasing",
        test_only: false,
        instance: OperatorInstance::new(
            OperatorSpec::Exponential {
                dim: 1,
                shift: Some(Vector::new(vec![2.0])?),
            },
            known(vec![2.0_f64.ln()], "analytic (std log)"),
        )?,
    });

    entries.push(CatalogEntry {
        name: "cubic-1d",
        summary: "B(u) = u^3 - 8",
        monotonicity: "u^3 is nondecreasing",
        test_only: false,
        instance: OperatorInstance::new(
            OperatorSpec::Componentwise {
                maps: vec![ScalarMap::Cube],
                shift: Some(Vector::new(vec![8.0])?),
            },
            known(vec![2.0], "analytic"),
        )?,
    });

    // y = (0.5, -0.5) was chosen first and the shift back-solved so that
    // A y + relu(y) - f = 0 holds exactly in f64 arithmetic.
    entries.push(CatalogEntry {
        name: "composite-2d",
        summary: "B(u) = [[2,1],[1,2]] u + relu(u) - (1, -0.5)",
        monotonicity: "positive definite matrix plus nondecreasing coordinates",
        test_only: false,
        instance: OperatorInstance::new(
            OperatorSpec::Composite {
                parts: vec![
                    OperatorSpec::Linear {
                        matrix: DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
                    },
                    OperatorSpec::Componentwise {
                        maps: vec![ScalarMap::Relu, ScalarMap::Relu],
                        shift: Some(Vector::new(vec![1.0, -0.5])?),
                    },
                ],
            },
            // Strict monotonicity (positive definite part) makes the root
            // unique, so it is trivially the minimal-norm solution.
            known(vec![0.5, -0.5], "constructed"),
        )?,
    });

    entries.push(CatalogEntry {
        name: "exp-unsolvable-1d",
        summary: "B(u) = e^u (no root: e^u > 0 for all u)",
        monotonicity: "e^u is strictly increasing",
        test_only: false,
        instance: OperatorInstance::new(
            OperatorSpec::Exponential { dim: 1, shift: None },
            Some(KnownSolutionSet {
                has_solution: false,
                minimal_norm_y: None,
                oracle_tag: "range-certified (bisection oracle)".to_string(),
            }),
        )?,
    });

    entries.push(CatalogEntry {
        name: "non-monotone-fixture",
        summary: "B(u) = -2u (test fixture, violates monotonicity)",
        monotonicity: "NOT monotone: (B(u)-B(v), u-v) = -2||u-v||^2",
        test_only: true,
        instance: OperatorInstance::new_unvalidated(OperatorSpec::Linear {
            matrix: DMatrix::from_row_slice(1, 1, &[-2.0]),
        })?,
    });

    Ok(entries)
}

pub fn find(name: &str) -> Result<Option<CatalogEntry>> {
    Ok(catalog()?.into_iter().find(|e| e.name == name))
}

/// Entries suitable for default experiment sweeps: monotone and known to
/// have a solution.
pub fn solvable() -> Result<Vec<CatalogEntry>> {
    Ok(catalog()?
        .into_iter()
        .filter(|e| {
            !e.test_only
                && e.instance
                    .known_solution_set
                    .as_ref()
                    .is_some_and(|k| k.has_solution)
        })
        .collect())
}

/// Monotone entries, including the unsolvable one.
pub fn monotone() -> Result<Vec<CatalogEntry>> {
    Ok(catalog()?.into_iter().filter(|e| !e.test_only).collect())
}
