//! Independent minimal-norm solution oracles, used to cross-check the flow
//! solver. Linear and affine families go through a direct least-squares
//! solve; componentwise families use per-coordinate bisection on the
//! nondecreasing scalar map. Composite operators have no oracle.

use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::operator::{OperatorInstance, OperatorSpec, ScalarMap};
use nalgebra::{DMatrix, DVector};

/// Residual guarantee for oracle outputs: ||B(y)|| stays below this.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-10;

/// Interval width at which per-coordinate bisection stops.
pub const BISECTION_TOL: f64 = 1e-12;

/// Result of asking a family oracle for the minimal-norm solution of B(u)=0.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    /// The minimal-norm element of the solution set.
    MinimalNorm(Vector),
    /// The oracle certifies the equation has no solution.
    NoSolution,
    /// The family has no independent oracle.
    NoOracle,
}

/// Computes the minimal-norm solution of B(u)=0 when the operator family
/// admits an independent oracle.
pub fn minimal_norm_oracle(op: &OperatorInstance) -> Result<OracleOutcome> {
    match &op.spec {
        // A u = 0 always admits u = 0, which has minimal norm in any set.
        OperatorSpec::Linear { matrix } => {
            Ok(OracleOutcome::MinimalNorm(Vector::zeros(matrix.nrows())?))
        }
        OperatorSpec::Affine { matrix, shift } => affine_oracle(matrix, shift),
        OperatorSpec::Componentwise { maps, shift } => {
            componentwise_oracle(maps, shift.as_ref())
        }
        OperatorSpec::Exponential { dim, shift } => {
            let maps = vec![ScalarMap::Exp; *dim];
            componentwise_oracle(&maps, shift.as_ref())
        }
        OperatorSpec::Composite { .. } => Ok(OracleOutcome::NoOracle),
    }
}

/// Minimal-norm least squares via SVD; inconsistent systems are reported as
/// unsolvable rather than returned as least-squares fits.
fn affine_oracle(matrix: &DMatrix<f64>, shift: &Vector) -> Result<OracleOutcome> {
    let f = DVector::from_column_slice(shift.as_slice());
    let svd = matrix.clone().svd(true, true);
    let cutoff = 1e-12
        * svd
            .singular_values
            .iter()
            .fold(0.0_f64, |m, s| m.max(*s))
            .max(1.0);
    let y = svd
        .solve(&f, cutoff)
        .map_err(|e| Error::InvalidParameter(format!("least-squares solve failed: {e}")))?;
    let residual = (matrix * &y - &f).norm();
    if residual > ORACLE_RESIDUAL_TOL * (1.0 + f.norm()) {
        return Ok(OracleOutcome::NoSolution);
    }
    Ok(OracleOutcome::MinimalNorm(Vector::new(
        y.iter().copied().collect(),
    )?))
}

fn componentwise_oracle(maps: &[ScalarMap], shift: Option<&Vector>) -> Result<OracleOutcome> {
    let mut y = Vec::with_capacity(maps.len());
    for (i, map) in maps.iter().enumerate() {
        let target = shift.map_or(0.0, |f| f[i]);
        match scalar_min_norm_root(*map, target)? {
            Some(x) => y.push(x),
            None => return Ok(OracleOutcome::NoSolution),
        }
    }
    Ok(OracleOutcome::MinimalNorm(Vector::new(y)?))
}

/// Smallest-|x| solution of map(x) = target, or None when the target lies
/// outside the map's range. The map is nondecreasing, so the solution set is
/// an interval and its minimal-norm point is the endpoint nearest zero.
fn scalar_min_norm_root(map: ScalarMap, target: f64) -> Result<Option<f64>> {
    let (lower, lower_attained, _upper) = map.range();
    if target < lower || (target == lower && !lower_attained) {
        return Ok(None);
    }
    let at_zero = map.eval(0.0);
    if target == at_zero {
        return Ok(Some(0.0));
    }
    if target > at_zero {
        // Leftmost x > 0 with map(x) >= target.
        let mut hi = 1.0;
        while map.eval(hi) < target {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::InvalidParameter(format!(
                    "bisection bracket overflow for {} = {target}",
                    map.name()
                )));
            }
        }
        let mut lo = 0.0;
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if map.eval(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    } else {
        // Rightmost x < 0 with map(x) <= target.
        let mut lo = -1.0;
        while map.eval(lo) > target {
            lo *= 2.0;
            if lo < -1e300 {
                return Err(Error::InvalidParameter(format!(
                    "bisection bracket overflow for {} = {target}",
                    map.name()
                )));
            }
        }
        let mut hi = 0.0;
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if map.eval(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(lo))
    }
}
