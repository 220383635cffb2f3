//! Monotone operator families and the sampled monotonicity probe.
//!
//! Monotonicity is enforced by construction: linear and affine maps must have
//! a positive semidefinite symmetric part, and componentwise maps come from a
//! fixed catalog of nondecreasing scalar functions. The probe spot-checks the
//! defining inequality (B(u)-B(v), u-v) >= 0 on seeded random pairs; it is the
//! only runtime check, since monotonicity is not decidable from samples.

use crate::error::{Error, Result};
use crate::hilbert::Vector;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Relative floor for the smallest eigenvalue of a symmetric part.
const PSD_TOL: f64 = 1e-10;

/// Nondecreasing scalar maps available per coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarMap {
    /// x
    Identity,
    /// max(x, 0)
    Relu,
    /// x + max(x, 0)
    IdentityPlusRelu,
    /// e^x
    Exp,
    /// x^3
    Cube,
}

impl ScalarMap {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ScalarMap::Identity => x,
            ScalarMap::Relu => x.max(0.0),
            ScalarMap::IdentityPlusRelu => x + x.max(0.0),
            ScalarMap::Exp => x.exp(),
            ScalarMap::Cube => x * x * x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarMap::Identity => "identity",
            ScalarMap::Relu => "relu",
            ScalarMap::IdentityPlusRelu => "identity+relu",
            ScalarMap::Exp => "exp",
            ScalarMap::Cube => "cube",
        }
    }

    /// Closure of the map's range together with attainability of the
    /// lower endpoint. Used by the root oracle to certify unsolvability.
    pub(crate) fn range(self) -> (f64, bool, f64) {
        // (lower, lower_attained, upper); upper is never attained for finite x
        // except +inf which no finite target equals.
        match self {
            ScalarMap::Identity | ScalarMap::IdentityPlusRelu | ScalarMap::Cube => {
                (f64::NEG_INFINITY, false, f64::INFINITY)
            }
            ScalarMap::Relu => (0.0, true, f64::INFINITY),
            ScalarMap::Exp => (0.0, false, f64::INFINITY),
        }
    }
}

/// Declarative description of a monotone map B: R^n -> R^n.
#[derive(Debug, Clone)]
pub enum OperatorSpec {
    /// B(u) = A u
    Linear { matrix: DMatrix<f64> },
    /// B(u) = A u - f
    Affine { matrix: DMatrix<f64>, shift: Vector },
    /// B(u)_i = map_i(u_i) - f_i
    Componentwise {
        maps: Vec<ScalarMap>,
        shift: Option<Vector>,
    },
    /// B(u)_i = e^{u_i} - f_i
    Exponential { dim: usize, shift: Option<Vector> },
    /// B(u) = sum of the parts; a sum of monotone maps is monotone.
    Composite { parts: Vec<OperatorSpec> },
}

impl OperatorSpec {
    pub fn dimension(&self) -> Result<usize> {
        match self {
            OperatorSpec::Linear { matrix } => Ok(matrix.nrows()),
            OperatorSpec::Affine { matrix, .. } => Ok(matrix.nrows()),
            OperatorSpec::Componentwise { maps, .. } => Ok(maps.len()),
            OperatorSpec::Exponential { dim, .. } => Ok(*dim),
            OperatorSpec::Composite { parts } => parts
                .first()
                .ok_or_else(|| Error::InvalidParameter("composite needs at least one part".into()))?
                .dimension(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            OperatorSpec::Linear { .. } => "linear",
            OperatorSpec::Affine { .. } => "affine",
            OperatorSpec::Componentwise { .. } => "componentwise",
            OperatorSpec::Exponential { .. } => "exponential",
            OperatorSpec::Composite { .. } => "composite",
        }
    }

    /// Structural validation: shapes agree and monotonicity holds by
    /// construction (PSD symmetric part, nondecreasing coordinates).
    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorSpec::Linear { matrix } => validate_matrix(matrix),
            OperatorSpec::Affine { matrix, shift } => {
                validate_matrix(matrix)?;
                if shift.dim() != matrix.nrows() {
                    return Err(Error::DimensionMismatch {
                        expected: matrix.nrows(),
                        got: shift.dim(),
                    });
                }
                Ok(())
            }
            OperatorSpec::Componentwise { maps, shift } => {
                if maps.is_empty() {
                    return Err(Error::InvalidParameter(
                        "componentwise operator needs at least one coordinate".into(),
                    ));
                }
                if let Some(f) = shift {
                    if f.dim() != maps.len() {
                        return Err(Error::DimensionMismatch {
                            expected: maps.len(),
                            got: f.dim(),
                        });
                    }
                }
                Ok(())
            }
            OperatorSpec::Exponential { dim, shift } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter(
                        "exponential operator needs dimension >= 1".into(),
                    ));
                }
                if let Some(f) = shift {
                    if f.dim() != *dim {
                        return Err(Error::DimensionMismatch {
                            expected: *dim,
                            got: f.dim(),
                        });
                    }
                }
                Ok(())
            }
            OperatorSpec::Composite { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidParameter(
                        "composite needs at least one part".into(),
                    ));
                }
                let dim = parts[0].dimension()?;
                for part in parts {
                    part.validate()?;
                    if part.dimension()? != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: part.dimension()?,
                        });
                    }
                }
                Ok(())
            }
        }
    }

    fn apply_into(&self, input: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            OperatorSpec::Linear { matrix } => matvec(matrix, input, out)?,
            OperatorSpec::Affine { matrix, shift } => {
                matvec(matrix, input, out)?;
                for (o, f) in out.iter_mut().zip(shift.iter()) {
                    *o -= f;
                }
            }
            OperatorSpec::Componentwise { maps, shift } => {
                for (i, (o, map)) in out.iter_mut().zip(maps.iter()).enumerate() {
                    *o = map.eval(input[i]);
                }
                if let Some(f) = shift {
                    for (o, fi) in out.iter_mut().zip(f.iter()) {
                        *o -= fi;
                    }
                }
            }
            OperatorSpec::Exponential { shift, .. } => {
                for (o, x) in out.iter_mut().zip(input.iter()) {
                    *o = x.exp();
                }
                if let Some(f) = shift {
                    for (o, fi) in out.iter_mut().zip(f.iter()) {
                        *o -= fi;
                    }
                }
            }
            OperatorSpec::Composite { parts } => {
                let mut scratch = vec![0.0; out.len()];
                out.fill(0.0);
                for part in parts {
                    part.apply_into(input, &mut scratch)?;
                    for (o, s) in out.iter_mut().zip(scratch.iter()) {
                        *o += s;
                    }
                }
            }
        }
        for (coordinate, value) in out.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::EvalOverflow {
                    family: self.family_name(),
                    coordinate,
                    input: input[coordinate],
                });
            }
        }
        Ok(())
    }
}

fn matvec(matrix: &DMatrix<f64>, input: &[f64], out: &mut [f64]) -> Result<()> {
    for i in 0..matrix.nrows() {
        let mut acc = 0.0;
        for (j, x) in input.iter().enumerate() {
            acc += matrix[(i, j)] * x;
        }
        out[i] = acc;
    }
    Ok(())
}

fn validate_matrix(matrix: &DMatrix<f64>) -> Result<()> {
    if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
        return Err(Error::InvalidParameter(format!(
            "operator matrix must be square and nonempty, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "operator matrix has non-finite entries".into(),
        ));
    }
    let sym = (matrix + matrix.transpose()).scale(0.5);
    let eigenvalues = sym.symmetric_eigen().eigenvalues;
    let max_abs = eigenvalues.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let min = eigenvalues.iter().fold(f64::INFINITY, |m, &e| m.min(e));
    if min < -PSD_TOL * max_abs.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "symmetric part has negative eigenvalue {min:.6e}; the map is not monotone"
        )));
    }
    Ok(())
}

/// Metadata about the solution set N = {z : B(z) = 0}.
#[derive(Debug, Clone)]
pub struct KnownSolutionSet {
    pub has_solution: bool,
    /// The unique minimal-norm element of N, when known.
    pub minimal_norm_y: Option<Vector>,
    /// Provenance of `minimal_norm_y` (e.g. "analytic", "bisection", "constructed").
    pub oracle_tag: String,
}

/// A monotone map together with its dimension and optional solution metadata.
#[derive(Debug, Clone)]
pub struct OperatorInstance {
    pub spec: OperatorSpec,
    pub dimension: usize,
    pub known_solution_set: Option<KnownSolutionSet>,
}

impl OperatorInstance {
    /// Builds an instance, enforcing monotonicity by construction.
    pub fn new(spec: OperatorSpec, known_solution_set: Option<KnownSolutionSet>) -> Result<Self> {
        spec.validate()?;
        let dimension = spec.dimension()?;
        Ok(OperatorInstance {
            spec,
            dimension,
            known_solution_set,
        })
    }

    /// Builds an instance without the monotonicity check. Exists so test
    /// fixtures can construct deliberately non-monotone maps and prove the
    /// probe and the decay checks detect them.
    pub fn new_unvalidated(spec: OperatorSpec) -> Result<Self> {
        let dimension = spec.dimension()?;
        Ok(OperatorInstance {
            spec,
            dimension,
            known_solution_set: None,
        })
    }

    /// Evaluates B(u).
    pub fn apply(&self, u: &Vector) -> Result<Vector> {
        if u.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: u.dim(),
            });
        }
        let mut out = vec![0.0; self.dimension];
        self.spec.apply_into(u.as_slice(), &mut out)?;
        Ok(Vector::from_checked(out))
    }

    /// The known minimal-norm solution, if the metadata carries one.
    pub fn known_y(&self) -> Option<&Vector> {
        self.known_solution_set
            .as_ref()
            .and_then(|k| k.minimal_norm_y.as_ref())
    }
}

/// Outcome of the sampled monotonicity check.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub sample_count: u32,
    pub box_radius: f64,
    pub seed: u64,
    /// min over pairs of (B(u)-B(v), u-v).
    pub min_inner: f64,
    /// min over pairs of (B(u)-B(v), u-v) / ||u-v||^2.
    pub min_normalized: f64,
    /// The pair attaining `min_normalized`.
    pub worst_pair: (Vector, Vector),
}

impl ProbeReport {
    /// True when no sampled pair violates monotonicity beyond roundoff.
    pub fn monotone(&self) -> bool {
        self.min_normalized >= -1e-12
    }
}

/// Draws seeded random pairs in the box [-r, r]^n and reports the most
/// monotonicity-violating pair found.
pub fn monotonicity_probe(
    op: &OperatorInstance,
    sample_count: u32,
    box_radius: f64,
    seed: u64,
) -> Result<ProbeReport> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be >= 1".into()));
    }
    if !(box_radius > 0.0) {
        return Err(Error::InvalidParameter("box_radius must be > 0".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dim = op.dimension;
    let draw = |rng: &mut ChaCha12Rng| -> Vector {
        Vector::from_checked(
            (0..dim)
                .map(|_| rng.gen_range(-box_radius..=box_radius))
                .collect(),
        )
    };
    let mut min_inner = f64::INFINITY;
    let mut min_normalized = f64::INFINITY;
    let mut worst_pair = None;
    for _ in 0..sample_count {
        let u = draw(&mut rng);
        let v = draw(&mut rng);
        let diff = u.sub(&v)?;
        let gap_sq = diff.inner(&diff)?;
        if gap_sq == 0.0 {
            continue;
        }
        let pairing = op.apply(&u)?.sub(&op.apply(&v)?)?.inner(&diff)?;
        min_inner = min_inner.min(pairing);
        let normalized = pairing / gap_sq;
        if normalized < min_normalized {
            min_normalized = normalized;
            worst_pair = Some((u, v));
        }
    }
    let worst_pair = worst_pair.ok_or_else(|| {
        Error::InvalidParameter("probe drew no usable pair; increase sample_count".into())
    })?;
    Ok(ProbeReport {
        sample_count,
        box_radius,
        seed,
        min_inner,
        min_normalized,
        worst_pair,
    })
}
