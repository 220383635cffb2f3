//! Declarative experiment configs: TOML with strict unknown-key rejection,
//! so a typo in a tolerance is a parse error, not a silently ignored field.

use crate::catalog;
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::integrator::{IntegratorConfig, Method, StopCriteria};
use crate::operator::{KnownSolutionSet, OperatorInstance, OperatorSpec, ScalarMap};
use crate::oracle::{minimal_norm_oracle, OracleOutcome};
use crate::schedule::EpsilonSchedule;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    run_id: String,
    output_dir: Option<String>,
    operator: RawOperator,
    schedule: Option<RawSchedule>,
    initial: Option<RawInitial>,
    integrator: Option<RawIntegrator>,
    stop: Option<RawStop>,
    #[serde(default)]
    checks: Vec<RawCheck>,
    peano: Option<RawPeano>,
    probe: Option<RawProbe>,
}

/// Either a catalog reference (`catalog = "name"`) or an inline definition
/// (`family = "affine"` plus its parameters).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    catalog: Option<String>,
    family: Option<String>,
    matrix: Option<Vec<Vec<f64>>>,
    shift: Option<Vec<f64>>,
    maps: Option<Vec<String>>,
    dim: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawSchedule {
    Constant {
        eps: f64,
    },
    PowerLaw {
        c0: Option<f64>,
        c1: Option<f64>,
        b: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    preset: Option<String>,
    values: Option<Vec<f64>>,
    seed: Option<u64>,
    radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    method: Option<String>,
    dt: Option<f64>,
    safety: Option<f64>,
    local_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStop {
    residual_tol: Option<f64>,
    divergence_bound: Option<f64>,
    t_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    name: String,
    tol: Option<f64>,
    h: Option<f64>,
    window: Option<f64>,
    offset: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPeano {
    gap_tol: Option<f64>,
    agreement_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    samples: Option<u32>,
    radius: Option<f64>,
    seed: Option<u64>,
}

/// One requested diagnostic, with its effective parameters filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckRequest {
    /// `h = None` runs the default shift offsets.
    ShiftDecay { h: Option<f64>, tol: f64 },
    DerivativeDecay { tol: f64 },
    NormBound { tol: f64 },
    Boundedness { tol: f64 },
    /// `window = None` defaults to t_max / 10 at run time.
    ResidualVanishes { window: Option<f64>, level: f64 },
    Contraction { offset: f64, tol: f64 },
    RegpathConvergence { final_tol: f64 },
}

impl CheckRequest {
    pub fn name(&self) -> &'static str {
        match self {
            CheckRequest::ShiftDecay { .. } => "shift-decay",
            CheckRequest::DerivativeDecay { .. } => "derivative-decay",
            CheckRequest::NormBound { .. } => "norm-bound",
            CheckRequest::Boundedness { .. } => "boundedness",
            CheckRequest::ResidualVanishes { .. } => "residual-vanishes",
            CheckRequest::Contraction { .. } => "contraction",
            CheckRequest::RegpathConvergence { .. } => "regpath-convergence",
        }
    }

    pub fn tolerance(&self) -> f64 {
        match *self {
            CheckRequest::ShiftDecay { tol, .. }
            | CheckRequest::DerivativeDecay { tol }
            | CheckRequest::NormBound { tol }
            | CheckRequest::Boundedness { tol }
            | CheckRequest::Contraction { tol, .. } => tol,
            CheckRequest::ResidualVanishes { level, .. } => level,
            CheckRequest::RegpathConvergence { final_tol } => final_tol,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PeanoSettings {
    pub gap_tol: f64,
    pub agreement_tol: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeSettings {
    pub samples: u32,
    pub radius: f64,
    pub seed: u64,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    /// Overrides stop.residual_tol.
    pub tol: Option<f64>,
}

/// A parsed and validated experiment: every field is ready to execute.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub output_dir: PathBuf,
    pub operator: OperatorInstance,
    /// Catalog name or "inline:<family>".
    pub operator_label: String,
    pub schedule: EpsilonSchedule,
    /// True when the schedule section was absent or partially defaulted;
    /// surfaced in the summary so defaulted runs are recognizable.
    pub schedule_defaulted: bool,
    pub initial: Vector,
    pub integrator: IntegratorConfig,
    pub stop: StopCriteria,
    pub checks: Vec<CheckRequest>,
    pub peano: PeanoSettings,
    pub probe: ProbeSettings,
}

pub fn parse_config(text: &str, overrides: &CliOverrides) -> Result<ExperimentConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
    build(raw, overrides)
}

fn build(raw: RawConfig, overrides: &CliOverrides) -> Result<ExperimentConfig> {
    validate_run_id(&raw.run_id)?;
    let output_dir = overrides
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(raw.output_dir.as_deref().unwrap_or("runs")));

    let (operator, operator_label) = build_operator(raw.operator)?;
    let (schedule, schedule_defaulted) = build_schedule(raw.schedule)?;
    let initial = build_initial(raw.initial, operator.dimension)?;
    let integrator = build_integrator(raw.integrator, overrides)?;
    let stop = build_stop(raw.stop, overrides)?;
    let checks = raw
        .checks
        .into_iter()
        .map(build_check)
        .collect::<Result<Vec<_>>>()?;

    let peano = PeanoSettings {
        gap_tol: raw.peano.as_ref().and_then(|p| p.gap_tol).unwrap_or(1e-3),
        agreement_tol: raw
            .peano
            .as_ref()
            .and_then(|p| p.agreement_tol)
            .unwrap_or(1e-2),
    };
    if !(peano.gap_tol > 0.0 && peano.agreement_tol > 0.0) {
        return Err(Error::Config("[peano] tolerances must be > 0".into()));
    }
    let probe = ProbeSettings {
        samples: raw.probe.as_ref().and_then(|p| p.samples).unwrap_or(200),
        radius: raw.probe.as_ref().and_then(|p| p.radius).unwrap_or(10.0),
        seed: raw.probe.as_ref().and_then(|p| p.seed).unwrap_or(0),
    };

    Ok(ExperimentConfig {
        run_id: raw.run_id,
        output_dir,
        operator,
        operator_label,
        schedule,
        schedule_defaulted,
        initial,
        integrator,
        stop,
        checks,
        peano,
        probe,
    })
}

fn validate_run_id(run_id: &str) -> Result<()> {
    let ok = !run_id.is_empty()
        && run_id.len() <= 128
        && run_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && run_id != "."
        && run_id != "..";
    if !ok {
        return Err(Error::Config(format!(
            "run_id {run_id:?} must be nonempty and use only [A-Za-z0-9._-]"
        )));
    }
    Ok(())
}

fn build_operator(raw: RawOperator) -> Result<(OperatorInstance, String)> {
    match (raw.catalog.clone(), raw.family.clone()) {
        (Some(name), None) => {
            if raw.matrix.is_some() || raw.shift.is_some() || raw.maps.is_some() || raw.dim.is_some()
            {
                return Err(Error::Config(
                    "[operator] a catalog reference takes no inline parameters".into(),
                ));
            }
            let entry = catalog::find(&name)?.ok_or_else(|| {
                Error::Config(format!(
                    "unknown catalog operator {name:?}; run `dsm list-operators`"
                ))
            })?;
            Ok((entry.instance, name))
        }
        (None, Some(family)) => build_inline_operator(&family, raw),
        _ => Err(Error::Config(
            "[operator] needs exactly one of `catalog` or `family`".into(),
        )),
    }
}

fn build_inline_operator(family: &str, raw: RawOperator) -> Result<(OperatorInstance, String)> {
    let forbid = |field: Option<bool>, what: &str| -> Result<()> {
        if field == Some(true) {
            return Err(Error::Config(format!(
                "[operator] family {family:?} does not take `{what}`"
            )));
        }
        Ok(())
    };
    let spec = match family {
        "linear" => {
            forbid(Some(raw.shift.is_some()), "shift")?;
            forbid(Some(raw.maps.is_some()), "maps")?;
            forbid(Some(raw.dim.is_some()), "dim")?;
            OperatorSpec::Linear {
                matrix: build_matrix(raw.matrix)?,
            }
        }
        "affine" => {
            forbid(Some(raw.maps.is_some()), "maps")?;
            forbid(Some(raw.dim.is_some()), "dim")?;
            let matrix = build_matrix(raw.matrix)?;
            let shift = raw
                .shift
                .ok_or_else(|| Error::Config("[operator] affine requires `shift`".into()))?;
            OperatorSpec::Affine {
                matrix,
                shift: Vector::new(shift).map_err(|e| Error::Config(e.to_string()))?,
            }
        }
        "componentwise" => {
            forbid(Some(raw.matrix.is_some()), "matrix")?;
            forbid(Some(raw.dim.is_some()), "dim")?;
            let names = raw
                .maps
                .ok_or_else(|| Error::Config("[operator] componentwise requires `maps`".into()))?;
            let maps = names
                .iter()
                .map(|s| parse_scalar_map(s))
                .collect::<Result<Vec<_>>>()?;
            let shift = raw
                .shift
                .map(|s| Vector::new(s).map_err(|e| Error::Config(e.to_string())))
                .transpose()?;
            OperatorSpec::Componentwise { maps, shift }
        }
        "exponential" => {
            forbid(Some(raw.matrix.is_some()), "matrix")?;
            forbid(Some(raw.maps.is_some()), "maps")?;
            let dim = raw
                .dim
                .ok_or_else(|| Error::Config("[operator] exponential requires `dim`".into()))?;
            let shift = raw
                .shift
                .map(|s| Vector::new(s).map_err(|e| Error::Config(e.to_string())))
                .transpose()?;
            OperatorSpec::Exponential { dim, shift }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown operator family {other:?}; expected linear, affine, componentwise, or exponential (composites are catalog-only)"
            )))
        }
    };
    // Inline operators get their solution metadata from the oracle, so
    // norm-bound and boundedness checks work without catalog entries.
    let probe_instance = OperatorInstance::new(spec.clone(), None)?;
    let known = match minimal_norm_oracle(&probe_instance)? {
        OracleOutcome::MinimalNorm(y) => Some(KnownSolutionSet {
            has_solution: true,
            minimal_norm_y: Some(y),
            oracle_tag: "oracle".to_string(),
        }),
        OracleOutcome::NoSolution => Some(KnownSolutionSet {
            has_solution: false,
            minimal_norm_y: None,
            oracle_tag: "range-certified (oracle)".to_string(),
        }),
        OracleOutcome::NoOracle => None,
    };
    let instance = OperatorInstance::new(spec, known)?;
    Ok((instance, format!("inline:{family}")))
}

fn build_matrix(rows: Option<Vec<Vec<f64>>>) -> Result<DMatrix<f64>> {
    let rows = rows.ok_or_else(|| Error::Config("[operator] requires `matrix`".into()))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(
            "[operator] matrix must be square and nonempty".into(),
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("[operator] matrix entries must be finite".into()));
    }
    Ok(DMatrix::from_row_iterator(
        n,
        n,
        rows.into_iter().flatten(),
    ))
}

fn parse_scalar_map(name: &str) -> Result<ScalarMap> {
    match name {
        "identity" => Ok(ScalarMap::Identity),
        "relu" => Ok(ScalarMap::Relu),
        "identity-plus-relu" => Ok(ScalarMap::IdentityPlusRelu),
        "exp" => Ok(ScalarMap::Exp),
        "cube" => Ok(ScalarMap::Cube),
        other => Err(Error::Config(format!(
            "unknown scalar map {other:?}; expected identity, relu, identity-plus-relu, exp, or cube"
        ))),
    }
}

fn build_schedule(raw: Option<RawSchedule>) -> Result<(EpsilonSchedule, bool)> {
    match raw {
        None => Ok((EpsilonSchedule::power_law(1.0, 1.0, 0.5)?, true)),
        Some(RawSchedule::Constant { eps }) => Ok((EpsilonSchedule::constant(eps)?, false)),
        Some(RawSchedule::PowerLaw { c0, c1, b }) => {
            let defaulted = c0.is_none() || c1.is_none() || b.is_none();
            let schedule = EpsilonSchedule::power_law(
                c0.unwrap_or(1.0),
                c1.unwrap_or(1.0),
                b.unwrap_or(0.5),
            )?;
            Ok((schedule, defaulted))
        }
    }
}

fn build_initial(raw: Option<RawInitial>, dim: usize) -> Result<Vector> {
    let raw = raw.unwrap_or(RawInitial {
        preset: Some("zero".to_string()),
        values: None,
        seed: None,
        radius: None,
    });
    match (&raw.preset, &raw.values) {
        (Some(preset), None) => {
            if preset != "random" && (raw.seed.is_some() || raw.radius.is_some()) {
                return Err(Error::Config(
                    "[initial] `seed` and `radius` only apply to preset \"random\"".into(),
                ));
            }
            match preset.as_str() {
                "zero" => Vector::zeros(dim),
                "ones" => Vector::ones(dim),
                "random" => {
                    let seed = raw.seed.ok_or_else(|| {
                        Error::Config("[initial] preset \"random\" requires `seed`".into())
                    })?;
                    let radius = raw.radius.unwrap_or(1.0);
                    if !(radius.is_finite() && radius > 0.0) {
                        return Err(Error::Config("[initial] radius must be > 0".into()));
                    }
                    let mut rng = ChaCha12Rng::seed_from_u64(seed);
                    Vector::new((0..dim).map(|_| rng.gen_range(-radius..=radius)).collect())
                }
                other => Err(Error::Config(format!(
                    "unknown initial preset {other:?}; expected zero, ones, or random"
                ))),
            }
        }
        (None, Some(values)) => {
            if raw.seed.is_some() || raw.radius.is_some() {
                return Err(Error::Config(
                    "[initial] `seed` and `radius` only apply to preset \"random\"".into(),
                ));
            }
            if values.len() != dim {
                return Err(Error::Config(format!(
                    "[initial] values has length {}, operator dimension is {dim}",
                    values.len()
                )));
            }
            Vector::new(values.clone())
        }
        _ => Err(Error::Config(
            "[initial] needs exactly one of `preset` or `values`".into(),
        )),
    }
}

fn build_integrator(raw: Option<RawIntegrator>, overrides: &CliOverrides) -> Result<IntegratorConfig> {
    let raw = raw.unwrap_or(RawIntegrator {
        method: None,
        dt: None,
        safety: None,
        local_tol: None,
    });
    let method = match raw.method.as_deref() {
        None => Method::Rk4,
        Some(name) => Method::parse(name)?,
    };
    let mut cfg = IntegratorConfig::new(method, overrides.dt.or(raw.dt).unwrap_or(0.01))?;
    if let Some(s) = raw.safety {
        cfg.safety = s;
    }
    if let Some(lt) = raw.local_tol {
        cfg.local_tol = lt;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn build_stop(raw: Option<RawStop>, overrides: &CliOverrides) -> Result<StopCriteria> {
    let raw = raw.unwrap_or(RawStop {
        residual_tol: None,
        divergence_bound: None,
        t_max: None,
    });
    StopCriteria::new(
        overrides.tol.or(raw.residual_tol).unwrap_or(1e-8),
        raw.divergence_bound.unwrap_or(1e6),
        overrides.t_max.or(raw.t_max).unwrap_or(100.0),
    )
}

fn build_check(raw: RawCheck) -> Result<CheckRequest> {
    let forbid = |present: bool, what: &str| -> Result<()> {
        if present {
            return Err(Error::Config(format!(
                "check {:?} does not take `{what}`",
                raw.name
            )));
        }
        Ok(())
    };
    let tol_or = |default: f64| -> Result<f64> {
        let tol = raw.tol.unwrap_or(default);
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Config(format!(
                "check {:?}: tol must be > 0, got {tol}",
                raw.name
            )));
        }
        Ok(tol)
    };
    match raw.name.as_str() {
        "shift-decay" => {
            forbid(raw.window.is_some(), "window")?;
            forbid(raw.offset.is_some(), "offset")?;
            if let Some(h) = raw.h {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::Config(format!("check shift-decay: h must be > 0, got {h}")));
                }
            }
            Ok(CheckRequest::ShiftDecay {
                h: raw.h,
                tol: tol_or(diagnostics::DEFAULT_DECAY_TOL)?,
            })
        }
        "derivative-decay" => {
            forbid(raw.h.is_some(), "h")?;
            forbid(raw.window.is_some(), "window")?;
            forbid(raw.offset.is_some(), "offset")?;
            Ok(CheckRequest::DerivativeDecay {
                tol: tol_or(diagnostics::DEFAULT_DECAY_TOL)?,
            })
        }
        "norm-bound" => {
            forbid(raw.h.is_some(), "h")?;
            forbid(raw.window.is_some(), "window")?;
            forbid(raw.offset.is_some(), "offset")?;
            Ok(CheckRequest::NormBound {
                tol: tol_or(diagnostics::DEFAULT_DECAY_TOL)?,
            })
        }
        "boundedness" => {
            forbid(raw.h.is_some(), "h")?;
            forbid(raw.window.is_some(), "window")?;
            forbid(raw.offset.is_some(), "offset")?;
            Ok(CheckRequest::Boundedness {
                tol: tol_or(diagnostics::DEFAULT_DECAY_TOL)?,
            })
        }
        "residual-vanishes" => {
            forbid(raw.h.is_some(), "h")?;
            forbid(raw.offset.is_some(), "offset")?;
            if let Some(w) = raw.window {
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::Config(format!(
                        "check residual-vanishes: window must be > 0, got {w}"
                    )));
                }
            }
            Ok(CheckRequest::ResidualVanishes {
                window: raw.window,
                level: tol_or(diagnostics::DEFAULT_RESIDUAL_LEVEL)?,
            })
        }
        "contraction" => {
            forbid(raw.h.is_some(), "h")?;
            forbid(raw.window.is_some(), "window")?;
            let offset = raw.offset.unwrap_or(5.0);
            if !(offset.is_finite() && offset != 0.0) {
                return Err(Error::Config(format!(
                    "check contraction: offset must be nonzero and finite, got {offset}"
                )));
            }
            Ok(CheckRequest::Contraction {
                offset,
                tol: tol_or(diagnostics::DEFAULT_DECAY_TOL)?,
            })
        }
        "regpath-convergence" => {
            forbid(raw.h.is_some(), "h")?;
            forbid(raw.window.is_some(), "window")?;
            forbid(raw.offset.is_some(), "offset")?;
            Ok(CheckRequest::RegpathConvergence {
                final_tol: tol_or(diagnostics::DEFAULT_FINAL_TOL)?,
            })
        }
        other => Err(Error::Config(format!(
            "unknown check {other:?}; expected shift-decay, derivative-decay, norm-bound, \
             boundedness, residual-vanishes, contraction, or regpath-convergence"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
run_id = "demo"

[operator]
catalog = "affine-1d"

[schedule]
kind = "constant"
eps = 0.1
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(MINIMAL, &CliOverrides::default()).unwrap();
        assert_eq!(cfg.run_id, "demo");
        assert_eq!(cfg.operator_label, "affine-1d");
        assert_eq!(cfg.operator.dimension, 1);
        assert!(cfg.schedule.is_constant());
        assert!(!cfg.schedule_defaulted);
        assert_eq!(cfg.initial.as_slice(), &[0.0]);
        assert_eq!(cfg.integrator.dt, 0.01);
        assert_eq!(cfg.stop.t_max, 100.0);
        assert!(cfg.checks.is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("eps = 0.1", "eps = 0.1\nepss = 0.2");
        let err = parse_config(&text, &CliOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("epss"), "{err}");
    }

    #[test]
    fn unknown_check_name_is_rejected() {
        let text = format!("{MINIMAL}\n[[checks]]\nname = \"shift-decai\"\n");
        let err = parse_config(&text, &CliOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("shift-decai"), "{err}");
    }

    #[test]
    fn check_parameter_mismatch_is_rejected() {
        let text = format!("{MINIMAL}\n[[checks]]\nname = \"derivative-decay\"\nh = 0.5\n");
        let err = parse_config(&text, &CliOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("does not take `h`"), "{err}");
    }

    #[test]
    fn overrides_replace_config_values() {
        let ov = CliOverrides {
            out: Some(PathBuf::from("/tmp/elsewhere")),
            dt: Some(0.5),
            t_max: Some(7.0),
            tol: Some(1e-3),
        };
        let cfg = parse_config(MINIMAL, &ov).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/elsewhere"));
        assert_eq!(cfg.integrator.dt, 0.5);
        assert_eq!(cfg.stop.t_max, 7.0);
        assert_eq!(cfg.stop.residual_tol, 1e-3);
    }

    #[test]
    fn inline_affine_gets_oracle_metadata() {
        let text = r#"
run_id = "inline"

[operator]
family = "affine"
matrix = [[2.0, 0.0], [0.0, 1.0]]
shift = [2.0, 3.0]
"#;
        let cfg = parse_config(text, &CliOverrides::default()).unwrap();
        assert_eq!(cfg.operator_label, "inline:affine");
        let y = cfg.operator.known_y().unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && (y[1] - 3.0).abs() < 1e-9);
        // Schedule section absent: power-law defaults, flagged.
        assert!(cfg.schedule_defaulted);
        assert!(!cfg.schedule.is_constant());
    }

    #[test]
    fn inline_non_monotone_matrix_is_rejected() {
        let text = r#"
run_id = "bad"

[operator]
family = "linear"
matrix = [[-2.0]]
"#;
        assert!(parse_config(text, &CliOverrides::default()).is_err());
    }

    #[test]
    fn initial_values_must_match_dimension() {
        let text = MINIMAL.replace(
            "[schedule]",
            "[initial]\nvalues = [1.0, 2.0]\n\n[schedule]",
        );
        let err = parse_config(&text, &CliOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("dimension"), "{err}");
    }

    #[test]
    fn random_initial_is_seed_reproducible() {
        let mk = |seed: u64| {
            let text = format!(
                "run_id = \"r\"\n[operator]\ncatalog = \"singular-2d\"\n[initial]\npreset = \"random\"\nseed = {seed}\nradius = 2.0\n"
            );
            parse_config(&text, &CliOverrides::default())
                .unwrap()
                .initial
        };
        assert_eq!(mk(7).as_slice(), mk(7).as_slice());
        assert_ne!(mk(7).as_slice(), mk(8).as_slice());
        assert!(mk(7).iter().all(|v| v.abs() <= 2.0));
    }

    #[test]
    fn bad_run_ids_are_rejected() {
        for bad in ["", "a/b", "..", "x y"] {
            let text = MINIMAL.replace("run_id = \"demo\"", &format!("run_id = {bad:?}"));
            assert!(
                parse_config(&text, &CliOverrides::default()).is_err(),
                "{bad:?} accepted"
            );
        }
    }
}
