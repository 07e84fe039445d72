//! Link specs in, run reports out.

use std::f64::consts::PI;
use std::io;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::catalog::{catalog_schemas, CatalogEntry, Manifold};
use crate::engine::{EngineConfig, GridOverrides, LinkingReport, Method, Problem, Thresholds, DEFAULT_MAX_LEVEL, DEFAULT_TOL, FD_STEP};
use crate::error::{Error, Result};
use crate::kernel::{KernelEvaluator, KernelMode, MIN_RATIO_ALPHA};
use crate::quadrature::GridIntegrand;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, SerializeDerive, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecMethod {
    Main,
    Corollary,
    JoinFull,
    JoinReduced,
    Oracle,
}

impl SpecMethod {
    pub fn engine_method(self) -> Method {
        match self {
            Self::Main => Method::MainTheorem,
            Self::Corollary => Method::Corollary,
            Self::JoinFull => Method::JoinDegreeFull,
            Self::JoinReduced => Method::JoinDegreeReduced,
            Self::Oracle => Method::GaussOracle,
        }
    }
}

fn default_method() -> SpecMethod {
    SpecMethod::Main
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// The input document of `link`, `convergence` and `oracle`.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub ambient_n: usize,
    #[serde(rename = "K")]
    pub k: CatalogEntry,
    #[serde(rename = "L")]
    pub l: CatalogEntry,
    #[serde(default = "default_method")]
    pub method: SpecMethod,
    #[serde(default)]
    pub grid: GridOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_mode: Option<KernelMode>,
    /// `K` and `L` lie in a common open hemisphere (corollary only).
    #[serde(default, skip_serializing_if = "is_false")]
    pub common_hemisphere: bool,
    /// Default seed for perturbed `fourier_curve` entries without one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Command-line adjustments layered over a spec.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub grid: GridOverrides,
    pub max_level: Option<usize>,
    pub min_alpha: Option<f64>,
    pub seed: Option<u64>,
}

impl LinkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidArgument(format!(
                "malformed link spec at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }

    /// The spec with command-line overrides folded in.
    pub fn with_overrides(&self, o: &Overrides) -> Self {
        let mut s = self.clone();
        if o.tol.is_some() {
            s.tol = o.tol;
        }
        if o.max_level.is_some() {
            s.max_level = o.max_level;
        }
        s.grid.k = o.grid.k.or(s.grid.k);
        s.grid.l = o.grid.l.or(s.grid.l);
        s.grid.u = o.grid.u.or(s.grid.u);
        if let Some(a) = o.min_alpha {
            let mut t = s.thresholds.unwrap_or_default();
            t.min_alpha = a;
            s.thresholds = Some(t);
        }
        if o.seed.is_some() {
            s.seed = o.seed;
        }
        s
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            grid: self.grid,
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            max_level: self.max_level.unwrap_or(DEFAULT_MAX_LEVEL),
            thresholds: self.thresholds.unwrap_or_default(),
            fd_step: FD_STEP,
            kernel_mode: self.kernel_mode,
            common_hemisphere: self.common_hemisphere,
        }
    }

    /// Builds both submanifolds and checks the dimension rules.
    pub fn build(&self) -> Result<(Manifold, Manifold)> {
        let (dk, dl) = (self.k.dim(), self.l.dim());
        if dk + dl + 1 != self.ambient_n {
            return Err(Error::Dimension(format!(
                "dim K + dim L must equal ambient_n - 1 (k + l = n - 1), got {dk} + {dl} with n = {}",
                self.ambient_n
            )));
        }
        if self.method == SpecMethod::Oracle && !(self.ambient_n == 3 && dk == 1 && dl == 1) {
            return Err(Error::Dimension(
                "method oracle needs two curves in S^3 (ambient_n = 3)".into(),
            ));
        }
        let cfg = self.engine_config();
        if !(cfg.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", cfg.tol)));
        }
        Ok((self.k.build(self.ambient_n, self.seed)?, self.l.build(self.ambient_n, self.seed)?))
    }
}

/// Tolerances and grids actually used.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct EffectiveConfig {
    pub tol: f64,
    pub max_level: usize,
    /// Node count of every grid factor at level 0.
    pub base_grid: Vec<usize>,
    pub thresholds: Thresholds,
    pub fd_step: f64,
}

/// The output document.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub spec: LinkSpec,
    pub config: EffectiveConfig,
    pub kernel_mode: Option<KernelMode>,
    /// Projection pole of the oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<Vec<f64>>,
    pub result: LinkingReport,
    /// Only with `--timing`, so that reports stay reproducible otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

impl RunReport {
    /// 0 for an accepted, converged integer; 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.result.accepted && self.result.converged {
            0
        } else {
            2
        }
    }
}

/// Evaluates a (validated) spec with its own method.
pub fn run_spec(spec: &LinkSpec) -> Result<RunReport> {
    let (k, l) = spec.build()?;
    let cfg = spec.engine_config();
    if spec.method == SpecMethod::Oracle {
        let (result, pole) = crate::oracle::oracle_linking(&k, &l, &cfg)?;
        let n = |o: Option<usize>| o.unwrap_or(64);
        return Ok(RunReport {
            version: VERSION.to_string(),
            spec: spec.clone(),
            config: EffectiveConfig {
                tol: cfg.tol,
                max_level: cfg.max_level,
                base_grid: vec![n(cfg.grid.k), n(cfg.grid.l)],
                thresholds: cfg.thresholds,
                fd_step: cfg.fd_step,
            },
            kernel_mode: None,
            pole: Some(pole.into_coords()),
            result,
            wall_time_seconds: None,
        });
    }
    let problem = Problem::new(spec.method.engine_method(), &k, &l, &cfg)?;
    let result = problem.run()?;
    Ok(RunReport {
        version: VERSION.to_string(),
        spec: spec.clone(),
        config: EffectiveConfig {
            tol: cfg.tol,
            max_level: cfg.max_level,
            base_grid: problem.base_grid().shape(),
            thresholds: cfg.thresholds,
            fd_step: cfg.fd_step,
        },
        kernel_mode: problem.kernel_mode(),
        pole: None,
        result,
        wall_time_seconds: None,
    })
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq, SerializeDerive)]
pub struct ConvergenceRow {
    pub level: usize,
    pub nodes: usize,
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Values on the base grid and `levels - 1` successive doublings. Level 0
/// estimates its error against the grid with half the nodes.
pub fn convergence_study(spec: &LinkSpec, levels: usize) -> Result<Vec<ConvergenceRow>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    if spec.method == SpecMethod::Oracle {
        return Err(Error::InvalidArgument(
            "convergence studies cover the main, corollary and join methods".into(),
        ));
    }
    let (k, l) = spec.build()?;
    let cfg = spec.engine_config();
    let problem = Problem::new(spec.method.engine_method(), &k, &l, &cfg)?;
    let mut grid = problem.base_grid();
    let mut previous = problem.integrate_grid(&grid.coarsened())?;
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        let value = problem.integrate_grid(&grid)?;
        let error_estimate = (value - previous).abs();
        rows.push(ConvergenceRow {
            level,
            nodes: grid.total_points(),
            value,
            error_estimate,
            converged: error_estimate < cfg.tol,
        });
        previous = value;
        grid = grid.refined();
    }
    Ok(rows)
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("level,nodes,value,error_estimate,converged\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.level,
            r.nodes,
            fmt_f64(r.value),
            fmt_f64(r.error_estimate),
            r.converged
        ));
    }
    out
}

/// `alpha,phi,kernel_ratio,convolution` on `points` equally spaced angles
/// of `[lo, hi]`.
pub fn phi_table_csv(k: usize, l: usize, lo: f64, hi: f64, points: usize, mode: Option<KernelMode>) -> Result<String> {
    if !(0.0 <= lo && lo <= hi && hi <= PI) {
        return Err(Error::InvalidArgument(format!(
            "alpha range [{lo}, {hi}] must lie in [0, pi]"
        )));
    }
    if points == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    if k + l + 1 > crate::sphere::MAX_AMBIENT - 1 {
        return Err(Error::InvalidArgument(format!(
            "k + l + 1 = {} exceeds the supported ambient dimension",
            k + l + 1
        )));
    }
    let ev = match mode {
        None => KernelEvaluator::new(k, l),
        Some(m) => KernelEvaluator::with_mode(k, l, m, 16)?,
    };
    let mut out = String::from("alpha,phi,kernel_ratio,convolution\n");
    for i in 0..points {
        let alpha = if points == 1 {
            lo
        } else if i + 1 == points {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (points - 1) as f64
        };
        let ratio = if alpha < MIN_RATIO_ALPHA {
            f64::INFINITY
        } else {
            ev.ratio(alpha)?
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(alpha),
            fmt_f64(ev.phi(alpha)?),
            fmt_f64(ratio),
            fmt_f64(ev.convolution(alpha)?)
        ));
    }
    Ok(out)
}

pub fn catalog_text() -> String {
    let mut out = String::new();
    for s in catalog_schemas() {
        out.push_str(&format!("{}: {}\n", s.kind, s.description));
        for p in &s.parameters {
            out.push_str(&format!("  {} ({}): {}\n", p.name, p.ty, p.description));
        }
    }
    out
}

/// Pretty JSON with every float at 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format!("{v:.16e}").as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializable report");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8 json")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"{
        "ambient_n": 3,
        "K": {"kind": "great_subsphere", "k": 1, "axes": [0, 1]},
        "L": {"kind": "great_subsphere", "k": 1, "axes": [2, 3]},
        "method": "main"
    }"#;

    #[test]
    fn report_round_trips_the_spec() {
        let spec = LinkSpec::from_json(SPEC).unwrap();
        let rep = run_spec(&spec).unwrap();
        assert_eq!(rep.result.nearest_integer, 1);
        assert_eq!(rep.exit_code(), 0);
        let back: RunReport = serde_json::from_str(&to_json(&rep)).unwrap();
        assert_eq!(back.spec, spec);
        assert_eq!(back, rep);
    }

    #[test]
    fn floats_keep_17_digits() {
        let s = to_json(&vec![0.1f64, 1.0 / 3.0, -2.5e-300]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.3333333333333331e-1"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, -2.5e-300]);
    }

    #[test]
    fn malformed_json_names_the_position() {
        let err = LinkSpec::from_json("{\n  \"ambient_n\": 3,\n  oops\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn dimension_rule_is_cited() {
        let bad = SPEC.replace("\"ambient_n\": 3", "\"ambient_n\": 4");
        let err = LinkSpec::from_json(&bad).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("k + l = n - 1"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let spec = LinkSpec::from_json(SPEC).unwrap().with_overrides(&Overrides {
            tol: Some(1e-3),
            grid: GridOverrides {
                k: Some(8),
                ..GridOverrides::default()
            },
            min_alpha: Some(0.2),
            ..Overrides::default()
        });
        let cfg = spec.engine_config();
        assert_eq!((cfg.tol, cfg.grid.k, cfg.thresholds.min_alpha), (1e-3, Some(8), 0.2));
        assert_eq!(cfg.thresholds.max_residual, 0.25);
    }

    #[test]
    fn phi_table_rows() {
        let csv = phi_table_csv(1, 1, 0.0, PI, 257, None).unwrap();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .skip(1)
            .map(|r| r.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 257);
        assert_eq!(rows[128][0], PI / 2.0);
        assert!((rows[128][1] - 0.5).abs() < 1e-15);
        assert_eq!(rows[256][1], 0.0);
        for r in &rows {
            assert!((r[3] + 0.5 * PI * r[0].cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn convergence_levels() {
        let spec = LinkSpec::from_json(SPEC).unwrap();
        let rows = convergence_study(&spec, 1).unwrap();
        assert_eq!(rows.len(), 1);
        let base = Problem::new(Method::MainTheorem, &spec.build().unwrap().0, &spec.build().unwrap().1, &spec.engine_config())
            .unwrap();
        assert_eq!(rows[0].value, base.integrate_grid(&base.base_grid()).unwrap());
    }
}
