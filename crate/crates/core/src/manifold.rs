//! Manifold definition files, validation, and the built-in catalog.
//!
//! Definitions are TOML with expression strings (see [`crate::expr`] for the
//! grammar). Exactly one of `spray.S2`, `spray.B`, `spray.metric` declares
//! the spray: S2 components use inputs x0..,v0..; B components x0..,u0..,v0..;
//! metric entries x0... A graded space may be instantiated below its top
//! level, which truncates S2-declared sprays to the leading components and
//! rejects expressions that couple downward across the cut.

use crate::atlas::{Atlas, Chart, Transition};
use crate::connection::VectorField;
use crate::error::{Error, Result};
use crate::expr::{coord_names, stacked_names, ExprMap, ExprMatrix};
use crate::geodesic::OracleKind;
use crate::sample::SampleBox;
use crate::space::{ModelSpace, SeminormKind};
use crate::spray::{BilinearCoeffs, BilinearMap, MetricMap, SprayField, SprayMap};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Environment variable that points at a directory of `<name>.toml`
/// definitions overriding the embedded catalog.
pub const CATALOG_DIR_ENV: &str = "SPRAYGEO_CATALOG";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub space: SpaceDef,
    pub sampling: SamplingDef,
    pub charts: Vec<ChartDef>,
    #[serde(default)]
    pub transitions: Vec<TransitionDef>,
    pub spray: SprayDef,
    /// chart name → field name → expression.
    #[serde(default)]
    pub fields: BTreeMap<String, BTreeMap<String, String>>,
    /// chart name → scalar name → expression.
    #[serde(default)]
    pub scalars: BTreeMap<String, BTreeMap<String, String>>,
    pub diffeo: Option<DiffeoDef>,
    pub geodesic: Option<GeodesicDef>,
    /// Extra named sprays (for conjugacy experiments on the CLI).
    #[serde(default)]
    pub sprays: BTreeMap<String, SprayDef>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDef {
    pub grades: Vec<usize>,
    #[serde(default = "default_seminorm")]
    pub seminorm: String,
    pub weights: Option<Vec<f64>>,
}

fn default_seminorm() -> String {
    "sup".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingDef {
    #[serde(rename = "box")]
    pub box_: [f64; 2],
    pub vbox: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDef {
    pub name: String,
    pub domain: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDef {
    pub from: String,
    pub to: String,
    pub map: String,
    pub inverse: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SprayDef {
    #[serde(rename = "S2")]
    pub s2: Option<BTreeMap<String, String>>,
    #[serde(rename = "B")]
    pub b: Option<BTreeMap<String, String>>,
    pub metric: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffeoDef {
    pub mu: String,
    pub mu_inverse: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicDef {
    pub oracle: Option<String>,
    pub x0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
    pub t1: Option<f64>,
    pub step: Option<f64>,
    pub chart: Option<String>,
}

impl ManifoldDef {
    pub fn from_toml(text: &str) -> Result<ManifoldDef> {
        toml::from_str(text).map_err(|e| {
            let (line, col) = e
                .span()
                .map(|span| line_col(text, span.start))
                .unwrap_or((1, 1));
            Error::Parse {
                context: format!("manifold definition (line {line})"),
                col,
                message: e.message().to_string(),
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<ManifoldDef> {
        let text = std::fs::read_to_string(path)?;
        ManifoldDef::from_toml(&text)
    }

    /// Compile at the top truncation level.
    pub fn instantiate(&self) -> Result<Manifold> {
        self.instantiate_at_level(self.space.grades.len())
    }

    /// Compile at a given truncation level (1-based grade index).
    pub fn instantiate_at_level(&self, level: usize) -> Result<Manifold> {
        build_manifold(self, level)
    }
}

fn line_col(text: &str, byte: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in text.char_indices() {
        if i >= byte {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

/// A compiled manifold at a fixed truncation level.
#[derive(Debug, Clone)]
pub struct Manifold {
    pub def: ManifoldDef,
    pub name: String,
    pub space: ModelSpace,
    pub atlas: Atlas,
    pub spray: SprayField,
    pub bilinear: BilinearCoeffs,
    pub metrics: Option<BTreeMap<String, MetricMap>>,
    /// field name → per-chart representatives.
    pub fields: BTreeMap<String, VectorField>,
    /// scalar name → chart → expression.
    pub scalars: BTreeMap<String, BTreeMap<String, ExprMap>>,
    pub diffeo: Option<Diffeo>,
    pub geodesic: GeodesicConfig,
    pub extra_sprays: BTreeMap<String, (SprayField, BilinearCoeffs)>,
    pub seed: u64,
    pub level: usize,
}

#[derive(Debug, Clone)]
pub struct Diffeo {
    pub mu: ExprMap,
    pub mu_inverse: Option<ExprMap>,
}

#[derive(Debug, Clone)]
pub struct GeodesicConfig {
    pub oracle: Option<OracleKind>,
    pub chart: String,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub t1: f64,
    pub step: f64,
}

impl Manifold {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn sbox(&self) -> SampleBox {
        SampleBox::new(self.def.sampling.box_[0], self.def.sampling.box_[1])
    }

    pub fn vbox(&self) -> SampleBox {
        let vb = self.def.sampling.vbox.unwrap_or(self.def.sampling.box_);
        SampleBox::new(vb[0], vb[1])
    }

    pub fn chart_names(&self) -> Vec<String> {
        self.atlas.charts.iter().map(|c| c.name.clone()).collect()
    }

    /// The spray named on the CLI: "default" is the manifold's own spray.
    pub fn named_spray(&self, name: &str) -> Result<(&SprayField, &BilinearCoeffs)> {
        if name == "default" {
            return Ok((&self.spray, &self.bilinear));
        }
        self.extra_sprays
            .get(name)
            .map(|(s, b)| (s, b))
            .ok_or_else(|| Error::UnresolvedRef(format!("spray `{name}`")))
    }
}

fn build_manifold(def: &ManifoldDef, level: usize) -> Result<Manifold> {
    let seminorm = match def.space.seminorm.as_str() {
        "sup" => SeminormKind::Sup,
        "weighted-sup" => SeminormKind::WeightedSup {
            weights: def.space.weights.clone().ok_or_else(|| {
                Error::Config("weighted-sup seminorm requires `weights`".to_string())
            })?,
        },
        other => {
            return Err(Error::Config(format!(
                "unknown seminorm kind `{other}` (sup | weighted-sup)"
            )))
        }
    };
    let space = ModelSpace::new(def.space.grades.clone(), level, seminorm)?;
    let dim = space.dim();
    let full_dim = *def.space.grades.last().unwrap();
    let truncated = dim < full_dim;

    if def.sampling.box_[0] >= def.sampling.box_[1] {
        return Err(Error::Config("sampling box must have lo < hi".to_string()));
    }

    // Charts.
    let xnames = coord_names("x", dim);
    let full_xnames = coord_names("x", full_dim);
    let mut charts = Vec::new();
    for cd in &def.charts {
        let full = ExprMap::parse(&cd.domain, &full_xnames)
            .map_err(|e| in_context(e, &format!("charts.{}.domain", cd.name)))?;
        let domain = truncate_map(&full, &[("x", full_dim)], dim, &xnames, 1)
            .map_err(|e| in_context(e, &format!("charts.{}.domain", cd.name)))?;
        charts.push(Chart::new(cd.name.clone(), dim, domain)?);
    }
    if charts.is_empty() {
        return Err(Error::Config("at least one chart is required".to_string()));
    }

    // Transitions.
    let mut transitions = Vec::new();
    for td in &def.transitions {
        for name in [&td.from, &td.to] {
            if !charts.iter().any(|c| &c.name == name) {
                return Err(Error::UnresolvedRef(format!(
                    "chart `{name}` in transition {} -> {}",
                    td.from, td.to
                )));
            }
        }
        let parse = |src: &str, what: &str| -> Result<ExprMap> {
            let full = ExprMap::parse(src, &full_xnames)
                .map_err(|e| in_context(e, &format!("transitions.{}.{what}", td.from)))?;
            truncate_map(&full, &[("x", full_dim)], dim, &xnames, dim)
                .map_err(|e| in_context(e, &format!("transitions.{}.{what}", td.from)))
        };
        transitions.push(Transition {
            from: td.from.clone(),
            to: td.to.clone(),
            map: parse(&td.map, "map")?,
            inverse: Some(parse(&td.inverse, "inverse")?),
        });
    }
    let atlas = Atlas {
        charts,
        transitions,
    };

    // Spray.
    let (spray, bilinear, metrics) = build_spray(&def.spray, &atlas, dim, full_dim, truncated)?;

    // Named extra sprays.
    let mut extra_sprays = BTreeMap::new();
    for (name, sd) in &def.sprays {
        let (s, b, _) = build_spray(sd, &atlas, dim, full_dim, truncated)
            .map_err(|e| in_context(e, &format!("sprays.{name}")))?;
        extra_sprays.insert(name.clone(), (s, b));
    }

    // Test fields and scalars (dropped below the top level when they fail
    // the truncation input check; built-in polynomial families cover the
    // lower-level checks).
    let mut fields: BTreeMap<String, VectorField> = BTreeMap::new();
    for (chart_name, table) in &def.fields {
        atlas.chart(chart_name)?;
        for (field_name, src) in table {
            let full = ExprMap::parse(src, &full_xnames)
                .map_err(|e| in_context(e, &format!("fields.{chart_name}.{field_name}")))?;
            match truncate_map(&full, &[("x", full_dim)], dim, &xnames, dim) {
                Ok(map) => {
                    fields
                        .entry(field_name.clone())
                        .or_default()
                        .per_chart
                        .insert(chart_name.clone(), map);
                }
                Err(_) if truncated => {}
                Err(e) => {
                    return Err(in_context(e, &format!("fields.{chart_name}.{field_name}")))
                }
            }
        }
    }
    let mut scalars: BTreeMap<String, BTreeMap<String, ExprMap>> = BTreeMap::new();
    for (chart_name, table) in &def.scalars {
        atlas.chart(chart_name)?;
        for (scalar_name, src) in table {
            let full = ExprMap::parse(src, &full_xnames)
                .map_err(|e| in_context(e, &format!("scalars.{chart_name}.{scalar_name}")))?;
            match truncate_map(&full, &[("x", full_dim)], dim, &xnames, 1) {
                Ok(map) => {
                    scalars
                        .entry(scalar_name.clone())
                        .or_default()
                        .insert(chart_name.clone(), map);
                }
                Err(_) if truncated => {}
                Err(e) => {
                    return Err(in_context(
                        e,
                        &format!("scalars.{chart_name}.{scalar_name}"),
                    ))
                }
            }
        }
    }

    // Diffeomorphism for the conjugacy suite.
    let diffeo = match (&def.diffeo, truncated) {
        (Some(dd), false) => {
            let mu = ExprMap::parse(&dd.mu, &xnames).map_err(|e| in_context(e, "diffeo.mu"))?;
            if mu.arity_out() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "diffeo.mu has {} outputs, chart dimension is {dim}",
                    mu.arity_out()
                )));
            }
            let mu_inverse = dd
                .mu_inverse
                .as_ref()
                .map(|src| ExprMap::parse(src, &xnames))
                .transpose()
                .map_err(|e| in_context(e, "diffeo.mu_inverse"))?;
            Some(Diffeo { mu, mu_inverse })
        }
        _ => None,
    };

    // Geodesic configuration.
    let first_chart = atlas.charts[0].name.clone();
    let geodesic = match (&def.geodesic, truncated) {
        (Some(gd), false) => {
            let oracle = gd.oracle.as_deref().map(str::parse).transpose()?;
            let x0 = gd.x0.clone().unwrap_or_else(|| vec![0.0; dim]);
            let v0 = gd.v0.clone().unwrap_or_else(|| vec![0.3; dim]);
            if x0.len() != dim || v0.len() != dim {
                return Err(Error::DimensionMismatch(
                    "geodesic.x0 / geodesic.v0 must match the chart dimension".to_string(),
                ));
            }
            let t1 = gd.t1.unwrap_or(1.0);
            let step = gd.step.unwrap_or(1e-3);
            if t1 <= 0.0 || step <= 0.0 {
                return Err(Error::Config(
                    "geodesic.t1 and geodesic.step must be positive".to_string(),
                ));
            }
            let chart = gd.chart.clone().unwrap_or(first_chart);
            atlas.chart(&chart)?;
            GeodesicConfig {
                oracle,
                chart,
                x0,
                v0,
                t1,
                step,
            }
        }
        _ => GeodesicConfig {
            oracle: None,
            chart: first_chart,
            x0: vec![0.0; dim],
            v0: vec![0.3; dim],
            t1: 1.0,
            step: 1e-3,
        },
    };

    Ok(Manifold {
        def: def.clone(),
        name: def.name.clone(),
        space,
        atlas,
        spray,
        bilinear,
        metrics,
        fields,
        scalars,
        diffeo,
        geodesic,
        extra_sprays,
        seed: def.seed,
        level,
    })
}

type SprayBuild = (
    SprayField,
    BilinearCoeffs,
    Option<BTreeMap<String, MetricMap>>,
);

fn build_spray(
    sd: &SprayDef,
    atlas: &Atlas,
    dim: usize,
    full_dim: usize,
    truncated: bool,
) -> Result<SprayBuild> {
    let declared = [sd.s2.is_some(), sd.b.is_some(), sd.metric.is_some()]
        .iter()
        .filter(|p| **p)
        .count();
    if declared != 1 {
        return Err(Error::Config(
            "exactly one of spray.S2, spray.B, spray.metric must be declared".to_string(),
        ));
    }

    let mut spray = SprayField::default();
    let mut bilinear = BilinearCoeffs::default();
    let mut metrics: BTreeMap<String, MetricMap> = BTreeMap::new();

    let check_coverage = |table: &BTreeMap<String, String>| -> Result<()> {
        for name in table.keys() {
            atlas.chart(name)?;
        }
        for chart in &atlas.charts {
            if !table.contains_key(&chart.name) {
                return Err(Error::Config(format!(
                    "spray declaration missing for chart `{}`",
                    chart.name
                )));
            }
        }
        Ok(())
    };

    if let Some(table) = &sd.s2 {
        check_coverage(table)?;
        let full_names = stacked_names(&[("x", full_dim), ("v", full_dim)]);
        let names = stacked_names(&[("x", dim), ("v", dim)]);
        for (chart, src) in table {
            let full = ExprMap::parse(src, &full_names)
                .map_err(|e| in_context(e, &format!("spray.S2.{chart}")))?;
            let map = truncate_map(&full, &[("x", full_dim), ("v", full_dim)], dim, &names, dim)
                .map_err(|e| in_context(e, &format!("spray.S2.{chart}")))?;
            let s2 = SprayMap::Expr(map);
            bilinear
                .per_chart
                .insert(chart.clone(), BilinearMap::Polarized(Box::new(s2.clone())));
            spray.per_chart.insert(chart.clone(), s2);
        }
        return Ok((spray, bilinear, None));
    }

    if truncated {
        return Err(Error::Config(
            "truncation below the top level requires an S2-declared spray \
             (B and metric declarations are not dimension-generic)"
                .to_string(),
        ));
    }

    if let Some(table) = &sd.b {
        check_coverage(table)?;
        let names = stacked_names(&[("x", dim), ("u", dim), ("v", dim)]);
        for (chart, src) in table {
            let map = ExprMap::parse(src, &names)
                .map_err(|e| in_context(e, &format!("spray.B.{chart}")))?;
            if map.arity_out() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "spray.B.{chart} has {} outputs, chart dimension is {dim}",
                    map.arity_out()
                )));
            }
            let b = BilinearMap::Expr(map);
            spray
                .per_chart
                .insert(chart.clone(), SprayMap::FromBilinear(Box::new(b.clone())));
            bilinear.per_chart.insert(chart.clone(), b);
        }
        return Ok((spray, bilinear, None));
    }

    let table = sd.metric.as_ref().unwrap();
    check_coverage(table)?;
    let names = coord_names("x", dim);
    for (chart, src) in table {
        let matrix = ExprMatrix::parse(src, &names)
            .map_err(|e| in_context(e, &format!("spray.metric.{chart}")))?;
        if matrix.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "spray.metric.{chart} is {}x{}, chart dimension is {dim}",
                matrix.dim(),
                matrix.dim()
            )));
        }
        let metric = MetricMap::new(matrix);
        let b = BilinearMap::Christoffel(metric.clone());
        spray
            .per_chart
            .insert(chart.clone(), SprayMap::FromBilinear(Box::new(b.clone())));
        bilinear.per_chart.insert(chart.clone(), b);
        metrics.insert(chart.clone(), metric);
    }
    Ok((spray, bilinear, Some(metrics)))
}

/// Truncate a map declared over full-dimension stacked inputs to a lower
/// dimension: keep the leading `keep_outputs` components (or all, for
/// scalar maps) and remap input indices blockwise. A reference to a
/// coordinate beyond the cut is a configuration error — the expression is
/// not dimension-generic.
fn truncate_map(
    full: &ExprMap,
    blocks: &[(&str, usize)],
    dim: usize,
    new_names: &[String],
    keep_outputs: usize,
) -> Result<ExprMap> {
    let full_dim = blocks[0].1;
    if dim == full_dim {
        if keep_outputs > 1 && full.arity_out() != keep_outputs {
            return Err(Error::DimensionMismatch(format!(
                "map `{}` has {} outputs, expected {keep_outputs}",
                full.source(),
                full.arity_out()
            )));
        }
        return Ok(full.clone());
    }
    if keep_outputs > 1 && full.arity_out() != full_dim {
        return Err(Error::DimensionMismatch(format!(
            "map `{}` has {} outputs, expected {full_dim}",
            full.source(),
            full.arity_out()
        )));
    }
    let remap = |idx: usize| -> Result<usize> {
        let block = idx / full_dim;
        let offset = idx % full_dim;
        if block >= blocks.len() {
            return Err(Error::Config("input index out of range".to_string()));
        }
        if offset >= dim {
            return Err(Error::Config(format!(
                "expression is not dimension-generic: component references \
                 `{}{offset}` beyond truncation dimension {dim}",
                blocks[block].0
            )));
        }
        Ok(block * dim + offset)
    };
    let kept = if keep_outputs == 1 { 1 } else { dim };
    full.truncate_outputs(kept, new_names, &remap)
}

fn in_context(e: Error, context: &str) -> Error {
    match e {
        Error::Parse { col, message, .. } => Error::Parse {
            context: context.to_string(),
            col,
            message,
        },
        Error::Config(m) => Error::Config(format!("{context}: {m}")),
        Error::DimensionMismatch(m) => Error::DimensionMismatch(format!("{context}: {m}")),
        other => other,
    }
}

// Embedded catalog.
const CATALOG: &[(&str, &str)] = &[
    ("flat2", include_str!("../catalog/flat2.toml")),
    ("sphere2", include_str!("../catalog/sphere2.toml")),
    ("hyperbolic2", include_str!("../catalog/hyperbolic2.toml")),
    ("poly1", include_str!("../catalog/poly1.toml")),
    ("loop8", include_str!("../catalog/loop8.toml")),
];

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|(n, _)| *n).collect()
}

pub fn load_catalog(name: &str) -> Result<ManifoldDef> {
    if let Ok(dir) = std::env::var(CATALOG_DIR_ENV) {
        let candidate = Path::new(&dir).join(format!("{name}.toml"));
        if candidate.exists() {
            return ManifoldDef::from_file(&candidate);
        }
    }
    CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ManifoldDef::from_toml(text))
        .transpose()?
        .ok_or_else(|| {
            Error::UnresolvedRef(format!(
                "manifold `{name}` (catalog: {})",
                catalog_names().join(", ")
            ))
        })
}

/// Resolve a CLI argument: a path to a definition file, or a catalog name.
pub fn resolve_manifold(name_or_path: &str) -> Result<ManifoldDef> {
    let path = Path::new(name_or_path);
    if name_or_path.ends_with(".toml") || name_or_path.contains('/') || path.exists() {
        ManifoldDef::from_file(path)
    } else {
        load_catalog(name_or_path)
    }
}
