//! Run configuration: TOML schema, named shapes and command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy;
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point};
use crate::optimize::MinimizerConfig;
use crate::tessellation::DomainSpec;

/// Domain shapes. Every polygon is rescaled to unit area about its centroid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ShapeConfig {
    Square,
    RegularHexagon,
    RegularKGon { k: usize },
    /// Regular `k`-gon standing in for the disk.
    DiskApprox { k: usize },
    Polygon { vertices: Vec<[f64; 2]> },
    Torus { gamma: f64 },
    /// Periods `cols·a × rows·a√3`; fixes `λ` itself.
    CommensurateTorus { cols: usize, rows: usize },
}

impl ShapeConfig {
    /// Parses `square`, `regular-hexagon`, `regular-k-gon(7)`, `regular-7-gon`,
    /// `disk-approx(64)`, `torus(1.2)` or `commensurate-torus(3,3)`.
    pub fn parse_name(s: &str) -> Result<Self> {
        let s = s.trim();
        let args = |name: &str| -> Option<Vec<&str>> {
            let rest = s.strip_prefix(name)?.trim();
            let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
            Some(inner.split(',').map(str::trim).collect())
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Config(format!("bad number {v:?} in domain {s:?}")));
        let int = |v: &str| v.parse::<usize>().map_err(|_| Error::Config(format!("bad integer {v:?} in domain {s:?}")));
        Ok(match s {
            "square" => Self::Square,
            "regular-hexagon" | "hexagon" => Self::RegularHexagon,
            _ => {
                if let Some(a) = args("regular-k-gon") {
                    Self::RegularKGon { k: int(a[0])? }
                } else if let Some(a) = args("disk-approx") {
                    Self::DiskApprox { k: int(a[0])? }
                } else if let Some(a) = args("commensurate-torus") {
                    if a.len() != 2 {
                        return Err(Error::Config(format!("commensurate-torus takes cols,rows: {s:?}")));
                    }
                    Self::CommensurateTorus { cols: int(a[0])?, rows: int(a[1])? }
                } else if let Some(a) = args("torus") {
                    Self::Torus { gamma: num(a[0])? }
                } else if let Some(k) = s.strip_prefix("regular-").and_then(|r| r.strip_suffix("-gon")) {
                    Self::RegularKGon { k: int(k)? }
                } else {
                    return Err(Error::Config(format!("unknown domain {s:?}")));
                }
            }
        })
    }

    /// Reads polygon vertices, one `x,y` (or `x y`) pair per line; `#` starts a comment.
    pub fn from_vertex_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut vertices = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with(|c: char| c.is_alphabetic()) {
                continue;
            }
            let parts: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()).collect();
            let xy: Vec<f64> = parts.iter().map(|p| p.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(
                |_| Error::Config(format!("{}:{}: expected two numbers, got {line:?}", path.display(), k + 1)),
            )?;
            if xy.len() != 2 {
                return Err(Error::Config(format!("{}:{}: expected two numbers, got {line:?}", path.display(), k + 1)));
            }
            vertices.push([xy[0], xy[1]]);
        }
        Ok(Self::Polygon { vertices })
    }

    /// The unit-area base polygon, `None` for tori.
    pub fn base_polygon(&self) -> Result<Option<ConvexPolygon>> {
        let poly = match self {
            Self::Square => ConvexPolygon::unit_square(),
            Self::RegularHexagon => ConvexPolygon::regular(6, 1.0, Point::default(), 0.0)?,
            Self::RegularKGon { k } | Self::DiskApprox { k } => ConvexPolygon::regular(*k, 1.0, Point::default(), 0.0)?,
            Self::Polygon { vertices } => {
                let p = ConvexPolygon::new(vertices.iter().map(|v| Point::new(v[0], v[1])).collect())?;
                let c = p.centroid();
                p.translate(Point::default() - c).scale(p.area().powf(-0.5)).translate(c)
            }
            Self::Torus { .. } | Self::CommensurateTorus { .. } => return Ok(None),
        };
        Ok(Some(poly))
    }
}

/// How starting points are chosen.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitConfig {
    /// Shifted Halton points with equal masses.
    #[default]
    Halton,
    /// Hexagonal trial state with every point displaced uniformly by up to
    /// `noise·a` in each coordinate.
    Lattice { noise: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: ShapeConfig,
    /// Exactly one of `lambda` and `volume` (`V_λ`), except on a
    /// commensurate torus, which needs neither.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Inclusive point-count range for a scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<[usize; 2]>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitConfig,
    /// Neighbor-distance tolerance of the stability report.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub minimizer: MinimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_tau() -> f64 {
    crate::analysis::DEFAULT_TAU
}

impl RunConfig {
    pub fn new(domain: ShapeConfig) -> Self {
        Self {
            domain,
            lambda: None,
            volume: None,
            n: None,
            scan: None,
            seed: 0,
            init: InitConfig::default(),
            tau: default_tau(),
            minimizer: MinimizerConfig::default(),
            out: None,
        }
    }

    /// Parses TOML; errors carry `path:line:column`.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            Error::Config(format!("{origin}:{line}:{col}: {}", e.message()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, in hex.
    /// SHA-256 of the canonical TOML, ignoring `out` so that the same problem
    /// hashes the same wherever it is written.
    pub fn hash(&self) -> String {
        let canonical = Self { out: None, ..self.clone() };
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let commensurate = matches!(self.domain, ShapeConfig::CommensurateTorus { .. });
        match (self.lambda, self.volume, commensurate) {
            (Some(_), Some(_), _) => return Err(Error::Config("give only one of lambda and volume".into())),
            (None, None, false) => return Err(Error::Config("one of lambda or volume is required".into())),
            (Some(_), _, true) | (_, Some(_), true) => {
                return Err(Error::Config("a commensurate torus fixes lambda; omit lambda and volume".into()))
            }
            _ => {}
        }
        for (name, v) in [("lambda", self.lambda), ("volume", self.volume)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.n.is_some() && self.scan.is_some() {
            return Err(Error::Config("give only one of n and scan".into()));
        }
        if let Some([a, b]) = self.scan {
            if a == 0 || a > b {
                return Err(Error::Config(format!("scan range {a}..{b} is empty")));
            }
        }
        if self.n == Some(0) {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be positive".into()));
        }
        if let InitConfig::Lattice { noise } = self.init {
            if !(noise >= 0.0) {
                return Err(Error::Config("init noise must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        if let ShapeConfig::CommensurateTorus { cols, rows } = self.domain {
            return DomainSpec::commensurate_torus(cols, rows);
        }
        let lambda = match (self.lambda, self.volume) {
            (Some(l), _) => l,
            (None, Some(v)) => energy::lambda_for_volume(v),
            (None, None) => return Err(Error::Config("one of lambda or volume is required".into())),
        };
        match &self.domain {
            ShapeConfig::Torus { gamma } => DomainSpec::torus(*gamma, lambda),
            shape => DomainSpec::polygon(shape.base_polygon()?.expect("polygonal shape"), lambda),
        }
    }

    /// Point count for a single run: `n`, else `2·cols·rows` on a
    /// commensurate torus, else the nearest integer to `V_λ`.
    pub fn point_count(&self, domain: &DomainSpec) -> usize {
        match (self.n, &self.domain) {
            (Some(n), _) => n,
            (None, ShapeConfig::CommensurateTorus { cols, rows }) => 2 * cols * rows,
            _ => (domain.v_lambda().round() as usize).max(1),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// `--n` value: a count or an inclusive range `A..B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountArg {
    Fixed(usize),
    Range(usize, usize),
}

impl std::str::FromStr for CountArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let int = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("expected an integer, got {v:?}"));
        match s.split_once("..") {
            Some((a, b)) => Ok(Self::Range(int(a)?, int(b.trim_start_matches('='))?)),
            None => Ok(Self::Fixed(int(s)?)),
        }
    }
}
