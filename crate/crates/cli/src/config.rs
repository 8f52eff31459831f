//! Run configuration: a sectioned `key = value` file.
//!
//! Every key is optional except where a command needs it; unknown sections
//! and keys are rejected. [`RunConfig::to_ini`] writes every field, so a
//! written config parses back to the same value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use nspp::covariates::Interpolation;
use nspp::mcmc::Tuning;
use nspp::model::{PhiPrior, PriorConfig};
use nspp::{Error, Location, Result, SpatialDomain};

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Rectangle([f64; 4]),
    Polygon(Vec<Location>),
}

impl DomainSpec {
    pub fn build(&self) -> Result<SpatialDomain> {
        let d = match self {
            DomainSpec::Rectangle([x0, x1, y0, y1]) => SpatialDomain::rectangle(*x0, *x1, *y0, *y1),
            DomainSpec::Polygon(v) => SpatialDomain::polygon(v.clone()),
        };
        d.map_err(|e| Error::config("io.domain", e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSection {
    pub regions: usize,
    pub mu: f64,
    pub sigma2: f64,
    pub gamma: f64,
    pub phi: f64,
    pub phi_prior: PhiPrior,
    pub covariates: Option<PathBuf>,
    pub interpolation: Interpolation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorSection {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub nu: f64,
    pub alpha_var: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuningSection {
    /// `None` picks the default for the domain.
    pub radius: Option<f64>,
    pub radius_multiplier: f64,
    pub p_small: f64,
    pub neighbors: Option<usize>,
    pub phi_rw_sd: f64,
    pub iterations: u64,
    pub burnin: u64,
    pub thin: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IoSection {
    pub domain: DomainSpec,
    pub mesh: (usize, usize),
    pub monitors: Vec<Location>,
    /// Reference locations for correlation maps.
    pub references: Vec<Location>,
    pub reservoir: usize,
}

/// Parameters used by `simulate`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthSection {
    pub lambda_star: Vec<f64>,
    /// One value, or one per region.
    pub phi: Vec<f64>,
    pub generators: Option<Vec<Location>>,
    pub alpha: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSection,
    pub priors: PriorSection,
    pub tuning: TuningSection,
    pub io: IoSection,
    pub truth: Option<TruthSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PriorConfig::default();
        RunConfig {
            model: ModelSection {
                regions: 1,
                mu: p.mu,
                sigma2: p.sigma2,
                gamma: p.gamma,
                phi: p.phi,
                phi_prior: p.phi_prior,
                covariates: None,
                interpolation: Interpolation::Nearest,
            },
            priors: PriorSection {
                a: p.a,
                b: p.b,
                eta: p.eta,
                nu: p.nu,
                alpha_var: p.alpha_var,
            },
            tuning: TuningSection {
                radius: None,
                radius_multiplier: 2.0,
                p_small: 0.95,
                neighbors: None,
                phi_rw_sd: 0.2,
                iterations: 1000,
                burnin: 200,
                thin: 1,
                seed: 1,
            },
            io: IoSection {
                domain: DomainSpec::Rectangle([0.0, 1.0, 0.0, 1.0]),
                mesh: (75, 75),
                monitors: Vec::new(),
                references: Vec::new(),
                reservoir: nspp::summaries::DEFAULT_RESERVOIR,
            },
            truth: None,
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "model",
        &[
            "L",
            "link",
            "mu",
            "sigma2",
            "gamma",
            "phi",
            "phi_prior",
            "phi_bounds",
            "covariates",
            "interpolation",
        ],
    ),
    ("priors", &["a", "b", "eta", "nu", "alpha_var"]),
    (
        "tuning",
        &[
            "radius",
            "radius_multiplier",
            "p_small",
            "neighbors",
            "phi_rw_sd",
            "iterations",
            "burnin",
            "thin",
            "seed",
        ],
    ),
    (
        "io",
        &["domain", "polygon", "mesh", "monitors", "references", "reservoir"],
    ),
    ("truth", &["lambda_star", "phi", "generators", "alpha"]),
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{}`", v.trim())))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| num(key, t))
        .collect()
}

/// `x y; x y; ...`
fn locations(key: &str, v: &str) -> Result<Vec<Location>> {
    v.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| match list(key, t)?.as_slice() {
            [x, y] => Ok(Location::new(*x, *y)),
            _ => Err(Error::config(key, format!("expected `x y`, got `{}`", t.trim()))),
        })
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

fn fmt_locs(v: &[Location]) -> String {
    v.iter()
        .map(|s| format!("{:?} {:?}", s.x, s.y))
        .collect::<Vec<_>>()
        .join("; ")
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // relative input paths are taken from the config's directory
        if let (Some(p), Some(dir)) = (&cfg.model.covariates, path.parent()) {
            let p = if p.is_relative() { dir.join(p) } else { p.clone() };
            cfg.model.covariates = Some(std::fs::canonicalize(&p).unwrap_or(p));
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::config("<file>", e.to_string()))?;
        let mut cfg = RunConfig::default();
        let mut truth_seen = false;
        let mut truth = TruthSection {
            lambda_star: Vec::new(),
            phi: Vec::new(),
            generators: None,
            alpha: Vec::new(),
        };
        let mut phi_bounds: Option<(f64, f64)> = None;
        let mut phi_prior_name = String::from("fixed");
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::config(k, "key outside any section"));
                }
                continue;
            };
            let allowed = KEYS
                .iter()
                .find(|(s, _)| *s == sec)
                .ok_or_else(|| Error::config(sec, "unknown section"))?
                .1;
            truth_seen |= sec == "truth";
            for (k, v) in props.iter() {
                let key = format!("{sec}.{k}");
                if !allowed.contains(&k) {
                    return Err(Error::config(key, "unknown key"));
                }
                let key = key.as_str();
                match (sec, k) {
                    ("model", "L") => cfg.model.regions = num(key, v)?,
                    ("model", "link") => {
                        if v.trim() != "probit" {
                            return Err(Error::config(key, "only `probit` is supported"));
                        }
                    }
                    ("model", "mu") => cfg.model.mu = num(key, v)?,
                    ("model", "sigma2") => cfg.model.sigma2 = num(key, v)?,
                    ("model", "gamma") => cfg.model.gamma = num(key, v)?,
                    ("model", "phi") => cfg.model.phi = num(key, v)?,
                    ("model", "phi_prior") => phi_prior_name = v.trim().to_string(),
                    ("model", "phi_bounds") => match list(key, v)?.as_slice() {
                        [lo, hi] => phi_bounds = Some((*lo, *hi)),
                        _ => return Err(Error::config(key, "expected `lower upper`")),
                    },
                    ("model", "covariates") => {
                        cfg.model.covariates = match v.trim() {
                            "" | "none" => None,
                            p => Some(PathBuf::from(p)),
                        }
                    }
                    ("model", "interpolation") => {
                        cfg.model.interpolation = match v.trim() {
                            "nearest" => Interpolation::Nearest,
                            "bilinear" => Interpolation::Bilinear,
                            o => return Err(Error::config(key, format!("expected nearest or bilinear, got `{o}`"))),
                        }
                    }
                    ("priors", "a") => cfg.priors.a = num(key, v)?,
                    ("priors", "b") => cfg.priors.b = num(key, v)?,
                    ("priors", "eta") => cfg.priors.eta = num(key, v)?,
                    ("priors", "nu") => cfg.priors.nu = num(key, v)?,
                    ("priors", "alpha_var") => cfg.priors.alpha_var = num(key, v)?,
                    ("tuning", "radius") => {
                        cfg.tuning.radius = if v.trim() == "auto" { None } else { Some(num(key, v)?) }
                    }
                    ("tuning", "radius_multiplier") => cfg.tuning.radius_multiplier = num(key, v)?,
                    ("tuning", "p_small") => cfg.tuning.p_small = num(key, v)?,
                    ("tuning", "neighbors") => {
                        cfg.tuning.neighbors = if v.trim() == "auto" { None } else { Some(num(key, v)?) }
                    }
                    ("tuning", "phi_rw_sd") => cfg.tuning.phi_rw_sd = num(key, v)?,
                    ("tuning", "iterations") => cfg.tuning.iterations = num(key, v)?,
                    ("tuning", "burnin") => cfg.tuning.burnin = num(key, v)?,
                    ("tuning", "thin") => cfg.tuning.thin = num(key, v)?,
                    ("tuning", "seed") => cfg.tuning.seed = num(key, v)?,
                    ("io", "domain") => match list(key, v)?.as_slice() {
                        [a, b, c, d] => cfg.io.domain = DomainSpec::Rectangle([*a, *b, *c, *d]),
                        _ => return Err(Error::config(key, "expected `xmin xmax ymin ymax`")),
                    },
                    ("io", "polygon") => cfg.io.domain = DomainSpec::Polygon(locations(key, v)?),
                    ("io", "mesh") => match list(key, v)?.as_slice() {
                        [n] => cfg.io.mesh = (*n as usize, *n as usize),
                        [nx, ny] => cfg.io.mesh = (*nx as usize, *ny as usize),
                        _ => return Err(Error::config(key, "expected `n` or `nx ny`")),
                    },
                    ("io", "monitors") => cfg.io.monitors = locations(key, v)?,
                    ("io", "references") => cfg.io.references = locations(key, v)?,
                    ("io", "reservoir") => cfg.io.reservoir = num(key, v)?,
                    ("truth", "lambda_star") => truth.lambda_star = list(key, v)?,
                    ("truth", "phi") => truth.phi = list(key, v)?,
                    ("truth", "generators") => {
                        truth.generators = if v.trim() == "random" {
                            None
                        } else {
                            Some(locations(key, v)?)
                        }
                    }
                    ("truth", "alpha") => truth.alpha = list(key, v)?,
                    _ => unreachable!(),
                }
            }
        }
        cfg.model.phi_prior = match phi_prior_name.as_str() {
            "fixed" => PhiPrior::Fixed,
            "uniform" => {
                let (lower, upper) =
                    phi_bounds.ok_or_else(|| Error::config("model.phi_bounds", "required when phi_prior = uniform"))?;
                PhiPrior::TruncatedUniform { lower, upper }
            }
            o => {
                return Err(Error::config(
                    "model.phi_prior",
                    format!("expected fixed or uniform, got `{o}`"),
                ))
            }
        };
        if truth_seen {
            cfg.truth = Some(truth);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.regions == 0 {
            return Err(Error::config("model.L", "need at least one region"));
        }
        self.priors().validate()?;
        self.io.domain.build()?;
        if self.io.mesh.0 == 0 || self.io.mesh.1 == 0 {
            return Err(Error::config("io.mesh", "must be positive"));
        }
        if self.io.reservoir == 0 {
            return Err(Error::config("io.reservoir", "must be positive"));
        }
        if self.tuning.thin == 0 {
            return Err(Error::config("tuning.thin", "must be at least 1"));
        }
        self.tuning(1.0).validate(self.model.regions)?;
        if let Some(t) = &self.truth {
            if t.lambda_star.is_empty() {
                return Err(Error::config("truth.lambda_star", "required in the truth section"));
            }
            if t.phi.len() > 1 && t.phi.len() != t.lambda_star.len() {
                return Err(Error::config("truth.phi", "give one value or one per region"));
            }
        }
        Ok(())
    }

    pub fn priors(&self) -> PriorConfig {
        PriorConfig {
            a: self.priors.a,
            b: self.priors.b,
            eta: self.priors.eta,
            nu: self.priors.nu,
            mu: self.model.mu,
            sigma2: self.model.sigma2,
            gamma: self.model.gamma,
            phi: self.model.phi,
            phi_prior: self.model.phi_prior,
            alpha_var: self.priors.alpha_var,
        }
    }

    /// Proposal settings for a domain of area `area`, with automatic values
    /// filled in.
    pub fn tuning(&self, area: f64) -> Tuning {
        let d = Tuning::default_for(area, self.model.regions);
        Tuning {
            radius: self.tuning.radius.unwrap_or(d.radius),
            radius_multiplier: self.tuning.radius_multiplier,
            p_small: self.tuning.p_small,
            neighbors: self.tuning.neighbors.unwrap_or(d.neighbors),
            phi_rw_sd: self.tuning.phi_rw_sd,
        }
    }

    /// The config with automatic values replaced by the ones in effect.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        let t = self.tuning(self.io.domain.build()?.area());
        c.tuning.radius = Some(t.radius);
        c.tuning.neighbors = Some(t.neighbors);
        Ok(c)
    }

    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "L = {}", m.regions);
        let _ = writeln!(s, "link = probit");
        let _ = writeln!(s, "mu = {:?}", m.mu);
        let _ = writeln!(s, "sigma2 = {:?}", m.sigma2);
        let _ = writeln!(s, "gamma = {:?}", m.gamma);
        let _ = writeln!(s, "phi = {:?}", m.phi);
        match m.phi_prior {
            PhiPrior::Fixed => {
                let _ = writeln!(s, "phi_prior = fixed");
            }
            PhiPrior::TruncatedUniform { lower, upper } => {
                let _ = writeln!(s, "phi_prior = uniform");
                let _ = writeln!(s, "phi_bounds = {lower:?} {upper:?}");
            }
        }
        let cov = m
            .covariates
            .as_ref()
            .map_or("none".to_string(), |p| p.display().to_string());
        let _ = writeln!(s, "covariates = {cov}");
        let interp = match m.interpolation {
            Interpolation::Nearest => "nearest",
            Interpolation::Bilinear => "bilinear",
        };
        let _ = writeln!(s, "interpolation = {interp}");

        let p = &self.priors;
        let _ = writeln!(s, "\n[priors]");
        let _ = writeln!(
            s,
            "a = {:?}\nb = {:?}\neta = {:?}\nnu = {:?}\nalpha_var = {:?}",
            p.a, p.b, p.eta, p.nu, p.alpha_var
        );

        let t = &self.tuning;
        let _ = writeln!(s, "\n[tuning]");
        let _ = writeln!(s, "radius = {}", t.radius.map_or("auto".into(), |r| format!("{r:?}")));
        let _ = writeln!(s, "radius_multiplier = {:?}", t.radius_multiplier);
        let _ = writeln!(s, "p_small = {:?}", t.p_small);
        let _ = writeln!(
            s,
            "neighbors = {}",
            t.neighbors.map_or("auto".into(), |b| b.to_string())
        );
        let _ = writeln!(s, "phi_rw_sd = {:?}", t.phi_rw_sd);
        let _ = writeln!(
            s,
            "iterations = {}\nburnin = {}\nthin = {}\nseed = {}",
            t.iterations, t.burnin, t.thin, t.seed
        );

        let io = &self.io;
        let _ = writeln!(s, "\n[io]");
        match &io.domain {
            DomainSpec::Rectangle(r) => {
                let _ = writeln!(s, "domain = {}", fmt_list(r));
            }
            DomainSpec::Polygon(v) => {
                let _ = writeln!(s, "polygon = {}", fmt_locs(v));
            }
        }
        let _ = writeln!(s, "mesh = {} {}", io.mesh.0, io.mesh.1);
        let _ = writeln!(s, "monitors = {}", fmt_locs(&io.monitors));
        let _ = writeln!(s, "references = {}", fmt_locs(&io.references));
        let _ = writeln!(s, "reservoir = {}", io.reservoir);

        if let Some(tr) = &self.truth {
            let _ = writeln!(s, "\n[truth]");
            let _ = writeln!(s, "lambda_star = {}", fmt_list(&tr.lambda_star));
            let _ = writeln!(s, "phi = {}", fmt_list(&tr.phi));
            let g = tr.generators.as_ref().map_or("random".into(), |g| fmt_locs(g));
            let _ = writeln!(s, "generators = {g}");
            let _ = writeln!(s, "alpha = {}", fmt_list(&tr.alpha));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "
[model]
L = 2
phi_prior = uniform
phi_bounds = 0.2 3
[priors]
a = 0.001
[tuning]
iterations = 50
seed = 9
[io]
domain = 0 10 0 10
mesh = 30
monitors = 1 1; 9 9
[truth]
lambda_star = 5 15
phi = 2.5 0.5
generators = 2.5 5; 7.5 5
";

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::parse(EXAMPLE).unwrap();
        assert_eq!(c.model.regions, 2);
        assert_eq!(c.io.mesh, (30, 30));
        assert_eq!(c.io.monitors.len(), 2);
        assert_eq!(c.model.phi_prior, PhiPrior::TruncatedUniform { lower: 0.2, upper: 3.0 });
        let again = RunConfig::parse(&c.to_ini()).unwrap();
        assert_eq!(c, again);
        let r = c.resolved().unwrap();
        assert_eq!(r.tuning.radius, Some(0.25));
        assert_eq!(RunConfig::parse(&r.to_ini()).unwrap(), r);
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let e = RunConfig::parse("[model]\nLL = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "model.LL"), "{e}");
        let e = RunConfig::parse("[mdl]\nL = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "mdl"), "{e}");
        let e = RunConfig::parse("[model]\nL = two\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "model.L"), "{e}");
        let e = RunConfig::parse("[priors]\nb = -1\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "priors.b"), "{e}");
    }
}
