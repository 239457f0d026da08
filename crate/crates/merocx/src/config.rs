//! Run configuration: defaults, command-line overrides, and JSON config files
//! (which override flags). Every knob is echoed into each report.

use std::path::{Path, PathBuf};

use merocx_core::cell::AxiomSet;
use merocx_core::scalar::fmt_q;
use merocx_core::{ModelParams, Q};
use serde_json::{json, Value};

use crate::json::{model_from_json, model_to_json, FResult, FieldError, Node};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    AxiomAudit,
    Cohomology,
    Star,
    InvariantGv,
    Cech,
    Invariance,
}

impl Scenario {
    pub const ALL: [Scenario; 6] =
        [Scenario::AxiomAudit, Scenario::Cohomology, Scenario::Star, Scenario::InvariantGv, Scenario::Cech, Scenario::Invariance];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::AxiomAudit => "axiom-audit",
            Scenario::Cohomology => "cohomology",
            Scenario::Star => "star",
            Scenario::InvariantGv => "invariant-gv",
            Scenario::Cech => "cech",
            Scenario::Invariance => "invariance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarOpts {
    /// Factor cochain files; empty means seeded random stable factors.
    pub factors: Vec<PathBuf>,
    pub identify: String,
    pub grid: u32,
    /// Radii per factor, cycled; empty means 1/2, 2, 1/2, ...
    pub radii: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GvOpts {
    /// Preset name, or `all`.
    pub preset: String,
    pub psi_seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceOpts {
    /// Fixed automorphism; `None` draws one unipotent ρ per seed.
    pub rho: Option<String>,
    pub order: usize,
    /// Cochain file; `None` draws seeded cochains from the cell
    /// `(min(l_max, 2), 1)` at window `min(E, 3)` with KG and SHUFFLE imposed.
    pub cochain: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CechOpts {
    /// Atlas file; `None` runs the shipped atlases.
    pub atlas: Option<PathBuf>,
    pub kmax: usize,
    pub dmax: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub model: ModelParams,
    /// Window `E`.
    pub window: u32,
    pub axioms: AxiomSet,
    pub l_max: usize,
    pub k_max: u32,
    /// λ-order Λ.
    pub lambda: u32,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub star: StarOpts,
    pub gv: GvOpts,
    pub invariance: InvarianceOpts,
    pub cech: CechOpts,
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        RunConfig {
            scenario,
            model: ModelParams::DEFAULT,
            window: 6,
            axioms: AxiomSet::cohomology_default(),
            l_max: 3,
            k_max: 2,
            lambda: 3,
            seeds: (0..10).collect(),
            output: PathBuf::from("merocx-out"),
            star: StarOpts { factors: Vec::new(), identify: String::new(), grid: 8, radii: Vec::new() },
            gv: GvOpts { preset: "all".into(), psi_seeds: (0..5).collect() },
            invariance: InvarianceOpts { rho: None, order: 3, cochain: None },
            cech: CechOpts { atlas: None, kmax: 2, dmax: 3 },
        }
    }

    pub fn to_json(&self) -> Value {
        let p = |x: &PathBuf| x.display().to_string();
        json!({
            "scenario": self.scenario.name(),
            "model": model_to_json(&self.model),
            "window": self.window,
            "axioms": self.axioms.to_list(),
            "l_max": self.l_max,
            "k_max": self.k_max,
            "lambda": self.lambda,
            "seeds": self.seeds,
            "output": p(&self.output),
            "star": {
                "factors": self.star.factors.iter().map(p).collect::<Vec<_>>(),
                "identify": self.star.identify,
                "grid": self.star.grid,
                "radii": self.star.radii.iter().map(fmt_q).collect::<Vec<_>>(),
            },
            "invariant": {"preset": self.gv.preset, "psi_seeds": self.gv.psi_seeds},
            "invariance": {"rho": self.invariance.rho, "order": self.invariance.order, "cochain": self.invariance.cochain.as_ref().map(p)},
            "cech": {"atlas": self.cech.atlas.as_ref().map(p), "kmax": self.cech.kmax, "dmax": self.cech.dmax},
        })
    }

    /// Overrides fields present in a JSON config. Relative paths are resolved
    /// against `base`.
    pub fn apply_json(&mut self, v: &Value, base: &Path) -> FResult<()> {
        let n = Node::root(v);
        n.only_keys(&["scenario", "model", "window", "axioms", "l_max", "k_max", "lambda", "seeds", "output", "star", "invariant", "invariance", "cech"])?;
        let path = |x: &Node| -> FResult<PathBuf> { Ok(base.join(x.str()?)) };
        if let Some(x) = n.opt("scenario")? {
            match Scenario::parse(x.str()?) {
                Some(s) => self.scenario = s,
                None => return x.err(format!("unknown scenario (expected one of {})", Scenario::ALL.map(|s| s.name()).join(", "))),
            }
        }
        if let Some(x) = n.opt("model")? {
            self.model = model_from_json(&x)?;
        }
        if let Some(x) = n.opt("window")? {
            self.window = x.u32()?;
        }
        if let Some(x) = n.opt("axioms")? {
            self.axioms = AxiomSet::parse(x.str()?).or_else(|e| x.err(e.to_string()))?;
        }
        if let Some(x) = n.opt("l_max")? {
            self.l_max = x.u32()? as usize;
        }
        if let Some(x) = n.opt("k_max")? {
            self.k_max = x.u32()?;
        }
        if let Some(x) = n.opt("lambda")? {
            self.lambda = x.u32()?;
        }
        if let Some(x) = n.opt("seeds")? {
            self.seeds = x.items()?.iter().map(|s| s.u64()).collect::<FResult<_>>()?;
        }
        if let Some(x) = n.opt("output")? {
            self.output = path(&x)?;
        }
        if let Some(s) = n.opt("star")? {
            s.only_keys(&["factors", "identify", "grid", "radii"])?;
            if let Some(x) = s.opt("factors")? {
                self.star.factors = x.items()?.iter().map(path).collect::<FResult<_>>()?;
            }
            if let Some(x) = s.opt("identify")? {
                self.star.identify = x.str()?.to_string();
            }
            if let Some(x) = s.opt("grid")? {
                self.star.grid = x.u32()?;
            }
            if let Some(x) = s.opt("radii")? {
                self.star.radii = x.items()?.iter().map(|r| r.q()).collect::<FResult<_>>()?;
            }
        }
        if let Some(s) = n.opt("invariant")? {
            s.only_keys(&["preset", "psi_seeds"])?;
            if let Some(x) = s.opt("preset")? {
                self.gv.preset = x.str()?.to_string();
            }
            if let Some(x) = s.opt("psi_seeds")? {
                self.gv.psi_seeds = x.items()?.iter().map(|s| s.u64()).collect::<FResult<_>>()?;
            }
        }
        if let Some(s) = n.opt("invariance")? {
            s.only_keys(&["rho", "order", "cochain"])?;
            if let Some(x) = s.opt("rho")? {
                self.invariance.rho = Some(x.str()?.to_string());
            }
            if let Some(x) = s.opt("order")? {
                self.invariance.order = x.u32()? as usize;
            }
            if let Some(x) = s.opt("cochain")? {
                self.invariance.cochain = Some(path(&x)?);
            }
        }
        if let Some(s) = n.opt("cech")? {
            s.only_keys(&["atlas", "kmax", "dmax"])?;
            if let Some(x) = s.opt("atlas")? {
                self.cech.atlas = Some(path(&x)?);
            }
            if let Some(x) = s.opt("kmax")? {
                self.cech.kmax = x.u32()? as usize;
            }
            if let Some(x) = s.opt("dmax")? {
                self.cech.dmax = x.u32()? as usize;
            }
        }
        self.validate()
    }

    /// Range checks on a complete config.
    pub fn validate(&self) -> FResult<()> {
        let fail = |path: &str, msg: String| Err(FieldError { path: path.into(), msg });
        if let Err(e) = self.model.validate() {
            return fail("model", e.to_string());
        }
        if self.l_max > 6 || self.k_max > 6 {
            return fail(if self.l_max > 6 { "l_max" } else { "k_max" }, "cell range above 6 is beyond desk scale".into());
        }
        if self.window > 12 {
            return fail("window", "window above 12 is beyond desk scale".into());
        }
        if self.star.grid == 0 {
            return fail("star.grid", "grid must be positive".into());
        }
        if self.invariance.order == 0 || self.invariance.order > self.model.m as usize {
            return fail("invariance.order", format!("order must lie in 1..={}", self.model.m));
        }
        if self.cech.dmax == 0 {
            return fail("cech.dmax", "dmax must be at least 1".into());
        }
        if self.gv.preset != "all" && merocx_core::invariants::gv_preset(&self.gv.preset).is_err() {
            return fail("invariant.preset", format!("unknown preset '{}'", self.gv.preset));
        }
        Ok(())
    }
}

/// Reads a JSON config file on top of `cfg`.
pub fn load_config(cfg: &mut RunConfig, file: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(file).map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", file.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("config {} is not valid JSON: {e}", file.display()))?;
    let base = file.parent().unwrap_or(Path::new("."));
    cfg.apply_json(&v, base).map_err(|e| anyhow::anyhow!("config {}: {e}", file.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_config_names_the_field() {
        let mut c = RunConfig::new(Scenario::Cohomology);
        let e = c.apply_json(&json!({"model": {"N": 3, "M": "six", "B0": 2, "Lmax": 3}}), Path::new(".")).unwrap_err();
        assert_eq!(e.path, "model.M");
        let e = c.apply_json(&json!({"cech": {"dmax": 0}}), Path::new(".")).unwrap_err();
        assert_eq!(e.path, "cech.dmax");
        let e = c.apply_json(&json!({"sedes": [1]}), Path::new(".")).unwrap_err();
        assert_eq!(e.path, "sedes");
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::new(Scenario::Star);
        c.lambda = 4;
        c.star.radii = vec![Q::new(1.into(), 2.into())];
        let mut d = RunConfig::new(Scenario::Cohomology);
        d.apply_json(&c.to_json(), Path::new("")).unwrap();
        assert_eq!(c, d);
    }
}
