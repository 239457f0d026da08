//! The acceptance suite: every scenario at its default configuration, run
//! twice into separate directories, graded criterion by criterion.

use std::fmt;
use std::path::Path;

use anyhow::Result;

use crate::config::{RunConfig, Scenario};
use crate::report::{compare_reports, Report};
use crate::scenario::run_and_emit;

#[derive(Clone, Debug)]
pub struct Criterion {
    pub number: usize,
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.ok { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {}: {} ({})", self.number, self.name, self.detail)
    }
}

/// Configurations of the suite, in run order.
pub fn suite_configs(dir: &Path) -> Vec<RunConfig> {
    Scenario::ALL
        .iter()
        .map(|&s| {
            let mut c = RunConfig::new(s);
            c.output = dir.join(s.name());
            c
        })
        .collect()
}

pub fn run_suite(dir: &Path) -> Result<Vec<Report>> {
    suite_configs(dir).iter().map(run_and_emit).collect()
}

fn find(reps: &[Report], s: Scenario) -> &Report {
    reps.iter().find(|r| r.scenario == s.name()).expect("suite runs every scenario")
}

/// Checks of `rep` whose name starts with one of `prefixes`: (count, first failure).
fn grade(rep: &Report, prefixes: &[&str]) -> (usize, Option<String>) {
    let sel: Vec<_> = rep.checks.iter().filter(|c| prefixes.iter().any(|p| c.name.starts_with(p))).collect();
    let fail = sel.iter().find(|c| !c.ok).map(|c| format!("{}: {}", c.name, c.detail));
    (sel.len(), fail)
}

fn crit(number: usize, name: &'static str, graded: (usize, Option<String>), extra: String) -> Criterion {
    let (n, fail) = graded;
    let ok = n > 0 && fail.is_none();
    let detail = match fail {
        Some(f) => format!("{n} checks; first failure {f}"),
        None if n == 0 => "no checks ran".into(),
        None => format!("{n} checks pass{extra}"),
    };
    Criterion { number, name, ok, detail }
}

fn stage_secs(rep: &Report, prefix: &str) -> f64 {
    rep.timings.iter().filter(|t| t.stage.starts_with(prefix)).map(|t| t.elapsed).sum()
}

/// Grades one suite run.
pub fn evaluate(reps: &[Report]) -> Vec<Criterion> {
    let coh = find(reps, Scenario::Cohomology);
    let audit = find(reps, Scenario::AxiomAudit);
    let star = find(reps, Scenario::Star);
    let inv = find(reps, Scenario::Invariance);
    let gv = find(reps, Scenario::InvariantGv);
    let cech = find(reps, Scenario::Cech);
    let mut out = vec![
        crit(1, "double-complex identity D^2 = 0 on stable cells", grade(coh, &["dd_zero"]), format!(", {:.1}s", stage_secs(coh, "dd("))),
        crit(2, "nesting C^l_k inside C^l_(k-1)", grade(audit, &["nesting"]), String::new()),
        crit(3, "Leibniz law at lambda order 3", grade(star, &["leibniz"]), format!(", {:.1}s", stage_secs(star, "star"))),
        crit(4, "Cauchy bounds on star coefficients", grade(star, &["cauchy_bound"]), String::new()),
        crit(5, "dual-basis independence of star", grade(star, &["basis_independence"]), String::new()),
        crit(6, "coordinate invariance at order 3", grade(inv, &["invariance", "beta_hand_derived"]), String::new()),
    ];
    let vanish: Vec<String> = gv
        .objects
        .get("gv")
        .and_then(|v| v.as_object())
        .map(|m| m.iter().map(|(k, v)| format!("{k}: class exact = {}", v["class_vanishes"])).collect())
        .unwrap_or_default();
    out.push(crit(
        7,
        "GV representatives nonzero and shift-invariant",
        grade(gv, &["gv_nonzero", "gv_shift_invariance", "gv_closed"]),
        format!("; {}", vanish.join(", ")),
    ));
    out.push(crit(8, "Cech-de Rham identities, H^0, cup sign, Leibniz", grade(cech, &["cech_"]), String::new()));
    let (n1, f1) = grade(coh, &["ranks"]);
    let (n2, f2) = grade(cech, &["cech_rank_oracle"]);
    out.push(crit(9, "sparse, modular and dense ranks agree", (n1 + n2, f1.or(f2)), String::new()));
    out
}

/// Runs the suite twice under `dir` and grades all ten criteria.
pub fn run(dir: &Path) -> Result<Vec<Criterion>> {
    let a = dir.join("run1");
    let b = dir.join("run2");
    let reps = run_suite(&a)?;
    run_suite(&b)?;
    let mut out = evaluate(&reps);
    let mut diff = None;
    for s in Scenario::ALL {
        if let Some(d) = compare_reports(&a.join(s.name()), &b.join(s.name()))? {
            diff = Some(format!("{}: {d}", s.name()));
            break;
        }
    }
    out.push(Criterion {
        number: 10,
        name: "determinism across two suite runs",
        ok: diff.is_none(),
        detail: diff.unwrap_or_else(|| format!("{} reports identical outside timings", Scenario::ALL.len())),
    });
    Ok(out)
}
