//! Law suites. Every check is a named, seeded, self-contained experiment;
//! suites group checks and `all` runs every one of them.

use std::collections::HashMap;
use std::sync::Arc;

use bpcube::cube::{CubeCat, Truncation};
use bpcube::psh::{random_morphism, Budget, Presheaf, PshMorphism, DEFAULT_BUDGET};
use bpcube::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::report::{Case, Status, SuiteReport};

mod cube;
mod cwf;
mod disc;
mod mode;
mod psh;

/// Knobs shared by every check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Config {
    /// Largest depth exercised.
    pub depth: i32,
    /// Dimension truncation `D`.
    pub dim: usize,
    pub seed: u64,
    /// Random instances per family.
    pub trials: usize,
    /// Candidate evaluations allowed per brute-force search.
    pub budget: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config { depth: 1, dim: 2, seed: 0, trials: 100, budget: DEFAULT_BUDGET }
    }
}

/// Result of one check before it becomes a report case.
pub struct Outcome {
    pub pass: bool,
    pub witness: Value,
}

type CheckFn = fn(&mut Env) -> Result<Outcome>;

struct Check {
    id: &'static str,
    suite: &'static str,
    run: CheckFn,
}

const CHECKS: &[Check] = &[
    Check { id: "mode.adjoint-chain", suite: "mode-laws", run: mode::adjoint_chain },
    Check { id: "mode.adjoint-count", suite: "mode-laws", run: mode::adjoint_count },
    Check { id: "mode.adjoints", suite: "mode-laws", run: mode::adjoints },
    Check { id: "mode.bar", suite: "mode-laws", run: mode::bar },
    Check { id: "mode.left-division", suite: "mode-laws", run: mode::left_division },
    Check { id: "mode.two-poset", suite: "mode-laws", run: mode::two_poset },
    Check { id: "mode.useful-families", suite: "mode-laws", run: mode::useful_families },
    Check { id: "cube.category", suite: "cube-laws", run: cube::category },
    Check { id: "cube.cast-coherence", suite: "cube-laws", run: cube::cast_coherence },
    Check { id: "cube.cohesion-table", suite: "cube-laws", run: cube::cohesion_table },
    Check { id: "cube.two-functor", suite: "cube-laws", run: cube::two_functor },
    Check { id: "cube.no-maze", suite: "no-maze", run: cube::no_maze },
    Check { id: "psh.forall-adjunction", suite: "psh-laws", run: psh::forall_adjunction },
    Check { id: "psh.lifted-adjunction", suite: "psh-laws", run: psh::lifted_adjunction },
    Check { id: "psh.quotient", suite: "psh-laws", run: psh::quotient },
    Check { id: "psh.right-functor-iso", suite: "psh-laws", run: psh::right_functor_iso },
    Check { id: "psh.rpsh-adjunction", suite: "psh-laws", run: psh::rpsh_adjunction },
    Check { id: "cwf.comprehension", suite: "cwf-laws", run: cwf::comprehension },
    Check { id: "cwf.glue", suite: "cwf-laws", run: cwf::glue },
    Check { id: "cwf.id", suite: "cwf-laws", run: cwf::id },
    Check { id: "cwf.lifted-strict", suite: "cwf-laws", run: cwf::lifted_strict },
    Check { id: "cwf.nu-alpha", suite: "cwf-laws", run: cwf::nu_alpha },
    Check { id: "cwf.pi", suite: "cwf-laws", run: cwf::pi },
    Check { id: "cwf.rpsh-iso", suite: "cwf-laws", run: cwf::rpsh_iso },
    Check { id: "cwf.sigma", suite: "cwf-laws", run: cwf::sigma },
    Check { id: "cwf.substitution", suite: "cwf-laws", run: cwf::substitution },
    Check { id: "cwf.universe", suite: "cwf-laws", run: cwf::universe },
    Check { id: "cwf.weld", suite: "cwf-laws", run: cwf::weld },
    Check { id: "disc.pi-discreteness", suite: "pi-discreteness", run: disc::pi_discreteness },
    Check { id: "disc.lifting", suite: "lifting", run: disc::lifting },
    Check { id: "disc.horn-stability", suite: "lifting", run: disc::horn_stability },
    Check { id: "disc.se-subst", suite: "se-subst", run: disc::se_subst },
    Check { id: "disc.preservation", suite: "preservation", run: disc::preservation },
    Check { id: "disc.cohesion0", suite: "disc-laws", run: disc::cohesion0 },
    Check { id: "disc.degeneracy", suite: "disc-laws", run: disc::degeneracy },
    Check { id: "disc.display-maps", suite: "disc-laws", run: disc::display_maps },
    Check { id: "disc.formers", suite: "disc-laws", run: disc::formers },
    Check { id: "disc.left-division", suite: "disc-laws", run: disc::left_division },
    Check { id: "disc.modal-shape", suite: "disc-laws", run: disc::modal_shape },
    Check { id: "disc.quotient-subst", suite: "disc-laws", run: disc::quotient_subst },
    Check { id: "disc.shape-quotient", suite: "disc-laws", run: disc::shape_quotient },
    Check { id: "demo.cohpi-cwf", suite: "demos", run: disc::demo_cohpi },
    Check { id: "demo.rg-se", suite: "demos", run: disc::demo_rg_se },
    Check { id: "demo.weld-rpsh", suite: "demos", run: disc::demo_weld },
];

/// Suite names accepted by `check`, `all` included.
pub fn suite_names() -> Vec<&'static str> {
    let mut names: Vec<&str> = CHECKS.iter().map(|c| c.suite).collect();
    names.sort_unstable();
    names.dedup();
    names.insert(0, "all");
    names
}

/// Check ids in a suite, sorted.
pub fn checks_in(suite: &str) -> Result<Vec<&'static str>> {
    let mut ids: Vec<&str> =
        CHECKS.iter().filter(|c| suite == "all" || c.suite == suite || c.id == suite).map(|c| c.id).collect();
    if ids.is_empty() {
        return Err(Error::Param(format!("unknown suite or check `{suite}`; suites: {}", suite_names().join(", "))));
    }
    ids.sort_unstable();
    Ok(ids)
}

/// Runs one check. Kernel errors other than an exhausted budget become a
/// failing case; an exhausted budget aborts.
pub fn run_check(id: &str, cfg: &Config) -> Result<Case> {
    let check = CHECKS.iter().find(|c| c.id == id).ok_or_else(|| Error::Param(format!("unknown check `{id}`")))?;
    let mut env = Env::new(cfg, id);
    let (status, witness) = match (check.run)(&mut env) {
        Ok(o) => (if o.pass { Status::Pass } else { Status::Fail }, o.witness),
        Err(e @ Error::Budget(_)) => return Err(e),
        Err(e) => (Status::Fail, json!({ "error": e.to_string() })),
    };
    Ok(Case { check: id.to_string(), status, witness })
}

/// Runs a suite. Checks run on separate threads; the report is sorted by
/// check id, so output does not depend on scheduling.
pub fn run_suite(suite: &str, cfg: &Config) -> Result<SuiteReport> {
    let ids = checks_in(suite)?;
    let results: Vec<Result<Case>> = std::thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|id| s.spawn(move || run_check(id, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
    });
    let cases = results.into_iter().collect::<Result<Vec<Case>>>()?;
    Ok(SuiteReport::new(suite, cases))
}

/// Per-check state: a seeded generator and cached cube categories.
pub struct Env<'a> {
    pub cfg: &'a Config,
    pub rng: ChaCha8Rng,
    cats: HashMap<i32, Arc<CubeCat>>,
}

impl<'a> Env<'a> {
    fn new(cfg: &'a Config, id: &str) -> Self {
        // Decorrelate checks sharing a seed.
        let salt = id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        Env { cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ salt), cats: HashMap::new() }
    }

    /// The cube category of a depth under the configured truncation.
    pub fn cat(&mut self, depth: i32) -> Result<Arc<CubeCat>> {
        if let Some(c) = self.cats.get(&depth) {
            return Ok(c.clone());
        }
        let c = CubeCat::new(Truncation::new(depth, self.cfg.dim)?);
        self.cats.insert(depth, c.clone());
        Ok(c)
    }

    pub fn budget(&self) -> Budget {
        Budget::new(self.cfg.budget)
    }

    /// A random map `a -> b` under a fresh budget, if one exists.
    pub fn morphism(&mut self, a: &Arc<Presheaf>, b: &Arc<Presheaf>) -> Result<Option<PshMorphism>> {
        let mut budget = self.budget();
        random_morphism(a, b, &mut self.rng, &mut budget)
    }

    /// Depths from `lo` up to the configured one.
    pub fn depths(&self, lo: i32) -> std::ops::RangeInclusive<i32> {
        lo..=self.cfg.depth.max(lo)
    }
}

/// Counts instances and failures, keeping the first failing witness.
#[derive(Default)]
pub struct Tally {
    instances: usize,
    failures: usize,
    first_failure: Option<Value>,
    notes: Map<String, Value>,
}

impl Tally {
    pub fn record(&mut self, ok: bool, witness: impl FnOnce() -> Value) {
        self.instances += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(witness());
            }
        }
    }

    pub fn note(&mut self, key: &str, v: impl Into<Value>) {
        self.notes.insert(key.to_string(), v.into());
    }

    pub fn instances(&self) -> usize {
        self.instances
    }

    /// Passes when nothing failed and at least `min` instances ran.
    pub fn finish(self, min: usize) -> Outcome {
        let mut w = self.notes;
        w.insert("instances".into(), self.instances.into());
        w.insert("failures".into(), self.failures.into());
        if self.instances < min {
            w.insert("required".into(), min.into());
        }
        if let Some(f) = self.first_failure {
            w.insert("first_failure".into(), f);
        }
        Outcome { pass: self.failures == 0 && self.instances >= min, witness: Value::Object(w) }
    }
}
