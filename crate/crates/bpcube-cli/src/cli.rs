//! Argument parsing and dispatch. `run` renders everything to a string so
//! the binary only prints and sets the exit code.

use std::sync::Arc;

use bpcube::cube::{apply_reshuffle_cube, reshuffle_cast_cube, Cube, CubeCat, CubeFunctor, Truncation};
use bpcube::disc::{demo_cohpi_not_cwf, demo_rg_se_counterexample, demo_weld_rpsh_counterexample};
use bpcube::mode::{Depth, Reshuffle};
use bpcube::psh::{lifted, random_presheaf, Budget, GenParams, Presheaf, Rpsh, DEFAULT_BUDGET};
use bpcube::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::suites::{self, Config};

#[derive(Parser, Debug)]
#[command(name = "bpcube", version, about = "Reshuffles, cube categories and presheaf models of bridge/path cubes")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Depth of the cube category (largest depth for suites).
    #[arg(long, global = true, default_value_t = 1, allow_negative_numbers = true)]
    pub depth: i32,
    /// Dimension truncation.
    #[arg(long, global = true, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Random instances per check.
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,
    /// Candidate evaluations allowed per search.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// The 2-poset of reshuffles.
    #[command(subcommand)]
    Mode(ModeCmd),
    /// Reshuffles acting on cubes.
    #[command(subcommand)]
    Cube(CubeCmd),
    /// Presheaves, lifted functors and their right adjoints.
    #[command(subcommand)]
    Psh(PshCmd),
    /// Run a law suite.
    Check { suite: String },
    /// Reproduce a fixed counterexample.
    Demo { name: String },
}

#[derive(Subcommand, Debug)]
pub enum ModeCmd {
    /// `g . f`.
    Compose {
        #[arg(long)]
        g: String,
        #[arg(long)]
        f: String,
        #[arg(long, allow_negative_numbers = true)]
        g_dom: Option<i32>,
        #[arg(long, allow_negative_numbers = true)]
        f_dom: Option<i32>,
    },
    /// Pointwise order `f <= g`.
    Leq {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
    /// Right or left adjoint.
    Adjoint {
        #[arg(long, conflicts_with = "left", required_unless_present = "left")]
        right: Option<String>,
        #[arg(long)]
        left: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
    /// Maximal adjoint chain around a reshuffle.
    Chain {
        reshuffle: String,
        #[arg(long, default_value_t = 6)]
        len: usize,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
    /// Left division `mu \ nu`.
    Divide {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        #[arg(long, allow_negative_numbers = true)]
        mu_dom: Option<i32>,
        #[arg(long, allow_negative_numbers = true)]
        nu_dom: Option<i32>,
    },
    /// Depth-lifted modality.
    Bar {
        reshuffle: String,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
    /// Adjoint counts and the resulting classes.
    Classify {
        reshuffle: String,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CubeCmd {
    /// Cubes of the truncated category at `--depth`.
    List,
    /// Image of a cube of the reshuffle's domain depth.
    Apply {
        #[arg(long)]
        f: String,
        #[arg(long)]
        cube: String,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
    /// The cast `f(W) -> g(W)` for `f <= g`.
    Cast {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        cube: String,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
}

#[derive(Subcommand, Debug)]
pub enum PshCmd {
    /// The representable presheaf of a cube at `--depth`.
    Yoneda { cube: String },
    /// A seeded random presheaf at `--depth`.
    Random {
        #[arg(long, default_value_t = 2)]
        gens: usize,
        #[arg(long, default_value_t = 1)]
        gen_dim: usize,
    },
    /// Lift a random presheaf on the codomain depth of `f` to its domain depth.
    Lift {
        #[arg(long)]
        f: String,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
    /// The right adjoint of lifting along `f`, applied to a random presheaf.
    Rpsh {
        #[arg(long)]
        f: String,
        #[arg(long, allow_negative_numbers = true)]
        dom: Option<i32>,
    },
}

/// Rendered output and the process exit code.
pub struct Output {
    pub text: String,
    pub code: i32,
}

/// Exit code of a kernel error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Class(_) => 3,
        Error::Budget(_) => 4,
        _ => 2,
    }
}

fn ok(text: String) -> Output {
    Output { text, code: 0 }
}

fn render(fmt: Format, text: String, value: Value) -> Output {
    match fmt {
        Format::Text => ok(text),
        Format::Json => ok(serde_json::to_string_pretty(&value).expect("json values serialize")),
    }
}

fn resh(s: &str, dom: Option<i32>) -> Result<Reshuffle> {
    Reshuffle::parse(s, dom)
}

fn typed(f: &Reshuffle) -> Value {
    json!({ "reshuffle": f.to_string(), "dom": f.dom(), "cod": f.cod(), "table": f.table() })
}

pub fn run(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    match &cli.command {
        Command::Mode(m) => run_mode(g, m),
        Command::Cube(c) => run_cube(g, c),
        Command::Psh(p) => run_psh(g, p),
        Command::Check { suite } => {
            let cfg = Config { depth: g.depth, dim: g.dim, seed: g.seed, trials: g.trials, budget: g.budget };
            let report = suites::run_suite(suite, &cfg)?;
            let text = match g.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json(),
            };
            Ok(Output { text, code: if report.passed() { 0 } else { 1 } })
        }
        Command::Demo { name } => {
            let r = match name.as_str() {
                "rg-se" => demo_rg_se_counterexample()?,
                "weld-rpsh" => demo_weld_rpsh_counterexample()?,
                "cohpi-cwf" => demo_cohpi_not_cwf()?,
                other => {
                    return Err(Error::Param(format!("unknown demo `{other}`; known: rg-se, weld-rpsh, cohpi-cwf")))
                }
            };
            let mut text = format!("{}: {}\n", r.name, r.summary);
            for (k, v) in &r.measurements {
                text.push_str(&format!("  {k} = {v}\n"));
            }
            let mut out = render(g.format, text, serde_json::to_value(&r).expect("demo reports serialize"));
            out.code = if r.holds { 0 } else { 1 };
            Ok(out)
        }
    }
}

fn run_mode(g: &Global, m: &ModeCmd) -> Result<Output> {
    match m {
        ModeCmd::Compose { g: gs, f: fs, g_dom, f_dom } => {
            let (gg, ff) = (resh(gs, *g_dom)?, resh(fs, *f_dom)?);
            // An inferred domain may be too small for a finite literal like (=|=,..).
            let ff = if f_dom.is_none() && ff.cod() != gg.dom() {
                Reshuffle::from_parts(ff.dom().get(), ff.cod().get(), ff.table().to_vec())?
            } else {
                ff
            };
            let c = Reshuffle::compose(&gg, &ff)?;
            Ok(render(g.format, format!("{c}\n"), typed(&c)))
        }
        ModeCmd::Leq { f, g: gs, dom } => {
            let (a, b) = (resh(f, *dom)?, resh(gs, *dom)?);
            let r = a.leq(&b)?;
            Ok(render(g.format, format!("{r}\n"), json!({ "leq": r })))
        }
        ModeCmd::Adjoint { right, left, dom } => {
            let (lit, is_right) = match (right, left) {
                (Some(r), _) => (r, true),
                (None, Some(l)) => (l, false),
                (None, None) => return Err(Error::Param("give --right or --left".into())),
            };
            let f = resh(lit, *dom)?;
            let adj = if is_right { f.right_adjoint() } else { f.left_adjoint() };
            let side = if is_right { "right" } else { "left" };
            let a = adj.ok_or_else(|| Error::Class(format!("{f} has no {side} adjoint")))?;
            Ok(render(g.format, format!("{a}\n"), typed(&a)))
        }
        ModeCmd::Chain { reshuffle, len, dom } => {
            let chain = resh(reshuffle, *dom)?.adjoint_chain(*len)?;
            let text = chain.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" ⊣ ");
            Ok(render(g.format, format!("{text}\n"), Value::Array(chain.iter().map(typed).collect())))
        }
        ModeCmd::Divide { mu, nu, mu_dom, nu_dom } => {
            let q = Reshuffle::left_divide(&resh(mu, *mu_dom)?, &resh(nu, *nu_dom)?)?;
            Ok(render(g.format, format!("{q}\n"), typed(&q)))
        }
        ModeCmd::Bar { reshuffle, dom } => {
            let b = Reshuffle::bar(&resh(reshuffle, *dom)?)?;
            Ok(render(g.format, format!("{b}\n"), typed(&b)))
        }
        ModeCmd::Classify { reshuffle, dom } => {
            let f = resh(reshuffle, *dom)?;
            let c = f.count_adjoints();
            let text = format!(
                "{f} : {} -> {}\nleft adjoints: {}\nright adjoints: {}\nmodality: {}\ncontramodality: {}\nacts on cubes: {}\n",
                f.dom(),
                f.cod(),
                c.left,
                c.right,
                c.is_modality(),
                c.is_contramodality(),
                c.acts_on_cubes()
            );
            let value = json!({
                "reshuffle": typed(&f),
                "left": c.left,
                "right": c.right,
                "modality": c.is_modality(),
                "contramodality": c.is_contramodality(),
                "acts_on_cubes": c.acts_on_cubes(),
            });
            Ok(render(g.format, text, value))
        }
    }
}

fn cat(depth: i32, dim: usize) -> Result<Arc<CubeCat>> {
    Ok(CubeCat::new(Truncation::new(depth, dim)?))
}

fn run_cube(g: &Global, c: &CubeCmd) -> Result<Output> {
    match c {
        CubeCmd::List => {
            let cubes = Truncation::new(g.depth, g.dim)?.cubes();
            let names: Vec<String> = cubes.iter().map(|c| c.to_string()).collect();
            Ok(render(g.format, names.join("\n") + "\n", json!(names)))
        }
        CubeCmd::Apply { f, cube, dom } => {
            let f = resh(f, *dom)?;
            let w = Cube::parse(f.dom(), cube)?;
            let img = apply_reshuffle_cube(&f, &w)?;
            Ok(render(g.format, format!("{img}\n"), json!({ "reshuffle": f.to_string(), "cube": w, "image": img })))
        }
        CubeCmd::Cast { f, g: gs, cube, dom } => {
            let (a, b) = (resh(f, *dom)?, resh(gs, *dom)?);
            let w = Cube::parse(a.dom(), cube)?;
            let m = reshuffle_cast_cube(&a, &b, &w)?;
            let text = format!("{} -> {} : {m}\n", m.dom, m.cod);
            Ok(render(g.format, text, json!({ "dom": m.dom, "cod": m.cod, "map": m.to_string() })))
        }
    }
}

fn sizes_text(p: &Presheaf) -> String {
    let cat = p.cat();
    cat.objects().map(|o| format!("{}  {}\n", cat.cube(o), p.size(o))).collect()
}

fn run_psh(g: &Global, p: &PshCmd) -> Result<Output> {
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let params = GenParams::new(2, 1);
    match p {
        PshCmd::Yoneda { cube } => {
            let c = cat(g.depth, g.dim)?;
            let w = Cube::parse(Depth::new(g.depth)?, cube)?;
            let o = c.obj_of(&w).ok_or_else(|| Error::Param(format!("{w} exceeds dimension {}", g.dim)))?;
            let y = Presheaf::yoneda(&c, o);
            Ok(render(g.format, sizes_text(&y), y.to_json()))
        }
        PshCmd::Random { gens, gen_dim } => {
            let c = cat(g.depth, g.dim)?;
            let r = random_presheaf(&c, GenParams::new(*gens, *gen_dim), &mut rng)?;
            Ok(render(g.format, sizes_text(&r), r.to_json()))
        }
        PshCmd::Lift { f, dom } => {
            let f = resh(f, *dom)?;
            let (src, dst) = (cat(f.dom().get(), g.dim)?, cat(f.cod().get(), g.dim)?);
            let ff = CubeFunctor::new(&f, src, dst.clone())?;
            let gamma = random_presheaf(&dst, params, &mut rng)?;
            let l = lifted(&ff, &gamma)?;
            let text = format!("input\n{}lifted\n{}", sizes_text(&gamma), sizes_text(&l));
            Ok(render(g.format, text, json!({ "input": gamma.to_json(), "lifted": l.to_json() })))
        }
        PshCmd::Rpsh { f, dom } => {
            let f = resh(f, *dom)?;
            let (src, dst) = (cat(f.dom().get(), g.dim)?, cat(f.cod().get(), g.dim)?);
            let ff = CubeFunctor::new(&f, src.clone(), dst)?;
            let gamma = random_presheaf(&src, params, &mut rng)?;
            let r = Rpsh::new(&ff, &gamma, &mut Budget::new(g.budget))?;
            let text = format!("input\n{}rpsh\n{}", sizes_text(&gamma), sizes_text(&r.psh));
            Ok(render(g.format, text, json!({ "input": gamma.to_json(), "rpsh": r.psh.to_json() })))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> Result<Output> {
        let mut full = vec!["bpcube"];
        full.extend_from_slice(args);
        run(&Cli::try_parse_from(full).expect("arguments parse"))
    }

    #[test]
    fn mode_examples() {
        assert_eq!(go(&["mode", "adjoint", "--right", "(0|0,2,3)"]).unwrap().text, "(=|=,1,1,2)\n");
        assert_eq!(go(&["mode", "divide", "--mu", "(=|1,2)", "--nu", "(=|0,1)"]).unwrap().text, "(=|0,0,1)\n");
        assert_eq!(go(&["mode", "compose", "--g", "(=|1)", "--f", "(=|=,0)"]).unwrap().text, "(=|0)\n");
        let chain = go(&["mode", "chain", "(=|1,1,3)"]).unwrap().text;
        assert_eq!(chain.trim(), "(0|0,2,3) ⊣ (=|=,1,1,2) ⊣ (=|1,1,3) ⊣ (=|0,0,2,2) ⊣ (=|0,2,2) ⊣ (=|0,1,1,⊤)");
    }

    #[test]
    fn error_codes() {
        let e = go(&["mode", "adjoint", "--right", "(0|0,2"]).err().unwrap();
        assert_eq!(exit_code(&e), 2);
        let e = go(&["mode", "adjoint", "--right", "(=|T)"]).err().unwrap();
        assert_eq!(exit_code(&e), 3);
        assert_eq!(exit_code(&go(&["check", "nope"]).err().unwrap()), 2);
        assert_eq!(exit_code(&go(&["demo", "nope"]).err().unwrap()), 2);
    }

    #[test]
    fn cube_apply() {
        assert_eq!(go(&["cube", "apply", "--f", "(0|1)", "--cube", "(i:1, j:0)"]).unwrap().text, "(i1:0)\n");
    }
}
