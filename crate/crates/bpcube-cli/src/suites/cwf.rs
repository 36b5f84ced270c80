//! The presheaf model as a category with families: comprehension, type
//! formers, universes and modal actions, on random instances.

use std::sync::Arc;

use bpcube::cube::{cast_family, CubeAdjunction, CubeCat, CubeFunctor, MorId};
use bpcube::cwf::{
    alpha, alpha_inv, alpha_inv_subst, alpha_subst, code, extend, iso_over, j_elim, lift_subst, lifted_tm, lifted_ty,
    nu_apply, pair_subst, random_type, rpsh_pair, section_subst, subst_tm, subst_ty, top, DepPresheaf, Glue, IdType,
    Pi, RpshTy, Sigma, UniverseTerm, Weld,
};
use bpcube::cwf::{bot, random_prop};
use bpcube::mode::Reshuffle;
use bpcube::psh::{lifted, lifted_nattrans, random_morphism, random_presheaf, Presheaf, PshMorphism, Rpsh};
use bpcube::{Error, Result};
use serde_json::json;

use super::mode::all_upto;
use super::psh::TINY;
use super::{Env, Outcome, Tally};

/// Runs `body` round-robin over depths `lo..=depth` until `trials` calls
/// report a completed instance, giving up after twenty times as many tries.
fn run_trials(
    env: &mut Env,
    lo: i32,
    mut body: impl FnMut(&mut Env, &Arc<CubeCat>, &mut Tally) -> Result<bool>,
) -> Result<Tally> {
    let mut t = Tally::default();
    let depths: Vec<i32> = env.depths(lo).collect();
    let (mut done, mut tries) = (0, 0);
    while done < env.cfg.trials && tries < env.cfg.trials * 20 {
        let cat = env.cat(depths[tries % depths.len()])?;
        tries += 1;
        if body(env, &cat, &mut t)? {
            done += 1;
        }
    }
    t.note("completed", done);
    Ok(t)
}

/// A random context, a type over it and a type over its extension.
fn instance(env: &mut Env, cat: &Arc<CubeCat>) -> Result<(Arc<Presheaf>, Arc<DepPresheaf>, Arc<DepPresheaf>)> {
    let g = random_presheaf(cat, TINY, &mut env.rng)?;
    let a = random_type(&g, TINY, &mut env.rng)?;
    let b = random_type(a.total(), TINY, &mut env.rng)?;
    Ok((g, a, b))
}

fn endo(env: &mut Env, g: &Arc<Presheaf>) -> Result<Option<PshMorphism>> {
    let mut b = env.budget();
    random_morphism(g, g, &mut env.rng, &mut b)
}

/// `p . <s, t> = s`, `xi[<s, t>] = t` and `<p r, xi[r]> = r`.
pub fn comprehension(env: &mut Env) -> Result<Outcome> {
    let t = run_trials(env, -1, |env, cat, t| {
        let mut b = env.budget();
        let (g, a, _) = instance(env, cat)?;
        let delta = random_presheaf(cat, TINY, &mut env.rng)?;
        let Some(sigma) = random_morphism(&delta, &g, &mut env.rng, &mut b)? else {
            return Ok(false);
        };
        let Some(s) = subst_ty(&a, &sigma)?.random_section(&mut env.rng, &mut b)? else {
            return Ok(false);
        };
        let Some(rho) = random_morphism(&delta, a.total(), &mut env.rng, &mut b)? else {
            return Ok(false);
        };
        let (_, pi, xi) = extend(&a);
        let st = pair_subst(&a, &sigma, &s)?;
        let beta = PshMorphism::compose(&pi, &st)? == sigma && subst_tm(&xi, &st)? == s;
        let eta = pair_subst(&a, &PshMorphism::compose(&pi, &rho)?, &subst_tm(&xi, &rho)?)? == rho;
        t.record(
            a.validate().is_ok() && st.validate().is_ok() && beta && eta,
            || json!({ "depth": cat.depth(), "ctx": g.sizes(), "beta": beta, "eta": eta }),
        );
        Ok(true)
    })?;
    Ok(t.finish(1))
}

/// Strict functoriality of substitution on types and terms.
pub fn substitution(env: &mut Env) -> Result<Outcome> {
    let t = run_trials(env, -1, |env, cat, t| {
        let mut b = env.budget();
        let (g, a, _) = instance(env, cat)?;
        let delta = random_presheaf(cat, TINY, &mut env.rng)?;
        let Some(sigma) = random_morphism(&delta, &g, &mut env.rng, &mut b)? else {
            return Ok(false);
        };
        let Some(tau) = random_morphism(&delta, &delta, &mut env.rng, &mut b)? else {
            return Ok(false);
        };
        let st = PshMorphism::compose(&sigma, &tau)?;
        let asig = subst_ty(&a, &sigma)?;
        let mut ok = subst_ty(&asig, &tau)? == subst_ty(&a, &st)?
            && *subst_ty(&a, &PshMorphism::identity(&g))? == *a
            && asig.validate().is_ok();
        if let Some(x) = a.random_section(&mut env.rng, &mut b)? {
            ok &= subst_tm(&subst_tm(&x, &sigma)?, &tau)? == subst_tm(&x, &st)?
                && subst_tm(&x, &PshMorphism::identity(&g))? == x;
        }
        t.record(ok, || json!({ "depth": cat.depth(), "ctx": g.sizes(), "delta": delta.sizes() }));
        Ok(true)
    })?;
    Ok(t.finish(1))
}

pub fn sigma(env: &mut Env) -> Result<Outcome> {
    let t = run_trials(env, -1, |env, cat, t| {
        let mut bud = env.budget();
        let (g, a, b) = instance(env, cat)?;
        let s = Sigma::new(&a, &b)?;
        let mut sizes = true;
        for o in cat.objects() {
            for x in 0..g.size(o) as u32 {
                let n: u32 = (0..a.fiber_size(o, x)).map(|i| b.fiber_size(o, a.cell(o, x, i))).sum();
                sizes &= s.ty.fiber_size(o, x) == n;
            }
        }
        let Some(p) = s.ty.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let Some(sigma) = endo(env, &g)? else {
            return Ok(false);
        };
        let (f, sn) = (s.fst(&p)?, s.snd(&p)?);
        let paired = s.pair(&f, &sn)?;
        let rules = paired == p && s.fst(&paired)? == f && s.snd(&paired)? == sn;
        let (asig, plus) = lift_subst(&a, &sigma)?;
        let stable = *subst_ty(&s.ty, &sigma)? == *Sigma::new(&asig, &subst_ty(&b, &plus)?)?.ty;
        t.record(
            s.ty.validate().is_ok() && sizes && rules && stable,
            || json!({ "depth": cat.depth(), "sizes": sizes, "beta_eta": rules, "stable": stable }),
        );
        Ok(true)
    })?;
    Ok(t.finish(1))
}

pub fn pi(env: &mut Env) -> Result<Outcome> {
    let t = run_trials(env, -1, |env, cat, t| {
        let mut bud = env.budget();
        let (g, a, b) = instance(env, cat)?;
        let p = Pi::new(&a, &b, &mut bud)?;
        let Some(body) = b.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let Some(f) = p.ty.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let Some(sigma) = endo(env, &g)? else {
            return Ok(false);
        };
        let lam = p.lambda(&body)?;
        let mut beta = p.ap(&lam)? == body;
        if let Some(x) = a.random_section(&mut env.rng, &mut bud)? {
            beta &= p.app(&lam, &x)? == subst_tm(&body, &section_subst(&a, &x)?)?;
        }
        let eta = p.lambda(&p.ap(&f)?)? == f;
        let (asig, plus) = lift_subst(&a, &sigma)?;
        let stable = *subst_ty(&p.ty, &sigma)? == *Pi::new(&asig, &subst_ty(&b, &plus)?, &mut bud)?.ty;
        t.record(
            p.ty.validate().is_ok() && beta && eta && stable,
            || json!({ "depth": cat.depth(), "beta": beta, "eta": eta, "stable": stable }),
        );
        Ok(true)
    })?;
    Ok(t.finish(1))
}

/// `refl` is the unique inhabitant of `Id(x, x)`, and `J` computes on it.
pub fn id(env: &mut Env) -> Result<Outcome> {
    let t = run_trials(env, -1, |env, cat, t| {
        let mut bud = env.budget();
        let (g, a, _) = instance(env, cat)?;
        let Some(x) = a.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let refl = IdType::refl(&x)?;
        let unique = refl.ty().is_prop() && refl.ty().sections(&mut bud)? == vec![refl.clone()];
        let based = IdType::based(&x)?;
        let motive = random_type(based.ty.total(), TINY, &mut env.rng)?;
        let sx = section_subst(&a, &x)?;
        let at = pair_subst(&based.ty, &sx, &refl.clone().retype(subst_ty(&based.ty, &sx)?)?)?;
        let Some(c) = subst_ty(&motive, &at)?.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let beta = j_elim(&x, &x, &motive, &refl, &c)? == c;
        let mut stable = true;
        if let Some(sigma) = endo(env, &g)? {
            let y = subst_tm(&x, &sigma)?;
            stable = *subst_ty(&IdType::new(&x, &x)?.ty, &sigma)? == *IdType::new(&y, &y)?.ty;
        }
        t.record(
            unique && beta && stable,
            || json!({ "depth": cat.depth(), "unique": unique, "beta": beta, "stable": stable }),
        );
        Ok(true)
    })?;
    Ok(t.finish(1))
}

/// `El(code A) = A`, `code(El u) = u`, and codes commute with substitution.
pub fn universe(env: &mut Env) -> Result<Outcome> {
    let t = run_trials(env, -1, |env, cat, t| {
        let (g, a, _) = instance(env, cat)?;
        let Some(sigma) = endo(env, &g)? else {
            return Ok(false);
        };
        let u = code(&a)?;
        let fam = cat.objects().map(|w| (0..g.size(w) as u32).map(|c| u.at(w, c).clone()).collect()).collect();
        let rebuilt = UniverseTerm::new(g.clone(), fam)?;
        let el = rebuilt.el()?;
        let ok = *el == *a
            && code(&el)? == u
            && u.subst(&sigma)? == code(&*subst_ty(&a, &sigma)?)?
            && *u.subst(&sigma)?.el()? == *subst_ty(&a, &sigma)?;
        t.record(ok, || json!({ "depth": cat.depth(), "ctx": g.sizes() }));
        Ok(true)
    })?;
    Ok(t.finish(1))
}

/// `Glue {A <- (P ? T, f)}`: restriction to `P` is `T`, and glue/unglue
/// are inverse.
pub fn glue(env: &mut Env) -> Result<Outcome> {
    let t = run_trials(env, -1, |env, cat, t| {
        let mut bud = env.budget();
        let (g, a, _) = instance(env, cat)?;
        let p = Arc::new(random_prop(&g, &mut env.rng)?);
        let ty = random_type(p.total(), TINY, &mut env.rng)?;
        let fty = subst_ty(&*subst_ty(&a, &p.proj())?, &ty.proj())?;
        let Some(f) = fty.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let gl = Glue::new(&a, &p, &ty, &f, &mut bud)?;
        let Some(b) = gl.ty.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let face = *subst_ty(&gl.ty, &p.proj())? == *ty;
        let eta = gl.glue(&gl.unglue(&b)?, &gl.restrict_to_face(&b)?)? == b;
        let mut beta = true;
        if let Some(y) = ty.random_section(&mut env.rng, &mut bud)? {
            for x in a.sections(&mut bud)?.into_iter().take(4) {
                if let Ok(b2) = gl.glue(&x, &y) {
                    beta &= gl.unglue(&b2)? == x && gl.restrict_to_face(&b2)? == y;
                }
            }
        }
        t.record(
            gl.ty.validate().is_ok() && face && eta && beta,
            || json!({ "depth": cat.depth(), "face": face, "eta": eta, "beta": beta }),
        );
        Ok(true)
    })?;
    Ok(t.finish(1))
}

/// `Weld {A -> (P ? T, f)}`: restriction to `P` is `T`, and the induction
/// principle computes on welded terms and on the face.
pub fn weld(env: &mut Env) -> Result<Outcome> {
    let t = run_trials(env, -1, |env, cat, t| {
        let mut bud = env.budget();
        let (g, a, _) = instance(env, cat)?;
        let p = Arc::new(random_prop(&g, &mut env.rng)?);
        let ty = random_type(p.total(), TINY, &mut env.rng)?;
        let a_face = subst_ty(&a, &p.proj())?;
        let Some(f) = subst_ty(&ty, &a_face.proj())?.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let wd = Weld::new(&a, &p, &ty, &f)?;
        // A motive constant in the welded variable, with matching branches.
        let k = random_type(&g, TINY, &mut env.rng)?;
        let motive = subst_ty(&k, &wd.ty.proj())?;
        let Some(kk) = k.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let Some(x) = a.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let c = subst_tm(&kk, &PshMorphism::compose(&wd.ty.proj(), &wd.in_total())?)?
            .retype(subst_ty(&motive, &wd.in_total())?)?;
        let d = subst_tm(&kk, &PshMorphism::compose(&wd.ty.proj(), &wd.in_face())?)?
            .retype(subst_ty(&motive, &wd.in_face())?)?;
        let face = *subst_ty(&wd.ty, &p.proj())? == *ty;
        let beta = wd.ind(&motive, &d, &c, &wd.weld(&x)?)? == subst_tm(&c, &section_subst(&a, &x)?)?;
        let mut beta_face = true;
        if let Some(b) = wd.ty.random_section(&mut env.rng, &mut bud)? {
            let r = wd.ind(&motive, &d, &c, &b)?;
            let fb = wd.restrict_to_face(&b)?;
            beta_face = subst_tm(&r, &p.proj())? == subst_tm(&d, &section_subst(&ty, &fb)?)?;
        }
        t.record(
            wd.ty.validate().is_ok() && face && beta && beta_face,
            || json!({ "depth": cat.depth(), "face": face, "beta": beta, "beta_face": beta_face }),
        );
        Ok(true)
    })?;
    let mut t = t;
    // A false proposition welds nothing.
    let mut bud = env.budget();
    let cat = env.cat(env.cfg.depth.min(1))?;
    let g = random_presheaf(&cat, TINY, &mut env.rng)?;
    let a = random_type(&g, TINY, &mut env.rng)?;
    let p = Arc::new(bot(&g));
    let ty = random_type(p.total(), TINY, &mut env.rng)?;
    let a_face = subst_ty(&a, &p.proj())?;
    let f = subst_ty(&ty, &a_face.proj())?.sections(&mut bud)?.remove(0);
    t.record(*Weld::new(&a, &p, &ty, &f)?.ty == *a, || json!("weld over a false face"));
    Ok(t.finish(1))
}

/// Lifted functors commute with Sigma, Id, the unit type and substitution
/// on the nose.
pub fn lifted_strict(env: &mut Env) -> Result<Outcome> {
    let fs: Vec<Reshuffle> =
        all_upto(env.cfg.depth).into_iter().filter(|f| f.count_adjoints().acts_on_cubes()).collect();
    let mut ix = 0;
    let t = run_trials(env, -1, |env, _, t| {
        let f = fs[ix % fs.len()].clone();
        ix += 1;
        let mut bud = env.budget();
        let (src, dst) = (env.cat(f.dom().get())?, env.cat(f.cod().get())?);
        let ff = CubeFunctor::new(&f, src, dst.clone())?;
        let (g, a, b) = instance(env, &dst)?;
        let s = Sigma::new(&a, &b)?;
        let (fa, fb) = (lifted_ty(&ff, &a)?, lifted_ty(&ff, &b)?);
        let mut ok = *lifted_ty(&ff, &s.ty)? == *Sigma::new(&fa, &fb)?.ty;
        ok &= *lifted_ty(&ff, &top(&g))? == top(&lifted(&ff, &g)?);
        if let (Some(x), Some(y)) =
            (a.random_section(&mut env.rng, &mut bud)?, a.random_section(&mut env.rng, &mut bud)?)
        {
            let fid = IdType::new(&lifted_tm(&ff, &x)?, &lifted_tm(&ff, &y)?)?;
            ok &= *lifted_ty(&ff, &IdType::new(&x, &y)?.ty)? == *fid.ty;
        }
        if let Some(sigma) = endo(env, &g)? {
            let lifted_sigma = bpcube::psh::lifted_morphism(&ff, &sigma)?;
            ok &= *lifted_ty(&ff, &*subst_ty(&a, &sigma)?)? == *subst_ty(&fa, &lifted_sigma)?;
        }
        t.record(ok, || json!({ "f": f, "ctx": g.sizes() }));
        Ok(true)
    })?;
    Ok(t.finish(1))
}

/// The right adjoint of a lifted functor preserves Sigma and Id types up to
/// isomorphism over the context.
pub fn rpsh_iso(env: &mut Env) -> Result<Outcome> {
    let fs: Vec<Reshuffle> = all_upto(env.cfg.depth.min(1))
        .into_iter()
        .filter(|f| f.dom().get() >= 0 && f.count_adjoints().acts_on_cubes())
        .collect();
    let (mut ix, mut over_budget) = (0, 0usize);
    let mut t = run_trials(env, -1, |env, _, t| {
        let f = fs[ix % fs.len()].clone();
        ix += 1;
        match rpsh_iso_trial(env, &f, t) {
            Err(Error::Budget(_)) => {
                over_budget += 1;
                Ok(false)
            }
            r => r,
        }
    })?;
    t.note("over_budget", over_budget);
    Ok(t.finish(1))
}

fn rpsh_iso_trial(env: &mut Env, f: &Reshuffle, t: &mut Tally) -> Result<bool> {
    let f = f.clone();
    let mut bud = env.budget();
    let (src, dst) = (env.cat(f.dom().get())?, env.cat(f.cod().get())?);
    let ff = CubeFunctor::new(&f, src.clone(), dst)?;
    let g = random_presheaf(&src, TINY, &mut env.rng)?;
    let a = random_type(&g, TINY, &mut env.rng)?;
    let b = random_type(a.total(), bpcube::psh::GenParams::new(1, 1), &mut env.rng)?;
    let r = Rpsh::new(&ff, &g, &mut bud)?;
    let ra = RpshTy::new(&r, &a, &mut bud)?;
    let (Some(x), Some(y)) = (a.random_section(&mut env.rng, &mut bud)?, a.random_section(&mut env.rng, &mut bud)?)
    else {
        return Ok(false);
    };
    let rid = RpshTy::new(&r, &IdType::new(&x, &y)?.ty, &mut bud)?;
    let other_id = IdType::new(&ra.tm(&x)?, &ra.tm(&y)?)?;
    let id_ok = iso_over(&rid.ty, &other_id.ty, &mut bud)?.is_some();
    let s = Sigma::new(&a, &b)?;
    let rs = RpshTy::new(&r, &s.ty, &mut bud)?;
    let r_ext = Rpsh::new(&ff, a.total(), &mut bud)?;
    let rb = RpshTy::new(&r_ext, &b, &mut bud)?;
    let pair = rpsh_pair(&ra, &r_ext)?;
    let other = Sigma::new(&ra.ty, &subst_ty(&rb.ty, &pair)?)?;
    let sigma_ok = iso_over(&rs.ty, &other.ty, &mut bud)?.is_some();
    t.record(
        ra.ty.validate().is_ok() && id_ok && sigma_ok,
        || json!({ "f": f, "ctx": g.sizes(), "id": id_ok, "sigma": sigma_ok }),
    );
    Ok(true)
}

/// Modal term actions: `nu` applied along lifted casts composes, and the
/// adjunction bijection on terms is invertible.
pub fn nu_alpha(env: &mut Env) -> Result<Outcome> {
    let src = env.cat(1)?;
    let fs: Vec<Arc<CubeFunctor>> = ["(=|=,1)", "(=|0,1)", "(=|1,1)"]
        .iter()
        .map(|s| CubeFunctor::new(&Reshuffle::parse(s, Some(1))?, src.clone(), src.clone()))
        .collect::<Result<_>>()?;
    let adjs: Vec<Reshuffle> = all_upto(env.cfg.depth)
        .into_iter()
        .filter(|f| {
            f.count_adjoints().acts_on_cubes() && f.right_adjoint().is_some_and(|g| g.count_adjoints().acts_on_cubes())
        })
        .collect();
    let mut ix = 0;
    let t = run_trials(env, 1, |env, _, t| {
        let mut bud = env.budget();
        // Casts flat <= Id-on-paths <= sharp, composed two ways.
        let (g, a, _) = instance(env, &src)?;
        let Some(x) = a.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let mut ok = true;
        for i in 0..fs.len() {
            let idn: Vec<MorId> = src.objects().map(|o| src.id(fs[i].obj(o))).collect();
            let lt = lifted_tm(&fs[i], &x)?;
            ok &= nu_apply(&idn, &fs[i], &fs[i], &a, &PshMorphism::identity(&lifted(&fs[i], &g)?), &lt)? == lt;
            for j in i..fs.len() {
                for k in j..fs.len() {
                    let nu = cast_family(&fs[i], &fs[j])?;
                    let mu = cast_family(&fs[j], &fs[k])?;
                    let numu: Vec<MorId> =
                        src.objects().map(|o| src.compose(mu[o.ix()], nu[o.ix()])).collect::<Result<_>>()?;
                    let lk = lifted_tm(&fs[k], &x)?;
                    let sk = PshMorphism::identity(&lifted(&fs[k], &g)?);
                    let once = nu_apply(&numu, &fs[i], &fs[k], &a, &sk, &lk)?;
                    let mid = nu_apply(&mu, &fs[j], &fs[k], &a, &sk, &lk)?;
                    let twice = nu_apply(&nu, &fs[i], &fs[j], &a, &lifted_nattrans(&mu, &fs[j], &fs[k], &g)?, &mid)?;
                    let direct = subst_tm(&lifted_tm(&fs[i], &x)?, &lifted_nattrans(&numu, &fs[i], &fs[k], &g)?)?;
                    ok &= once == twice && once == direct;
                }
            }
        }
        // alpha and its inverse, on the next adjoint pair.
        let f = adjs[ix % adjs.len()].clone();
        ix += 1;
        let (s, d) = (env.cat(f.dom().get())?, env.cat(f.cod().get())?);
        let adj = CubeAdjunction::new(&f, s.clone(), d.clone())?;
        let delta = random_presheaf(&d, TINY, &mut env.rng)?;
        let gamma = random_presheaf(&s, TINY, &mut env.rng)?;
        let ty = random_type(&gamma, TINY, &mut env.rng)?;
        let ld = lifted(&adj.left, &delta)?;
        let Some(sigma) = random_morphism(&ld, &gamma, &mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let Some(tm) = subst_ty(&ty, &sigma)?.random_section(&mut env.rng, &mut bud)? else {
            return Ok(false);
        };
        let at = alpha(&adj, &delta, &ty, &sigma, &tm)?;
        let tau = alpha_subst(&adj, &delta, &sigma)?;
        ok &= alpha_inv_subst(&adj, &gamma, &tau)? == sigma && alpha_inv(&adj, &ty, &tau, &at)? == tm;
        t.record(ok, || json!({ "adjunction": f, "ctx": g.sizes() }));
        Ok(true)
    })?;
    Ok(t.finish(1))
}
