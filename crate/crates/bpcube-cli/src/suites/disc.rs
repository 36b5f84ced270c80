//! Discreteness, shape quotients and the fixed counterexamples.

use std::sync::Arc;

use bpcube::cwf::{bot, maps_over, random_prop, random_type, subst_ty, top, Glue, Pi, Sigma, Weld};
use bpcube::disc::{
    degeneracy_characterizations, demo_cohpi_not_cwf, demo_rg_se_counterexample, demo_weld_rpsh_counterexample,
    find_modal_shape_map, has_right_lifting, horn_set, is_degenerate, is_discrete_ctx, is_discrete_map, is_discrete_ty,
    left_division_iso, modality_preserves_discreteness, path_vars, pullback, random_discrete_presheaf,
    random_discrete_type, right_functor, se_relation, shape_quotient_ctx, shape_quotient_ty, Cohesion0, DemoReport,
};
use bpcube::mode::{Depth, Level, Reshuffle};
use bpcube::psh::{
    find_iso, hom_set, random_morphism, random_presheaf, yoneda_mor, GenParams, Presheaf, PshMorphism, Rpsh,
};
use bpcube::Result;
use serde_json::json;

use super::mode::all_upto;
use super::psh::TINY;
use super::{Env, Outcome, Tally};

/// `Pi A B` is discrete whenever `B` is, for arbitrary `A`.
pub fn pi_discreteness(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(0) {
        let cat = env.cat(depth)?;
        for _ in 0..env.cfg.trials {
            let g = random_presheaf(&cat, TINY, &mut env.rng)?;
            let a = random_type(&g, TINY, &mut env.rng)?;
            let b = random_discrete_type(a.total(), TINY, &mut env.rng)?;
            let p = Pi::new(&a, &b, &mut env.budget())?;
            t.record(
                is_discrete_ty(&b) && is_discrete_ty(&p.ty),
                || json!({ "depth": depth, "ctx": g.sizes(), "a": a.total().sizes(), "b": b.total().sizes() }),
            );
        }
    }
    Ok(t.finish(1))
}

/// Discreteness of a map agrees with right lifting against every horn.
/// Display maps of random types and random maps alternate.
pub fn lifting(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let mut counts = serde_json::Map::new();
    for depth in env.depths(-1) {
        let cat = env.cat(depth)?;
        let hs = horn_set(&cat)?;
        let (mut yes, mut no, mut done, mut tries) = (0, 0, 0, 0);
        while done < env.cfg.trials && tries < env.cfg.trials * 20 {
            tries += 1;
            let mut b = env.budget();
            let rho = if tries % 2 == 0 {
                random_type(&random_presheaf(&cat, TINY, &mut env.rng)?, TINY, &mut env.rng)?.proj()
            } else {
                let g1 = random_presheaf(&cat, TINY, &mut env.rng)?;
                let g2 = random_presheaf(&cat, TINY, &mut env.rng)?;
                match random_morphism(&g1, &g2, &mut env.rng, &mut b)? {
                    Some(m) => m,
                    None => continue,
                }
            };
            done += 1;
            let d = is_discrete_map(&rho);
            let l = has_right_lifting(&rho, &hs, &mut b)?;
            if d {
                yes += 1;
            } else {
                no += 1;
            }
            t.record(d == l, || json!({ "depth": depth, "src": rho.src().sizes(), "dst": rho.dst().sizes() }));
        }
        t.record(yes > 0 && no > 0, || json!({ "depth": depth, "one_sided": [yes, no] }));
        counts.insert(depth.to_string(), json!({ "discrete": yes, "not_discrete": no }));
    }
    t.note("outcomes", serde_json::Value::Object(counts));
    Ok(t.finish(1))
}

/// Pulling a horn back along a map of representables yields a horn.
pub fn horn_stability(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(0) {
        let cat = env.cat(depth)?;
        let hs = horn_set(&cat)?;
        let mut b = env.budget();
        for (eta, &w) in hs.horns.iter().zip(&hs.bases) {
            for (eta2, &v) in hs.horns.iter().zip(&hs.bases) {
                for &phi in cat.hom(v, w) {
                    let (p, _, leg) = pullback(eta, &yoneda_mor(&cat, phi))?;
                    let ok = **leg.dst() == **eta2.dst() && find_iso(&p, eta2.src(), &mut b)?.is_some();
                    t.record(ok, || json!({ "depth": depth, "phi": cat.face_map(phi).to_string() }));
                }
            }
        }
    }
    Ok(t.finish(1))
}

/// `SE^T[sigma] = SE^(T[sigma])` exactly, at depth 0.
pub fn se_subst(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let cat = env.cat(0)?;
    let (mut done, mut tries, mut merged) = (0, 0, 0);
    while done < env.cfg.trials && tries < env.cfg.trials * 20 {
        tries += 1;
        let g = random_presheaf(&cat, TINY, &mut env.rng)?;
        let ty = random_type(&g, TINY, &mut env.rng)?;
        let delta = random_presheaf(&cat, TINY, &mut env.rng)?;
        let Some(sigma) = env.morphism(&delta, &g)? else {
            continue;
        };
        done += 1;
        let se = se_relation(&ty);
        let moved = se.subst(&sigma)?;
        let direct = se_relation(&subst_ty(&ty, &sigma)?);
        if !moved.is_equality() {
            merged += 1;
        }
        t.record(
            moved.same_as(&direct),
            || json!({ "ctx": g.sizes(), "delta": delta.sizes(), "type": ty.total().sizes() }),
        );
    }
    t.note("nontrivial_relations", merged);
    Ok(t.finish(env.cfg.trials))
}

/// The closed-form criterion for right reshuffles against instances: every
/// image of a discrete presheaf is discrete when the criterion holds, and
/// some image is not when it fails.
pub fn preservation(env: &mut Env) -> Result<Outcome> {
    const PER_FUNCTOR: usize = 20;
    let mut t = Tally::default();
    let (mut preserving, mut breaking) = (0, 0);
    for h in all_upto(env.cfg.depth).into_iter().filter(|h| h.count_adjoints().is_modality()) {
        let predicted = modality_preserves_discreteness(&h)?;
        let (src, dst) = (env.cat(h.dom().get())?, env.cat(h.cod().get())?);
        let k = right_functor(&h, src.clone(), dst)?;
        let mut all_discrete = true;
        for _ in 0..PER_FUNCTOR {
            let g = random_discrete_presheaf(&src, GenParams::new(3, 1), &mut env.rng)?;
            let img = Rpsh::new(&k, &g, &mut env.budget())?;
            all_discrete &= is_discrete_ctx(&img.psh);
        }
        if predicted {
            preserving += 1;
        } else {
            breaking += 1;
        }
        t.record(predicted == all_discrete, || json!({ "h": h, "predicted": predicted, "observed": all_discrete }));
    }
    t.note("preserving", preserving);
    t.note("not_preserving", breaking);
    Ok(t.finish(1))
}

pub fn degeneracy(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(0) {
        let cat = env.cat(depth)?;
        for _ in 0..env.cfg.trials {
            let g = random_presheaf(&cat, GenParams::new(3, env.cfg.dim), &mut env.rng)?;
            let mut ok = true;
            for o in cat.objects() {
                for v in path_vars(&cat, o) {
                    for x in 0..g.size(o) as u32 {
                        let [a, b, d] = degeneracy_characterizations(&g, o, x, v)?;
                        ok &= a == b && b == d && is_degenerate(&g, o, x, v)? == a;
                    }
                }
            }
            t.record(ok, || json!({ "depth": depth, "sizes": g.sizes() }));
        }
    }
    Ok(t.finish(1))
}

/// A type is discrete iff its display map is; propositions are discrete.
pub fn display_maps(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(-1) {
        let cat = env.cat(depth)?;
        for _ in 0..env.cfg.trials {
            let g = random_presheaf(&cat, TINY, &mut env.rng)?;
            let ty = random_type(&g, TINY, &mut env.rng)?;
            let ok = is_discrete_ty(&ty) == is_discrete_map(&ty.proj())
                && is_discrete_ty(&random_prop(&g, &mut env.rng)?)
                && is_discrete_ctx(&g) == is_discrete_map(&PshMorphism::to_terminal(&g));
            t.record(ok, || json!({ "depth": depth, "ctx": g.sizes() }));
        }
    }
    Ok(t.finish(1))
}

/// Sigma, Weld, Glue and the propositions `top`, `bot` preserve discreteness.
pub fn formers(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(-1) {
        let cat = env.cat(depth)?;
        for _ in 0..env.cfg.trials {
            let mut b = env.budget();
            let g = random_presheaf(&cat, TINY, &mut env.rng)?;
            let a = random_discrete_type(&g, TINY, &mut env.rng)?;
            let bb = random_discrete_type(a.total(), TINY, &mut env.rng)?;
            let mut ok = is_discrete_ty(&Sigma::new(&a, &bb)?.ty);
            let p = Arc::new(random_prop(&g, &mut env.rng)?);
            let ty = random_discrete_type(p.total(), TINY, &mut env.rng)?;
            let a_face = subst_ty(&a, &p.proj())?;
            if let Some(f) = subst_ty(&ty, &a_face.proj())?.random_section(&mut env.rng, &mut b)? {
                ok &= is_discrete_ty(&Weld::new(&a, &p, &ty, &f)?.ty);
            }
            if let Some(f) = subst_ty(&a_face, &ty.proj())?.random_section(&mut env.rng, &mut b)? {
                ok &= is_discrete_ty(&Glue::new(&a, &p, &ty, &f, &mut b)?.ty);
            }
            ok &= is_discrete_ty(&top(&g)) && is_discrete_ty(&bot(&g));
            t.record(ok, || json!({ "depth": depth, "ctx": g.sizes() }));
        }
    }
    Ok(t.finish(1))
}

/// The shape quotient is discrete, idempotent, and universal among maps
/// into discrete types.
pub fn shape_quotient(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(-1) {
        let cat = env.cat(depth)?;
        for _ in 0..env.cfg.trials {
            let mut b = env.budget();
            let g = random_presheaf(&cat, TINY, &mut env.rng)?;
            let ty = random_type(&g, TINY, &mut env.rng)?;
            let (q, inq) = shape_quotient_ty(&ty)?;
            let (qq, inq2) = shape_quotient_ty(&q)?;
            let (gq, s) = shape_quotient_ctx(&g)?;
            let basic = q.validate().is_ok()
                && is_discrete_ty(&q)
                && inq.is_surjective()
                && PshMorphism::compose(&q.proj(), &inq)? == ty.proj()
                && *qq == *q
                && inq2.is_iso()
                && se_relation(&q).is_equality()
                && is_discrete_ctx(&gq)
                && s.is_surjective();
            let d = random_discrete_type(&g, TINY, &mut env.rng)?;
            let from_t = maps_over(&ty, &d, &mut b)?;
            let from_q = maps_over(&q, &d, &mut b)?;
            let mut universal = from_t.len() == from_q.len();
            for m in &from_q {
                universal &= from_t.contains(&PshMorphism::compose(m, &inq)?);
            }
            t.record(basic && universal, || json!({ "depth": depth, "ctx": g.sizes(), "universal": universal }));
        }
    }
    Ok(t.finish(1))
}

/// Quotienting by a substituted relation is substituting the quotient, and
/// `SE^(T[sigma])` is contained in `SE^T[sigma]`.
pub fn quotient_subst(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(-1) {
        let cat = env.cat(depth)?;
        for _ in 0..env.cfg.trials {
            let g = random_presheaf(&cat, TINY, &mut env.rng)?;
            let ty = random_type(&g, TINY, &mut env.rng)?;
            let delta = random_presheaf(&cat, TINY, &mut env.rng)?;
            let Some(sigma) = env.morphism(&delta, &g)? else {
                continue;
            };
            let se = se_relation(&ty);
            let (tq, _) = se.quotient()?;
            let sub = se.subst(&sigma)?;
            let ok = *subst_ty(&tq, &sigma)? == *sub.quotient()?.0
                && se_relation(&subst_ty(&ty, &sigma)?).relation().is_subset(sub.relation());
            t.record(ok, || json!({ "depth": depth, "ctx": g.sizes(), "delta": delta.sizes() }));
        }
    }
    Ok(t.finish(1))
}

/// `cohpi0 -| delta0`: triangle identities, hom bijection, and `flat0` as
/// discrete coreflection.
pub fn cohesion0(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for n in env.depths(0) {
        let hi = env.cat(n)?;
        let c0 = Cohesion0::new(hi.clone())?;
        let mut b = env.budget();
        let path = hi.objects().find(|&o| hi.dims(o) == 1 && hi.cube(o).flavor(0) == 0).expect("truncation has a path");
        let yi = Arc::new(Presheaf::yoneda(&hi, path));
        let one_lo = Arc::new(Presheaf::terminal(&c0.lo));
        t.record(
            find_iso(&c0.cohpi(&yi)?, &one_lo, &mut b)?.is_some(),
            || json!({ "depth": n, "cohpi_interval": false }),
        );
        for _ in 0..env.cfg.trials {
            let g = random_presheaf(&hi, TINY, &mut env.rng)?;
            let d = random_presheaf(&c0.lo, TINY, &mut env.rng)?;
            let dd = c0.delta(&d)?;
            let cg = c0.cohpi(&g)?;
            let mut ok = is_discrete_ctx(&dd) && find_iso(&c0.cohpi(&dd)?, &d, &mut b)?.is_some();
            let eta = c0.unit(&g)?;
            ok &= PshMorphism::compose(&c0.counit(&cg)?, &c0.cohpi_map(&eta)?)? == PshMorphism::identity(&cg);
            ok &= PshMorphism::compose(&c0.delta_map(&c0.counit(&d)?)?, &c0.unit(&dd)?)? == PshMorphism::identity(&dd);
            let lhs = hom_set(&cg, &d, &mut b)?;
            let rhs = hom_set(&g, &dd, &mut b)?;
            ok &= lhs.len() == rhs.len();
            for tau in &lhs {
                ok &= rhs.contains(&PshMorphism::compose(&c0.delta_map(tau)?, &eta)?);
            }
            let th = random_discrete_presheaf(&hi, TINY, &mut env.rng)?;
            ok &= c0.flat(&th)?.1.is_iso();
            let (fg, iota) = c0.flat(&g)?;
            let into_flat = hom_set(&th, &fg, &mut b)?;
            let into_g = hom_set(&th, &g, &mut b)?;
            ok &= into_flat.len() == into_g.len();
            for m in &into_flat {
                ok &= into_g.contains(&PshMorphism::compose(&iota, m)?);
            }
            t.record(ok, || json!({ "depth": n, "g": g.sizes(), "d": d.sizes() }));
        }
    }
    Ok(t.finish(1))
}

/// For right reshuffles at depth 1 there is a map `H (G/SE) -> (H G)/SE`
/// over the projections.
pub fn modal_shape(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let c = env.cat(1)?;
    let hs: Vec<Reshuffle> = Reshuffle::all(Depth::new(1)?, Depth::new(1)?)
        .into_iter()
        .filter(|h| h.count_adjoints().is_modality() && h.lookup(Level::Eq) == Level::Eq)
        .collect();
    let mut multiplicity = std::collections::BTreeMap::new();
    for (i, h) in hs.iter().cycle().take(env.cfg.trials.max(hs.len())).enumerate() {
        let k = right_functor(h, c.clone(), c.clone())?;
        let g = random_presheaf(&c, TINY, &mut env.rng)?;
        let found = find_modal_shape_map(&k, &g, &mut env.budget())?;
        *multiplicity.entry(found.multiplicity.to_string()).or_insert(0usize) += 1;
        t.record(found.map.is_some(), || json!({ "trial": i, "h": h, "ctx": g.sizes() }));
    }
    t.note("multiplicity", json!(multiplicity));
    Ok(t.finish(1))
}

/// `kappa (rho T)` and `((mu \ rho) T)[iota]` agree on discrete types.
pub fn left_division(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let max = env.cfg.depth.min(1);
    for m in 0..=max {
        for n in 0..=max {
            for p in 0..=max {
                let d = |k| Depth::new(k);
                let mus: Vec<Reshuffle> =
                    Reshuffle::all(d(m)?, d(n)?).into_iter().filter(|r| r.count_adjoints().is_modality()).collect();
                let rhos: Vec<Reshuffle> = Reshuffle::all(d(p)?, d(n)?)
                    .into_iter()
                    .filter(|r| r.count_adjoints().is_modality() && r.lookup(Level::Eq) == Level::Eq)
                    .collect();
                let cp = env.cat(p)?;
                for mu in &mus {
                    for rho in &rhos {
                        let g = random_discrete_presheaf(&cp, TINY, &mut env.rng)?;
                        let ty = random_discrete_type(&g, TINY, &mut env.rng)?;
                        let r = left_division_iso(mu, rho, &ty, &mut env.budget())?;
                        t.record(r == Some(true), || json!({ "mu": mu, "rho": rho, "result": r }));
                    }
                }
            }
        }
    }
    Ok(t.finish(1))
}

fn demo(r: DemoReport) -> Outcome {
    Outcome { pass: r.holds, witness: json!({ "summary": r.summary, "measurements": r.measurements }) }
}

pub fn demo_rg_se(_env: &mut Env) -> Result<Outcome> {
    Ok(demo(demo_rg_se_counterexample()?))
}

pub fn demo_weld(_env: &mut Env) -> Result<Outcome> {
    Ok(demo(demo_weld_rpsh_counterexample()?))
}

pub fn demo_cohpi(_env: &mut Env) -> Result<Outcome> {
    Ok(demo(demo_cohpi_not_cwf()?))
}
