//! Presheaves: quotients, lifted functors and their adjoints.

use std::sync::Arc;

use bpcube::cube::{CubeAdjunction, CubeFunctor, ObjId};
use bpcube::cwf::{lifted_ty, random_type, subst_ty};
use bpcube::disc::{random_relation, right_functor, DepEquivRelation};
use bpcube::mode::Reshuffle;
use bpcube::psh::{
    find_iso, lifted, lifted_counit, lifted_morphism, lifted_unit, random_presheaf, rpsh_unit, EquivRelation,
    GenParams, Presheaf, PshMorphism, Rpsh,
};
use bpcube::Result;
use rand::Rng;
use serde_json::json;

use super::mode::all_upto;
use super::{Env, Outcome, Tally};

/// At most three generators per dimension, of dimension at most one.
pub(crate) const SMALL: GenParams = GenParams { max_gens: 3, gen_dim: 1 };
pub(crate) const TINY: GenParams = GenParams { max_gens: 2, gen_dim: 1 };

/// Naive closure: reflexive, symmetric, transitive and closed under
/// restriction, iterated to a fixpoint.
#[allow(clippy::needless_range_loop)]
fn naive_closure(p: &Presheaf, seeds: &[(ObjId, u32, u32)]) -> Vec<Vec<Vec<bool>>> {
    let cat = p.cat();
    let mut rel: Vec<Vec<Vec<bool>>> = cat
        .objects()
        .map(|o| {
            let n = p.size(o);
            (0..n).map(|x| (0..n).map(|y| x == y).collect()).collect()
        })
        .collect();
    for &(o, x, y) in seeds {
        rel[o.ix()][x as usize][y as usize] = true;
    }
    loop {
        let mut changed = false;
        for o in cat.objects() {
            let n = p.size(o);
            for x in 0..n {
                for y in 0..n {
                    if !rel[o.ix()][x][y] {
                        continue;
                    }
                    if !rel[o.ix()][y][x] {
                        rel[o.ix()][y][x] = true;
                        changed = true;
                    }
                    for z in 0..n {
                        if rel[o.ix()][y][z] && !rel[o.ix()][x][z] {
                            rel[o.ix()][x][z] = true;
                            changed = true;
                        }
                    }
                    for &m in cat.maps_into(o) {
                        let v = cat.dom(m).ix();
                        let (a, b) = (p.restrict(m, x as u32) as usize, p.restrict(m, y as u32) as usize);
                        if !rel[v][a][b] {
                            rel[v][a][b] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}

/// Generated equivalence relations against a naive closure, and quotients
/// whose projection has exactly that kernel.
pub fn quotient(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(-1) {
        let cat = env.cat(depth)?;
        for _ in 0..env.cfg.trials {
            let p = random_presheaf(&cat, SMALL, &mut env.rng)?;
            let mut seeds = Vec::new();
            for _ in 0..env.rng.gen_range(0..=3) {
                let o = ObjId(env.rng.gen_range(0..cat.num_objects() as u32));
                if p.size(o) > 0 {
                    let n = p.size(o) as u32;
                    seeds.push((o, env.rng.gen_range(0..n), env.rng.gen_range(0..n)));
                }
            }
            let e = EquivRelation::generate(&p, &seeds);
            let oracle = naive_closure(&p, &seeds);
            let (q, proj) = e.quotient()?;
            let valid = q.validate().is_ok() && proj.validate().is_ok() && proj.is_surjective();
            let mut agree = e.is_restriction_closed();
            for o in cat.objects() {
                for x in 0..p.size(o) as u32 {
                    for y in 0..p.size(o) as u32 {
                        let r = oracle[o.ix()][x as usize][y as usize];
                        agree &= e.related(o, x, y) == r && (proj.apply(o, x) == proj.apply(o, y)) == r;
                    }
                }
            }
            t.record(valid && agree, || json!({ "depth": depth, "sizes": p.sizes(), "seeds": seeds.len() }));
        }
    }
    Ok(t.finish(1))
}

/// Reshuffles `f` such that both `f` and its right adjoint act on cubes.
fn adjoint_pairs(max: i32) -> Vec<Reshuffle> {
    all_upto(max)
        .into_iter()
        .filter(|f| {
            f.count_adjoints().acts_on_cubes() && f.right_adjoint().is_some_and(|g| g.count_adjoints().acts_on_cubes())
        })
        .collect()
}

/// Triangle identities of the lifted adjunction `L^ -| R^` for every pair
/// of adjoint cube functors.
pub fn lifted_adjunction(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let pairs = adjoint_pairs(env.cfg.depth);
    for f in &pairs {
        let src = env.cat(f.dom().get())?;
        let dst = env.cat(f.cod().get())?;
        let adj = CubeAdjunction::new(f, src.clone(), dst.clone())?;
        for _ in 0..env.cfg.trials {
            let delta = random_presheaf(&dst, SMALL, &mut env.rng)?;
            let l_delta = lifted(&adj.left, &delta)?;
            let tri1 = PshMorphism::compose(
                &lifted_counit(&adj, &l_delta)?,
                &lifted_morphism(&adj.left, &lifted_unit(&adj, &delta)?)?,
            )?;
            let gamma = random_presheaf(&src, SMALL, &mut env.rng)?;
            let r_gamma = lifted(&adj.right, &gamma)?;
            let tri2 = PshMorphism::compose(
                &lifted_morphism(&adj.right, &lifted_counit(&adj, &gamma)?)?,
                &lifted_unit(&adj, &r_gamma)?,
            )?;
            let ok = tri1 == PshMorphism::identity(&l_delta) && tri2 == PshMorphism::identity(&r_gamma);
            t.record(ok, || json!({ "left": f, "delta": delta.sizes(), "gamma": gamma.sizes() }));
        }
    }
    t.note("pairs", pairs.len());
    Ok(t.finish(1))
}

/// Triangle identities of `F^ -| F_` for every reshuffling cube functor.
pub fn rpsh_adjunction(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let functors: Vec<Reshuffle> =
        all_upto(env.cfg.depth).into_iter().filter(|f| f.count_adjoints().acts_on_cubes()).collect();
    for f in &functors {
        let src = env.cat(f.dom().get())?;
        let dst = env.cat(f.cod().get())?;
        let ff = CubeFunctor::new(f, src.clone(), dst.clone())?;
        for _ in 0..env.cfg.trials {
            let mut b = env.budget();
            let delta = random_presheaf(&dst, SMALL, &mut env.rng)?;
            let ld = lifted(&ff, &delta)?;
            let r = Rpsh::new(&ff, &ld, &mut b)?;
            let tri1 = PshMorphism::compose(&r.counit()?, &lifted_morphism(&ff, &rpsh_unit(&delta, &r)?)?)?;

            let gamma = random_presheaf(&src, SMALL, &mut env.rng)?;
            let rg = Rpsh::new(&ff, &gamma, &mut b)?;
            let lrg = lifted(&ff, &rg.psh)?;
            let rlrg = Rpsh::new(&ff, &lrg, &mut b)?;
            let tri2 = PshMorphism::compose(&rlrg.map(&rg.counit()?, &rg)?, &rpsh_unit(&rg.psh, &rlrg)?)?;
            let ok = tri1 == PshMorphism::identity(&ld) && tri2 == PshMorphism::identity(&rg.psh);
            t.record(ok, || json!({ "f": f, "delta": delta.sizes(), "gamma": gamma.sizes() }));
        }
    }
    t.note("functors", functors.len());
    Ok(t.finish(1))
}

/// For `K -| L -| H` with `L` acting on cubes, the right adjoint of `K^`
/// and the lift `L^` agree up to isomorphism.
pub fn right_functor_iso(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let hs: Vec<Reshuffle> = all_upto(env.cfg.depth)
        .into_iter()
        .filter(|h| h.count_adjoints().is_modality())
        .filter(|h| h.left_adjoint().is_some_and(|l| l.count_adjoints().acts_on_cubes()))
        .collect();
    for (i, h) in hs.iter().cycle().take(env.cfg.trials.max(hs.len())).enumerate() {
        let src = env.cat(h.dom().get())?;
        let dst = env.cat(h.cod().get())?;
        let k = right_functor(h, src.clone(), dst.clone())?;
        let l = CubeFunctor::new(&h.left_adjoint().expect("filtered"), dst, src.clone())?;
        let gamma = random_presheaf(&src, TINY, &mut env.rng)?;
        let mut b = env.budget();
        let via_rpsh = Rpsh::new(&k, &gamma, &mut b)?.psh;
        let via_lift = lifted(&l, &gamma)?;
        let iso = find_iso(&via_rpsh, &via_lift, &mut b)?;
        t.record(iso.is_some(), || json!({ "trial": i, "h": h, "gamma": gamma.sizes() }));
    }
    t.note("functors", hs.len());
    Ok(t.finish(1))
}

/// Dependent relations: `E[s] <= F <=> E <= forall_s F`, for substitutions
/// and for lifting along a cube functor.
pub fn forall_adjunction(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let mut seen = [0usize; 2];
    for depth in env.depths(0) {
        let cat = env.cat(depth)?;
        let mut done = 0;
        let mut attempts = 0;
        while done < env.cfg.trials && attempts < env.cfg.trials * 20 {
            attempts += 1;
            let gamma = random_presheaf(&cat, TINY, &mut env.rng)?;
            let ty = random_type(&gamma, TINY, &mut env.rng)?;
            let delta = random_presheaf(&cat, TINY, &mut env.rng)?;
            let Some(sigma) = env.morphism(&delta, &gamma)? else {
                continue;
            };
            done += 1;
            let ts = subst_ty(&ty, &sigma)?;
            let e = random_relation(&ty, 3, &mut env.rng)?;
            let f = random_relation(&ts, 3, &mut env.rng)?;
            let all = DepEquivRelation::forall_subst(&ty, &sigma, &f)?;
            let lhs = e.subst(&sigma)?.is_subset(&f);
            seen[lhs as usize] += 1;
            let id = PshMorphism::identity(&gamma);
            let back = DepEquivRelation::forall_subst(&ty, &id, &e.subst(&id)?)?;
            t.record(
                lhs == e.is_subset(&all) && back.same_as(&e),
                || json!({ "depth": depth, "gamma": gamma.sizes(), "delta": delta.sizes() }),
            );
        }
    }
    let (lo, hi) = (env.cat(0)?, env.cat(1)?);
    let k: Arc<CubeFunctor> = CubeFunctor::new(&Reshuffle::parse("(=|=,0)", Some(0))?, lo, hi.clone())?;
    for _ in 0..env.cfg.trials {
        let gamma = random_presheaf(&hi, TINY, &mut env.rng)?;
        let ty = random_type(&gamma, TINY, &mut env.rng)?;
        let e = random_relation(&ty, 3, &mut env.rng)?;
        let f = random_relation(&lifted_ty(&k, &ty)?, 3, &mut env.rng)?;
        let all = DepEquivRelation::forall_lifted(&ty, &k, &f)?;
        let lhs = e.lifted(&k)?.is_subset(&f);
        seen[lhs as usize] += 1;
        t.record(lhs == e.is_subset(&all), || json!({ "lifted_along": "(=|=,0)", "gamma": gamma.sizes() }));
    }
    t.note("included", seen[1]);
    t.note("not_included", seen[0]);
    Ok(t.finish(1))
}
