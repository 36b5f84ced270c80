//! Discreteness: degeneracy in path dimensions, discrete contexts, maps and
//! types, the horn lifting characterization, the shape equivalence relation
//! and the discrete replacement it induces, the functors `cohpi0` and
//! `flat0`, discreteness of right reshuffling functors, and three fixed
//! counterexamples.
//!
//! At depth -1 there are no path dimensions; the true relation plays their
//! role and horns are the codiagonal `2 -> 1`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cube::{enumerate_nat_trans_cube as enumerate_nat_trans, CubeCat, CubeFunctor, MorId, ObjId, Truncation};
use crate::cwf::{lifted_ty, random_type, subst_ty, DepPresheaf, RpshTy, Weld};
use crate::error::{Error, Result};
use crate::mode::{Level, Named, Reshuffle};
use crate::psh::{
    hom_set, lifted, lifted_morphism, lifted_nattrans, random_presheaf, Budget, EquivRelation, GenParams, Generated,
    Presheaf, PshMorphism, Rpsh,
};

/// The path (flavor 0) variables of a cube.
pub fn path_vars(cat: &CubeCat, o: ObjId) -> Vec<usize> {
    if cat.depth().get() < 0 {
        return Vec::new();
    }
    let cube = cat.cube(o);
    (0..cube.dims()).filter(|&v| cube.flavor(v) == 0).collect()
}

fn check_path_var(g: &Presheaf, o: ObjId, var: usize) -> Result<()> {
    let cat = g.cat();
    let cube = cat.cube(o);
    if cat.depth().get() < 0 || var >= cube.dims() || cube.flavor(var) != 0 {
        return Err(Error::Var(format!("variable {var} of {cube} is not a path dimension")));
    }
    Ok(())
}

/// Whether `c` is degenerate in the path variable `var`.
pub fn is_degenerate(g: &Presheaf, o: ObjId, c: u32, var: usize) -> Result<bool> {
    check_path_var(g, o, var)?;
    Ok(g.is_degenerate(o, c, var))
}

/// The three characterizations of degeneracy, computed independently:
/// factoring over the weakening `(\i)`, being fixed by `(0/i, \i)`, and
/// being fixed by `(1/i, \i)`.
pub fn degeneracy_characterizations(g: &Presheaf, o: ObjId, c: u32, var: usize) -> Result<[bool; 3]> {
    check_path_var(g, o, var)?;
    let cat = g.cat();
    let (weak, low) = cat.weakening(o, var);
    let factors = (0..g.size(low) as u32).any(|d| g.restrict(weak, d) == c);
    let fixed = |one: bool| {
        let e = cat.endpoint(o, var, one);
        g.restrict(weak, g.restrict(e, c)) == c
    };
    Ok([factors, fixed(false), fixed(true)])
}

/// Every cell is degenerate in each of its path dimensions; at depth -1,
/// there is at most one point.
pub fn is_discrete_ctx(g: &Presheaf) -> bool {
    let cat = g.cat();
    if cat.depth().get() < 0 {
        return cat.objects().all(|o| g.size(o) <= 1);
    }
    cat.objects().all(|o| {
        let vars = path_vars(cat, o);
        (0..g.size(o) as u32).all(|c| vars.iter().all(|&v| g.is_degenerate(o, c, v)))
    })
}

/// `rho : G' -> G` reflects degeneracy in path dimensions; at depth -1 it
/// is injective.
pub fn is_discrete_map(rho: &PshMorphism) -> bool {
    let (src, dst) = (rho.src(), rho.dst());
    let cat = src.cat();
    if cat.depth().get() < 0 {
        return rho.is_injective();
    }
    cat.objects().all(|o| {
        let vars = path_vars(cat, o);
        (0..src.size(o) as u32)
            .all(|c| vars.iter().all(|&v| !dst.is_degenerate(o, rho.apply(o, c), v) || src.is_degenerate(o, c, v)))
    })
}

/// Every element over a cell degenerate in a path dimension is degenerate
/// there too; at depth -1, every fiber is a subsingleton.
pub fn is_discrete_ty(t: &DepPresheaf) -> bool {
    let (ctx, total) = (t.ctx(), t.total());
    let cat = ctx.cat();
    if cat.depth().get() < 0 {
        return cat.objects().all(|o| (0..ctx.size(o) as u32).all(|c| t.fiber_size(o, c) <= 1));
    }
    cat.objects().all(|o| {
        let vars = path_vars(cat, o);
        (0..total.size(o) as u32).all(|x| {
            let c = t.base_of(o, x);
            vars.iter().all(|&v| !ctx.is_degenerate(o, c, v) || total.is_degenerate(o, x, v))
        })
    })
}

/// Horn inclusions `Delta x y(i : 0) -> Delta` for representable `Delta`
/// with room for one more path dimension, or `1 + 1 -> 1` at depth -1.
pub struct HornSet {
    pub depth: i32,
    pub horns: Vec<PshMorphism>,
    /// The representing object of `Delta`, per horn.
    pub bases: Vec<ObjId>,
}

pub fn horn_set(cat: &Arc<CubeCat>) -> Result<HornSet> {
    let depth = cat.depth().get();
    let mut horns = Vec::new();
    let mut bases = Vec::new();
    let point = cat.objects().find(|&o| cat.dims(o) == 0).expect("point exists");
    if depth < 0 {
        let one = Arc::new(Presheaf::terminal(cat));
        let (two, _, _) = Presheaf::coproduct(&one, &one)?;
        horns.push(PshMorphism::to_terminal(&two));
        bases.push(point);
        return Ok(HornSet { depth, horns, bases });
    }
    let interval = cat
        .objects()
        .find(|&o| cat.dims(o) == 1 && cat.cube(o).flavor(0) == 0)
        .ok_or_else(|| Error::Param("truncation has no room for a path dimension".into()))?;
    let yi = Arc::new(Presheaf::yoneda(cat, interval));
    for w in cat.objects().filter(|&w| cat.dims(w) < cat.trunc().max_dims) {
        let yw = Arc::new(Presheaf::yoneda(cat, w));
        let (_, p1, _) = Presheaf::product(&yw, &yi)?;
        horns.push(p1);
        bases.push(w);
    }
    Ok(HornSet { depth, horns, bases })
}

/// A commuting square from a horn to `rho` that has no diagonal filler.
#[derive(Debug)]
pub struct LiftingFailure {
    pub horn: usize,
    pub top: PshMorphism,
    pub bottom: PshMorphism,
}

/// Search every square from each horn `eta : L -> D` to `rho : G' -> G`
/// for a diagonal `D -> G'`.
pub fn find_lifting_failure(rho: &PshMorphism, hs: &HornSet, budget: &mut Budget) -> Result<Option<LiftingFailure>> {
    for (h, eta) in hs.horns.iter().enumerate() {
        let tops = hom_set(eta.src(), rho.src(), budget)?;
        let bottoms = hom_set(eta.dst(), rho.dst(), budget)?;
        let diags = hom_set(eta.dst(), rho.src(), budget)?;
        for top in &tops {
            let upper = PshMorphism::compose(rho, top)?;
            for bottom in &bottoms {
                budget.tick()?;
                if PshMorphism::compose(bottom, eta)? != upper {
                    continue;
                }
                let filled = diags.iter().any(|d| {
                    PshMorphism::compose(d, eta).map(|x| x == *top).unwrap_or(false)
                        && PshMorphism::compose(rho, d).map(|x| x == *bottom).unwrap_or(false)
                });
                if !filled {
                    return Ok(Some(LiftingFailure { horn: h, top: top.clone(), bottom: bottom.clone() }));
                }
            }
        }
    }
    Ok(None)
}

pub fn has_right_lifting(rho: &PshMorphism, hs: &HornSet, budget: &mut Budget) -> Result<bool> {
    Ok(find_lifting_failure(rho, hs, budget)?.is_none())
}

/// The pullback of `f : A -> C` along `g : B -> C`, with its two legs.
pub fn pullback(f: &PshMorphism, g: &PshMorphism) -> Result<(Arc<Presheaf>, PshMorphism, PshMorphism)> {
    if *f.dst() != *g.dst() {
        return Err(Error::Composition("pullback legs have different codomains".into()));
    }
    let (a, b) = (f.src(), g.src());
    let cat = a.cat().clone();
    let mut cells: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut index: Vec<std::collections::HashMap<(u32, u32), u32>> = Vec::new();
    for o in cat.objects() {
        let lvl: Vec<(u32, u32)> = (0..a.size(o) as u32)
            .flat_map(|x| (0..b.size(o) as u32).map(move |y| (x, y)))
            .filter(|&(x, y)| f.apply(o, x) == g.apply(o, y))
            .collect();
        index.push(lvl.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect());
        cells.push(lvl);
    }
    let restrict = cat
        .morphisms()
        .map(|m| {
            let (v, w) = (cat.dom(m), cat.cod(m));
            cells[w.ix()].iter().map(|&(x, y)| index[v.ix()][&(a.restrict(m, x), b.restrict(m, y))]).collect()
        })
        .collect();
    let sizes = cells.iter().map(|l| l.len() as u32).collect();
    let p = Arc::new(Presheaf::new(cat.clone(), sizes, restrict)?);
    let pa = cells.iter().map(|l| l.iter().map(|&(x, _)| x).collect()).collect();
    let pb = cells.iter().map(|l| l.iter().map(|&(_, y)| y).collect()).collect();
    Ok((p.clone(), PshMorphism::new(p.clone(), a.clone(), pa)?, PshMorphism::new(p, b.clone(), pb)?))
}

/// An equivalence relation on a type, relating only elements of one fiber
/// and closed under restriction.
#[derive(Clone, Debug)]
pub struct DepEquivRelation {
    ty: Arc<DepPresheaf>,
    rel: EquivRelation,
}

impl DepEquivRelation {
    pub fn new(ty: Arc<DepPresheaf>, rel: EquivRelation) -> Result<Self> {
        if **rel.carrier() != **ty.total() {
            return Err(Error::Type("relation does not live on the type".into()));
        }
        if !rel.is_restriction_closed() {
            return Err(Error::Invalid("relation is not closed under restriction".into()));
        }
        let cat = ty.ctx().cat();
        for o in cat.objects() {
            let mut base_of_class = BTreeMap::new();
            for x in 0..ty.total().size(o) as u32 {
                let b = ty.base_of(o, x);
                if *base_of_class.entry(rel.class_of(o, x)).or_insert(b) != b {
                    return Err(Error::Invalid("relation crosses fibers".into()));
                }
            }
        }
        Ok(DepEquivRelation { ty, rel })
    }

    /// Equality on every fiber.
    pub fn equality(ty: &Arc<DepPresheaf>) -> Self {
        DepEquivRelation { ty: ty.clone(), rel: EquivRelation::equality(ty.total()) }
    }

    pub fn ty(&self) -> &Arc<DepPresheaf> {
        &self.ty
    }

    pub fn relation(&self) -> &EquivRelation {
        &self.rel
    }

    /// Whether elements `i` and `j` of the fiber over `c` are related.
    pub fn related(&self, o: ObjId, c: u32, i: u32, j: u32) -> bool {
        self.rel.related(o, self.ty.cell(o, c, i), self.ty.cell(o, c, j))
    }

    pub fn same_as(&self, other: &DepEquivRelation) -> bool {
        *self.ty == *other.ty && self.rel.is_subset(&other.rel) && other.rel.is_subset(&self.rel)
    }

    pub fn is_equality(&self) -> bool {
        let cat = self.ty.ctx().cat();
        cat.objects().all(|o| self.rel.num_classes(o) == self.ty.total().size(o))
    }

    /// `E[sigma]` on `T[sigma]`: elements over `d` are related when their
    /// copies over `sigma(d)` are.
    pub fn subst(&self, sigma: &PshMorphism) -> Result<DepEquivRelation> {
        let ty = subst_ty(&self.ty, sigma)?;
        let cat = ty.ctx().cat();
        let keys = cat
            .objects()
            .map(|o| {
                (0..ty.total().size(o) as u32)
                    .map(|x| {
                        let (d, i) = (ty.base_of(o, x), ty.local_of(o, x));
                        let k = self.rel.class_of(o, self.ty.cell(o, sigma.apply(o, d), i));
                        d * self.ty.total().size(o) as u32 + k
                    })
                    .collect()
            })
            .collect();
        let rel = EquivRelation::from_keys(ty.total(), keys);
        Ok(DepEquivRelation { ty, rel })
    }

    /// Inclusion of relations on the same type.
    pub fn is_subset(&self, other: &DepEquivRelation) -> bool {
        *self.ty == *other.ty && self.rel.is_subset(&other.rel)
    }

    /// `K^ E` on `K^ T`: elements over `K^ gamma` are related when they are
    /// related over `gamma`.
    pub fn lifted(&self, k: &CubeFunctor) -> Result<DepEquivRelation> {
        let ty = lifted_ty(k, &self.ty)?;
        let keys = k
            .src()
            .objects()
            .map(|v| (0..ty.total().size(v) as u32).map(|x| self.rel.class_of(k.obj(v), x)).collect())
            .collect();
        let rel = EquivRelation::from_keys(ty.total(), keys);
        Ok(DepEquivRelation { ty, rel })
    }

    /// The right adjoint of substitution: for `f` on `T[sigma]`, the
    /// relation on `T` holding at `(x, y)` over `gamma` when `f` relates
    /// `x<phi>` and `y<phi>` over every `d` with `sigma d = gamma phi`.
    pub fn forall_subst(ty: &Arc<DepPresheaf>, sigma: &PshMorphism, f: &DepEquivRelation) -> Result<DepEquivRelation> {
        if **f.ty() != *subst_ty(ty, sigma)? {
            return Err(Error::Type("relation does not live on the substituted type".into()));
        }
        let (ctx, delta) = (ty.ctx(), sigma.src());
        Self::forall_by(ty, |m, g, x, y| {
            let v = ctx.cat().dom(m);
            let gv = ctx.restrict(m, g);
            (0..delta.size(v) as u32).filter(|&d| sigma.apply(v, d) == gv).all(|d| f.related(v, d, x, y))
        })
    }

    /// The right adjoint of `K^` on relations: for `f` on `K^ T`, the
    /// relation on `T` holding at `(x, y)` over `gamma` when `f` relates
    /// `x<phi>` and `y<phi>` for every `phi : K V -> W`.
    pub fn forall_lifted(ty: &Arc<DepPresheaf>, k: &CubeFunctor, f: &DepEquivRelation) -> Result<DepEquivRelation> {
        if **f.ty() != *lifted_ty(k, ty)? {
            return Err(Error::Type("relation does not live on the lifted type".into()));
        }
        let ctx = ty.ctx();
        let src = k.src();
        let images: Vec<(ObjId, ObjId)> = src.objects().map(|v| (v, k.obj(v))).collect();
        Self::forall_by(ty, |m, g, x, y| {
            let kv = ctx.cat().dom(m);
            let gv = ctx.restrict(m, g);
            images.iter().filter(|&&(_, o)| o == kv).all(|&(v, _)| f.related(v, gv, x, y))
        })
    }

    /// The relation holding at `(x, y)` over `g` at `W` when `holds` accepts
    /// every restriction along a map into `W`.
    fn forall_by(ty: &Arc<DepPresheaf>, holds: impl Fn(MorId, u32, u32, u32) -> bool) -> Result<DepEquivRelation> {
        let ctx = ty.ctx();
        let cat = ctx.cat();
        let mut seeds = Vec::new();
        for w in cat.objects() {
            for g in 0..ctx.size(w) as u32 {
                let n = ty.fiber_size(w, g);
                for i in 0..n {
                    for j in i + 1..n {
                        let ok = cat
                            .maps_into(w)
                            .iter()
                            .all(|&m| holds(m, g, ty.restrict_local(m, g, i), ty.restrict_local(m, g, j)));
                        if ok {
                            seeds.push((w, ty.cell(w, g, i), ty.cell(w, g, j)));
                        }
                    }
                }
            }
        }
        let rel = EquivRelation::generate(ty.total(), &seeds);
        DepEquivRelation::new(ty.clone(), rel)
    }

    /// The quotient type `T/E` and the projection `ctx.T -> ctx.(T/E)`.
    /// Classes of a fiber are numbered by their first element.
    pub fn quotient(&self) -> Result<(Arc<DepPresheaf>, PshMorphism)> {
        let ty = &self.ty;
        let ctx = ty.ctx();
        let cat = ctx.cat();
        // local class index and class representatives per (level, base cell)
        let mut local: Vec<Vec<u32>> = Vec::new();
        let mut reps: Vec<Vec<Vec<u32>>> = Vec::new();
        for o in cat.objects() {
            let mut lo = vec![0; ty.total().size(o)];
            let mut ro = Vec::with_capacity(ctx.size(o));
            for c in 0..ctx.size(o) as u32 {
                let mut seen: Vec<u32> = Vec::new();
                for i in 0..ty.fiber_size(o, c) {
                    let x = ty.cell(o, c, i);
                    let k = self.rel.class_of(o, x);
                    let pos = match seen.iter().position(|&s| self.rel.class_of(o, s) == k) {
                        Some(p) => p,
                        None => {
                            seen.push(x);
                            seen.len() - 1
                        }
                    };
                    lo[x as usize] = pos as u32;
                }
                ro.push(seen);
            }
            local.push(lo);
            reps.push(ro);
        }
        let sizes = reps.iter().map(|ro| ro.iter().map(|r| r.len() as u32).collect()).collect();
        let q = DepPresheaf::assemble(ctx, sizes, |m, c, k| {
            let (v, w) = (cat.dom(m), cat.cod(m));
            let x = reps[w.ix()][c as usize][k as usize];
            Ok(local[v.ix()][ty.total().restrict(m, x) as usize])
        })?;
        let q = Arc::new(q);
        let comp = cat
            .objects()
            .map(|o| {
                (0..ty.total().size(o) as u32).map(|x| q.cell(o, ty.base_of(o, x), local[o.ix()][x as usize])).collect()
            })
            .collect();
        let inq = PshMorphism::new(ty.total().clone(), q.total().clone(), comp)?;
        Ok((q, inq))
    }
}

/// A random relation on `ty`: the closure of up to `seeds` random pairs
/// taken within single fibers.
pub fn random_relation<R: Rng>(ty: &Arc<DepPresheaf>, seeds: usize, rng: &mut R) -> Result<DepEquivRelation> {
    let ctx = ty.ctx();
    let cells: Vec<(ObjId, u32)> =
        ctx.cat().objects().flat_map(|o| (0..ctx.size(o) as u32).map(move |g| (o, g))).collect();
    let mut pairs = Vec::new();
    for _ in 0..seeds {
        let Some(&(o, g)) = cells.choose(rng) else { break };
        let n = ty.fiber_size(o, g);
        if n > 1 {
            pairs.push((o, ty.cell(o, g, rng.gen_range(0..n)), ty.cell(o, g, rng.gen_range(0..n))));
        }
    }
    DepEquivRelation::new(ty.clone(), EquivRelation::generate(ty.total(), &pairs))
}

/// Pairs `(p, p<0/i, \i>)` for every element over a cell degenerate in
/// the path dimension `i`.
fn se_seeds(total: &Presheaf, base_degenerate: impl Fn(ObjId, u32, usize) -> bool) -> Vec<(ObjId, u32, u32)> {
    let cat = total.cat();
    let mut seeds = Vec::new();
    for o in cat.objects() {
        for v in path_vars(cat, o) {
            let (weak, _) = cat.weakening(o, v);
            let e0 = cat.endpoint(o, v, false);
            for p in 0..total.size(o) as u32 {
                if base_degenerate(o, p, v) {
                    seeds.push((o, p, total.restrict(weak, total.restrict(e0, p))));
                }
            }
        }
    }
    seeds
}

/// The shape equivalence relation `SE^T`: the least restriction-closed
/// fiberwise equivalence contracting elements over cells degenerate in a
/// path dimension to their constant face. At depth -1, the true relation
/// on each fiber.
pub fn se_relation(t: &Arc<DepPresheaf>) -> DepEquivRelation {
    let cat = t.ctx().cat();
    let rel = if cat.depth().get() < 0 {
        let keys = cat.objects().map(|o| (0..t.total().size(o) as u32).map(|x| t.base_of(o, x)).collect()).collect();
        EquivRelation::from_keys(t.total(), keys)
    } else {
        EquivRelation::generate(t.total(), &se_seeds(t.total(), |o, p, v| t.ctx().is_degenerate(o, t.base_of(o, p), v)))
    };
    DepEquivRelation { ty: t.clone(), rel }
}

/// The shape equivalence relation on a context.
pub fn se_relation_ctx(g: &Arc<Presheaf>) -> EquivRelation {
    let cat = g.cat();
    if cat.depth().get() < 0 {
        let keys = cat.objects().map(|o| vec![0; g.size(o)]).collect();
        return EquivRelation::from_keys(g, keys);
    }
    EquivRelation::generate(g, &se_seeds(g, |_, _, _| true))
}

/// The discrete replacement `T/SE^T` and `inq : ctx.T -> ctx.(T/SE^T)`.
pub fn shape_quotient_ty(t: &Arc<DepPresheaf>) -> Result<(Arc<DepPresheaf>, PshMorphism)> {
    se_relation(t).quotient()
}

/// The shape quotient of a context and the projection onto it.
pub fn shape_quotient_ctx(g: &Arc<Presheaf>) -> Result<(Arc<Presheaf>, PshMorphism)> {
    se_relation_ctx(g).quotient()
}

/// The induced map of shape quotients `G/SE -> G'/SE`.
pub fn shape_map(sigma: &PshMorphism) -> Result<PshMorphism> {
    let (q1, s1) = shape_quotient_ctx(sigma.src())?;
    let (q2, s2) = shape_quotient_ctx(sigma.dst())?;
    let cat = q1.cat();
    let comp = cat
        .objects()
        .map(|o| {
            let mut out = vec![u32::MAX; q1.size(o)];
            for c in 0..sigma.src().size(o) as u32 {
                let k = s1.apply(o, c) as usize;
                let img = s2.apply(o, sigma.apply(o, c));
                if out[k] != u32::MAX && out[k] != img {
                    return Err(Error::Invalid("map does not respect the shape relation".into()));
                }
                out[k] = img;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    PshMorphism::new(q1, q2, comp)
}

/// The adjunctions `cohpi0 -| delta0 -| sqcup0` between depth `n` and
/// `n - 1`, with `cohpi0 = sqcup0 . (shape quotient)` and
/// `flat0 = delta0 . sqcup0`.
pub struct Cohesion0 {
    pub hi: Arc<CubeCat>,
    pub lo: Arc<CubeCat>,
    /// The cube functor of `cohpi0 : n -> n-1`; lifting it gives `delta0`.
    pub cohpi_f: Arc<CubeFunctor>,
    /// The cube functor of `delta0 : n-1 -> n`; lifting it gives `sqcup0`.
    pub delta_f: Arc<CubeFunctor>,
    /// The cast `flat0 -> Id` on cubes, as a family `Id => delta0 . cohpi0`.
    flat_nu: Vec<MorId>,
    flat_f: Arc<CubeFunctor>,
    id_hi: Arc<CubeFunctor>,
    counit_nu: Vec<MorId>,
    id_lo: Arc<CubeFunctor>,
    back_f: Arc<CubeFunctor>,
}

impl Cohesion0 {
    pub fn new(hi: Arc<CubeCat>) -> Result<Self> {
        let n = hi.depth().get();
        if n < 0 {
            return Err(Error::Param("cohpi0 needs depth at least 0".into()));
        }
        let lo = CubeCat::new(Truncation::new(n - 1, hi.trunc().max_dims)?);
        let cohpi = Named::Cohpi { l: 0, m: n }.build()?;
        let delta = Named::Delta { k1: 0, l: 0, m: n }.build()?;
        let cohpi_f = CubeFunctor::new(&cohpi, hi.clone(), lo.clone())?;
        let delta_f = CubeFunctor::new(&delta, lo.clone(), hi.clone())?;
        let flat = Reshuffle::compose(&delta, &cohpi)?;
        let flat_f = CubeFunctor::new(&flat, hi.clone(), hi.clone())?;
        let id_hi = CubeFunctor::new(&Reshuffle::identity(hi.depth()), hi.clone(), hi.clone())?;
        let flat_nu = unique_nat_trans(&id_hi, &flat_f)?;
        let back = Reshuffle::compose(&cohpi, &delta)?;
        let back_f = CubeFunctor::new(&back, lo.clone(), lo.clone())?;
        let id_lo = CubeFunctor::new(&Reshuffle::identity(lo.depth()), lo.clone(), lo.clone())?;
        let counit_nu = unique_nat_trans(&id_lo, &back_f)?;
        Ok(Cohesion0 { hi, lo, cohpi_f, delta_f, flat_nu, flat_f, id_hi, counit_nu, id_lo, back_f })
    }

    pub fn delta(&self, d: &Presheaf) -> Result<Arc<Presheaf>> {
        lifted(&self.cohpi_f, d)
    }

    pub fn delta_map(&self, m: &PshMorphism) -> Result<PshMorphism> {
        lifted_morphism(&self.cohpi_f, m)
    }

    pub fn sqcup(&self, g: &Presheaf) -> Result<Arc<Presheaf>> {
        lifted(&self.delta_f, g)
    }

    pub fn cohpi(&self, g: &Arc<Presheaf>) -> Result<Arc<Presheaf>> {
        self.sqcup(&shape_quotient_ctx(g)?.0)
    }

    pub fn cohpi_map(&self, sigma: &PshMorphism) -> Result<PshMorphism> {
        lifted_morphism(&self.delta_f, &shape_map(sigma)?)
    }

    /// `flat0 G = delta0 (sqcup0 G)` with the cast `iota : flat0 G -> G`.
    pub fn flat(&self, g: &Arc<Presheaf>) -> Result<(Arc<Presheaf>, PshMorphism)> {
        let fg = self.delta(&*self.sqcup(g)?)?;
        let iota = lifted_nattrans(&self.flat_nu, &self.id_hi, &self.flat_f, g)?;
        debug_assert_eq!(**iota.src(), *fg);
        Ok((fg, iota))
    }

    /// `G -> delta0 (cohpi0 G)`: project onto the shape quotient, then invert
    /// the cast, which is an isomorphism on discrete presheaves.
    pub fn unit(&self, g: &Arc<Presheaf>) -> Result<PshMorphism> {
        let (q, s) = shape_quotient_ctx(g)?;
        let (_, iota) = self.flat(&q)?;
        let inv = iota.inverse().ok_or_else(|| Error::Invalid("flat0 cast is not invertible on a quotient".into()))?;
        PshMorphism::compose(&inv, &s)
    }

    /// `cohpi0 (delta0 D) -> D`.
    pub fn counit(&self, d: &Arc<Presheaf>) -> Result<PshMorphism> {
        let dd = self.delta(d)?;
        let (_, s) = shape_quotient_ctx(&dd)?;
        let s_inv = lifted_morphism(&self.delta_f, &s)?
            .inverse()
            .ok_or_else(|| Error::Invalid("delta0 image is not discrete".into()))?;
        let eps = lifted_nattrans(&self.counit_nu, &self.id_lo, &self.back_f, d)?;
        PshMorphism::compose(&eps, &s_inv)
    }
}

fn unique_nat_trans(f: &CubeFunctor, g: &CubeFunctor) -> Result<Vec<MorId>> {
    let mut all = enumerate_nat_trans(f, g)?;
    if all.len() != 1 {
        return Err(Error::Invalid(format!("expected one cube transformation, found {}", all.len())));
    }
    Ok(all.remove(0))
}

/// The closed form: a right reshuffle `H : m -> n` preserves discreteness
/// iff `m = -1` or (`n >= 0` and `0 . H = 0`).
pub fn modality_preserves_discreteness(h: &Reshuffle) -> Result<bool> {
    if !h.count_adjoints().is_modality() {
        return Err(Error::Class(format!("{h} is not a right reshuffle")));
    }
    Ok(h.dom().get() == -1 || (h.cod().get() >= 0 && h.lookup(Level::Fin(0)) == Level::Fin(0)))
}

/// The cube functor `K : Cube_m -> Cube_n` with `K -| L -| H`; the
/// presheaf functor of `H` is the right adjoint of lifting along `K`.
pub fn right_functor(h: &Reshuffle, src: Arc<CubeCat>, dst: Arc<CubeCat>) -> Result<Arc<CubeFunctor>> {
    let k = h
        .left_adjoint()
        .and_then(|l| l.left_adjoint())
        .ok_or_else(|| Error::Class(format!("{h} does not have two left adjoints")))?;
    CubeFunctor::new(&k, src, dst)
}

/// A map `H (G/SE) -> (H G)/SE` commuting with the two projections, and
/// how many such maps exist.
#[derive(Debug)]
pub struct ModalShapeMap {
    pub map: Option<PshMorphism>,
    pub multiplicity: usize,
}

/// Everything is built at the full truncation, but the search runs one
/// dimension lower: top-dimensional cells have no paths above them, so the
/// truncated shape relation never identifies them.
pub fn find_modal_shape_map(k: &Arc<CubeFunctor>, g: &Arc<Presheaf>, budget: &mut Budget) -> Result<ModalShapeMap> {
    let (q, s) = shape_quotient_ctx(g)?;
    let hg = Rpsh::new(k, g, budget)?;
    let hq = Rpsh::new(k, &q, budget)?;
    let hs = hg.map(&s, &hq)?;
    let (qh, sh) = shape_quotient_ctx(&hg.psh)?;
    let trunc = hg.psh.cat().trunc();
    let (hs, sh) = if trunc.max_dims > 0 && trunc.depth.get() >= 0 {
        let low = CubeCat::new(Truncation::new(trunc.depth.get(), trunc.max_dims - 1)?);
        let hg_low = Arc::new(hg.psh.truncate(&low)?);
        let hq_low = Arc::new(hq.psh.truncate(&low)?);
        let qh_low = Arc::new(qh.truncate(&low)?);
        (hs.truncate(&hg_low, &hq_low)?, sh.truncate(&hg_low, &qh_low)?)
    } else {
        (hs, sh)
    };
    let mut found = Vec::new();
    for iota in hom_set(hs.dst(), sh.dst(), budget)? {
        if PshMorphism::compose(&iota, &hs)? == sh {
            found.push(iota);
        }
    }
    Ok(ModalShapeMap { multiplicity: found.len(), map: found.into_iter().next() })
}

/// For a modality `mu : m -> n` with `theta -| kappa -| mu`, a modality
/// `rho : p -> n` and a discrete type `T` over `G` at depth `p`, compare
/// `kappa (rho T)` with `((mu \ rho) T)[iota]` up to isomorphism over
/// `kappa (rho G)`. Returns `None` when the comparison cast is not unique.
pub fn left_division_iso(
    mu: &Reshuffle,
    rho: &Reshuffle,
    t: &Arc<DepPresheaf>,
    budget: &mut Budget,
) -> Result<Option<bool>> {
    let gamma = t.ctx();
    let cat_p = gamma.cat().clone();
    let d = cat_p.trunc().max_dims;
    let cat_m = CubeCat::new(Truncation::new(mu.dom().get(), d)?);
    let cat_n = CubeCat::new(Truncation::new(mu.cod().get(), d)?);
    let theta = mu
        .left_adjoint()
        .and_then(|k| k.left_adjoint())
        .ok_or_else(|| Error::Class(format!("{mu} is not a modality")))?;
    let theta_f = CubeFunctor::new(&theta, cat_m.clone(), cat_n.clone())?;
    let chi_f = right_functor(rho, cat_p.clone(), cat_n.clone())?;
    let div = Reshuffle::left_divide(mu, rho)?;
    let lam_f = right_functor(&div, cat_p.clone(), cat_m.clone())?;
    let theta_lam = CubeFunctor::new(&Reshuffle::compose(&theta, lam_f.reshuffle())?, cat_p.clone(), cat_n.clone())?;
    let nus = enumerate_nat_trans(&chi_f, &theta_lam)?;
    let [nu] = nus.as_slice() else { return Ok(None) };

    let r_chi = Rpsh::new(&chi_f, gamma, budget)?;
    let r_lam = Rpsh::new(&lam_f, gamma, budget)?;
    let kr_gamma = lifted(&theta_f, &r_chi.psh)?;
    // iota(sigma)_U(phi) = sigma_U(theta(phi) . nu_U) for phi : lam U -> W
    let comp = cat_m
        .objects()
        .map(|w| {
            let tw = theta_f.obj(w);
            (0..r_chi.psh.size(tw) as u32)
                .map(|c| {
                    let sigma = r_chi.cell(tw, c);
                    let cells: Vec<Vec<u32>> = cat_p
                        .objects()
                        .map(|u| {
                            cat_m
                                .hom(lam_f.obj(u), w)
                                .iter()
                                .map(|&phi| {
                                    let m = cat_n.compose(theta_f.mor(phi), nu[u.ix()]).expect("composable");
                                    sigma[u.ix()][cat_n.hom_pos(m)]
                                })
                                .collect()
                        })
                        .collect();
                    r_lam.lookup(w, &cells).ok_or_else(|| Error::Invalid("comparison cast leaves the rpsh".into()))
                })
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let iota = PshMorphism::new(kr_gamma, r_lam.psh.clone(), comp)?;
    let krt = crate::cwf::lifted_ty(&theta_f, &RpshTy::new(&r_chi, t, budget)?.ty)?;
    let divt = subst_ty(&RpshTy::new(&r_lam, t, budget)?.ty, &iota)?;
    Ok(Some(crate::cwf::iso_over(&krt, &divt, budget)?.is_some()))
}

/// A random discrete presheaf: either the shape quotient of a random
/// presheaf, or one generated by points and cubes without path dimensions.
pub fn random_discrete_presheaf<R: Rng>(cat: &Arc<CubeCat>, params: GenParams, rng: &mut R) -> Result<Arc<Presheaf>> {
    if cat.depth().get() < 0 {
        return Ok(Arc::new(Presheaf::constant(cat, rng.gen_range(0..=1))));
    }
    if rng.gen_bool(0.5) {
        return Ok(shape_quotient_ctx(&random_presheaf(cat, params, rng)?)?.0);
    }
    let point = cat.objects().find(|&o| cat.dims(o) == 0).expect("point exists");
    let npts = rng.gen_range(1..=params.max_gens.max(1));
    let mut gens = vec![point; npts];
    let bridgy: Vec<ObjId> = cat
        .objects()
        .filter(|&o| {
            let d = cat.dims(o);
            d >= 1 && d <= params.gen_dim && cat.cube(o).flavors().iter().all(|&f| f >= 1)
        })
        .collect();
    let mut seeds = Vec::new();
    if !bridgy.is_empty() {
        for _ in 0..rng.gen_range(0..=params.max_gens) {
            let w = *bridgy.choose(rng).expect("nonempty");
            let g = gens.len();
            gens.push(w);
            for &m in cat.hom(point, w) {
                if rng.gen_bool(0.5) {
                    seeds.push(((g, m), (rng.gen_range(0..npts), cat.id(point))));
                }
            }
        }
    }
    Ok(Generated::new(cat, &gens, &seeds)?.psh)
}

/// The discrete replacement of a random type.
pub fn random_discrete_type<R: Rng>(ctx: &Arc<Presheaf>, params: GenParams, rng: &mut R) -> Result<Arc<DepPresheaf>> {
    Ok(shape_quotient_ty(&random_type(ctx, params, rng)?)?.0)
}

/// The outcome of a fixed counterexample.
#[derive(Clone, Debug, Serialize)]
pub struct DemoReport {
    pub name: String,
    /// Whether every measurement matched its expected value.
    pub holds: bool,
    pub summary: String,
    pub measurements: BTreeMap<String, Value>,
}

fn count_nondegenerate_over(t: &DepPresheaf, o: ObjId, c: u32) -> usize {
    let cat = t.ctx().cat();
    let vars = path_vars(cat, o);
    (0..t.fiber_size(o, c)).filter(|&i| vars.iter().all(|&v| !t.total().is_degenerate(o, t.cell(o, c, i), v))).count()
}

fn edge_object(cat: &CubeCat) -> ObjId {
    cat.objects().find(|&o| cat.dims(o) == 1).expect("edge object")
}

fn point_object(cat: &CubeCat) -> ObjId {
    cat.objects().find(|&o| cat.dims(o) == 0).expect("point object")
}

/// Over reflexive graphs, the shape relation does not commute with
/// substitution. `T` over the point has nodes `x`, `y` and parallel edges
/// `p`, `q`; `sigma : y(i) -> ()`.
pub fn demo_rg_se_counterexample() -> Result<DemoReport> {
    let rg = CubeCat::new(Truncation::new(0, 1)?);
    let (pt, edge) = (point_object(&rg), edge_object(&rg));
    let e0 = rg.endpoint(edge, 0, false);
    let e1 = rg.endpoint(edge, 0, true);
    let idp = rg.id(pt);
    let seeds = [((2, e0), (0, idp)), ((2, e1), (1, idp)), ((3, e0), (0, idp)), ((3, e1), (1, idp))];
    let total = Generated::new(&rg, &[pt, pt, edge, edge], &seeds)?.psh;
    let ty = DepPresheaf::from_projection(&PshMorphism::to_terminal(&total));
    let delta = Arc::new(Presheaf::yoneda(&rg, edge));
    let sigma = PshMorphism::to_terminal(&delta);
    let delta1 = rg.hom_pos(rg.id(edge)) as u32;

    let quot_then_subst = subst_ty(&shape_quotient_ty(&ty)?.0, &sigma)?;
    let ts = subst_ty(&ty, &sigma)?;
    let subst_then_quot = shape_quotient_ty(&ts)?.0;
    let a = count_nondegenerate_over(&quot_then_subst, edge, delta1);
    let b = count_nondegenerate_over(&subst_then_quot, edge, delta1);
    let rel_equal = se_relation(&ty).subst(&sigma)?.same_as(&se_relation(&ts));
    let holds = a == 1 && b == 4 && !rel_equal;
    let mut measurements = BTreeMap::new();
    measurements.insert("quotient_then_subst_edges".into(), json!(a));
    measurements.insert("subst_then_quotient_edges".into(), json!(b));
    measurements.insert("relations_equal".into(), json!(rel_equal));
    let summary = if holds {
        format!("edges: {a} vs {b}; inequality confirmed")
    } else {
        format!("edges: {a} vs {b}; expected 1 vs 4")
    };
    Ok(DemoReport { name: "rg-se".into(), holds, summary, measurements })
}

/// The right adjoint of lifting along `() |-> ()` from depth -1 to
/// reflexive graphs does not preserve weld types.
pub fn demo_weld_rpsh_counterexample() -> Result<DemoReport> {
    let mut budget = Budget::default();
    let pt = CubeCat::new(Truncation::new(-1, 1)?);
    let rg = CubeCat::new(Truncation::new(0, 1)?);
    let tri = Reshuffle::all(pt.depth(), rg.depth())
        .into_iter()
        .find(|g| g.count_adjoints().acts_on_cubes())
        .ok_or_else(|| Error::Invalid("no cube functor from depth -1".into()))?;
    let tri_f = CubeFunctor::new(&tri, pt.clone(), rg.clone())?;
    let p0 = point_object(&pt);

    // Gamma = {g0, g1}; A = {}, {a1}; P = {*}, {}; T over (g0, *) = {t0}.
    let gamma = Arc::new(Presheaf::constant(&pt, 2));
    let a = Arc::new(DepPresheaf::new(gamma.clone(), Arc::new(Presheaf::constant(&pt, 1)), vec![vec![0, 0, 1]])?);
    let p = Arc::new(DepPresheaf::sub(&gamma, &[vec![true, false]])?);
    let t = Arc::new(DepPresheaf::new(p.total().clone(), Arc::new(Presheaf::constant(&pt, 1)), vec![vec![0, 1]])?);
    let f_ty = subst_ty(&t, &subst_ty(&a, &p.proj())?.proj())?;
    let f = sole_term(&f_ty, &mut budget)?;
    let omega = Weld::new(&a, &p, &t, &f)?;
    let fib0 = omega.ty.fiber_size(p0, 0);
    let fib1 = omega.ty.fiber_size(p0, 1);
    // the element over g1 is the image of (g1, a1) under weld
    let from_a = omega.in_total().apply(p0, a.cell(p0, 1, 0)) == omega.ty.cell(p0, 1, 0);
    let w = sole_term(&omega.ty, &mut budget)?;

    let r_gamma = Rpsh::new(&tri_f, &gamma, &mut budget)?;
    let r_omega = RpshTy::new(&r_gamma, &omega.ty, &mut budget)?;
    let rw = r_omega.tm(&w)?;
    let rw_global = **rw.ty() == *r_omega.ty;

    // Rebuild the weld from the rpsh images of its data.
    let ra = RpshTy::new(&r_gamma, &a, &mut budget)?;
    let rp = RpshTy::new(&r_gamma, &p, &mut budget)?;
    let r_gp = Rpsh::new(&tri_f, p.total(), &mut budget)?;
    let rt_raw = RpshTy::new(&r_gp, &t, &mut budget)?;
    let rt = subst_ty(&rt_raw.ty, &crate::cwf::rpsh_pair(&rp, &r_gp)?)?;
    let rf_ty = subst_ty(&rt, &subst_ty(&ra.ty, &rp.ty.proj())?.proj())?;
    // The context of rf_ty is empty, so the rpsh image of f is its only term.
    let rf = sole_term(&rf_ty, &mut budget)?;
    let omega2 = Weld::new(&ra.ty, &rp.ty, &rt, &rf)?;

    let edge = edge_object(&rg);
    let rg_gamma = &r_gamma.psh;
    // the edge from g0 to g1
    let e0 = rg.endpoint(edge, 0, false);
    let e1 = rg.endpoint(edge, 0, true);
    let gam0 = r_gamma.lookup(point_object(&rg), &[vec![0]]).expect("node g0");
    let gam1 = r_gamma.lookup(point_object(&rg), &[vec![1]]).expect("node g1");
    let edge_cell = (0..rg_gamma.size(edge) as u32)
        .find(|&c| rg_gamma.restrict(e0, c) == gam0 && rg_gamma.restrict(e1, c) == gam1)
        .ok_or_else(|| Error::Invalid("codiscrete graph lacks an edge".into()))?;
    let edge_fiber = omega2.ty.fiber_size(edge, edge_cell);
    let omega2_terms = omega2.ty.sections(&mut budget)?.len();

    let holds = fib0 == 1 && fib1 == 1 && from_a && rw_global && edge_fiber == 0 && omega2_terms == 0;
    let mut measurements = BTreeMap::new();
    measurements.insert("omega_fiber_g0".into(), json!(fib0));
    measurements.insert("omega_fiber_g1".into(), json!(fib1));
    measurements.insert("omega_g1_is_weld_a1".into(), json!(from_a));
    measurements.insert("rpsh_term_exists".into(), json!(rw_global));
    measurements.insert("rebuilt_edge_fiber".into(), json!(edge_fiber));
    measurements.insert("rebuilt_global_terms".into(), json!(omega2_terms));
    let summary = if holds {
        "rebuilt weld edge fiber empty; rpsh term exists".to_string()
    } else {
        "weld/rpsh fixture did not reproduce".to_string()
    };
    Ok(DemoReport { name: "weld-rpsh".into(), holds, summary, measurements })
}

fn sole_term(ty: &Arc<DepPresheaf>, budget: &mut Budget) -> Result<crate::cwf::Term> {
    let mut all = ty.sections(budget)?;
    if all.len() != 1 {
        return Err(Error::Invalid(format!("expected exactly one term, found {}", all.len())));
    }
    Ok(all.remove(0))
}

/// `cohpi0` is not a morphism of CwFs. `Gamma` is an edge `g -- g'`, and
/// `T` has one node `t` over `g` and two nodes `t'`, `t''` over `g'`, each
/// joined to `t` over the edge.
pub fn demo_cohpi_not_cwf() -> Result<DemoReport> {
    let rg = CubeCat::new(Truncation::new(0, 1)?);
    let (pt, edge) = (point_object(&rg), edge_object(&rg));
    let e0 = rg.endpoint(edge, 0, false);
    let e1 = rg.endpoint(edge, 0, true);
    let gamma = Arc::new(Presheaf::yoneda(&rg, edge));
    // total: t, t', t'', and edges t--t', t--t''
    let idp = rg.id(pt);
    let seeds = [((3, e0), (0, idp)), ((3, e1), (1, idp)), ((4, e0), (0, idp)), ((4, e1), (2, idp))];
    let gen = Generated::new(&rg, &[pt, pt, pt, edge, edge], &seeds)?;
    let g0 = gamma.restrict(e0, rg.hom_pos(rg.id(edge)) as u32);
    let g1 = gamma.restrict(e1, rg.hom_pos(rg.id(edge)) as u32);
    let edge_cell = rg.hom_pos(rg.id(edge)) as u32;
    // the projection: generator cells go to g0, g1, g1, edge, edge
    let proj = {
        let targets = [(pt, g0), (pt, g1), (pt, g1), (edge, edge_cell), (edge, edge_cell)];
        let mut comp: Vec<Vec<u32>> = rg.objects().map(|o| vec![u32::MAX; gen.psh.size(o)]).collect();
        for (g, &(o, base)) in targets.iter().enumerate() {
            for v in rg.objects() {
                for &m in rg.hom(v, o) {
                    let x = gen.cell(g, m);
                    comp[v.ix()][x as usize] = gamma.restrict(m, base);
                }
            }
        }
        PshMorphism::new(gen.psh.clone(), gamma.clone(), comp)?
    };
    let ty = DepPresheaf::from_projection(&proj);
    let c0 = Cohesion0::new(rg.clone())?;
    let gam_at = |c: u32| crate::psh::yoneda_map(&gamma, pt, c);
    let (s0, s1) = (gam_at(g0), gam_at(g1));
    let same_image = c0.cohpi_map(&s0)? == c0.cohpi_map(&s1)?;
    let lo_pt = point_object(&c0.lo);
    let n0 = c0.cohpi(subst_ty(&ty, &s0)?.total())?.size(lo_pt);
    let n1 = c0.cohpi(subst_ty(&ty, &s1)?.total())?.size(lo_pt);
    let holds = same_image && n0 == 1 && n1 == 2;
    let mut measurements = BTreeMap::new();
    measurements.insert("cohpi_substitutions_equal".into(), json!(same_image));
    measurements.insert("cohpi_fiber_g".into(), json!(n0));
    measurements.insert("cohpi_fiber_g_prime".into(), json!(n1));
    let summary =
        if holds { "substitution not preserved".to_string() } else { "cohpi fixture did not reproduce".to_string() };
    Ok(DemoReport { name: "cohpi-cwf".into(), holds, summary, measurements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Cube;
    use crate::cwf::{bot, maps_over, random_prop, top, Glue, Pi, Sigma};
    use crate::mode::Depth;
    use crate::psh::random_morphism;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cat(depth: i32, d: usize) -> Arc<CubeCat> {
        CubeCat::new(Truncation::new(depth, d).unwrap())
    }

    fn obj(c: &CubeCat, s: &str) -> ObjId {
        c.obj_of(&Cube::parse(c.depth(), s).unwrap()).unwrap()
    }

    #[test]
    fn demos_reproduce() {
        let rg = demo_rg_se_counterexample().unwrap();
        assert!(rg.holds, "{rg:?}");
        assert_eq!(rg.measurements["quotient_then_subst_edges"], json!(1));
        assert_eq!(rg.measurements["subst_then_quotient_edges"], json!(4));
        let w = demo_weld_rpsh_counterexample().unwrap();
        assert!(w.holds, "{w:?}");
        let c = demo_cohpi_not_cwf().unwrap();
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn forall_adjunctions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut seen = [0usize; 4];
        for depth in 0..=1 {
            let c = cat(depth, 2);
            for _ in 0..25 {
                let gamma = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let t = random_type(&gamma, GenParams::new(2, 1), &mut rng).unwrap();
                let delta = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let Some(sigma) = random_morphism(&delta, &gamma, &mut rng, &mut Budget::default()).unwrap() else {
                    continue;
                };
                let ts = subst_ty(&t, &sigma).unwrap();
                let e = random_relation(&t, 3, &mut rng).unwrap();
                let f = random_relation(&ts, 3, &mut rng).unwrap();
                let all = DepEquivRelation::forall_subst(&t, &sigma, &f).unwrap();
                let lhs = e.subst(&sigma).unwrap().is_subset(&f);
                assert_eq!(lhs, e.is_subset(&all));
                seen[lhs as usize] += 1;
                let id = PshMorphism::identity(&gamma);
                let e_id = DepEquivRelation::forall_subst(&t, &id, &e.subst(&id).unwrap()).unwrap();
                assert!(e_id.same_as(&e));
            }
        }
        // K = the depth-0 cube functor (=|=,0) into depth 1
        let (lo, hi) = (cat(0, 2), cat(1, 2));
        let k = CubeFunctor::new(&Reshuffle::parse("(=|=,0)", Some(0)).unwrap(), lo, hi.clone()).unwrap();
        for _ in 0..25 {
            let gamma = random_presheaf(&hi, GenParams::new(2, 1), &mut rng).unwrap();
            let t = random_type(&gamma, GenParams::new(2, 1), &mut rng).unwrap();
            let e = random_relation(&t, 3, &mut rng).unwrap();
            let kt = lifted_ty(&k, &t).unwrap();
            let f = random_relation(&kt, 3, &mut rng).unwrap();
            let all = DepEquivRelation::forall_lifted(&t, &k, &f).unwrap();
            let lhs = e.lifted(&k).unwrap().is_subset(&f);
            assert_eq!(lhs, e.is_subset(&all));
            seen[2 + lhs as usize] += 1;
        }
        assert!(seen.iter().all(|&n| n > 0), "{seen:?}");
    }

    #[test]
    fn yoneda_discreteness() {
        let c = cat(1, 2);
        let bridge = Arc::new(Presheaf::yoneda(&c, obj(&c, "(i:1)")));
        let path = Arc::new(Presheaf::yoneda(&c, obj(&c, "(i:0)")));
        assert!(is_discrete_ctx(&bridge));
        assert!(!is_discrete_ctx(&path));
        assert!(is_discrete_ctx(&Presheaf::terminal(&c)));
        let o = obj(&c, "(i:0)");
        let id = c.hom_pos(c.id(o)) as u32;
        assert_eq!(degeneracy_characterizations(&path, o, id, 0).unwrap(), [false; 3]);
        let ob = obj(&c, "(i:1)");
        assert!(matches!(is_degenerate(&bridge, ob, 0, 0), Err(Error::Var(_))));
    }

    #[test]
    fn degeneracy_characterizations_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for depth in 0..=2 {
            let c = cat(depth, 2);
            for _ in 0..20 {
                let g = random_presheaf(&c, GenParams::new(3, 2), &mut rng).unwrap();
                for o in c.objects() {
                    for v in path_vars(&c, o) {
                        for x in 0..g.size(o) as u32 {
                            let [a, b, d] = degeneracy_characterizations(&g, o, x, v).unwrap();
                            assert!(a == b && b == d);
                            assert_eq!(is_degenerate(&g, o, x, v).unwrap(), a);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lifting_matches_discreteness() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut b = Budget::default();
        for depth in -1..=1 {
            let c = cat(depth, 2);
            let hs = horn_set(&c).unwrap();
            let (mut yes, mut no) = (0, 0);
            for k in 0..30 {
                let rho = if k % 2 == 0 {
                    random_type(
                        &random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap(),
                        GenParams::new(2, 1),
                        &mut rng,
                    )
                    .unwrap()
                    .proj()
                } else {
                    let g1 = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                    let g2 = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                    match random_morphism(&g1, &g2, &mut rng, &mut b).unwrap() {
                        Some(m) => m,
                        None => continue,
                    }
                };
                let d = is_discrete_map(&rho);
                assert_eq!(d, has_right_lifting(&rho, &hs, &mut b).unwrap());
                if d {
                    yes += 1
                } else {
                    no += 1
                }
            }
            assert!(yes > 0 && no > 0, "depth {depth}: {yes} discrete, {no} not");
        }
    }

    #[test]
    fn display_map_discreteness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for depth in -1..=1 {
            let c = cat(depth, 2);
            for _ in 0..20 {
                let g = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let t = random_type(&g, GenParams::new(2, 1), &mut rng).unwrap();
                assert_eq!(is_discrete_ty(&t), is_discrete_map(&t.proj()));
                assert!(is_discrete_ty(&random_prop(&g, &mut rng).unwrap()));
                assert_eq!(is_discrete_ctx(&g), is_discrete_map(&PshMorphism::to_terminal(&g)));
            }
        }
    }

    #[test]
    fn horns_are_pullback_stable() {
        let c = cat(1, 2);
        let hs = horn_set(&c).unwrap();
        let mut b = Budget::default();
        for (eta, &w) in hs.horns.iter().zip(&hs.bases) {
            for (eta2, &v) in hs.horns.iter().zip(&hs.bases) {
                for &phi in c.hom(v, w) {
                    let g = crate::psh::yoneda_mor(&c, phi);
                    let (p, _, leg) = pullback(eta, &g).unwrap();
                    assert_eq!(**leg.dst(), **eta2.dst());
                    assert!(crate::psh::find_iso(&p, eta2.src(), &mut b).unwrap().is_some());
                }
            }
        }
    }

    #[test]
    fn shape_relation_examples() {
        let c = cat(1, 2);
        let one = Arc::new(Presheaf::terminal(&c));
        let path = Arc::new(Presheaf::yoneda(&c, obj(&c, "(i:0)")));
        let t = DepPresheaf::from_projection(&PshMorphism::to_terminal(&path));
        let se = se_relation(&t);
        let o = obj(&c, "(i:0)");
        let id = c.hom_pos(c.id(o)) as u32;
        let konst = path.restrict(c.weakening(o, 0).0, path.restrict(c.endpoint(o, 0, false), id));
        assert!(se.related(o, 0, id, konst));
        let (q, inq) = shape_quotient_ty(&t).unwrap();
        assert!(q.total().sizes().iter().all(|&n| n == 1));
        assert!(inq.is_surjective());
        assert!(is_discrete_ty(&q));
        let empty = DepPresheaf::from_projection(&PshMorphism::to_terminal(&Arc::new(Presheaf::empty(&c))));
        assert!(se_relation(&empty).is_equality());
        let _ = one;
    }

    #[test]
    fn shape_quotients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut b = Budget::default();
        for depth in -1..=1 {
            let c = cat(depth, 2);
            for _ in 0..20 {
                let g = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let t = random_type(&g, GenParams::new(2, 1), &mut rng).unwrap();
                let (q, inq) = shape_quotient_ty(&t).unwrap();
                q.validate().unwrap();
                assert!(is_discrete_ty(&q));
                assert!(inq.is_surjective());
                assert_eq!(PshMorphism::compose(&q.proj(), &inq).unwrap(), t.proj());
                // discrete types are their own replacement
                let (qq, inq2) = shape_quotient_ty(&q).unwrap();
                assert_eq!(*qq, *q);
                assert!(inq2.is_iso());
                assert!(se_relation(&q).is_equality());
                let (gq, s) = shape_quotient_ctx(&g).unwrap();
                assert!(is_discrete_ctx(&gq) && s.is_surjective());
                // maps into a discrete type factor uniquely through inq
                let d = random_discrete_type(&g, GenParams::new(2, 1), &mut rng).unwrap();
                let from_t = maps_over(&t, &d, &mut b).unwrap();
                let from_q = maps_over(&q, &d, &mut b).unwrap();
                assert_eq!(from_t.len(), from_q.len());
                for m in &from_q {
                    assert!(from_t.contains(&PshMorphism::compose(m, &inq).unwrap()));
                }
            }
        }
    }

    #[test]
    fn quotient_commutes_with_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut b = Budget::default();
        for depth in -1..=1 {
            let c = cat(depth, 2);
            for _ in 0..20 {
                let g = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let t = random_type(&g, GenParams::new(2, 1), &mut rng).unwrap();
                let delta = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let Some(sigma) = random_morphism(&delta, &g, &mut rng, &mut b).unwrap() else { continue };
                let se = se_relation(&t);
                let (tq, _) = se.quotient().unwrap();
                let sub = se.subst(&sigma).unwrap();
                assert_eq!(*subst_ty(&tq, &sigma).unwrap(), *sub.quotient().unwrap().0);
                assert!(se_relation(&subst_ty(&t, &sigma).unwrap()).relation().is_subset(sub.relation()));
            }
        }
    }

    #[test]
    fn closed_type_formers_preserve_discreteness() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut b = Budget::default();
        for depth in -1..=1 {
            let c = cat(depth, 2);
            for _ in 0..15 {
                let g = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let a = random_discrete_type(&g, GenParams::new(2, 1), &mut rng).unwrap();
                let bb = random_discrete_type(a.total(), GenParams::new(2, 1), &mut rng).unwrap();
                assert!(is_discrete_ty(&Sigma::new(&a, &bb).unwrap().ty));
                let p = Arc::new(random_prop(&g, &mut rng).unwrap());
                let t = random_discrete_type(p.total(), GenParams::new(2, 1), &mut rng).unwrap();
                let a_face = subst_ty(&a, &p.proj()).unwrap();
                if let Some(f) = subst_ty(&t, &a_face.proj()).unwrap().random_section(&mut rng, &mut b).unwrap() {
                    assert!(is_discrete_ty(&Weld::new(&a, &p, &t, &f).unwrap().ty));
                }
                let fty = subst_ty(&a_face, &t.proj()).unwrap();
                if let Some(f) = fty.random_section(&mut rng, &mut b).unwrap() {
                    assert!(is_discrete_ty(&Glue::new(&a, &p, &t, &f, &mut b).unwrap().ty));
                }
                assert!(is_discrete_ty(&top(&g)) && is_discrete_ty(&bot(&g)));
            }
        }
    }

    #[test]
    fn pi_into_discrete_is_discrete() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut b = Budget::default();
        for depth in 0..=1 {
            let c = cat(depth, 2);
            for _ in 0..15 {
                let g = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let a = random_type(&g, GenParams::new(2, 1), &mut rng).unwrap();
                let bb = random_discrete_type(a.total(), GenParams::new(2, 1), &mut rng).unwrap();
                assert!(is_discrete_ty(&Pi::new(&a, &bb, &mut b).unwrap().ty));
            }
        }
    }

    #[test]
    fn cohesion0_adjunction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut b = Budget::default();
        for n in 0..=1 {
            let hi = cat(n, 2);
            let c0 = Cohesion0::new(hi.clone()).unwrap();
            let yi = Arc::new(Presheaf::yoneda(&hi, obj(&hi, "(i:0)")));
            let one_lo = Arc::new(Presheaf::terminal(&c0.lo));
            assert!(crate::psh::find_iso(&c0.cohpi(&yi).unwrap(), &one_lo, &mut b).unwrap().is_some());
            for _ in 0..10 {
                let g = random_presheaf(&hi, GenParams::new(2, 1), &mut rng).unwrap();
                let d = random_presheaf(&c0.lo, GenParams::new(2, 1), &mut rng).unwrap();
                let dd = c0.delta(&d).unwrap();
                assert!(is_discrete_ctx(&dd));
                assert!(crate::psh::find_iso(&c0.cohpi(&dd).unwrap(), &d, &mut b).unwrap().is_some());
                // triangle identities
                let eta = c0.unit(&g).unwrap();
                let eps = c0.counit(&c0.cohpi(&g).unwrap()).unwrap();
                let left = PshMorphism::compose(&eps, &c0.cohpi_map(&eta).unwrap()).unwrap();
                assert_eq!(left, PshMorphism::identity(&c0.cohpi(&g).unwrap()));
                let eta_d = c0.unit(&dd).unwrap();
                let right = PshMorphism::compose(&c0.delta_map(&c0.counit(&d).unwrap()).unwrap(), &eta_d).unwrap();
                assert_eq!(right, PshMorphism::identity(&dd));
                // hom bijection: tau |-> delta(tau) . eta
                let cg = c0.cohpi(&g).unwrap();
                let lhs = hom_set(&cg, &d, &mut b).unwrap();
                let rhs = hom_set(&g, &dd, &mut b).unwrap();
                assert_eq!(lhs.len(), rhs.len());
                for tau in &lhs {
                    let m = PshMorphism::compose(&c0.delta_map(tau).unwrap(), &eta).unwrap();
                    assert!(rhs.contains(&m));
                }
                // flat0: the cast is invertible on discrete presheaves and
                // every map from one factors uniquely through it
                let th = random_discrete_presheaf(&hi, GenParams::new(2, 1), &mut rng).unwrap();
                assert!(c0.flat(&th).unwrap().1.is_iso());
                let (fg, iota) = c0.flat(&g).unwrap();
                let into_flat = hom_set(&th, &fg, &mut b).unwrap();
                let into_g = hom_set(&th, &g, &mut b).unwrap();
                assert_eq!(into_flat.len(), into_g.len());
                for m in &into_flat {
                    assert!(into_g.contains(&PshMorphism::compose(&iota, m).unwrap()));
                }
            }
        }
    }

    #[test]
    fn preservation_predicate_examples() {
        let sharp = Reshuffle::parse("(=|1,1)", Some(1)).unwrap();
        assert!(!modality_preserves_discreteness(&sharp).unwrap());
        let coshape = Reshuffle::parse("(=|0,0)", Some(1)).unwrap();
        assert!(modality_preserves_discreteness(&coshape).unwrap());
        for n in -1..=2 {
            for h in Reshuffle::all(Depth::new(-1).unwrap(), Depth::new(n).unwrap()) {
                if h.count_adjoints().is_modality() {
                    assert!(modality_preserves_discreteness(&h).unwrap());
                }
            }
        }
        let flat = Reshuffle::parse("(=|=,1)", Some(1)).unwrap();
        assert!(matches!(modality_preserves_discreteness(&flat), Err(Error::Class(_))));
    }

    #[test]
    fn modal_shape_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut b = Budget::default();
        let c = cat(1, 2);
        for s in ["(=|0,1)", "(=|0,0)", "(=|1,1)"] {
            let h = Reshuffle::parse(s, Some(1)).unwrap();
            let k = right_functor(&h, c.clone(), c.clone()).unwrap();
            for _ in 0..4 {
                let g = random_presheaf(&c, GenParams::new(2, 1), &mut rng).unwrap();
                let found = find_modal_shape_map(&k, &g, &mut b).unwrap();
                assert!(found.map.is_some(), "{s}");
            }
        }
    }

    #[test]
    fn left_division_semantics() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut b = Budget::default();
        let mut checked = 0;
        for (m, n, p) in [(1, 1, 1), (0, 1, 1), (1, 0, 1), (1, 1, 0), (0, 0, 0), (1, 0, 0)] {
            let dm = |k| Depth::new(k).unwrap();
            let mus: Vec<Reshuffle> =
                Reshuffle::all(dm(m), dm(n)).into_iter().filter(|r| r.count_adjoints().is_modality()).collect();
            let rhos: Vec<Reshuffle> = Reshuffle::all(dm(p), dm(n))
                .into_iter()
                .filter(|r| r.count_adjoints().is_modality() && r.lookup(Level::Eq) == Level::Eq)
                .collect();
            let cp = cat(p, 2);
            for mu in &mus {
                for rho in &rhos {
                    let g = random_discrete_presheaf(&cp, GenParams::new(2, 1), &mut rng).unwrap();
                    let t = random_discrete_type(&g, GenParams::new(2, 1), &mut rng).unwrap();
                    let r = left_division_iso(mu, rho, &t, &mut b).unwrap();
                    assert_eq!(r, Some(true), "{mu} {rho}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 10);
    }
}
