//! Finite presheaves over truncated cube categories.
//!
//! Cells of a presheaf at each object are the integers `0..size`; restriction
//! along a morphism `m : V -> W` is a table from cells at `W` to cells at `V`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::cube::{CubeAdjunction, CubeCat, CubeFunctor, MorId, ObjId};
use crate::error::{Error, Result};

/// Default limit on candidate evaluations in exhaustive searches.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

const NONE: u32 = u32::MAX;

/// Counter for candidate evaluations; exceeding the limit is an error.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.limit {
            Err(Error::Budget(self.limit))
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_BUDGET)
    }
}

#[derive(Clone)]
pub struct Presheaf {
    cat: Arc<CubeCat>,
    sizes: Vec<u32>,
    restrict: Vec<Vec<u32>>,
    labels: Option<Vec<Vec<String>>>,
}

impl PartialEq for Presheaf {
    fn eq(&self, other: &Self) -> bool {
        self.cat.trunc() == other.cat.trunc() && self.sizes == other.sizes && self.restrict == other.restrict
    }
}

impl Eq for Presheaf {}

impl fmt::Debug for Presheaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Presheaf").field("sizes", &self.sizes).finish_non_exhaustive()
    }
}

impl Presheaf {
    /// Build a presheaf from level sizes and one restriction table per
    /// morphism, rejecting tables that are not functorial.
    pub fn new(cat: Arc<CubeCat>, sizes: Vec<u32>, restrict: Vec<Vec<u32>>) -> Result<Self> {
        let p = Presheaf { cat, sizes, restrict, labels: None };
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn new_unchecked(cat: Arc<CubeCat>, sizes: Vec<u32>, restrict: Vec<Vec<u32>>) -> Self {
        debug_assert_eq!(restrict.len(), cat.num_morphisms());
        Presheaf { cat, sizes, restrict, labels: None }
    }

    /// Check table shapes, identities and composition.
    pub fn validate(&self) -> Result<()> {
        let cat = &self.cat;
        if self.sizes.len() != cat.num_objects() || self.restrict.len() != cat.num_morphisms() {
            return Err(Error::Invalid("table count does not match the cube category".into()));
        }
        for m in cat.morphisms() {
            let t = &self.restrict[m.ix()];
            let (v, w) = (cat.dom(m), cat.cod(m));
            if t.len() != self.sizes[w.ix()] as usize || t.iter().any(|&c| c >= self.sizes[v.ix()]) {
                return Err(Error::Invalid(format!("restriction along {} has the wrong shape", cat.face_map(m))));
            }
        }
        for o in cat.objects() {
            let t = &self.restrict[cat.id(o).ix()];
            if t.iter().enumerate().any(|(c, &d)| c as u32 != d) {
                return Err(Error::Invalid(format!("restriction along the identity of {} moves cells", cat.cube(o))));
            }
        }
        for f in cat.morphisms() {
            for &g in cat.maps_into(cat.dom(f)) {
                let fg = cat.compose_unchecked(f, g);
                let (tf, tg, tfg) = (&self.restrict[f.ix()], &self.restrict[g.ix()], &self.restrict[fg.ix()]);
                if tf.iter().zip(tfg).any(|(&x, &y)| tg[x as usize] != y) {
                    return Err(Error::Invalid(format!(
                        "restriction is not functorial for {} after {}",
                        cat.face_map(g),
                        cat.face_map(f)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cat(&self) -> &Arc<CubeCat> {
        &self.cat
    }

    pub fn size(&self, o: ObjId) -> usize {
        self.sizes[o.ix()] as usize
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn total_cells(&self) -> usize {
        self.sizes.iter().map(|&s| s as usize).sum()
    }

    pub fn restrict(&self, m: MorId, c: u32) -> u32 {
        self.restrict[m.ix()][c as usize]
    }

    pub fn table(&self, m: MorId) -> &[u32] {
        &self.restrict[m.ix()]
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != self.sizes.len() || labels.iter().zip(&self.sizes).any(|(l, &s)| l.len() != s as usize) {
            return Err(Error::Invalid("label table does not match cell counts".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn label(&self, o: ObjId, c: u32) -> String {
        match &self.labels {
            Some(l) => l[o.ix()][c as usize].clone(),
            None => format!("c{c}"),
        }
    }

    pub fn same_cat(&self, other: &Presheaf) -> bool {
        self.cat.trunc() == other.cat.trunc()
    }

    /// `c` is degenerate in variable `var`: it factors over the weakening.
    pub fn is_degenerate(&self, o: ObjId, c: u32, var: usize) -> bool {
        let (weak, _) = self.cat.weakening(o, var);
        let e0 = self.cat.endpoint(o, var, false);
        self.restrict(weak, self.restrict(e0, c)) == c
    }

    /// The representable presheaf: cells at `V` are face maps `V -> w`.
    pub fn yoneda(cat: &Arc<CubeCat>, w: ObjId) -> Presheaf {
        let sizes = cat.objects().map(|v| cat.hom(v, w).len() as u32).collect();
        let restrict = cat
            .morphisms()
            .map(|m| {
                let v = cat.cod(m);
                cat.hom(v, w).iter().map(|&f| cat.hom_pos(cat.compose_unchecked(f, m)) as u32).collect()
            })
            .collect();
        Presheaf::new_unchecked(cat.clone(), sizes, restrict)
    }

    /// A presheaf with `n` cells at every level and identity restrictions.
    pub fn constant(cat: &Arc<CubeCat>, n: u32) -> Presheaf {
        let sizes = vec![n; cat.num_objects()];
        let restrict = cat.morphisms().map(|_| (0..n).collect()).collect();
        Presheaf::new_unchecked(cat.clone(), sizes, restrict)
    }

    pub fn terminal(cat: &Arc<CubeCat>) -> Presheaf {
        Presheaf::constant(cat, 1)
    }

    pub fn empty(cat: &Arc<CubeCat>) -> Presheaf {
        Presheaf::constant(cat, 0)
    }

    /// Levelwise product; cell `(a, b)` has index `a * |B| + b`.
    pub fn product(a: &Arc<Presheaf>, b: &Arc<Presheaf>) -> Result<(Arc<Presheaf>, PshMorphism, PshMorphism)> {
        check_same(a, b)?;
        let cat = a.cat.clone();
        let sizes: Vec<u32> = a.sizes.iter().zip(&b.sizes).map(|(x, y)| x * y).collect();
        let restrict = cat
            .morphisms()
            .map(|m| {
                let w = cat.cod(m);
                let (nb_w, nb_v) = (b.sizes[w.ix()], b.sizes[cat.dom(m).ix()]);
                (0..a.sizes[w.ix()] * nb_w).map(|c| a.restrict(m, c / nb_w) * nb_v + b.restrict(m, c % nb_w)).collect()
            })
            .collect();
        let p = Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict));
        let fst = cat.objects().map(|o| (0..p.sizes[o.ix()]).map(|c| c / b.sizes[o.ix()]).collect()).collect();
        let snd = cat.objects().map(|o| (0..p.sizes[o.ix()]).map(|c| c % b.sizes[o.ix()]).collect()).collect();
        Ok((
            p.clone(),
            PshMorphism::new_unchecked(p.clone(), a.clone(), fst),
            PshMorphism::new_unchecked(p, b.clone(), snd),
        ))
    }

    /// Levelwise disjoint union; cells of `a` come first.
    pub fn coproduct(a: &Arc<Presheaf>, b: &Arc<Presheaf>) -> Result<(Arc<Presheaf>, PshMorphism, PshMorphism)> {
        check_same(a, b)?;
        let cat = a.cat.clone();
        let sizes: Vec<u32> = a.sizes.iter().zip(&b.sizes).map(|(x, y)| x + y).collect();
        let restrict = cat
            .morphisms()
            .map(|m| {
                let na_v = a.sizes[cat.dom(m).ix()];
                let mut t: Vec<u32> = a.table(m).to_vec();
                t.extend(b.table(m).iter().map(|&c| c + na_v));
                t
            })
            .collect();
        let p = Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict));
        let inl = cat.objects().map(|o| (0..a.sizes[o.ix()]).collect()).collect();
        let inr = cat.objects().map(|o| (0..b.sizes[o.ix()]).map(|c| c + a.sizes[o.ix()]).collect()).collect();
        Ok((
            p.clone(),
            PshMorphism::new_unchecked(a.clone(), p.clone(), inl),
            PshMorphism::new_unchecked(b.clone(), p, inr),
        ))
    }

    /// JSON form keyed by cube and by `dom -> cod : map`.
    pub fn to_json(&self) -> Value {
        let cat = &self.cat;
        let mut cells = Map::new();
        for o in cat.objects() {
            let names: Vec<Value> = (0..self.sizes[o.ix()]).map(|c| Value::String(self.label(o, c))).collect();
            cells.insert(cat.cube(o).to_string(), Value::Array(names));
        }
        let mut restrict = Map::new();
        for m in cat.morphisms() {
            let (v, w) = (cat.dom(m), cat.cod(m));
            if v == w && m == cat.id(v) {
                continue;
            }
            let mut t = Map::new();
            for c in 0..self.sizes[w.ix()] {
                t.insert(self.label(w, c), Value::String(self.label(v, self.restrict(m, c))));
            }
            restrict.insert(format!("{} -> {} : {}", cat.cube(v), cat.cube(w), cat.face_map(m)), Value::Object(t));
        }
        json!({ "trunc": cat.trunc(), "cells": cells, "restrict": restrict })
    }

    /// Restriction to a smaller truncation of the same depth.
    pub fn truncate(&self, small: &Arc<CubeCat>) -> Result<Presheaf> {
        let objs = embed_objects(&self.cat, small)?;
        let sizes = small.objects().map(|o| self.sizes[objs[o.ix()].ix()]).collect();
        let restrict = small
            .morphisms()
            .map(|m| {
                let big = self.cat.mor_of(&small.face_map(m)).expect("face maps embed with their cubes");
                self.restrict[big.ix()].clone()
            })
            .collect();
        Ok(Presheaf::new_unchecked(small.clone(), sizes, restrict))
    }
}

fn embed_objects(big: &CubeCat, small: &CubeCat) -> Result<Vec<ObjId>> {
    let (b, s) = (big.trunc(), small.trunc());
    if b.depth != s.depth || b.max_dims < s.max_dims {
        return Err(Error::Param(format!(
            "cannot truncate from depth {} dimension {} to depth {} dimension {}",
            b.depth, b.max_dims, s.depth, s.max_dims
        )));
    }
    Ok(small.objects().map(|o| big.obj_of(small.cube(o)).expect("smaller truncation embeds")).collect())
}

/// The map `y w -> gamma` picking out cell `c` at `w`: `phi |-> c.phi`.
pub fn yoneda_map(gamma: &Arc<Presheaf>, w: ObjId, c: u32) -> PshMorphism {
    let cat = gamma.cat.clone();
    let y = Arc::new(Presheaf::yoneda(&cat, w));
    let comp = cat.objects().map(|v| cat.hom(v, w).iter().map(|&phi| gamma.restrict(phi, c)).collect()).collect();
    PshMorphism::new_unchecked(y, gamma.clone(), comp)
}

/// Postcomposition `y v -> y w` with a face map `phi : v -> w`.
pub fn yoneda_mor(cat: &Arc<CubeCat>, phi: MorId) -> PshMorphism {
    let (v, w) = (cat.dom(phi), cat.cod(phi));
    let comp = cat
        .objects()
        .map(|u| cat.hom(u, v).iter().map(|&psi| cat.hom_pos(cat.compose_unchecked(phi, psi)) as u32).collect())
        .collect();
    PshMorphism::new_unchecked(Arc::new(Presheaf::yoneda(cat, v)), Arc::new(Presheaf::yoneda(cat, w)), comp)
}

fn check_same(a: &Presheaf, b: &Presheaf) -> Result<()> {
    if a.same_cat(b) {
        Ok(())
    } else {
        Err(Error::Param("presheaves live over different truncations".into()))
    }
}

/// A natural transformation between presheaves.
#[derive(Clone)]
pub struct PshMorphism {
    src: Arc<Presheaf>,
    dst: Arc<Presheaf>,
    comp: Vec<Vec<u32>>,
}

impl PartialEq for PshMorphism {
    fn eq(&self, other: &Self) -> bool {
        self.comp == other.comp && *self.src == *other.src && *self.dst == *other.dst
    }
}

impl Eq for PshMorphism {}

impl fmt::Debug for PshMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PshMorphism").field("comp", &self.comp).finish_non_exhaustive()
    }
}

impl PshMorphism {
    pub fn new(src: Arc<Presheaf>, dst: Arc<Presheaf>, comp: Vec<Vec<u32>>) -> Result<Self> {
        check_same(&src, &dst)?;
        let m = PshMorphism { src, dst, comp };
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn new_unchecked(src: Arc<Presheaf>, dst: Arc<Presheaf>, comp: Vec<Vec<u32>>) -> Self {
        PshMorphism { src, dst, comp }
    }

    pub fn validate(&self) -> Result<()> {
        let cat = &self.src.cat;
        for o in cat.objects() {
            let c = &self.comp[o.ix()];
            if c.len() != self.src.size(o) || c.iter().any(|&x| x as usize >= self.dst.size(o)) {
                return Err(Error::Invalid(format!("component at {} has the wrong shape", cat.cube(o))));
            }
        }
        for m in cat.morphisms() {
            let (v, w) = (cat.dom(m), cat.cod(m));
            for c in 0..self.src.sizes[w.ix()] {
                if self.comp[v.ix()][self.src.restrict(m, c) as usize]
                    != self.dst.restrict(m, self.comp[w.ix()][c as usize])
                {
                    return Err(Error::Invalid(format!("not natural along {}", cat.face_map(m))));
                }
            }
        }
        Ok(())
    }

    /// Restriction to a smaller truncation; `src` and `dst` are the
    /// already truncated endpoints.
    pub fn truncate(&self, src: &Arc<Presheaf>, dst: &Arc<Presheaf>) -> Result<PshMorphism> {
        let objs = embed_objects(&self.src.cat, src.cat())?;
        let comp = src.cat().objects().map(|o| self.comp[objs[o.ix()].ix()].clone()).collect();
        PshMorphism::new(src.clone(), dst.clone(), comp)
    }

    pub fn identity(p: &Arc<Presheaf>) -> PshMorphism {
        let comp = p.cat.objects().map(|o| (0..p.sizes[o.ix()]).collect()).collect();
        PshMorphism::new_unchecked(p.clone(), p.clone(), comp)
    }

    /// The unique map into the terminal presheaf over the same category.
    pub fn to_terminal(p: &Arc<Presheaf>) -> PshMorphism {
        let t = Arc::new(Presheaf::terminal(&p.cat));
        let comp = p.cat.objects().map(|o| vec![0; p.size(o)]).collect();
        PshMorphism::new_unchecked(p.clone(), t, comp)
    }

    pub fn src(&self) -> &Arc<Presheaf> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<Presheaf> {
        &self.dst
    }

    pub fn apply(&self, o: ObjId, c: u32) -> u32 {
        self.comp[o.ix()][c as usize]
    }

    pub fn components(&self) -> &[Vec<u32>] {
        &self.comp
    }

    /// `f . g`.
    pub fn compose(f: &PshMorphism, g: &PshMorphism) -> Result<PshMorphism> {
        if *g.dst != *f.src {
            return Err(Error::Composition("presheaf morphisms do not compose".into()));
        }
        let comp = g.comp.iter().zip(&f.comp).map(|(gc, fc)| gc.iter().map(|&c| fc[c as usize]).collect()).collect();
        Ok(PshMorphism::new_unchecked(g.src.clone(), f.dst.clone(), comp))
    }

    pub fn is_injective(&self) -> bool {
        self.comp.iter().all(|c| {
            let mut seen: Vec<u32> = c.clone();
            seen.sort_unstable();
            seen.windows(2).all(|w| w[0] != w[1])
        })
    }

    pub fn is_surjective(&self) -> bool {
        self.src.cat.objects().all(|o| {
            let mut hit = vec![false; self.dst.size(o)];
            self.comp[o.ix()].iter().for_each(|&c| hit[c as usize] = true);
            hit.into_iter().all(|h| h)
        })
    }

    pub fn is_iso(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    /// The inverse of an isomorphism.
    pub fn inverse(&self) -> Option<PshMorphism> {
        if !self.is_iso() {
            return None;
        }
        let comp = self
            .comp
            .iter()
            .map(|c| {
                let mut inv = vec![0; c.len()];
                c.iter().enumerate().for_each(|(i, &d)| inv[d as usize] = i as u32);
                inv
            })
            .collect();
        Some(PshMorphism::new_unchecked(self.dst.clone(), self.src.clone(), comp))
    }
}

/// Every natural transformation `a -> b`.
pub fn hom_set(a: &Arc<Presheaf>, b: &Arc<Presheaf>, budget: &mut Budget) -> Result<Vec<PshMorphism>> {
    check_same(a, b)?;
    let (prod, _, _) = Presheaf::product(a, b)?;
    let offsets: Vec<Vec<u32>> =
        a.cat.objects().map(|o| (0..=a.sizes[o.ix()]).map(|c| c * b.sizes[o.ix()]).collect()).collect();
    let fib = Fibration { base: a, total: &prod, offsets: &offsets };
    let sols = search_sections(&fib, SearchMode::<rand_chacha::ChaCha8Rng>::All, budget)?;
    Ok(sols
        .into_iter()
        .map(|s| {
            let comp =
                s.into_iter().zip(&b.sizes).map(|(lvl, &nb)| lvl.into_iter().map(|t| t % nb).collect()).collect();
            PshMorphism::new_unchecked(a.clone(), b.clone(), comp)
        })
        .collect())
}

/// An isomorphism `a -> b`, if there is one.
pub fn find_iso(a: &Arc<Presheaf>, b: &Arc<Presheaf>, budget: &mut Budget) -> Result<Option<PshMorphism>> {
    if a.sizes != b.sizes {
        return Ok(None);
    }
    Ok(hom_set(a, b, budget)?.into_iter().find(PshMorphism::is_iso))
}

/// A presheaf over a base, described as a total presheaf whose cells at
/// each level are sorted by the base cell they lie over.
pub(crate) struct Fibration<'a> {
    pub base: &'a Presheaf,
    pub total: &'a Presheaf,
    /// `offsets[o][c]..offsets[o][c + 1]`: total cells over base cell `c`.
    pub offsets: &'a [Vec<u32>],
}

pub(crate) enum SearchMode<'r, R: Rng> {
    All,
    Random(&'r mut R),
}

impl<'r, R: Rng> SearchMode<'r, R> {
    fn stop_at_first(&self) -> bool {
        matches!(self, SearchMode::Random(_))
    }
}

/// Sections of a fibration: one total cell over every base cell, commuting
/// with restriction. Solutions are total-cell indices per level.
pub(crate) fn search_sections<R: Rng>(
    fib: &Fibration<'_>,
    mut mode: SearchMode<'_, R>,
    budget: &mut Budget,
) -> Result<Vec<Vec<Vec<u32>>>> {
    let cat = fib.base.cat.clone();
    let order: Vec<(ObjId, u32)> =
        cat.objects_by_dims_desc().into_iter().flat_map(|o| (0..fib.base.sizes[o.ix()]).map(move |c| (o, c))).collect();
    let mut st = Search {
        cat: &cat,
        fib,
        assign: cat.objects().map(|o| vec![NONE; fib.base.size(o)]).collect(),
        trail: Vec::new(),
        out: Vec::new(),
    };
    let stop = mode.stop_at_first();
    st.go(0, &order, &mut mode, stop, budget)?;
    Ok(st.out)
}

struct Search<'a, 'b> {
    cat: &'a CubeCat,
    fib: &'a Fibration<'b>,
    assign: Vec<Vec<u32>>,
    trail: Vec<(ObjId, u32)>,
    out: Vec<Vec<Vec<u32>>>,
}

impl Search<'_, '_> {
    fn propagate(&mut self, o: ObjId, c: u32, t: u32) -> bool {
        for &m in self.cat.maps_into(o) {
            let v = self.cat.dom(m);
            let c2 = self.fib.base.restrict(m, c);
            let t2 = self.fib.total.restrict(m, t);
            let slot = &mut self.assign[v.ix()][c2 as usize];
            if *slot == NONE {
                *slot = t2;
                self.trail.push((v, c2));
            } else if *slot != t2 {
                return false;
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (o, c) = self.trail.pop().expect("nonempty trail");
            self.assign[o.ix()][c as usize] = NONE;
        }
    }

    /// Returns true when the search should stop.
    fn go<R: Rng>(
        &mut self,
        mut pos: usize,
        order: &[(ObjId, u32)],
        mode: &mut SearchMode<'_, R>,
        stop: bool,
        budget: &mut Budget,
    ) -> Result<bool> {
        while pos < order.len() && self.assign[order[pos].0.ix()][order[pos].1 as usize] != NONE {
            pos += 1;
        }
        if pos == order.len() {
            self.out.push(self.assign.clone());
            return Ok(stop);
        }
        let (o, c) = order[pos];
        let mut cands: Vec<u32> =
            (self.fib.offsets[o.ix()][c as usize]..self.fib.offsets[o.ix()][c as usize + 1]).collect();
        if let SearchMode::Random(rng) = mode {
            cands.shuffle(*rng);
        }
        for t in cands {
            budget.tick()?;
            let mark = self.trail.len();
            if self.propagate(o, c, t) && self.go(pos + 1, order, mode, stop, budget)? {
                return Ok(true);
            }
            self.undo(mark);
        }
        Ok(false)
    }
}

/// A restriction-closed equivalence relation on a presheaf, stored as a
/// class number per cell; classes are numbered by first occurrence.
#[derive(Clone, PartialEq, Eq)]
pub struct EquivRelation {
    carrier: Arc<Presheaf>,
    class: Vec<Vec<u32>>,
}

impl fmt::Debug for EquivRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquivRelation").field("class", &self.class).finish_non_exhaustive()
    }
}

fn canonical_labels(raw: &[u32]) -> Vec<u32> {
    let mut map = HashMap::new();
    raw.iter()
        .map(|r| {
            let n = map.len() as u32;
            *map.entry(*r).or_insert(n)
        })
        .collect()
}

impl EquivRelation {
    pub fn equality(carrier: &Arc<Presheaf>) -> Self {
        let class = carrier.cat.objects().map(|o| (0..carrier.sizes[o.ix()]).collect()).collect();
        EquivRelation { carrier: carrier.clone(), class }
    }

    /// Build from arbitrary per-level class keys; the result is not checked
    /// for restriction closure.
    pub(crate) fn from_keys(carrier: &Arc<Presheaf>, keys: Vec<Vec<u32>>) -> Self {
        let class = keys.iter().map(|k| canonical_labels(k)).collect();
        EquivRelation { carrier: carrier.clone(), class }
    }

    /// The least restriction-closed equivalence relation containing the
    /// seed pairs `(level, x, y)`.
    pub fn generate(carrier: &Arc<Presheaf>, seeds: &[(ObjId, u32, u32)]) -> Self {
        let cat = &carrier.cat;
        let mut uf: Vec<UnionFind<u32>> = cat.objects().map(|o| UnionFind::new(carrier.size(o))).collect();
        let mut work: Vec<(ObjId, u32, u32)> = seeds.to_vec();
        while let Some((o, x, y)) = work.pop() {
            if uf[o.ix()].union(x, y) {
                for &m in cat.maps_into(o) {
                    let v = cat.dom(m);
                    work.push((v, carrier.restrict(m, x), carrier.restrict(m, y)));
                }
            }
        }
        let keys = uf.into_iter().map(|u| u.into_labeling()).collect();
        EquivRelation::from_keys(carrier, keys)
    }

    pub fn carrier(&self) -> &Arc<Presheaf> {
        &self.carrier
    }

    pub fn class_of(&self, o: ObjId, c: u32) -> u32 {
        self.class[o.ix()][c as usize]
    }

    pub fn num_classes(&self, o: ObjId) -> usize {
        self.class[o.ix()].iter().map(|&k| k as usize + 1).max().unwrap_or(0)
    }

    pub fn related(&self, o: ObjId, x: u32, y: u32) -> bool {
        self.class_of(o, x) == self.class_of(o, y)
    }

    pub fn intersect(&self, other: &EquivRelation) -> Result<EquivRelation> {
        if *self.carrier != *other.carrier {
            return Err(Error::Param("relations live on different presheaves".into()));
        }
        let keys = self
            .class
            .iter()
            .zip(&other.class)
            .map(|(a, b)| {
                let nb = b.iter().max().map_or(1, |m| m + 1);
                a.iter().zip(b).map(|(x, y)| x * nb + y).collect()
            })
            .collect();
        Ok(EquivRelation::from_keys(&self.carrier, keys))
    }

    /// Inclusion of relations.
    pub fn is_subset(&self, other: &EquivRelation) -> bool {
        self.class.iter().zip(&other.class).all(|(a, b)| {
            let mut rep: HashMap<u32, u32> = HashMap::new();
            a.iter().zip(b).all(|(x, y)| *rep.entry(*x).or_insert(*y) == *y)
        })
    }

    pub fn is_restriction_closed(&self) -> bool {
        let cat = &self.carrier.cat;
        cat.morphisms().all(|m| {
            let (v, w) = (cat.dom(m), cat.cod(m));
            let mut rep: HashMap<u32, u32> = HashMap::new();
            (0..self.carrier.sizes[w.ix()]).all(|c| {
                let k = self.class[v.ix()][self.carrier.restrict(m, c) as usize];
                *rep.entry(self.class[w.ix()][c as usize]).or_insert(k) == k
            })
        })
    }

    /// The quotient presheaf and the projection onto it.
    pub fn quotient(&self) -> Result<(Arc<Presheaf>, PshMorphism)> {
        if !self.is_restriction_closed() {
            return Err(Error::Invalid("relation is not closed under restriction".into()));
        }
        let cat = self.carrier.cat.clone();
        let sizes: Vec<u32> = cat.objects().map(|o| self.num_classes(o) as u32).collect();
        let reps: Vec<Vec<u32>> = cat
            .objects()
            .map(|o| {
                let mut r = vec![0; sizes[o.ix()] as usize];
                for (c, &k) in self.class[o.ix()].iter().enumerate().rev() {
                    r[k as usize] = c as u32;
                }
                r
            })
            .collect();
        let restrict = cat
            .morphisms()
            .map(|m| {
                let (v, w) = (cat.dom(m), cat.cod(m));
                reps[w.ix()].iter().map(|&c| self.class[v.ix()][self.carrier.restrict(m, c) as usize]).collect()
            })
            .collect();
        let q = Arc::new(Presheaf::new_unchecked(cat, sizes, restrict));
        Ok((q.clone(), PshMorphism::new_unchecked(self.carrier.clone(), q, self.class.clone())))
    }
}

/// A cell of a free presheaf: a generator and a face map into it.
pub type GenCell = (usize, MorId);

/// A presheaf presented as a quotient of a coproduct of representables.
pub struct Generated {
    pub psh: Arc<Presheaf>,
    /// Projection from the free coproduct.
    pub proj: PshMorphism,
    gens: Vec<ObjId>,
    free_offsets: Vec<Vec<u32>>,
}

impl Generated {
    /// Generators are objects; seeds identify `(generator, face map into it)`
    /// pairs at the same level.
    pub fn new(cat: &Arc<CubeCat>, gens: &[ObjId], seeds: &[(GenCell, GenCell)]) -> Result<Generated> {
        let free = Arc::new(free_presheaf(cat, gens));
        let free_offsets = free_offsets(cat, gens);
        let mut pairs = Vec::new();
        for &((g1, m1), (g2, m2)) in seeds {
            let (v1, v2) = (cat.dom(m1), cat.dom(m2));
            if v1 != v2 || cat.cod(m1) != gens[g1] || cat.cod(m2) != gens[g2] {
                return Err(Error::Param("seed cells do not lie at one level".into()));
            }
            let x = free_offsets[v1.ix()][g1] + cat.hom_pos(m1) as u32;
            let y = free_offsets[v1.ix()][g2] + cat.hom_pos(m2) as u32;
            pairs.push((v1, x, y));
        }
        let rel = EquivRelation::generate(&free, &pairs);
        let (psh, proj) = rel.quotient()?;
        Ok(Generated { psh, proj, gens: gens.to_vec(), free_offsets })
    }

    /// The cell `g . m` for `m : V -> gens[g]`.
    pub fn cell(&self, g: usize, m: MorId) -> u32 {
        let cat = &self.psh.cat;
        debug_assert_eq!(cat.cod(m), self.gens[g]);
        let v = cat.dom(m);
        self.proj.apply(v, self.free_offsets[v.ix()][g] + cat.hom_pos(m) as u32)
    }

    pub fn generator(&self, g: usize) -> u32 {
        self.cell(g, self.psh.cat.id(self.gens[g]))
    }
}

fn free_offsets(cat: &CubeCat, gens: &[ObjId]) -> Vec<Vec<u32>> {
    cat.objects()
        .map(|v| {
            let mut acc = 0;
            let mut offs = Vec::with_capacity(gens.len() + 1);
            for &g in gens {
                offs.push(acc);
                acc += cat.hom(v, g).len() as u32;
            }
            offs.push(acc);
            offs
        })
        .collect()
}

fn free_presheaf(cat: &Arc<CubeCat>, gens: &[ObjId]) -> Presheaf {
    let offs = free_offsets(cat, gens);
    let sizes = cat.objects().map(|v| *offs[v.ix()].last().expect("nonempty")).collect();
    let restrict = cat
        .morphisms()
        .map(|m| {
            let (u, v) = (cat.dom(m), cat.cod(m));
            let mut t = Vec::new();
            for (gi, &g) in gens.iter().enumerate() {
                for &f in cat.hom(v, g) {
                    t.push(offs[u.ix()][gi] + cat.hom_pos(cat.compose_unchecked(f, m)) as u32);
                }
            }
            t
        })
        .collect();
    Presheaf::new_unchecked(cat.clone(), sizes, restrict)
}

/// Parameters of the random presheaf generator.
#[derive(Clone, Copy, Debug)]
pub struct GenParams {
    /// At most this many generators per dimension.
    pub max_gens: usize,
    /// Largest generator dimension.
    pub gen_dim: usize,
}

impl GenParams {
    pub fn new(max_gens: usize, gen_dim: usize) -> Self {
        GenParams { max_gens, gen_dim }
    }
}

/// A random cube of `dims` variables, as an object.
pub(crate) fn random_object<R: Rng>(cat: &CubeCat, dims: usize, rng: &mut R) -> Option<ObjId> {
    let cands: Vec<ObjId> = cat.objects().filter(|&o| cat.dims(o) == dims).collect();
    cands.choose(rng).copied()
}

/// A random presheaf: a few points, then generators of increasing
/// dimension whose faces are glued onto earlier cells.
pub fn random_presheaf<R: Rng>(cat: &Arc<CubeCat>, params: GenParams, rng: &mut R) -> Result<Arc<Presheaf>> {
    let point = cat.objects().find(|&o| cat.dims(o) == 0).expect("point exists");
    let mut gens = vec![point; rng.gen_range(1..=params.max_gens.max(1))];
    let mut seeds = Vec::new();
    let top = params.gen_dim.min(cat.trunc().max_dims);
    for k in 1..=top {
        for _ in 0..rng.gen_range(0..=params.max_gens) {
            let Some(w) = random_object(cat, k, rng) else { continue };
            let g = gens.len();
            gens.push(w);
            for var in 0..k {
                for one in [false, true] {
                    if k > 1 && rng.gen_bool(0.3) {
                        continue;
                    }
                    let face = cat.endpoint(w, var, one);
                    let v = cat.dom(face);
                    let earlier: Vec<(usize, MorId)> =
                        (0..g).flat_map(|h| cat.hom(v, gens[h]).iter().map(move |&m| (h, m))).collect();
                    if let Some(&target) = earlier.choose(rng) {
                        seeds.push(((g, face), target));
                    }
                }
            }
        }
    }
    Ok(Generated::new(cat, &gens, &seeds)?.psh)
}

/// A random natural transformation `a -> b`, if one exists.
pub fn random_morphism<R: Rng>(
    a: &Arc<Presheaf>,
    b: &Arc<Presheaf>,
    rng: &mut R,
    budget: &mut Budget,
) -> Result<Option<PshMorphism>> {
    check_same(a, b)?;
    let (prod, _, _) = Presheaf::product(a, b)?;
    let offsets: Vec<Vec<u32>> =
        a.cat.objects().map(|o| (0..=a.sizes[o.ix()]).map(|c| c * b.sizes[o.ix()]).collect()).collect();
    let fib = Fibration { base: a, total: &prod, offsets: &offsets };
    let sols = search_sections(&fib, SearchMode::Random(rng), budget)?;
    Ok(sols.into_iter().next().map(|s| {
        let comp = s.into_iter().zip(&b.sizes).map(|(lvl, &nb)| lvl.into_iter().map(|t| t % nb).collect()).collect();
        PshMorphism::new_unchecked(a.clone(), b.clone(), comp)
    }))
}

/// The lifted functor: `F^ G = G . F`, a presheaf over the source of `F`.
pub fn lifted(f: &CubeFunctor, g: &Presheaf) -> Result<Arc<Presheaf>> {
    if g.cat.trunc() != f.dst().trunc() {
        return Err(Error::Param("presheaf does not live over the functor's target".into()));
    }
    let src = f.src();
    let sizes = src.objects().map(|v| g.sizes[f.obj(v).ix()]).collect();
    let restrict = src.morphisms().map(|m| g.table(f.mor(m)).to_vec()).collect();
    Ok(Arc::new(Presheaf::new_unchecked(src.clone(), sizes, restrict)))
}

/// The lifted functor on a morphism.
pub fn lifted_morphism(f: &CubeFunctor, m: &PshMorphism) -> Result<PshMorphism> {
    let src = lifted(f, &m.src)?;
    let dst = lifted(f, &m.dst)?;
    let comp = f.src().objects().map(|v| m.comp[f.obj(v).ix()].clone()).collect();
    Ok(PshMorphism::new_unchecked(src, dst, comp))
}

/// For a natural family `nu : F => G` of face maps, the lifted
/// transformation `G^ Gamma -> F^ Gamma`, restricting along `nu`.
pub fn lifted_nattrans(nu: &[MorId], f: &CubeFunctor, g: &CubeFunctor, gamma: &Presheaf) -> Result<PshMorphism> {
    let fg = lifted(f, gamma)?;
    let gg = lifted(g, gamma)?;
    let src = f.src();
    let comp = src.objects().map(|v| gamma.table(nu[v.ix()]).to_vec()).collect();
    Ok(PshMorphism::new_unchecked(gg, fg, comp))
}

/// The unit `Delta -> R^ L^ Delta` of the lifted adjunction `L^ -| R^`,
/// restricting along the counit of `l -| r` on cubes.
pub fn lifted_unit(adj: &CubeAdjunction, delta: &Arc<Presheaf>) -> Result<PshMorphism> {
    let rl = lifted(&adj.right, &*lifted(&adj.left, delta)?)?;
    let comp = delta.cat.objects().map(|w| delta.table(adj.counit[w.ix()]).to_vec()).collect();
    Ok(PshMorphism::new_unchecked(delta.clone(), rl, comp))
}

/// The counit `L^ R^ Gamma -> Gamma`, restricting along the unit on cubes.
pub fn lifted_counit(adj: &CubeAdjunction, gamma: &Arc<Presheaf>) -> Result<PshMorphism> {
    let lr = lifted(&adj.left, &*lifted(&adj.right, gamma)?)?;
    let comp = gamma.cat.objects().map(|v| gamma.table(adj.unit[v.ix()]).to_vec()).collect();
    Ok(PshMorphism::new_unchecked(lr, gamma.clone(), comp))
}

/// The right adjoint of a lifted functor. Cells at `W` are the natural
/// transformations `F^ y W -> Gamma`, stored by their components.
pub struct Rpsh {
    pub functor: Arc<CubeFunctor>,
    pub gamma: Arc<Presheaf>,
    pub psh: Arc<Presheaf>,
    cells: Vec<Vec<Vec<Vec<u32>>>>,
    index: Vec<HashMap<Vec<Vec<u32>>, u32>>,
}

impl Rpsh {
    pub fn new(f: &Arc<CubeFunctor>, gamma: &Arc<Presheaf>, budget: &mut Budget) -> Result<Rpsh> {
        if gamma.cat.trunc() != f.src().trunc() {
            return Err(Error::Param("presheaf does not live over the functor's source".into()));
        }
        let dst = f.dst().clone();
        let mut cells = Vec::new();
        let mut index = Vec::new();
        let mut reps = Vec::new();
        for w in dst.objects() {
            let yw = Presheaf::yoneda(&dst, w);
            let fyw = lifted(f, &yw)?;
            reps.push(fyw.clone());
            let homs = hom_set(&fyw, gamma, budget)?;
            let lvl: Vec<Vec<Vec<u32>>> = homs.into_iter().map(|h| h.comp).collect();
            index.push(lvl.iter().enumerate().map(|(i, c)| (c.clone(), i as u32)).collect::<HashMap<_, _>>());
            cells.push(lvl);
        }
        let src = f.src();
        let sizes = cells.iter().map(|l| l.len() as u32).collect();
        // (xi . phi)_U(psi) = xi_U(phi . psi) for psi : F U -> V.
        let restrict = dst
            .morphisms()
            .map(|phi| {
                let (v, w) = (dst.dom(phi), dst.cod(phi));
                cells[w.ix()]
                    .iter()
                    .map(|xi| {
                        let r: Vec<Vec<u32>> = src
                            .objects()
                            .map(|u| {
                                dst.hom(f.obj(u), v)
                                    .iter()
                                    .map(|&psi| xi[u.ix()][dst.hom_pos(dst.compose_unchecked(phi, psi))])
                                    .collect()
                            })
                            .collect();
                        index[v.ix()][&r]
                    })
                    .collect()
            })
            .collect();
        let psh = Arc::new(Presheaf::new_unchecked(dst, sizes, restrict));
        Ok(Rpsh { functor: f.clone(), gamma: gamma.clone(), psh, cells, index })
    }

    /// The components of cell `c` at `w`, indexed by source object and then
    /// by position in `hom(F u, w)`.
    pub fn cell(&self, w: ObjId, c: u32) -> &[Vec<u32>] {
        &self.cells[w.ix()][c as usize]
    }

    pub fn lookup(&self, w: ObjId, comps: &[Vec<u32>]) -> Option<u32> {
        self.index[w.ix()].get(comps).copied()
    }

    /// The counit `F^ F_ Gamma -> Gamma`: evaluate at the identity.
    pub fn counit(&self) -> Result<PshMorphism> {
        let f = &self.functor;
        let src = f.src();
        let dst = f.dst();
        let lifted_r = lifted(f, &self.psh)?;
        let comp = src
            .objects()
            .map(|u| {
                let fu = f.obj(u);
                let pos = dst.hom_pos(dst.id(fu));
                self.cells[fu.ix()].iter().map(|xi| xi[u.ix()][pos]).collect()
            })
            .collect();
        Ok(PshMorphism::new_unchecked(lifted_r, self.gamma.clone(), comp))
    }

    /// The action on a morphism `tau : Gamma -> Gamma'`, given the rpsh of the
    /// target: postcomposition.
    pub fn map(&self, tau: &PshMorphism, target: &Rpsh) -> Result<PshMorphism> {
        if *tau.src != *self.gamma || *tau.dst != *target.gamma {
            return Err(Error::Type("morphism does not match the rpsh presheaves".into()));
        }
        let dst = self.functor.dst();
        let comp = dst
            .objects()
            .map(|w| {
                self.cells[w.ix()]
                    .iter()
                    .map(|xi| {
                        let r: Vec<Vec<u32>> = xi
                            .iter()
                            .enumerate()
                            .map(|(u, lvl)| lvl.iter().map(|&c| tau.comp[u][c as usize]).collect())
                            .collect();
                        target.lookup(w, &r).expect("postcomposite is natural")
                    })
                    .collect()
            })
            .collect();
        Ok(PshMorphism::new_unchecked(self.psh.clone(), target.psh.clone(), comp))
    }
}

/// The unit `Delta -> F_ F^ Delta`, where `r` is the rpsh of `F^ Delta`.
pub fn rpsh_unit(delta: &Arc<Presheaf>, r: &Rpsh) -> Result<PshMorphism> {
    let f = &r.functor;
    if *lifted(f, delta)? != *r.gamma {
        return Err(Error::Type("rpsh was not taken of the lifted presheaf".into()));
    }
    let src = f.src();
    let dst = f.dst();
    let comp = dst
        .objects()
        .map(|w| {
            (0..delta.size(w) as u32)
                .map(|d| {
                    let xi: Vec<Vec<u32>> = src
                        .objects()
                        .map(|u| dst.hom(f.obj(u), w).iter().map(|&psi| delta.restrict(psi, d)).collect())
                        .collect();
                    r.lookup(w, &xi).expect("unit component is natural")
                })
                .collect()
        })
        .collect();
    Ok(PshMorphism::new_unchecked(delta.clone(), r.psh.clone(), comp))
}
