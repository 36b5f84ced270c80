//! Depth-n cube categories under a dimension truncation.
//!
//! Cubes are kept in a skeletal form: a cube is its multiset of flavors,
//! stored sorted, and its variables are named `i1, i2, ..` in that order.
//! Isomorphic cubes such as `(i1:1, i2:0)` and `(i1:0, i2:1)` are one
//! object; the isomorphism between them becomes an automorphism.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mode::{Depth, Level, Reshuffle};

/// Upper bound on the number of dimension variables of any cube.
pub const MAX_DIMS: usize = 4;
const BASE: u32 = MAX_DIMS as u32 + 2;

/// An object of the cube category of some depth.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    depth: Depth,
    flavors: Vec<u8>,
}

impl Cube {
    pub fn new(depth: Depth, mut flavors: Vec<u8>) -> Result<Self> {
        if flavors.iter().any(|&k| k as i32 > depth.get()) {
            return Err(Error::Param(format!("flavor exceeds depth {depth} in {flavors:?}")));
        }
        if flavors.len() > MAX_DIMS {
            return Err(Error::Param(format!("at most {MAX_DIMS} dimensions are supported")));
        }
        flavors.sort_unstable();
        Ok(Cube { depth, flavors })
    }

    pub fn point(depth: Depth) -> Self {
        Cube { depth, flavors: Vec::new() }
    }

    pub fn depth(&self) -> Depth {
        self.depth
    }

    pub fn dims(&self) -> usize {
        self.flavors.len()
    }

    pub fn flavors(&self) -> &[u8] {
        &self.flavors
    }

    pub fn flavor(&self, var: usize) -> u8 {
        self.flavors[var]
    }

    pub fn var_name(var: usize) -> String {
        format!("i{}", var + 1)
    }

    /// Parse `(i1:2, i2:0)`; names are checked for distinctness and then
    /// discarded, the flavors are sorted.
    pub fn parse(depth: Depth, s: &str) -> Result<Cube> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("`{s}` is not a parenthesized cube")))?;
        let mut names = Vec::new();
        let mut flavors = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, fl) =
                part.split_once(':').ok_or_else(|| Error::Parse(format!("`{part}` lacks `name:flavor`")))?;
            let name = name.trim().to_string();
            if names.contains(&name) {
                return Err(Error::Parse(format!("duplicate variable `{name}`")));
            }
            names.push(name);
            flavors.push(fl.trim().parse::<u8>().map_err(|_| Error::Parse(format!("bad flavor in `{part}`")))?);
        }
        Cube::new(depth, flavors)
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (ix, k) in self.flavors.iter().enumerate() {
            if ix > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{k}", Cube::var_name(ix))?;
        }
        write!(f, ")")
    }
}

impl Serialize for Cube {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// What a face map assigns to one codomain variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Assign {
    Zero,
    One,
    Var(u8),
}

impl Assign {
    fn digit(self) -> u32 {
        match self {
            Assign::Zero => 0,
            Assign::One => 1,
            Assign::Var(j) => 2 + j as u32,
        }
    }

    fn from_digit(d: u32) -> Assign {
        match d {
            0 => Assign::Zero,
            1 => Assign::One,
            j => Assign::Var((j - 2) as u8),
        }
    }
}

/// A morphism `dom -> cod` of cubes: each codomain variable receives an
/// endpoint or a domain variable of at least its own flavor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FaceMap {
    pub dom: Cube,
    pub cod: Cube,
    pub assign: Vec<Assign>,
}

impl FaceMap {
    pub fn new(dom: Cube, cod: Cube, assign: Vec<Assign>) -> Result<Self> {
        if dom.depth != cod.depth {
            return Err(Error::Depth(format!("face map between depths {} and {}", dom.depth, cod.depth)));
        }
        if assign.len() != cod.dims() {
            return Err(Error::Param(format!("{} assignments for codomain {cod}", assign.len())));
        }
        for (w, a) in assign.iter().enumerate() {
            if let Assign::Var(j) = a {
                let j = *j as usize;
                if j >= dom.dims() || dom.flavor(j) < cod.flavor(w) {
                    return Err(Error::Param(format!(
                        "cannot assign {} of {dom} to {} of {cod}",
                        Cube::var_name(j),
                        Cube::var_name(w)
                    )));
                }
            }
        }
        Ok(FaceMap { dom, cod, assign })
    }

    pub fn identity(w: &Cube) -> FaceMap {
        FaceMap { dom: w.clone(), cod: w.clone(), assign: (0..w.dims() as u8).map(Assign::Var).collect() }
    }

    /// `f . g` for `g : U -> V` and `f : V -> W`.
    pub fn compose(f: &FaceMap, g: &FaceMap) -> Result<FaceMap> {
        if g.cod != f.dom {
            return Err(Error::Composition(format!("{g} : {} -> {} then {f} : {} -> {}", g.dom, g.cod, f.dom, f.cod)));
        }
        let assign = f
            .assign
            .iter()
            .map(|a| match a {
                Assign::Var(v) => g.assign[*v as usize],
                e => *e,
            })
            .collect();
        Ok(FaceMap { dom: g.dom.clone(), cod: f.cod.clone(), assign })
    }

    /// Every face map `v -> w`, in lexicographic order of assignments.
    pub fn enumerate(v: &Cube, w: &Cube) -> Vec<FaceMap> {
        let options: Vec<Vec<Assign>> = w
            .flavors
            .iter()
            .map(|&k| {
                let mut o = vec![Assign::Zero, Assign::One];
                o.extend((0..v.dims()).filter(|&j| v.flavor(j) >= k).map(|j| Assign::Var(j as u8)));
                o
            })
            .collect();
        let mut out = vec![Vec::new()];
        for opts in &options {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<Assign>| {
                    opts.iter().map(move |a| {
                        let mut p = prefix.clone();
                        p.push(*a);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(|assign| FaceMap { dom: v.clone(), cod: w.clone(), assign }).collect()
    }

    /// Parse `(0/i1, i2/i2)` for given domain and codomain: one entry per
    /// codomain variable, in order.
    pub fn parse(dom: &Cube, cod: &Cube, s: &str) -> Result<FaceMap> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("`{s}` is not a parenthesized face map")))?;
        let mut assign = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (src, _) = part.split_once('/').ok_or_else(|| Error::Parse(format!("`{part}` lacks `/`")))?;
            assign.push(match src.trim() {
                "0" => Assign::Zero,
                "1" => Assign::One,
                name => {
                    let ix = name
                        .strip_prefix('i')
                        .and_then(|n| n.parse::<usize>().ok())
                        .filter(|&n| n >= 1)
                        .ok_or_else(|| Error::Parse(format!("bad variable `{name}`")))?;
                    Assign::Var((ix - 1) as u8)
                }
            });
        }
        FaceMap::new(dom.clone(), cod.clone(), assign)
    }
}

impl fmt::Display for FaceMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (w, a) in self.assign.iter().enumerate() {
            if w > 0 {
                write!(f, ", ")?;
            }
            let src = match a {
                Assign::Zero => "0".to_string(),
                Assign::One => "1".to_string(),
                Assign::Var(j) => Cube::var_name(*j as usize),
            };
            write!(f, "{src}/{}", Cube::var_name(w))?;
        }
        write!(f, ")")
    }
}

/// The finite piece of a cube category that is enumerated: depth plus an
/// upper bound `max_dims` on the number of variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Truncation {
    pub depth: Depth,
    pub max_dims: usize,
}

impl Truncation {
    pub fn new(depth: i32, max_dims: usize) -> Result<Self> {
        if max_dims > MAX_DIMS {
            return Err(Error::Param(format!("at most {MAX_DIMS} dimensions are supported")));
        }
        Ok(Truncation { depth: Depth::new(depth)?, max_dims })
    }

    /// Every cube in the truncation, by dimension and then flavors.
    pub fn cubes(&self) -> Vec<Cube> {
        let d = self.depth.get();
        if d < 0 {
            return vec![Cube::point(self.depth)];
        }
        let mut out = Vec::new();
        let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
        for _ in 0..=self.max_dims {
            out.extend(layer.iter().map(|f| Cube { depth: self.depth, flavors: f.clone() }));
            layer = layer
                .iter()
                .flat_map(|f| {
                    let start = f.last().copied().unwrap_or(0);
                    (start..=d as u8).map(move |k| {
                        let mut g = f.clone();
                        g.push(k);
                        g
                    })
                })
                .collect();
        }
        out
    }
}

/// Index of an object in a [`CubeCat`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjId(pub u32);

/// Index of a morphism in a [`CubeCat`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MorId(pub u32);

impl ObjId {
    pub fn ix(self) -> usize {
        self.0 as usize
    }
}

impl MorId {
    pub fn ix(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug)]
struct Mor {
    dom: ObjId,
    cod: ObjId,
    code: u32,
}

const NO_MOR: u32 = u32::MAX;

/// A truncated cube category with every object and morphism indexed.
#[derive(Debug)]
pub struct CubeCat {
    trunc: Truncation,
    objects: Vec<Cube>,
    obj_ix: HashMap<Vec<u8>, ObjId>,
    mors: Vec<Mor>,
    /// `homs[v][w]`: morphisms `v -> w` in enumeration order.
    homs: Vec<Vec<Vec<MorId>>>,
    /// `codes[v][w][code]`: the morphism `v -> w` with that assignment code.
    codes: Vec<Vec<Vec<u32>>>,
    into: Vec<Vec<MorId>>,
    hom_pos: Vec<u32>,
    identity: Vec<MorId>,
}

impl CubeCat {
    pub fn new(trunc: Truncation) -> Arc<CubeCat> {
        let objects = trunc.cubes();
        let obj_ix = objects.iter().enumerate().map(|(i, c)| (c.flavors.clone(), ObjId(i as u32))).collect();
        let n = objects.len();
        let mut mors = Vec::new();
        let mut homs = vec![vec![Vec::new(); n]; n];
        let mut codes = vec![vec![Vec::new(); n]; n];
        let mut into = vec![Vec::new(); n];
        let mut hom_pos = Vec::new();
        for (vi, v) in objects.iter().enumerate() {
            for (wi, w) in objects.iter().enumerate() {
                let mut table = vec![NO_MOR; BASE.pow(w.dims() as u32) as usize];
                for fm in FaceMap::enumerate(v, w) {
                    let code = encode(&fm.assign);
                    let id = MorId(mors.len() as u32);
                    mors.push(Mor { dom: ObjId(vi as u32), cod: ObjId(wi as u32), code });
                    table[code as usize] = id.0;
                    hom_pos.push(homs[vi][wi].len() as u32);
                    homs[vi][wi].push(id);
                    into[wi].push(id);
                }
                codes[vi][wi] = table;
            }
        }
        let mut cat = CubeCat { trunc, objects, obj_ix, mors, homs, codes, into, hom_pos, identity: Vec::new() };
        cat.identity = (0..n)
            .map(|o| {
                let w = &cat.objects[o];
                let a: Vec<Assign> = (0..w.dims() as u8).map(Assign::Var).collect();
                cat.lookup(ObjId(o as u32), ObjId(o as u32), &a).expect("identity exists")
            })
            .collect();
        Arc::new(cat)
    }

    pub fn trunc(&self) -> Truncation {
        self.trunc
    }

    pub fn depth(&self) -> Depth {
        self.trunc.depth
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_morphisms(&self) -> usize {
        self.mors.len()
    }

    pub fn objects(&self) -> impl Iterator<Item = ObjId> + '_ {
        (0..self.objects.len() as u32).map(ObjId)
    }

    pub fn morphisms(&self) -> impl Iterator<Item = MorId> + '_ {
        (0..self.mors.len() as u32).map(MorId)
    }

    pub fn cube(&self, o: ObjId) -> &Cube {
        &self.objects[o.ix()]
    }

    pub fn obj_of(&self, c: &Cube) -> Option<ObjId> {
        if c.depth != self.trunc.depth {
            return None;
        }
        self.obj_ix.get(&c.flavors).copied()
    }

    pub fn dom(&self, m: MorId) -> ObjId {
        self.mors[m.ix()].dom
    }

    pub fn cod(&self, m: MorId) -> ObjId {
        self.mors[m.ix()].cod
    }

    pub fn dims(&self, o: ObjId) -> usize {
        self.objects[o.ix()].dims()
    }

    pub fn hom(&self, v: ObjId, w: ObjId) -> &[MorId] {
        &self.homs[v.ix()][w.ix()]
    }

    /// Position of `m` within `hom(dom m, cod m)`.
    pub fn hom_pos(&self, m: MorId) -> usize {
        self.hom_pos[m.ix()] as usize
    }

    /// Objects sorted by decreasing dimension.
    pub fn objects_by_dims_desc(&self) -> Vec<ObjId> {
        let mut v: Vec<ObjId> = self.objects().collect();
        v.sort_by_key(|o| std::cmp::Reverse(self.dims(*o)));
        v
    }

    /// Every morphism with codomain `w`.
    pub fn maps_into(&self, w: ObjId) -> &[MorId] {
        &self.into[w.ix()]
    }

    pub fn id(&self, o: ObjId) -> MorId {
        self.identity[o.ix()]
    }

    pub fn assign(&self, m: MorId) -> Vec<Assign> {
        let mor = &self.mors[m.ix()];
        decode(mor.code, self.objects[mor.cod.ix()].dims())
    }

    /// The assignment of codomain variable `w` under `m`.
    pub fn assign_at(&self, m: MorId, w: usize) -> Assign {
        Assign::from_digit(self.mors[m.ix()].code / BASE.pow(w as u32) % BASE)
    }

    pub fn face_map(&self, m: MorId) -> FaceMap {
        let mor = &self.mors[m.ix()];
        FaceMap {
            dom: self.objects[mor.dom.ix()].clone(),
            cod: self.objects[mor.cod.ix()].clone(),
            assign: self.assign(m),
        }
    }

    pub fn lookup(&self, v: ObjId, w: ObjId, assign: &[Assign]) -> Option<MorId> {
        let table = &self.codes[v.ix()][w.ix()];
        let id = *table.get(encode(assign) as usize)?;
        (id != NO_MOR).then_some(MorId(id))
    }

    pub fn mor_of(&self, fm: &FaceMap) -> Option<MorId> {
        self.lookup(self.obj_of(&fm.dom)?, self.obj_of(&fm.cod)?, &fm.assign)
    }

    /// `f . g` for `g : U -> V` and `f : V -> W`.
    pub fn compose(&self, f: MorId, g: MorId) -> Result<MorId> {
        let (fm, gm) = (&self.mors[f.ix()], &self.mors[g.ix()]);
        if gm.cod != fm.dom {
            return Err(Error::Composition(format!("{} then {}", self.face_map(g), self.face_map(f))));
        }
        Ok(self.compose_unchecked(f, g))
    }

    pub(crate) fn compose_unchecked(&self, f: MorId, g: MorId) -> MorId {
        let (fm, gm) = (&self.mors[f.ix()], &self.mors[g.ix()]);
        let w_dims = self.objects[fm.cod.ix()].dims();
        let mut code = 0;
        let mut scale = 1;
        let mut fc = fm.code;
        for _ in 0..w_dims {
            let d = fc % BASE;
            fc /= BASE;
            let e = if d >= 2 { gm.code / BASE.pow(d - 2) % BASE } else { d };
            code += e * scale;
            scale *= BASE;
        }
        MorId(self.codes[gm.dom.ix()][fm.cod.ix()][code as usize])
    }

    /// The weakening `(\i) : w -> w minus i`, with its codomain.
    pub fn weakening(&self, w: ObjId, var: usize) -> (MorId, ObjId) {
        let cube = &self.objects[w.ix()];
        let mut fl = cube.flavors.clone();
        fl.remove(var);
        let cod = self.obj_ix[&fl];
        let a: Vec<Assign> = (0..cube.dims()).filter(|&j| j != var).map(|j| Assign::Var(j as u8)).collect();
        (self.lookup(w, cod, &a).expect("weakening exists"), cod)
    }

    /// The endpoint section `(e/i) : w minus i -> w` for `e` in {0, 1}.
    pub fn endpoint(&self, w: ObjId, var: usize, one: bool) -> MorId {
        let cube = &self.objects[w.ix()];
        let mut fl = cube.flavors.clone();
        fl.remove(var);
        let dom = self.obj_ix[&fl];
        let a: Vec<Assign> = (0..cube.dims())
            .map(|j| match j.cmp(&var) {
                std::cmp::Ordering::Less => Assign::Var(j as u8),
                std::cmp::Ordering::Equal => {
                    if one {
                        Assign::One
                    } else {
                        Assign::Zero
                    }
                }
                std::cmp::Ordering::Greater => Assign::Var(j as u8 - 1),
            })
            .collect();
        self.lookup(dom, w, &a).expect("endpoint exists")
    }
}

fn encode(assign: &[Assign]) -> u32 {
    assign.iter().rev().fold(0, |acc, a| acc * BASE + a.digit())
}

fn decode(mut code: u32, dims: usize) -> Vec<Assign> {
    (0..dims)
        .map(|_| {
            let d = code % BASE;
            code /= BASE;
            Assign::from_digit(d)
        })
        .collect()
}

/// The functor on cubes induced by a reshuffle with two right adjoints.
///
/// With `G` the right adjoint of `F`, a variable of flavor `k` is sent to
/// flavor `k.G`, or dropped when `k.G` is `=`.
#[derive(Debug)]
pub struct CubeFunctor {
    reshuffle: Reshuffle,
    src: Arc<CubeCat>,
    dst: Arc<CubeCat>,
    obj: Vec<ObjId>,
    /// Per source object: new index of each variable, if kept.
    vars: Vec<Vec<Option<u8>>>,
    mor: Vec<MorId>,
}

impl CubeFunctor {
    pub fn new(f: &Reshuffle, src: Arc<CubeCat>, dst: Arc<CubeCat>) -> Result<Arc<CubeFunctor>> {
        if !f.count_adjoints().acts_on_cubes() {
            return Err(Error::Class(format!("{f} does not have two right adjoints")));
        }
        if src.depth() != f.dom() || dst.depth() != f.cod() {
            return Err(Error::Depth(format!(
                "{f} : {} -> {} used between cube categories of depths {} and {}",
                f.dom(),
                f.cod(),
                src.depth(),
                dst.depth()
            )));
        }
        if src.trunc.max_dims != dst.trunc.max_dims {
            return Err(Error::Param("source and target truncations differ in dimension".into()));
        }
        let g = f.right_adjoint().expect("two right adjoints");
        let mut obj = Vec::new();
        let mut vars = Vec::new();
        for o in src.objects() {
            let (flavors, map) = apply_flavors(&g, src.cube(o).flavors());
            obj.push(dst.obj_ix[&flavors]);
            vars.push(map);
        }
        let mut mor = Vec::with_capacity(src.num_morphisms());
        for m in src.morphisms() {
            let (v, w) = (src.dom(m), src.cod(m));
            let a: Vec<Assign> = src
                .assign(m)
                .into_iter()
                .enumerate()
                .filter(|(wv, _)| vars[w.ix()][*wv].is_some())
                .map(|(_, a)| match a {
                    Assign::Var(j) => Assign::Var(vars[v.ix()][j as usize].expect("kept by monotonicity")),
                    e => e,
                })
                .collect();
            mor.push(dst.lookup(obj[v.ix()], obj[w.ix()], &a).expect("image face map exists"));
        }
        Ok(Arc::new(CubeFunctor { reshuffle: f.clone(), src, dst, obj, vars, mor }))
    }

    pub fn reshuffle(&self) -> &Reshuffle {
        &self.reshuffle
    }

    pub fn src(&self) -> &Arc<CubeCat> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<CubeCat> {
        &self.dst
    }

    pub fn obj(&self, o: ObjId) -> ObjId {
        self.obj[o.ix()]
    }

    pub fn mor(&self, m: MorId) -> MorId {
        self.mor[m.ix()]
    }

    /// New index of variable `var` of source object `o`, if it is kept.
    pub fn var(&self, o: ObjId, var: usize) -> Option<u8> {
        self.vars[o.ix()][var]
    }
}

/// Image flavors under the right adjoint `g`, and where each variable goes.
fn apply_flavors(g: &Reshuffle, flavors: &[u8]) -> (Vec<u8>, Vec<Option<u8>>) {
    let mut out = Vec::new();
    let mut map = Vec::new();
    for &k in flavors {
        match g.lookup(Level::Fin(k)) {
            Level::Fin(j) => {
                map.push(Some(out.len() as u8));
                out.push(j);
            }
            _ => map.push(None),
        }
    }
    (out, map)
}

/// Apply a reshuffle with two right adjoints to a single cube.
pub fn apply_reshuffle_cube(f: &Reshuffle, w: &Cube) -> Result<Cube> {
    if !f.count_adjoints().acts_on_cubes() {
        return Err(Error::Class(format!("{f} does not have two right adjoints")));
    }
    if w.depth != f.dom() {
        return Err(Error::Depth(format!("{f} acts on depth {} cubes, not {w}", f.dom())));
    }
    let g = f.right_adjoint().expect("two right adjoints");
    Ok(Cube { depth: f.cod(), flavors: apply_flavors(&g, &w.flavors).0 })
}

/// Apply a reshuffle with two right adjoints to a face map.
pub fn apply_reshuffle_fm(f: &Reshuffle, phi: &FaceMap) -> Result<FaceMap> {
    let dom = apply_reshuffle_cube(f, &phi.dom)?;
    let cod = apply_reshuffle_cube(f, &phi.cod)?;
    let g = f.right_adjoint().expect("checked above");
    let (_, vmap) = apply_flavors(&g, &phi.dom.flavors);
    let (_, wmap) = apply_flavors(&g, &phi.cod.flavors);
    let assign = phi
        .assign
        .iter()
        .zip(&wmap)
        .filter(|(_, kept)| kept.is_some())
        .map(|(a, _)| match a {
            Assign::Var(j) => Assign::Var(vmap[*j as usize].expect("kept by monotonicity")),
            e => *e,
        })
        .collect();
    Ok(FaceMap { dom, cod, assign })
}

/// The reshuffle cast `f(w) -> f2(w)` for `f <= f2`: every variable kept
/// by `f2` is sent to the same variable of `f(w)`.
pub fn reshuffle_cast_cube(f: &Reshuffle, f2: &Reshuffle, w: &Cube) -> Result<FaceMap> {
    if !f.leq(f2)? {
        return Err(Error::Order(format!("{f} is not below {f2}")));
    }
    let dom = apply_reshuffle_cube(f, w)?;
    let cod = apply_reshuffle_cube(f2, w)?;
    let (g, g2) = (f.right_adjoint().expect("checked"), f2.right_adjoint().expect("checked"));
    let (_, map) = apply_flavors(&g, &w.flavors);
    let (_, map2) = apply_flavors(&g2, &w.flavors);
    let assign = map2
        .iter()
        .zip(&map)
        .filter(|(k2, _)| k2.is_some())
        .map(|(_, k)| Assign::Var(k.expect("a variable kept by f2 is kept by f")))
        .collect();
    FaceMap::new(dom, cod, assign)
}

/// The cast `F => F2` of cube functors as a family indexed by source objects.
pub fn cast_family(f: &CubeFunctor, f2: &CubeFunctor) -> Result<Vec<MorId>> {
    let cat = &f.src;
    cat.objects()
        .map(|o| {
            let fm = reshuffle_cast_cube(&f.reshuffle, &f2.reshuffle, cat.cube(o))?;
            Ok(f.dst.mor_of(&fm).expect("cast lies in the truncation"))
        })
        .collect()
}

/// An adjunction `l -| r` of cube functors coming from adjoint reshuffles,
/// with unit `v -> r(l(v))` and counit `l(r(w)) -> w` as face map families.
#[derive(Debug)]
pub struct CubeAdjunction {
    pub left: Arc<CubeFunctor>,
    pub right: Arc<CubeFunctor>,
    pub unit: Vec<MorId>,
    pub counit: Vec<MorId>,
}

impl CubeAdjunction {
    /// The adjunction whose left functor is that of `f`; both `f` and its
    /// right adjoint must act on cubes.
    pub fn new(f: &Reshuffle, src: Arc<CubeCat>, dst: Arc<CubeCat>) -> Result<CubeAdjunction> {
        let g = f.right_adjoint().ok_or_else(|| Error::Class(format!("{f} has no right adjoint")))?;
        let left = CubeFunctor::new(f, src.clone(), dst.clone())?;
        let right = CubeFunctor::new(&g, dst.clone(), src.clone())?;
        let unique = |a: &CubeFunctor, b: &CubeFunctor| -> Result<Vec<MorId>> {
            let mut all = enumerate_nat_trans_cube(a, b)?;
            if all.len() != 1 {
                return Err(Error::Invalid(format!("{} natural transformations where one was expected", all.len())));
            }
            Ok(all.pop().expect("one element"))
        };
        let id_src = CubeFunctor::new(&Reshuffle::identity(f.dom()), src.clone(), src.clone())?;
        let id_dst = CubeFunctor::new(&Reshuffle::identity(f.cod()), dst.clone(), dst.clone())?;
        let rl = CubeFunctor::new(&Reshuffle::compose(&g, f)?, src.clone(), src)?;
        let lr = CubeFunctor::new(&Reshuffle::compose(f, &g)?, dst.clone(), dst)?;
        let unit = unique(&id_src, &rl)?;
        let counit = unique(&lr, &id_dst)?;
        Ok(CubeAdjunction { left, right, unit, counit })
    }
}

/// Every natural transformation `F => G` between cube functors with the same
/// source and target, as families of face maps `F(w) -> G(w)`.
pub fn enumerate_nat_trans_cube(f: &CubeFunctor, g: &CubeFunctor) -> Result<Vec<Vec<MorId>>> {
    if !Arc::ptr_eq(&f.src, &g.src) || !Arc::ptr_eq(&f.dst, &g.dst) {
        return Err(Error::Param("functors must share source and target categories".into()));
    }
    let (src, dst) = (&f.src, &f.dst);
    let n = src.num_objects();
    // Objects in order of dimension, so constraints appear early.
    let order: Vec<ObjId> = src.objects().collect();
    let mut chosen: Vec<Option<MorId>> = vec![None; n];
    let mut out = Vec::new();

    fn consistent(
        src: &CubeCat,
        dst: &CubeCat,
        f: &CubeFunctor,
        g: &CubeFunctor,
        chosen: &[Option<MorId>],
        w: ObjId,
    ) -> bool {
        // Check naturality squares for morphisms between `w` and chosen objects.
        for v in src.objects() {
            let Some(av) = chosen[v.ix()] else { continue };
            for &phi in src.hom(v, w) {
                let aw = chosen[w.ix()].expect("w is chosen");
                let lhs = dst.compose_unchecked(g.mor(phi), av);
                let rhs = dst.compose_unchecked(aw, f.mor(phi));
                if lhs != rhs {
                    return false;
                }
            }
            for &phi in src.hom(w, v) {
                let aw = chosen[w.ix()].expect("w is chosen");
                let lhs = dst.compose_unchecked(g.mor(phi), aw);
                let rhs = dst.compose_unchecked(av, f.mor(phi));
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn go(
        depth: usize,
        order: &[ObjId],
        src: &CubeCat,
        dst: &CubeCat,
        f: &CubeFunctor,
        g: &CubeFunctor,
        chosen: &mut Vec<Option<MorId>>,
        out: &mut Vec<Vec<MorId>>,
    ) {
        if depth == order.len() {
            out.push(chosen.iter().map(|c| c.expect("all chosen")).collect());
            return;
        }
        let w = order[depth];
        for &cand in dst.hom(f.obj(w), g.obj(w)) {
            chosen[w.ix()] = Some(cand);
            if consistent(src, dst, f, g, chosen, w) {
                go(depth + 1, order, src, dst, f, g, chosen, out);
            }
        }
        chosen[w.ix()] = None;
    }

    go(0, &order, src, dst, f, g, &mut chosen, &mut out);
    Ok(out)
}
