//! Cube categories and reshuffling functors on them.

use std::sync::Arc;

use bpcube::cube::{
    apply_reshuffle_cube, apply_reshuffle_fm, cast_family, enumerate_nat_trans_cube, reshuffle_cast_cube, Assign, Cube,
    CubeFunctor, FaceMap,
};
use bpcube::mode::{Depth, Reshuffle};
use bpcube::Result;
use serde_json::json;

use super::mode::all_upto;
use super::{Env, Outcome, Tally};

fn acting_upto(max: i32) -> Vec<Reshuffle> {
    all_upto(max).into_iter().filter(|f| f.count_adjoints().acts_on_cubes()).collect()
}

pub fn category(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in env.depths(-1) {
        let cat = env.cat(depth)?;
        for f in cat.morphisms() {
            let fm = cat.face_map(f);
            let unital = cat.compose(f, cat.id(cat.dom(f)))? == f && cat.compose(cat.id(cat.cod(f)), f)? == f;
            t.record(unital, || json!({ "depth": depth, "unit": fm.to_string() }));
            for &g in cat.maps_into(cat.dom(f)) {
                let fg = cat.compose(f, g)?;
                t.record(
                    cat.face_map(fg) == FaceMap::compose(&fm, &cat.face_map(g))?,
                    || json!({ "depth": depth, "compose": [fm.to_string(), cat.face_map(g).to_string()] }),
                );
                for &h in cat.maps_into(cat.dom(g)) {
                    let ok = cat.compose(fg, h)? == cat.compose(f, cat.compose(g, h)?)?;
                    t.record(ok, || json!({ "depth": depth, "assoc": fm.to_string() }));
                }
            }
        }
    }
    Ok(t.finish(1))
}

/// Functoriality of `F -> F(-)` on cubes and face maps, and of composition.
pub fn two_functor(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let rs = acting_upto(env.cfg.depth);
    for f in &rs {
        let src = env.cat(f.dom().get())?;
        let dst = env.cat(f.cod().get())?;
        let ff = CubeFunctor::new(f, src.clone(), dst.clone())?;
        for m in src.morphisms() {
            let phi = src.face_map(m);
            let img = apply_reshuffle_fm(f, &phi)?;
            t.record(dst.face_map(ff.mor(m)) == img, || json!({ "f": f, "phi": phi.to_string() }));
            if f == &Reshuffle::identity(f.dom()) {
                t.record(img == phi, || json!({ "identity_moves": phi.to_string() }));
            }
            for g in rs.iter().filter(|g| g.dom() == f.cod()) {
                let gf = Reshuffle::compose(g, f)?;
                let ok = apply_reshuffle_fm(&gf, &phi)? == apply_reshuffle_fm(g, &img)?;
                t.record(ok, || json!({ "g": g, "f": f, "phi": phi.to_string() }));
            }
            for &g in src.maps_into(src.dom(m)) {
                let ok = ff.mor(src.compose(m, g)?) == dst.compose(ff.mor(m), ff.mor(g))?;
                t.record(ok, || json!({ "f": f, "functorial": phi.to_string() }));
            }
        }
        for o in src.objects() {
            let w = src.cube(o);
            let ok = apply_reshuffle_fm(f, &FaceMap::identity(w))? == FaceMap::identity(&apply_reshuffle_cube(f, w)?);
            t.record(ok, || json!({ "f": f, "identity_on": w }));
        }
    }
    Ok(t.finish(1))
}

/// Naturality of casts `F => F2` for `F <= F2` and `cast(F2,F3) . cast(F,F2) = cast(F,F3)`.
pub fn cast_coherence(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let rs = acting_upto(env.cfg.depth);
    for f in &rs {
        let src = env.cat(f.dom().get())?;
        let dst = env.cat(f.cod().get())?;
        let ff = CubeFunctor::new(f, src.clone(), dst.clone())?;
        let above: Vec<&Reshuffle> =
            rs.iter().filter(|g| g.dom() == f.dom() && g.cod() == f.cod() && f.leq(g).unwrap_or(false)).collect();
        for f2 in &above {
            let ff2 = CubeFunctor::new(f2, src.clone(), dst.clone())?;
            let cast = cast_family(&ff, &ff2)?;
            for m in src.morphisms() {
                let (v, w) = (src.dom(m), src.cod(m));
                let ok = dst.compose(ff2.mor(m), cast[v.ix()])? == dst.compose(cast[w.ix()], ff.mor(m))?;
                t.record(ok, || json!({ "f": f, "f2": f2, "phi": src.face_map(m).to_string() }));
            }
            for f3 in above.iter().filter(|g| f2.leq(g).unwrap_or(false)) {
                let ff3 = CubeFunctor::new(f3, src.clone(), dst.clone())?;
                let c23 = cast_family(&ff2, &ff3)?;
                let c13 = cast_family(&ff, &ff3)?;
                for o in src.objects() {
                    let ok = dst.compose(c23[o.ix()], cast[o.ix()])? == c13[o.ix()];
                    t.record(ok, || json!({ "f": f, "f2": f2, "f3": f3, "at": src.cube(o) }));
                }
            }
        }
    }
    Ok(t.finish(1))
}

/// Depth-1 flavors: 0 is a path, 1 a bridge. Each row lists the image
/// flavor of a path and of a bridge variable, `None` when dropped.
const COHESION: [(&str, i32, [Option<u8>; 2]); 5] = [
    ("(0|1)", 0, [None, Some(0)]),
    ("(=|1)", 0, [Some(0), Some(0)]),
    ("(0|0,1)", 1, [None, Some(1)]),
    ("(=|=,1)", 1, [Some(1), Some(1)]),
    ("(=|1,1)", 1, [Some(0), Some(0)]),
];

fn expected_image(row: &[Option<u8>; 2], cod_depth: i32, phi: &FaceMap) -> Result<FaceMap> {
    let depth = Depth::new(cod_depth)?;
    let keep = |c: &Cube| -> (Vec<u8>, Vec<Option<u8>>) {
        let mut out = Vec::new();
        let mut ix = Vec::new();
        for &k in c.flavors() {
            match row[k as usize] {
                Some(j) => {
                    ix.push(Some(out.len() as u8));
                    out.push(j);
                }
                None => ix.push(None),
            }
        }
        (out, ix)
    };
    let (vf, vix) = keep(&phi.dom);
    let (wf, wix) = keep(&phi.cod);
    let assign = phi
        .assign
        .iter()
        .zip(&wix)
        .filter(|(_, k)| k.is_some())
        .map(|(a, _)| match a {
            Assign::Var(j) => Assign::Var(vix[*j as usize].expect("flavor order is respected")),
            e => *e,
        })
        .collect();
    FaceMap::new(Cube::new(depth, vf)?, Cube::new(depth, wf)?, assign)
}

/// The depth-1 cohesion functors on objects and face maps, and the casts
/// `Id => shp`, `flat => Id`, `Id => sharp`, against a per-flavor table.
pub fn cohesion_table(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let cat = env.cat(1)?;
    let mut cells = 0;
    for (lit, cod, row) in COHESION {
        let f = Reshuffle::parse(lit, Some(1))?;
        for m in cat.morphisms() {
            let phi = cat.face_map(m);
            let want = expected_image(&row, cod, &phi)?;
            let got = apply_reshuffle_fm(&f, &phi)?;
            cells += 1;
            t.record(got == want, || json!({ "functor": lit, "phi": phi.to_string(), "got": got.to_string() }));
        }
    }
    let id1 = Reshuffle::identity(Depth::new(1)?);
    let shp = Reshuffle::parse("(0|0,1)", Some(1))?;
    let flat = Reshuffle::parse("(=|=,1)", Some(1))?;
    let sharp = Reshuffle::parse("(=|1,1)", Some(1))?;
    for o in cat.objects() {
        let w = cat.cube(o).clone();
        let d1 = w.depth();
        let fl = w.flavors().to_vec();
        // shp forgets paths; the cast keeps each bridge.
        let bridges: Vec<usize> = (0..fl.len()).filter(|&i| fl[i] == 1).collect();
        let want_s = FaceMap::new(
            w.clone(),
            Cube::new(d1, vec![1; bridges.len()])?,
            bridges.iter().map(|&i| Assign::Var(i as u8)).collect(),
        )?;
        let all_vars: Vec<Assign> = (0..fl.len()).map(|i| Assign::Var(i as u8)).collect();
        let want_k = FaceMap::new(Cube::new(d1, vec![1; fl.len()])?, w.clone(), all_vars.clone())?;
        let want_i = FaceMap::new(w.clone(), Cube::new(d1, vec![0; fl.len()])?, all_vars)?;
        for (name, got, want) in [
            ("varsigma", reshuffle_cast_cube(&id1, &shp, &w)?, want_s),
            ("kappa", reshuffle_cast_cube(&flat, &id1, &w)?, want_k),
            ("iota", reshuffle_cast_cube(&id1, &sharp, &w)?, want_i),
        ] {
            cells += 1;
            t.record(got == want, || json!({ "cast": name, "at": w, "got": got.to_string() }));
        }
    }
    t.note("cells", cells);
    Ok(t.finish(1))
}

/// Between reshuffling cube functors there is at most one natural
/// transformation, and it is the cast when one exists.
pub fn no_maze(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let rs = acting_upto(env.cfg.depth);
    let mut pairs = 0;
    for f in &rs {
        let src = env.cat(f.dom().get())?;
        let dst = env.cat(f.cod().get())?;
        let ff = CubeFunctor::new(f, src.clone(), dst.clone())?;
        for g in rs.iter().filter(|g| g.dom() == f.dom() && g.cod() == f.cod()) {
            let gg: Arc<CubeFunctor> = CubeFunctor::new(g, src.clone(), dst.clone())?;
            let all = enumerate_nat_trans_cube(&ff, &gg)?;
            let ok = all.len() <= 1 && (!f.leq(g)? || all == vec![cast_family(&ff, &gg)?]);
            pairs += 1;
            t.record(ok, || json!({ "f": f, "g": g, "transformations": all.len() }));
        }
    }
    t.note("pairs", pairs);
    Ok(t.finish(1))
}
