use bpcube::cube::{apply_reshuffle_cube, apply_reshuffle_fm, Cube, CubeCat, FaceMap, Truncation};
use bpcube::disc::{is_discrete_ctx, random_discrete_presheaf, se_relation_ctx};
use bpcube::mode::{Depth, Level, Reshuffle};
use bpcube::psh::{random_presheaf, EquivRelation, GenParams};
use proptest::prelude::*;
use proptest::sample::Index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn d(k: i32) -> Depth {
    Depth::new(k).unwrap()
}

fn pick(dom: i32, cod: i32, ix: &Index) -> Reshuffle {
    let all = Reshuffle::all(d(dom), d(cod));
    all[ix.index(all.len())].clone()
}

fn depth() -> impl Strategy<Value = i32> {
    -1..=2i32
}

fn reshuffle() -> impl Strategy<Value = Reshuffle> {
    (depth(), depth(), any::<Index>()).prop_map(|(a, b, ix)| pick(a, b, &ix))
}

/// A composable chain `a -f-> b -g-> c -h-> e`.
fn chain3() -> impl Strategy<Value = (Reshuffle, Reshuffle, Reshuffle)> {
    (depth(), depth(), depth(), depth(), any::<[Index; 3]>())
        .prop_map(|(a, b, c, e, ix)| (pick(a, b, &ix[0]), pick(b, c, &ix[1]), pick(c, e, &ix[2])))
}

fn modality(dom: i32, cod: i32, ix: &Index) -> Option<Reshuffle> {
    let ms: Vec<Reshuffle> =
        Reshuffle::all(d(dom), d(cod)).into_iter().filter(|r| r.count_adjoints().is_modality()).collect();
    (!ms.is_empty()).then(|| ms[ix.index(ms.len())].clone())
}

fn cube(depth: i32, max_dims: usize, ix: &Index) -> Cube {
    let cubes = Truncation::new(depth, max_dims).unwrap().cubes();
    cubes[ix.index(cubes.len())].clone()
}

fn face_map(v: &Cube, w: &Cube, ix: &Index) -> Option<FaceMap> {
    let maps = FaceMap::enumerate(v, w);
    (!maps.is_empty()).then(|| maps[ix.index(maps.len())].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn composition_is_associative_and_unital((f, g, h) in chain3()) {
        let left = Reshuffle::compose(&h, &Reshuffle::compose(&g, &f).unwrap()).unwrap();
        let right = Reshuffle::compose(&Reshuffle::compose(&h, &g).unwrap(), &f).unwrap();
        prop_assert_eq!(left, right);
        prop_assert_eq!(Reshuffle::compose(&Reshuffle::identity(f.cod()), &f).unwrap(), f.clone());
        prop_assert_eq!(Reshuffle::compose(&f, &Reshuffle::identity(f.dom())).unwrap(), f);
    }

    #[test]
    fn order_is_antisymmetric(a in depth(), b in depth(), i in any::<Index>(), j in any::<Index>()) {
        let (f, g) = (pick(a, b, &i), pick(a, b, &j));
        if f.leq(&g).unwrap() && g.leq(&f).unwrap() {
            prop_assert_eq!(f, g);
        }
    }

    #[test]
    fn adjoints_are_galois_and_inverse(f in reshuffle()) {
        if let Some(r) = f.right_adjoint() {
            prop_assert_eq!(r.left_adjoint(), Some(f.clone()));
            for i in f.dom().values() {
                for j in f.cod().values() {
                    prop_assert_eq!(i <= f.lookup(j), r.lookup(i) <= j);
                }
            }
            let unit = Reshuffle::compose(&r, &f).unwrap();
            prop_assert!(Reshuffle::identity(f.dom()).leq(&unit).unwrap());
        }
        if let Some(l) = f.left_adjoint() {
            prop_assert_eq!(l.right_adjoint(), Some(f));
        }
    }

    #[test]
    fn left_division_is_a_galois_connection(
        m in 0..=2i32, n in 0..=2i32, p in 0..=2i32, ix in any::<[Index; 3]>()
    ) {
        let (Some(mu), Some(rho)) = (modality(m, n, &ix[0]), modality(p, m, &ix[1])) else { return Ok(()) };
        let nu = pick(p, n, &ix[2]);
        let q = Reshuffle::left_divide(&mu, &nu);
        if nu.lookup(Level::Eq) != Level::Eq {
            prop_assert!(q.is_err());
            return Ok(());
        }
        let q = q.unwrap();
        let lhs = nu.leq(&Reshuffle::compose(&mu, &rho).unwrap()).unwrap();
        prop_assert_eq!(lhs, q.leq(&rho).unwrap());
    }

    #[test]
    fn face_maps_compose_associatively(ix in any::<[Index; 7]>()) {
        let (u, v, w, x) = (cube(1, 2, &ix[0]), cube(1, 2, &ix[1]), cube(1, 2, &ix[2]), cube(1, 2, &ix[3]));
        let maps = (face_map(&u, &v, &ix[4]), face_map(&v, &w, &ix[5]), face_map(&w, &x, &ix[6]));
        let (Some(f), Some(g), Some(h)) = maps else { return Ok(()) };
        let a = FaceMap::compose(&h, &FaceMap::compose(&g, &f).unwrap()).unwrap();
        let b = FaceMap::compose(&FaceMap::compose(&h, &g).unwrap(), &f).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reshuffles_act_functorially_on_face_maps(m in 0..=1i32, n in 0..=1i32, ix in any::<[Index; 6]>()) {
        let acting: Vec<Reshuffle> =
            Reshuffle::all(d(m), d(n)).into_iter().filter(|r| r.count_adjoints().acts_on_cubes()).collect();
        if acting.is_empty() {
            return Ok(());
        }
        let f = &acting[ix[0].index(acting.len())];
        let (u, v, w) = (cube(m, 2, &ix[1]), cube(m, 2, &ix[2]), cube(m, 2, &ix[3]));
        let (Some(g), Some(h)) = (face_map(&u, &v, &ix[4]), face_map(&v, &w, &ix[5])) else { return Ok(()) };
        let whole = apply_reshuffle_fm(f, &FaceMap::compose(&h, &g).unwrap()).unwrap();
        let parts = FaceMap::compose(&apply_reshuffle_fm(f, &h).unwrap(), &apply_reshuffle_fm(f, &g).unwrap()).unwrap();
        prop_assert_eq!(whole, parts);
        let fu = apply_reshuffle_cube(f, &u).unwrap();
        prop_assert_eq!(apply_reshuffle_fm(f, &FaceMap::identity(&u)).unwrap(), FaceMap::identity(&fu));
    }

    #[test]
    fn generated_relations_are_closed_congruences(depth in 0..=1i32, seed in any::<u64>(), picks in any::<Vec<(Index, Index, Index)>>()) {
        let cat = CubeCat::new(Truncation::new(depth, 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_presheaf(&cat, GenParams::new(3, 1), &mut rng).unwrap();
        let objs: Vec<_> = cat.objects().collect();
        let seeds: Vec<_> = picks
            .iter()
            .take(4)
            .filter_map(|(o, x, y)| {
                let o = objs[o.index(objs.len())];
                let n = g.size(o);
                (n > 0).then(|| (o, x.index(n) as u32, y.index(n) as u32))
            })
            .collect();
        let e = EquivRelation::generate(&g, &seeds);
        prop_assert!(e.is_restriction_closed());
        for &(o, x, y) in &seeds {
            prop_assert!(e.related(o, x, y));
        }
        let (q, proj) = e.quotient().unwrap();
        prop_assert!(proj.is_surjective());
        prop_assert!(q.validate().is_ok());
    }

    #[test]
    fn discrete_presheaves_have_trivial_shape_relation(depth in -1..=1i32, seed in any::<u64>()) {
        let cat = CubeCat::new(Truncation::new(depth, 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_discrete_presheaf(&cat, GenParams::new(3, 1), &mut rng).unwrap();
        prop_assert!(is_discrete_ctx(&g));
        if depth >= 0 {
            prop_assert!(se_relation_ctx(&g).is_subset(&EquivRelation::equality(&g)));
        }
    }
}
