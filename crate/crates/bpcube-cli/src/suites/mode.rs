//! The 2-poset of reshuffles, checked exhaustively against brute-force
//! oracles built from the Galois condition alone.

use bpcube::mode::{Depth, Level, Named, Reshuffle, ReshuffleClass};
use bpcube::Result;
use serde_json::json;

use super::{Env, Outcome, Tally};

fn depth(n: i32) -> Depth {
    Depth::new(n).expect("depth in range")
}

/// Every reshuffle with domain and codomain depths in `-1..=max`.
pub(crate) fn all_upto(max: i32) -> Vec<Reshuffle> {
    let mut v = Vec::new();
    for m in -1..=max {
        for n in -1..=max {
            v.extend(Reshuffle::all(depth(m), depth(n)));
        }
    }
    v
}

/// `i <= j.l  <=>  i.r <= j` over every index and value, `T` included.
fn galois(l: &Reshuffle, r: &Reshuffle) -> bool {
    l.dom() == r.cod()
        && l.cod() == r.dom()
        && l.dom().values().iter().all(|&i| l.cod().values().iter().all(|&j| (i <= l.lookup(j)) == (r.lookup(i) <= j)))
}

fn brute_right(f: &Reshuffle) -> Vec<Reshuffle> {
    Reshuffle::all(f.cod(), f.dom()).into_iter().filter(|g| galois(f, g)).collect()
}

fn brute_left(f: &Reshuffle) -> Vec<Reshuffle> {
    Reshuffle::all(f.cod(), f.dom()).into_iter().filter(|g| galois(g, f)).collect()
}

/// Adjoint counts by repeatedly searching for adjoint partners.
fn chain_counts(f: &Reshuffle) -> ReshuffleClass {
    let extend = |step: fn(&Reshuffle) -> Vec<Reshuffle>, cap: u8| {
        let (mut n, mut cur) = (0u8, f.clone());
        while n < cap {
            match step(&cur).pop() {
                Some(g) => {
                    n += 1;
                    cur = g;
                }
                None => break,
            }
        }
        n
    };
    ReshuffleClass { left: extend(brute_left, 3), right: extend(brute_right, 2) }
}

/// Adjoint counts read off the characterization table row by row,
/// including the exhaustive lists for depth -1.
fn table_counts(f: &Reshuffle) -> ReshuffleClass {
    let (m, n) = (f.dom().get(), f.cod().get());
    let t = f.table();
    let eq = t[0];
    let rest = &t[1..];
    let (left, right) = match (m, n) {
        (-1, -1) => {
            if eq == Level::Eq {
                (3, 2)
            } else {
                (0, 0)
            }
        }
        (-1, _) => {
            // (=|=,..,=,⊤,..,⊤) has one, (=|⊤,..,⊤) has three;
            // (=|=,..,=) has two right adjoints.
            let left = if eq != Level::Eq {
                0
            } else if rest.iter().all(|&l| l == Level::Top) {
                3
            } else {
                1
            };
            let right = if eq == Level::Eq && rest.iter().all(|&l| l == Level::Eq) { 2 } else { 0 };
            (left, right)
        }
        (_, -1) => {
            let left = if eq == Level::Eq { 2 } else { 0 };
            let right = if eq == Level::Fin(m as u8) {
                2
            } else if eq < Level::Top {
                1
            } else {
                0
            };
            (left, right)
        }
        _ => {
            let zero = rest[0];
            let last = rest[rest.len() - 1];
            let left = if eq != Level::Eq {
                0
            } else if zero == Level::Fin(0) {
                3
            } else if zero >= Level::Fin(0) {
                2
            } else {
                1
            };
            let right = if last == Level::Fin(m as u8) {
                2
            } else if last < Level::Top {
                1
            } else {
                0
            };
            (left, right)
        }
    };
    ReshuffleClass { left, right }
}

#[allow(clippy::type_complexity)]
pub fn adjoint_chain(_env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let cases: [(&str, Option<i32>, [&str; 6], [(i32, i32); 6]); 2] = [
        (
            "(=|1,1,3)",
            None,
            ["(0|0,2,3)", "(=|=,1,1,2)", "(=|1,1,3)", "(=|0,0,2,2)", "(=|0,2,2)", "(=|0,1,1,⊤)"],
            [(3, 2), (2, 3), (3, 2), (2, 3), (3, 2), (2, 3)],
        ),
        (
            "(=|1)",
            None,
            ["(0|1)", "(=|=,0)", "(=|1)", "(=|0,0)", "(=|0)", "(=|0,⊤)"],
            [(1, 0), (0, 1), (1, 0), (0, 1), (1, 0), (0, 1)],
        ),
    ];
    for (lit, dom, names, types) in cases {
        let chain = Reshuffle::parse(lit, dom)?.adjoint_chain(6)?;
        let got: Vec<String> = chain.iter().map(|f| f.to_string()).collect();
        let got_types: Vec<(i32, i32)> = chain.iter().map(|f| (f.dom().get(), f.cod().get())).collect();
        t.record(got == names && got_types == types, || json!({ "center": lit, "chain": got }));
    }
    let id0 = Reshuffle::identity(depth(0));
    t.record(id0.adjoint_chain(3)? == vec![id0.clone(); 3], || json!("identity chain"));
    Ok(t.finish(3))
}

pub fn adjoint_count(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let mut special = 0;
    for f in all_upto(env.cfg.depth) {
        let got = f.count_adjoints();
        let (brute, rows) = (chain_counts(&f), table_counts(&f));
        if f.dom().get() == -1 || f.cod().get() == -1 {
            special += 1;
        }
        t.record(
            got == brute && got == rows,
            || json!({ "reshuffle": f, "count": got, "chain": brute, "table": rows }),
        );
    }
    t.note("depth_minus_one_cases", special);
    Ok(t.finish(1))
}

pub fn adjoints(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for f in all_upto(env.cfg.depth) {
        let rights = brute_right(&f);
        let lefts = brute_left(&f);
        let unique = rights.len() <= 1 && lefts.len() <= 1;
        let agree = f.right_adjoint() == rights.first().cloned() && f.left_adjoint() == lefts.first().cloned();
        let sound = match f.right_adjoint() {
            Some(r) => {
                let rl = Reshuffle::compose(&r, &f)?;
                let lr = Reshuffle::compose(&f, &r)?;
                Reshuffle::identity(f.dom()).leq(&rl)?
                    && lr.leq(&Reshuffle::identity(f.cod()))?
                    && Reshuffle::compose(&f, &rl)? == f
            }
            None => true,
        };
        t.record(
            unique && agree && sound,
            || json!({ "reshuffle": f, "unique": unique, "agree": agree, "sound": sound }),
        );
    }
    Ok(t.finish(1))
}

/// `nu <= mu . rho <=> mu \ nu <= rho` for modalities `mu`, `rho` and every
/// `nu` preserving `=`, plus the structurality spot value.
pub fn left_division(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let max = env.cfg.depth;
    let mut rejected = 0;
    for mu in all_upto(max).into_iter().filter(|f| f.count_adjoints().is_modality()) {
        for p in -1..=max {
            let rhos: Vec<Reshuffle> =
                Reshuffle::all(depth(p), mu.dom()).into_iter().filter(|r| r.count_adjoints().is_modality()).collect();
            for nu in Reshuffle::all(depth(p), mu.cod()) {
                if nu.lookup(Level::Eq) != Level::Eq {
                    rejected += 1;
                    t.record(Reshuffle::left_divide(&mu, &nu).is_err(), || json!({ "mu": mu, "nu": nu }));
                    continue;
                }
                let q = Reshuffle::left_divide(&mu, &nu)?;
                for rho in &rhos {
                    let lhs = nu.leq(&Reshuffle::compose(&mu, rho)?)?;
                    let rhs = q.leq(rho)?;
                    t.record(lhs == rhs, || json!({ "mu": mu, "nu": nu, "rho": rho, "quotient": q }));
                }
            }
        }
    }
    let par = Named::Par { n: 1 }.build()?;
    let q = Reshuffle::left_divide(&par, &Reshuffle::identity(depth(1)))?;
    let expect = Named::Str { n: 1 }.build()?;
    t.record(q == expect && q.to_string() == "(=|0,0,1)", || json!({ "par_div_id": q }));
    t.note("rejected_non_equality_preserving", rejected);
    t.note("par_div_id", q.to_string());
    Ok(t.finish(1))
}

pub fn bar(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for mu in all_upto(env.cfg.depth)
        .into_iter()
        .filter(|f| f.dom().get() >= 0 && f.cod().get() >= 0 && f.count_adjoints().is_modality())
    {
        let (m, n) = (mu.dom().get(), mu.cod().get());
        let b = Reshuffle::bar(&mu)?;
        let sq_n = Named::Sqcup { k1: 0, l: 0, m: n + 1 }.build()?;
        let sq_m = Named::Sqcup { k1: 0, l: 0, m: m + 1 }.build()?;
        let ok = Reshuffle::compose(&sq_n, &b)? == Reshuffle::compose(&mu, &sq_m)?;
        let id_ok = mu != Reshuffle::identity(mu.dom()) || b == Reshuffle::identity(depth(m + 1));
        t.record(ok && id_ok, || json!({ "mu": mu, "bar": b }));
    }
    Ok(t.finish(1))
}

pub fn two_poset(env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    let all = all_upto(env.cfg.depth);
    for f in &all {
        let unital = &Reshuffle::compose(&Reshuffle::identity(f.cod()), f)? == f
            && &Reshuffle::compose(f, &Reshuffle::identity(f.dom()))? == f;
        t.record(unital, || json!({ "unit_law": f }));
        for g in all.iter().filter(|g| g.dom() == f.cod()) {
            let gf = Reshuffle::compose(g, f)?;
            for h in all.iter().filter(|h| h.dom() == g.cod()) {
                let assoc = Reshuffle::compose(h, &gf)? == Reshuffle::compose(&Reshuffle::compose(h, g)?, f)?;
                t.record(assoc, || json!({ "assoc": [h, g, f] }));
            }
            for f2 in all.iter().filter(|x| x.dom() == f.dom() && x.cod() == f.cod()) {
                if f.leq(f2)? {
                    t.record(gf.leq(&Reshuffle::compose(g, f2)?)?, || json!({ "monotone_right": [g, f, f2] }));
                }
            }
            for g2 in all.iter().filter(|x| x.dom() == g.dom() && x.cod() == g.cod()) {
                if g.leq(g2)? {
                    t.record(gf.leq(&Reshuffle::compose(g2, f)?)?, || json!({ "monotone_left": [g, g2, f] }));
                }
            }
        }
    }
    Ok(t.finish(1))
}

/// The chains `cohpi -| delta -| sqcup -| nabla` over every valid interval
/// in depths up to 3, with `sqcup . delta = id = sqcup . nabla`.
pub fn useful_families(_env: &mut Env) -> Result<Outcome> {
    let mut t = Tally::default();
    for m in 0..=3 {
        for k1 in 0..=m {
            for l in (k1 - 1)..=m {
                let tri = Named::Delta { k1, l, m }.build()?;
                let sq = Named::Sqcup { k1, l, m }.build()?;
                let na = Named::Nabla { k1, l, m }.build()?;
                let id = Reshuffle::identity(sq.cod());
                let mut ok = tri.right_adjoint().as_ref() == Some(&sq)
                    && sq.right_adjoint().as_ref() == Some(&na)
                    && Reshuffle::compose(&sq, &tri)? == id
                    && Reshuffle::compose(&sq, &na)? == id;
                if k1 == 0 {
                    let pi = Named::Cohpi { l, m }.build()?;
                    ok &= pi.right_adjoint().as_ref() == Some(&tri) && Reshuffle::compose(&pi, &tri)? == id;
                }
                t.record(ok, || json!({ "k1": k1, "l": l, "m": m }));
            }
        }
    }
    Ok(t.finish(1))
}
