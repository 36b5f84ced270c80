//! Reshuffles and their 2-poset structure.
//!
//! A reshuffle `F : m -> n` is a monotone map from the indices `{=, 0..n}`
//! to the values `{=, 0..m, T}`. It is written `(e|a0,...,an)` where `e` is
//! the image of `=`, and `T` stands for the top value.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depth of a cube category. Depth `-1` is the point category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Depth(i32);

impl Depth {
    pub const MIN: i32 = -1;
    /// Largest depth supported; flavors are stored in a `u8`.
    pub const MAX: i32 = 100;

    pub fn new(d: i32) -> Result<Self> {
        if !(Self::MIN..=Self::MAX).contains(&d) {
            return Err(Error::Param(format!("depth {d} outside -1..={}", Self::MAX)));
        }
        Ok(Depth(d))
    }

    pub fn get(self) -> i32 {
        self.0
    }

    /// Indices `=, 0, .., d` in increasing order.
    pub fn indices(self) -> Vec<Level> {
        let mut v = vec![Level::Eq];
        v.extend((0..=self.0).map(|k| Level::Fin(k as u8)));
        v
    }

    /// Values `=, 0, .., d, T` in increasing order.
    pub fn values(self) -> Vec<Level> {
        let mut v = self.indices();
        v.push(Level::Top);
        v
    }

    /// Least value that is at least `0`: `Fin(0)`, or `T` at depth -1.
    pub fn bottom_relation(self) -> Level {
        if self.0 >= 0 {
            Level::Fin(0)
        } else {
            Level::Top
        }
    }

    /// `Fin(d)` for `d >= 0` and `=` at depth -1.
    pub fn top_index(self) -> Level {
        if self.0 >= 0 {
            Level::Fin(self.0 as u8)
        } else {
            Level::Eq
        }
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An index or value of a reshuffle table, ordered `= < 0 < 1 < .. < T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Eq,
    Fin(u8),
    Top,
}

impl Level {
    /// Whether this level is a legal value over a domain of depth `d`.
    pub fn is_value_of(self, d: Depth) -> bool {
        match self {
            Level::Fin(k) => (k as i32) <= d.get(),
            _ => true,
        }
    }

    pub fn fin(self) -> Option<u8> {
        match self {
            Level::Fin(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Eq => write!(f, "="),
            Level::Fin(k) => write!(f, "{k}"),
            Level::Top => write!(f, "⊤"),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "=" => Ok(Level::Eq),
            "T" | "⊤" | "top" => Ok(Level::Top),
            t => t.parse::<u8>().map(Level::Fin).map_err(|_| Error::Parse(format!("bad level `{t}`"))),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Level::Fin(k) => s.serialize_u8(*k),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u8),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(Level::Fin(k)),
            Raw::Str(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

/// A morphism `dom -> cod` of the 2-poset of reshuffles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Reshuffle {
    dom: Depth,
    cod: Depth,
    /// `table[0]` is the image of `=`, `table[k + 1]` the image of `k`.
    table: Vec<Level>,
}

#[derive(Deserialize)]
struct RawReshuffle {
    dom: i32,
    cod: i32,
    table: Vec<Level>,
}

impl<'de> Deserialize<'de> for Reshuffle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawReshuffle::deserialize(d)?;
        let dom = Depth::new(raw.dom).map_err(de::Error::custom)?;
        let cod = Depth::new(raw.cod).map_err(de::Error::custom)?;
        Reshuffle::new(dom, cod, raw.table).map_err(de::Error::custom)
    }
}

/// How many successive adjoints a reshuffle has on each side.
/// `left == 3` means three or more, `right == 2` means two or more.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReshuffleClass {
    pub left: u8,
    pub right: u8,
}

impl ReshuffleClass {
    /// At least two left adjoints.
    pub fn is_modality(self) -> bool {
        self.left >= 2
    }

    /// A left and a right adjoint.
    pub fn is_contramodality(self) -> bool {
        self.left >= 1 && self.right >= 1
    }

    /// At least two right adjoints: the reshuffle acts on cubes.
    pub fn acts_on_cubes(self) -> bool {
        self.right >= 2
    }
}

impl Reshuffle {
    pub fn new(dom: Depth, cod: Depth, table: Vec<Level>) -> Result<Self> {
        let want = (cod.get() + 2) as usize;
        if table.len() != want {
            return Err(Error::Param(format!(
                "table for codomain depth {cod} needs {want} entries, got {}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|l| !l.is_value_of(dom)) {
            return Err(Error::Param(format!("value {bad} exceeds domain depth {dom}")));
        }
        if table.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Param("table is not monotone".into()));
        }
        Ok(Reshuffle { dom, cod, table })
    }

    /// Convenience constructor from raw depths.
    pub fn from_parts(dom: i32, cod: i32, table: Vec<Level>) -> Result<Self> {
        Reshuffle::new(Depth::new(dom)?, Depth::new(cod)?, table)
    }

    pub fn identity(n: Depth) -> Self {
        Reshuffle { dom: n, cod: n, table: n.indices() }
    }

    pub fn dom(&self) -> Depth {
        self.dom
    }

    pub fn cod(&self) -> Depth {
        self.cod
    }

    pub fn table(&self) -> &[Level] {
        &self.table
    }

    /// `i . F`, with `T . F = T`.
    pub fn lookup(&self, i: Level) -> Level {
        match i {
            Level::Eq => self.table[0],
            Level::Fin(k) => self.table[k as usize + 1],
            Level::Top => Level::Top,
        }
    }

    /// Every reshuffle `dom -> cod`, in lexicographic order of tables.
    pub fn all(dom: Depth, cod: Depth) -> Vec<Reshuffle> {
        let values = dom.values();
        let len = (cod.get() + 2) as usize;
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(len);
        fn go(values: &[Level], len: usize, from: usize, cur: &mut Vec<Level>, out: &mut Vec<Vec<Level>>) {
            if cur.len() == len {
                out.push(cur.clone());
                return;
            }
            for (ix, v) in values.iter().enumerate().skip(from) {
                cur.push(*v);
                go(values, len, ix, cur, out);
                cur.pop();
            }
        }
        go(&values, len, 0, &mut cur, &mut out);
        out.into_iter().map(|table| Reshuffle { dom, cod, table }).collect()
    }

    /// `G . F : m -> p` for `F : m -> n` and `G : n -> p`; `i.(G.F) = (i.G).F`.
    pub fn compose(g: &Reshuffle, f: &Reshuffle) -> Result<Reshuffle> {
        if f.cod != g.dom {
            return Err(Error::Depth(format!(
                "cannot compose {g} : {} -> {} after {f} : {} -> {}",
                g.dom, g.cod, f.dom, f.cod
            )));
        }
        let table = g.table.iter().map(|&i| f.lookup(i)).collect();
        Ok(Reshuffle { dom: f.dom, cod: g.cod, table })
    }

    /// Pointwise order.
    pub fn leq(&self, other: &Reshuffle) -> Result<bool> {
        self.same_type(other)?;
        Ok(self.table.iter().zip(&other.table).all(|(a, b)| a <= b))
    }

    fn same_type(&self, other: &Reshuffle) -> Result<()> {
        if self.dom != other.dom || self.cod != other.cod {
            return Err(Error::Depth(format!(
                "{self} : {} -> {} and {other} : {} -> {} have different types",
                self.dom, self.cod, other.dom, other.cod
            )));
        }
        Ok(())
    }

    /// The right adjoint `R` of `self = L`, if any: `i.R` is the least `j`
    /// with `i <= j.L`.
    pub fn right_adjoint(&self) -> Option<Reshuffle> {
        let l = self;
        if l.cod.indices().iter().any(|&j| l.lookup(j) == Level::Top) {
            return None;
        }
        let candidates = l.cod.values();
        let table = l
            .dom
            .indices()
            .into_iter()
            .map(|i| *candidates.iter().find(|&&j| i <= l.lookup(j)).expect("T is always a candidate"))
            .collect();
        Some(Reshuffle { dom: l.cod, cod: l.dom, table })
    }

    /// The left adjoint `L` of `self = R`, if any: `j.L` is the greatest `i`
    /// with `i.R <= j`.
    pub fn left_adjoint(&self) -> Option<Reshuffle> {
        let r = self;
        if r.table[0] != Level::Eq {
            return None;
        }
        let candidates = r.cod.values();
        let table = r
            .dom
            .indices()
            .into_iter()
            .map(|j| *candidates.iter().rev().find(|&&i| r.lookup(i) <= j).expect("= is always a candidate"))
            .collect();
        Some(Reshuffle { dom: r.cod, cod: r.dom, table })
    }

    /// A maximal chain `.. -| f -| ..` of at most `max_len` reshuffles, grown
    /// alternately on the left and on the right of `f`.
    pub fn adjoint_chain(&self, max_len: usize) -> Result<Vec<Reshuffle>> {
        if max_len == 0 {
            return Err(Error::Param("chain length must be at least 1".into()));
        }
        let mut chain = std::collections::VecDeque::from([self.clone()]);
        let (mut left_open, mut right_open) = (true, true);
        while chain.len() < max_len && (left_open || right_open) {
            if left_open {
                match chain.front().and_then(Reshuffle::left_adjoint) {
                    Some(l) => chain.push_front(l),
                    None => left_open = false,
                }
            }
            if chain.len() < max_len && right_open {
                match chain.back().and_then(Reshuffle::right_adjoint) {
                    Some(r) => chain.push_back(r),
                    None => right_open = false,
                }
            }
        }
        Ok(chain.into())
    }

    /// Adjoint counts from the closed-form characterization.
    pub fn count_adjoints(&self) -> ReshuffleClass {
        let (m, n) = (self.dom.get(), self.cod.get());
        let eq = self.table[0];
        if m == -1 && n == -1 {
            return if eq == Level::Eq {
                ReshuffleClass { left: 3, right: 2 }
            } else {
                ReshuffleClass { left: 0, right: 0 }
            };
        }
        if n == -1 {
            let left = if eq == Level::Eq { 2 } else { 0 };
            let right = if eq == Level::Fin(m as u8) {
                2
            } else if eq < Level::Top {
                1
            } else {
                0
            };
            return ReshuffleClass { left, right };
        }
        let zero = self.table[1];
        let last = *self.table.last().expect("non-empty table");
        // At depth -1 the only value above `=` is `T`, and two left adjoints
        // already force a third.
        let left = if eq != Level::Eq {
            0
        } else if zero == Level::Eq {
            1
        } else if m == -1 || zero == Level::Fin(0) {
            3
        } else {
            2
        };
        let right = if m == -1 {
            if last == Level::Eq {
                2
            } else {
                0
            }
        } else if last == Level::Fin(m as u8) {
            2
        } else if last < Level::Top {
            1
        } else {
            0
        };
        ReshuffleClass { left, right }
    }

    /// Left division `mu \ nu : p -> m` for a modality `mu : m -> n` and
    /// `nu : p -> n` with `=.nu = =`; the least modality `rho` with
    /// `nu <= mu . rho`.
    pub fn left_divide(mu: &Reshuffle, nu: &Reshuffle) -> Result<Reshuffle> {
        if mu.cod != nu.cod {
            return Err(Error::Depth(format!("{mu} and {nu} have codomain depths {} and {}", mu.cod, nu.cod)));
        }
        if !mu.count_adjoints().is_modality() {
            return Err(Error::Class(format!("{mu} does not have two left adjoints")));
        }
        if nu.table[0] != Level::Eq {
            return Err(Error::Class(format!("{nu} does not preserve `=`, so no modality bounds it")));
        }
        let kappa = mu.left_adjoint().expect("a modality has a left adjoint");
        let knu = Reshuffle::compose(&kappa, nu)?;
        let floor = nu.dom.bottom_relation();
        let mut table = vec![Level::Eq];
        table.extend(knu.table[1..].iter().map(|&v| if v == Level::Eq { floor } else { v }));
        Reshuffle::new(nu.dom, mu.dom, table)
    }

    /// The depth-lifted modality `mu^ = sqcup_0^(n+1) \ (mu . sqcup_0^(m+1))`.
    pub fn bar(mu: &Reshuffle) -> Result<Reshuffle> {
        let (m, n) = (mu.dom.get(), mu.cod.get());
        if m < 0 || n < 0 {
            return Err(Error::Param(format!("lifting is undefined for {mu} : {m} -> {n}")));
        }
        if !mu.count_adjoints().is_modality() {
            return Err(Error::Class(format!("{mu} does not have two left adjoints")));
        }
        let sq_n = Named::Sqcup { k1: 0, l: 0, m: n + 1 }.build()?;
        let sq_m = Named::Sqcup { k1: 0, l: 0, m: m + 1 }.build()?;
        Reshuffle::left_divide(&sq_n, &Reshuffle::compose(mu, &sq_m)?)
    }

    /// Parse `(e|a0,..,an)`. The domain depth defaults to the largest finite
    /// value in the table (or -1 when there is none).
    pub fn parse(s: &str, dom: Option<i32>) -> Result<Reshuffle> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("`{t}` is not of the form (e|a0,..,an)")))?;
        let (eq, rest) = inner.split_once('|').ok_or_else(|| Error::Parse(format!("`{t}` lacks a `|`")))?;
        let mut table = vec![eq.parse::<Level>()?];
        if !rest.trim().is_empty() {
            for part in rest.split(',') {
                table.push(part.parse::<Level>()?);
            }
        }
        let inferred = table.iter().filter_map(|l| l.fin()).max().map_or(-1, i32::from);
        let dom = dom.unwrap_or(inferred);
        Reshuffle::from_parts(dom, table.len() as i32 - 2, table)
    }
}

impl fmt::Display for Reshuffle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}|", self.table[0])?;
        for (ix, l) in self.table[1..].iter().enumerate() {
            if ix > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Named reshuffle families.
///
/// Interval families take `k1 = k + 1 >= 0`, `l >= k` and `m >= l`; the
/// interval `[k+1, l]` of relations is the one being acted upon in depth `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Named {
    Id {
        n: i32,
    },
    /// `(l|l+1,..,m) : m -> m-(l+1)`; only the interval `[0, l]`.
    Cohpi {
        l: i32,
        m: i32,
    },
    /// `m-(l-k) -> m`, duplicating relation `k`.
    Delta {
        k1: i32,
        l: i32,
        m: i32,
    },
    /// `m -> m-(l-k)`, dropping relations `k+1..l`.
    Sqcup {
        k1: i32,
        l: i32,
        m: i32,
    },
    /// `m-(l-k) -> m`, duplicating relation `k+1` (or `T` when `l = m`).
    Nabla {
        k1: i32,
        l: i32,
        m: i32,
    },
    /// Parametricity `(=|1,..,n+1) : n+1 -> n`.
    Par {
        n: i32,
    },
    /// Structurality `(=|0,0,1,..,n) : n -> n+1`.
    Str {
        n: i32,
    },
    /// Shape-irrelevance `(=|0,⊤,..,⊤) : m -> n`.
    Shi {
        m: i32,
        n: i32,
    },
    /// Irrelevance `(=|⊤,..,⊤) : m -> n`.
    Irr {
        m: i32,
        n: i32,
    },
    /// Ad hoc polymorphism `(=|0,..,0) : m -> n`.
    Hoc {
        m: i32,
        n: i32,
    },
}

fn lvl(k: i32) -> Level {
    if k < 0 {
        Level::Eq
    } else {
        Level::Fin(k as u8)
    }
}

impl Named {
    fn check_interval(k1: i32, l: i32, m: i32) -> Result<()> {
        let k = k1 - 1;
        if k1 < 0 || l < k || m < l || m > Depth::MAX {
            return Err(Error::Param(format!("interval [{k1},{l}] in depth {m} violates k+1 >= 0, l >= k, m >= l")));
        }
        Ok(())
    }

    pub fn build(self) -> Result<Reshuffle> {
        match self {
            Named::Id { n } => Ok(Reshuffle::identity(Depth::new(n)?)),
            Named::Cohpi { l, m } => {
                Named::check_interval(0, l, m)?;
                if l == -1 {
                    return Ok(Reshuffle::identity(Depth::new(m)?));
                }
                let mut table = vec![lvl(l)];
                table.extend((l + 1..=m).map(lvl));
                Reshuffle::from_parts(m, m - (l + 1), table)
            }
            Named::Delta { k1, l, m } => {
                Named::check_interval(k1, l, m)?;
                let k = k1 - 1;
                let mut table = vec![Level::Eq];
                table.extend((0..=m).map(|i| {
                    if i <= k {
                        lvl(i)
                    } else if i <= l {
                        lvl(k)
                    } else {
                        lvl(i - (l - k))
                    }
                }));
                Reshuffle::from_parts(m - (l - k), m, table)
            }
            Named::Sqcup { k1, l, m } => {
                Named::check_interval(k1, l, m)?;
                let k = k1 - 1;
                let cod = m - (l - k);
                let mut table = vec![Level::Eq];
                table.extend((0..=cod).map(|i| if i <= k { lvl(i) } else { lvl(i + (l - k)) }));
                Reshuffle::from_parts(m, cod, table)
            }
            Named::Nabla { k1, l, m } => {
                Named::check_interval(k1, l, m)?;
                let k = k1 - 1;
                let mut table = vec![Level::Eq];
                table.extend((0..=m).map(|i| {
                    if i <= k {
                        lvl(i)
                    } else if l == m {
                        Level::Top
                    } else if i <= l + 1 {
                        lvl(k + 1)
                    } else {
                        lvl(i - (l - k))
                    }
                }));
                Reshuffle::from_parts(m - (l - k), m, table)
            }
            Named::Par { n } => Named::Sqcup { k1: 0, l: 0, m: n + 1 }.build(),
            Named::Str { n } => Named::Nabla { k1: 0, l: 0, m: n + 1 }.build(),
            Named::Shi { m, n } => {
                if m < 0 || n < 0 {
                    return Err(Error::Param("shape-irrelevance needs m, n >= 0".into()));
                }
                let mut table = vec![Level::Eq, Level::Fin(0)];
                table.extend((1..=n).map(|_| Level::Top));
                Reshuffle::from_parts(m, n, table)
            }
            Named::Irr { m, n } => {
                let mut table = vec![Level::Eq];
                table.extend((0..=n).map(|_| Level::Top));
                Reshuffle::from_parts(m, n, table)
            }
            Named::Hoc { m, n } => {
                if m < 0 {
                    return Err(Error::Param("ad hoc polymorphism needs m >= 0".into()));
                }
                let mut table = vec![Level::Eq];
                table.extend((0..=n).map(|_| Level::Fin(0)));
                Reshuffle::from_parts(m, n, table)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Reshuffle {
        Reshuffle::parse(s, None).unwrap()
    }

    fn rd(s: &str, dom: i32) -> Reshuffle {
        Reshuffle::parse(s, Some(dom)).unwrap()
    }

    fn all_upto(d: i32) -> Vec<Reshuffle> {
        let mut v = Vec::new();
        for m in -1..=d {
            for n in -1..=d {
                v.extend(Reshuffle::all(Depth(m), Depth(n)));
            }
        }
        v
    }

    /// Galois connection checked over every index and value, `T` included.
    fn galois(l: &Reshuffle, r: &Reshuffle) -> bool {
        l.dom == r.cod
            && l.cod == r.dom
            && l.dom.values().iter().all(|&i| l.cod.values().iter().all(|&j| (i <= l.lookup(j)) == (r.lookup(i) <= j)))
    }

    /// Adjunction in the 2-poset: `id <= R.L` and `L.R <= id`.
    fn adjoint_2cell(l: &Reshuffle, r: &Reshuffle) -> bool {
        let rl = Reshuffle::compose(r, l).unwrap();
        let lr = Reshuffle::compose(l, r).unwrap();
        Reshuffle::identity(l.dom).leq(&rl).unwrap() && lr.leq(&Reshuffle::identity(l.cod)).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["(=|=,1,1,2)", "(0|0,2,3)", "(=|0,1,1,⊤)", "(=|)", "(⊤|)"] {
            assert_eq!(r(s).to_string(), s);
        }
        assert_eq!(r("(=|0,T)"), r("(=|0,⊤)"));
        assert!(Reshuffle::parse("(=|1,0)", None).is_err());
        assert!(Reshuffle::parse("=|1", None).is_err());
        assert_eq!(rd("(=|0,1,1,T)", 2).dom().get(), 2);
    }

    #[test]
    fn json_round_trip() {
        let f = rd("(=|0,1,1,T)", 2);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"dom":2,"cod":3,"table":["=",0,1,1,"⊤"]}"#);
        let back: Reshuffle = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<Reshuffle>(r#"{"dom":0,"cod":0,"table":["=",1]}"#).is_err());
    }

    #[test]
    fn compose_examples() {
        let sq = r("(=|1)");
        let tri = r("(=|=,0)");
        assert_eq!(Reshuffle::compose(&sq, &tri).unwrap(), Reshuffle::identity(Depth(0)));
        let g = rd("(=|0,0,2,2)", 2);
        let f = r("(=|1,1,3)");
        // By hand: 0.g = 0 -> 0.f = 1; 2.g = 2 -> 2.f = 3.
        assert_eq!(Reshuffle::compose(&g, &f).unwrap(), rd("(=|1,1,3,3)", 3));
        assert!(matches!(Reshuffle::compose(&f, &f), Err(Error::Depth(_))));
    }

    #[test]
    fn leq_examples() {
        let a = rd("(=|=,1,1,2)", 2);
        let b = rd("(=|0,1,1,2)", 2);
        assert!(a.leq(&b).unwrap());
        assert!(!b.leq(&a).unwrap());
        assert!(matches!(r("(0|1)").leq(&r("(=|=,0)")), Err(Error::Depth(_))));
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(rd("(0|1,3,T)", 3).right_adjoint(), None);
        assert_eq!(r("(0|0,2,3)").right_adjoint().unwrap(), rd("(=|=,1,1,2)", 2));
        assert_eq!(r("(=|=,0)").left_adjoint().unwrap(), r("(0|1)"));
        assert_eq!(r("(0|1)").left_adjoint(), None);
        for n in -1..=3 {
            let id = Reshuffle::identity(Depth(n));
            assert_eq!(id.right_adjoint().unwrap(), id);
            assert_eq!(id.left_adjoint().unwrap(), id);
        }
    }

    #[test]
    fn chain_of_the_three_two_example() {
        let chain: Vec<String> = r("(=|1,1,3)").adjoint_chain(6).unwrap().iter().map(|f| f.to_string()).collect();
        assert_eq!(chain, ["(0|0,2,3)", "(=|=,1,1,2)", "(=|1,1,3)", "(=|0,0,2,2)", "(=|0,2,2)", "(=|0,1,1,⊤)"]);
        let id0 = Reshuffle::identity(Depth(0));
        assert_eq!(id0.adjoint_chain(3).unwrap(), vec![id0.clone(); 3]);
        let diamond = r("(=|0,T)");
        let c = diamond.adjoint_chain(3).unwrap();
        assert_eq!(c.last(), Some(&diamond));
    }

    #[test]
    fn depth_one_chain() {
        let chain: Vec<String> = r("(=|1)").adjoint_chain(6).unwrap().iter().map(|f| f.to_string()).collect();
        assert_eq!(chain, ["(0|1)", "(=|=,0)", "(=|1)", "(=|0,0)", "(=|0)", "(=|0,⊤)"]);
    }

    #[test]
    fn adjoints_agree_with_exhaustive_search() {
        for f in all_upto(2) {
            let rights: Vec<_> = Reshuffle::all(f.cod, f.dom).into_iter().filter(|g| galois(&f, g)).collect();
            assert!(rights.len() <= 1);
            assert_eq!(f.right_adjoint(), rights.first().cloned(), "right adjoint of {f}");
            let lefts: Vec<_> = Reshuffle::all(f.cod, f.dom).into_iter().filter(|g| galois(g, &f)).collect();
            assert!(lefts.len() <= 1);
            assert_eq!(f.left_adjoint(), lefts.first().cloned(), "left adjoint of {f}");
            for g in Reshuffle::all(f.cod, f.dom) {
                assert_eq!(galois(&f, &g), adjoint_2cell(&f, &g), "{f} vs {g}");
            }
        }
    }

    #[test]
    fn adjunction_soundness() {
        for l in all_upto(2) {
            if let Some(rr) = l.right_adjoint() {
                assert!(adjoint_2cell(&l, &rr));
                let lrl = Reshuffle::compose(&l, &Reshuffle::compose(&rr, &l).unwrap()).unwrap();
                assert_eq!(lrl, l);
            }
        }
    }

    #[test]
    fn count_adjoints_examples() {
        assert_eq!(rd("(=|0,1,1,T)", 2).count_adjoints(), ReshuffleClass { left: 3, right: 0 });
        for m in 0..=2 {
            let c = Reshuffle::from_parts(m, -1, vec![Level::Eq]).unwrap().count_adjoints();
            assert_eq!(c.left, 2);
        }
        let top = Reshuffle::from_parts(-1, -1, vec![Level::Top]).unwrap();
        assert_eq!(top.count_adjoints(), ReshuffleClass { left: 0, right: 0 });
    }

    fn chain_counts(f: &Reshuffle) -> ReshuffleClass {
        let (mut left, mut cur) = (0u8, f.clone());
        while left < 3 {
            match cur.left_adjoint() {
                Some(l) => {
                    left += 1;
                    cur = l;
                }
                None => break,
            }
        }
        let (mut right, mut cur) = (0u8, f.clone());
        while right < 2 {
            match cur.right_adjoint() {
                Some(r) => {
                    right += 1;
                    cur = r;
                }
                None => break,
            }
        }
        ReshuffleClass { left, right }
    }

    #[test]
    fn count_adjoints_agrees_with_chain_extension() {
        for f in all_upto(2) {
            assert_eq!(f.count_adjoints(), chain_counts(&f), "{f} : {} -> {}", f.dom, f.cod);
        }
    }

    /// Least modality `rho` with `nu <= mu . rho`, by enumeration.
    fn divide_oracle(mu: &Reshuffle, nu: &Reshuffle) -> Option<Reshuffle> {
        let cands: Vec<_> = Reshuffle::all(nu.dom, mu.dom)
            .into_iter()
            .filter(|rho| rho.count_adjoints().is_modality())
            .filter(|rho| nu.leq(&Reshuffle::compose(mu, rho).unwrap()).unwrap())
            .collect();
        cands.iter().find(|a| cands.iter().all(|b| a.leq(b).unwrap())).cloned()
    }

    #[test]
    fn left_divide_examples() {
        let par = Named::Par { n: 1 }.build().unwrap();
        assert_eq!(par, r("(=|1,2)"));
        let id1 = Reshuffle::identity(Depth(1));
        let str1 = Named::Str { n: 1 }.build().unwrap();
        assert_eq!(Reshuffle::left_divide(&par, &id1).unwrap(), str1);
        assert_eq!(str1, r("(=|0,0,1)"));
        assert_eq!(divide_oracle(&par, &id1), Some(str1));
        assert!(matches!(Reshuffle::left_divide(&r("(0|1)"), &r("(=|1)")), Err(Error::Class(_))));
        assert!(matches!(Reshuffle::left_divide(&par, &r("(=|0,1,2)")), Err(Error::Depth(_))));
    }

    #[test]
    fn left_divide_is_least_solution() {
        for mu in all_upto(2).into_iter().filter(|f| f.count_adjoints().is_modality()) {
            for p in -1..=2 {
                for nu in Reshuffle::all(Depth(p), mu.cod) {
                    if nu.table[0] != Level::Eq {
                        assert!(matches!(Reshuffle::left_divide(&mu, &nu), Err(Error::Class(_))));
                        continue;
                    }
                    let got = Reshuffle::left_divide(&mu, &nu).unwrap();
                    assert_eq!(Some(got), divide_oracle(&mu, &nu), "{mu} \\ {nu}");
                }
            }
        }
    }

    #[test]
    fn left_divide_round_trip() {
        for mu in all_upto(2).into_iter().filter(|f| f.count_adjoints().is_modality()) {
            for p in -1..=2 {
                for rho in Reshuffle::all(Depth(p), mu.dom) {
                    if !rho.count_adjoints().is_modality() {
                        continue;
                    }
                    let nu = Reshuffle::compose(&mu, &rho).unwrap();
                    let q = Reshuffle::left_divide(&mu, &nu).unwrap();
                    assert!(q.leq(&rho).unwrap(), "{mu} \\ ({mu} . {rho}) = {q}");
                }
            }
        }
    }

    #[test]
    fn irrelevance_division_is_constant_zero() {
        for m in 0..=2 {
            for n in 0..=2 {
                let irr = Named::Irr { m, n }.build().unwrap();
                for p in 0..=2 {
                    for nu in Reshuffle::all(Depth(p), Depth(n)) {
                        if nu.count_adjoints().is_modality() {
                            let q = Reshuffle::left_divide(&irr, &nu).unwrap();
                            assert_eq!(q, Named::Hoc { m: p, n: m }.build().unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bar_properties() {
        for n in 0..=2 {
            let id = Reshuffle::identity(Depth(n));
            assert_eq!(Reshuffle::bar(&id).unwrap(), Reshuffle::identity(Depth(n + 1)));
        }
        for mu in
            all_upto(2).into_iter().filter(|f| f.dom.get() >= 0 && f.cod.get() >= 0 && f.count_adjoints().is_modality())
        {
            let (m, n) = (mu.dom.get(), mu.cod.get());
            let b = Reshuffle::bar(&mu).unwrap();
            let sq_n = Named::Sqcup { k1: 0, l: 0, m: n + 1 }.build().unwrap();
            let sq_m = Named::Sqcup { k1: 0, l: 0, m: m + 1 }.build().unwrap();
            assert_eq!(Reshuffle::compose(&sq_n, &b).unwrap(), Reshuffle::compose(&mu, &sq_m).unwrap(), "bar({mu})");
        }
        let par = Named::Par { n: 1 }.build().unwrap();
        // The lifted parametricity keeps relation 0 and drops relation 1.
        assert_eq!(Reshuffle::bar(&par).unwrap(), Named::Sqcup { k1: 1, l: 1, m: 3 }.build().unwrap());
        assert!(matches!(Reshuffle::bar(&r("(0|1)")), Err(Error::Class(_))));
        let to_point = Reshuffle::from_parts(0, -1, vec![Level::Eq]).unwrap();
        assert!(matches!(Reshuffle::bar(&to_point), Err(Error::Param(_))));
    }

    #[test]
    fn named_examples() {
        assert_eq!(Named::Nabla { k1: 0, l: 0, m: 1 }.build().unwrap(), r("(=|0,0)"));
        assert_eq!(Named::Cohpi { l: 0, m: 1 }.build().unwrap(), r("(0|1)"));
        assert_eq!(Named::Delta { k1: 0, l: 0, m: 1 }.build().unwrap(), r("(=|=,0)"));
        assert_eq!(Named::Sqcup { k1: 0, l: 0, m: 1 }.build().unwrap(), r("(=|1)"));
        assert_eq!(Named::Sqcup { k1: 1, l: 1, m: 1 }.build().unwrap(), rd("(=|0)", 1));
        assert_eq!(Named::Nabla { k1: 1, l: 1, m: 1 }.build().unwrap(), r("(=|0,T)"));
        for m in -1..=3 {
            assert_eq!(Named::Cohpi { l: -1, m }.build().unwrap(), Reshuffle::identity(Depth(m)));
        }
        let irr = Named::Irr { m: 2, n: 1 }.build().unwrap();
        assert_eq!(irr, rd("(=|T,T)", 2));
        assert!(matches!(Named::Sqcup { k1: -1, l: 0, m: 1 }.build(), Err(Error::Param(_))));
        assert!(matches!(Named::Delta { k1: 2, l: 0, m: 1 }.build(), Err(Error::Param(_))));
        assert!(matches!(Named::Nabla { k1: 0, l: 2, m: 1 }.build(), Err(Error::Param(_))));
    }

    #[test]
    fn useful_families_chain_and_identities() {
        for m in 0..=3 {
            for k1 in 0..=m {
                for l in (k1 - 1)..=m {
                    let tri = Named::Delta { k1, l, m }.build().unwrap();
                    let sq = Named::Sqcup { k1, l, m }.build().unwrap();
                    let na = Named::Nabla { k1, l, m }.build().unwrap();
                    assert_eq!(tri.right_adjoint().as_ref(), Some(&sq), "[{k1},{l}] in {m}");
                    assert_eq!(sq.right_adjoint().as_ref(), Some(&na));
                    let id = Reshuffle::identity(sq.cod);
                    assert_eq!(Reshuffle::compose(&sq, &tri).unwrap(), id);
                    assert_eq!(Reshuffle::compose(&sq, &na).unwrap(), id);
                    if k1 == 0 {
                        let pi = Named::Cohpi { l, m }.build().unwrap();
                        assert_eq!(pi.right_adjoint().as_ref(), Some(&tri));
                        assert_eq!(Reshuffle::compose(&pi, &tri).unwrap(), id);
                    }
                    if k1 > 0 && l >= k1 {
                        let shifted = Named::Nabla { k1: k1 - 1, l: l - 1, m }.build().unwrap();
                        assert_eq!(tri, shifted);
                    }
                }
            }
        }
    }

    #[test]
    fn two_poset_laws() {
        let all = all_upto(2);
        let by_type =
            |d: Depth, c: Depth| -> Vec<&Reshuffle> { all.iter().filter(|f| f.dom == d && f.cod == c).collect() };
        for f in &all {
            assert_eq!(&Reshuffle::compose(&Reshuffle::identity(f.cod), f).unwrap(), f);
            assert_eq!(&Reshuffle::compose(f, &Reshuffle::identity(f.dom)).unwrap(), f);
            for g in all.iter().filter(|g| g.dom == f.cod) {
                let gf = Reshuffle::compose(g, f).unwrap();
                for h in all.iter().filter(|h| h.dom == g.cod) {
                    assert_eq!(
                        Reshuffle::compose(h, &gf).unwrap(),
                        Reshuffle::compose(&Reshuffle::compose(h, g).unwrap(), f).unwrap()
                    );
                }
                for f2 in by_type(f.dom, f.cod) {
                    if f.leq(f2).unwrap() {
                        assert!(gf.leq(&Reshuffle::compose(g, f2).unwrap()).unwrap());
                    }
                }
                for g2 in by_type(g.dom, g.cod) {
                    if g.leq(g2).unwrap() {
                        assert!(gf.leq(&Reshuffle::compose(g2, f).unwrap()).unwrap());
                    }
                }
            }
        }
    }
}
