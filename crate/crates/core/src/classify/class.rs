use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homology::AbelianGroup;

/// A prime connected summand other than `S^3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Summand {
    /// Lens space `L(p, q)` with `p >= 2`, `q` the smallest of `+-q^{+-1} mod p`.
    Lens { p: u64, q: u64 },
    S1xS2,
}

impl Summand {
    /// `L(p, q)` in normal form; `None` stands for `S^3` (`p = 1`).
    /// `L(0, 1)` is `S^1 x S^2`.
    pub fn lens(p: u64, q: i64) -> Option<Summand> {
        match p {
            0 => Some(Summand::S1xS2),
            1 => None,
            _ => {
                let pi = p as i64;
                let q = q.rem_euclid(pi);
                assert_eq!(q.gcd(&pi), 1, "L({p},{q}) needs coprime parameters");
                let inv = mod_inverse(q, pi);
                let best = [q, pi - q, inv, pi - inv].into_iter().min().unwrap();
                Some(Summand::Lens { p, q: best as u64 })
            }
        }
    }

    pub fn rp3() -> Summand {
        Summand::Lens { p: 2, q: 1 }
    }

    pub fn h1(&self) -> AbelianGroup {
        match self {
            Summand::S1xS2 => AbelianGroup::free(1),
            Summand::Lens { p, .. } => AbelianGroup::cyclic(*p),
        }
    }
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    let g = a.extended_gcd(&m);
    g.x.rem_euclid(m)
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Summand::S1xS2 => f.write_str("S^1xS^2"),
            Summand::Lens { p: 2, q: 1 } => f.write_str("RP^3"),
            Summand::Lens { p, q } => write!(f, "L({p},{q})"),
        }
    }
}

/// Connected closed 3-manifold given as a connected sum of prime summands;
/// the empty sum is `S^3`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Component {
    pub summands: Vec<Summand>,
}

impl Component {
    pub fn new(mut summands: Vec<Summand>) -> Self {
        summands.sort();
        Component { summands }
    }

    pub fn is_s3(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn connected_sum(&self, other: &Component) -> Component {
        Component::new(self.summands.iter().chain(&other.summands).copied().collect())
    }

    pub fn h1(&self) -> AbelianGroup {
        self.summands
            .iter()
            .fold(AbelianGroup::trivial(), |acc, s| acc.direct_sum(&s.h1()))
    }

    /// True when the rendering is a single token (no `#`, no product sign).
    fn is_atomic(&self) -> bool {
        match self.summands.as_slice() {
            [] => true,
            [Summand::Lens { .. }] => true,
            _ => false,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.summands.as_slice() {
            [] => f.write_str("S^3"),
            [s] => write!(f, "{s}"),
            many => {
                let parts: Vec<String> = many
                    .iter()
                    .map(|s| match s {
                        Summand::S1xS2 => format!("({s})"),
                        _ => s.to_string(),
                    })
                    .collect();
                f.write_str(&parts.join("#"))
            }
        }
    }
}

/// Disjoint union of connected components, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifoldClass {
    pub components: Vec<Component>,
}

impl ManifoldClass {
    pub fn from_components(mut components: Vec<Component>) -> Self {
        components.sort();
        ManifoldClass { components }
    }

    pub fn connected(c: Component) -> Self {
        ManifoldClass { components: vec![c] }
    }

    pub fn s3() -> Self {
        Self::connected(Component::default())
    }

    pub fn s1xs2() -> Self {
        Self::connected(Component::new(vec![Summand::S1xS2]))
    }

    pub fn rp3() -> Self {
        Self::connected(Component::new(vec![Summand::rp3()]))
    }

    /// `#k (S^1 x S^2)`, which is `S^3` for `k = 0`.
    pub fn sum_of_s1xs2(k: usize) -> Self {
        Self::connected(Component::new(vec![Summand::S1xS2; k]))
    }

    /// `L(p, q)` after normalisation (possibly `S^3` or `S^1 x S^2`).
    pub fn lens(p: u64, q: i64) -> Self {
        Self::connected(Component::new(Summand::lens(p, q).into_iter().collect()))
    }

    pub fn disjoint_union(&self, other: &ManifoldClass) -> Self {
        Self::from_components(self.components.iter().chain(&other.components).cloned().collect())
    }

    /// Connected sum of two connected classes; `None` if either is disconnected.
    pub fn connected_sum(&self, other: &ManifoldClass) -> Option<Self> {
        match (self.components.as_slice(), other.components.as_slice()) {
            ([a], [b]) => Some(Self::connected(a.connected_sum(b))),
            _ => None,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.components.len() == 1
    }

    /// `H1` implied by the formal expression.
    pub fn h1(&self) -> AbelianGroup {
        self.components
            .iter()
            .fold(AbelianGroup::trivial(), |acc, c| acc.direct_sum(&c.h1()))
    }
}

impl fmt::Display for ManifoldClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("empty");
        }
        let mut groups: Vec<(usize, &Component)> = Vec::new();
        for c in &self.components {
            match groups.last_mut() {
                Some((k, last)) if *last == c => *k += 1,
                _ => groups.push((1, c)),
            }
        }
        let parts: Vec<String> = groups
            .into_iter()
            .map(|(k, c)| match k {
                1 => c.to_string(),
                _ if c.is_atomic() => format!("{k}{c}"),
                _ => format!("{k}({c})"),
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse manifold class `{input}`: {message}")]
pub struct ClassParseError {
    pub input: String,
    pub message: String,
}

fn strip_outer_parens(s: &str) -> &str {
    if !(s.starts_with('(') && s.ends_with(')')) {
        return s;
    }
    let mut depth = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 && i != s.len() - 1 {
                    return s;
                }
            }
            _ => {}
        }
    }
    &s[1..s.len() - 1]
}

fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl FromStr for ManifoldClass {
    type Err = ClassParseError;

    /// Parses the rendering produced by `Display`, e.g. `2S^3`,
    /// `(S^1xS^2)#(S^1xS^2)`, `RP^3 + L(5,2)`.
    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |message: &str| ClassParseError { input: input.to_string(), message: message.to_string() };
        let mut components = Vec::new();
        for group in split_top_level(input, '+') {
            let group = group.trim();
            let digits: String = group.chars().take_while(|c| c.is_ascii_digit()).collect();
            let count: usize = if digits.is_empty() { 1 } else { digits.parse().map_err(|_| err("bad count"))? };
            let body = strip_outer_parens(group[digits.len()..].trim());
            let mut summands = Vec::new();
            for s in split_top_level(body, '#') {
                let s = strip_outer_parens(s.trim());
                match s {
                    "S^3" => {}
                    "S^1xS^2" => summands.push(Summand::S1xS2),
                    "RP^3" => summands.push(Summand::rp3()),
                    _ if s.starts_with("L(") && s.ends_with(')') => {
                        let inner = &s[2..s.len() - 1];
                        let (p, q) = inner.split_once(',').ok_or_else(|| err("lens space needs L(p,q)"))?;
                        let p: u64 = p.trim().parse().map_err(|_| err("bad lens parameter"))?;
                        let q: i64 = q.trim().parse().map_err(|_| err("bad lens parameter"))?;
                        if p > 1 && q.gcd(&(p as i64)) != 1 {
                            return Err(err("lens parameters must be coprime"));
                        }
                        summands.extend(Summand::lens(p, q));
                    }
                    _ => return Err(err(&format!("unknown summand `{s}`"))),
                }
            }
            if count == 0 {
                return Err(err("zero count"));
            }
            components.extend(std::iter::repeat_n(Component::new(summands), count));
        }
        Ok(ManifoldClass::from_components(components))
    }
}
