//! Gadgets, composed instances, rectangles, partial assignments and slices.
//!
//! Conventions used throughout the crate:
//!
//! * Alice's block values and all coordinates are 0-based in the API; textual
//!   encodings and reports render them 1-based.
//! * A Bob block of the index gadget is an `m`-bit string stored in a `u64` with
//!   its first (leftmost) bit as the most significant of the `m` bits, so
//!   `Ind_m(x, y)` is bit `m - 1 - x` of `y`.
//! * A full Alice input `(x_1, ..., x_n)` is encoded as the mixed-radix index
//!   with `x_1` most significant; likewise Bob's input, which for the index
//!   gadget is simply the concatenation `y_1 y_2 ... y_n` read as a binary
//!   number. Outputs `z` are encoded the same way with `z_1` most significant.

use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;
use num_rational::BigRational;

use crate::entropy::SetVar;
use crate::error::{Error, Result};

/// Caps for exhaustive computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Maximum `|X| * |Y|` of any enumerated input domain.
    pub pairs: u64,
    /// Maximum number of coordinates whose subsets are enumerated.
    pub subset_coords: usize,
}

impl Budget {
    pub const DEFAULT_PAIRS: u64 = 1 << 24;

    pub fn with_pairs(pairs: u64) -> Self {
        Budget {
            pairs,
            ..Budget::default()
        }
    }

    pub(crate) fn check_pairs(&self, what: &str, required: u128) -> Result<()> {
        if required > self.pairs as u128 {
            return Err(Error::resource(what, format!("{required} pairs"), format!("{} pairs", self.pairs)));
        }
        Ok(())
    }

    pub(crate) fn check_coords(&self, what: &str, coords: usize) -> Result<()> {
        if coords > self.subset_coords {
            return Err(Error::resource(
                what,
                format!("2^{coords} coordinate subsets"),
                format!("2^{} coordinate subsets", self.subset_coords),
            ));
        }
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            pairs: Self::DEFAULT_PAIRS,
            subset_coords: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GadgetSpec {
    /// `Ind_m(x, y) = y_x` with `x ∈ [m]`, `y ∈ {0,1}^m`.
    Index { m: u32 },
    /// Explicit truth table, row-major over `[alice] × [bob]`.
    Table {
        alice: u64,
        bob: u64,
        table: Vec<bool>,
    },
}

impl GadgetSpec {
    /// The index gadget. `m` must be a power of two, at least 2, and small enough
    /// that a Bob block fits in a machine word.
    pub fn index(m: u32) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() || m > 32 {
            return Err(Error::domain(format!("index gadget needs m a power of 2 in [2, 32], got {m}")));
        }
        Ok(GadgetSpec::Index { m })
    }

    pub fn table(alice: u64, bob: u64, table: Vec<bool>) -> Result<Self> {
        if alice == 0 || bob == 0 || table.len() as u64 != alice.saturating_mul(bob) {
            return Err(Error::domain("table gadget must be total over a nonempty domain"));
        }
        Ok(GadgetSpec::Table { alice, bob, table })
    }

    pub fn alice_size(&self) -> u64 {
        match self {
            GadgetSpec::Index { m } => *m as u64,
            GadgetSpec::Table { alice, .. } => *alice,
        }
    }

    pub fn bob_size(&self) -> u64 {
        match self {
            GadgetSpec::Index { m } => 1u64 << m,
            GadgetSpec::Table { bob, .. } => *bob,
        }
    }

    pub fn is_index(&self) -> bool {
        matches!(self, GadgetSpec::Index { .. })
    }

    /// `log2` of Alice's block size when it is a power of two.
    pub fn alice_bits(&self) -> Option<u32> {
        let a = self.alice_size();
        a.is_power_of_two().then(|| a.trailing_zeros())
    }

    pub fn eval(&self, x: u64, y: u64) -> Result<bool> {
        if x >= self.alice_size() {
            return Err(Error::domain(format!("Alice block {} outside [{}]", x + 1, self.alice_size())));
        }
        if y >= self.bob_size() {
            return Err(Error::domain(format!("Bob block {y} outside the block domain")));
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluates an index-gadget instance on a textual Bob block such as
    /// `"0110"`.
    pub fn eval_str(&self, x: u64, y: &str) -> Result<bool> {
        let y = self.parse_bob_block(y)?;
        self.eval(x, y)
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: u64, y: u64) -> bool {
        match self {
            GadgetSpec::Index { m } => (y >> (*m as u64 - 1 - x)) & 1 == 1,
            GadgetSpec::Table { bob, table, .. } => table[(x * bob + y) as usize],
        }
    }

    pub fn parse_bob_block(&self, s: &str) -> Result<u64> {
        match self {
            GadgetSpec::Index { m } => {
                if s.len() != *m as usize {
                    return Err(Error::domain(format!("Bob block {s:?} must have {m} bits")));
                }
                bits_to_u64(s)
            }
            GadgetSpec::Table { bob, .. } => {
                let v: u64 = s.parse().map_err(|_| Error::parse(format!("bad Bob block {s:?}")))?;
                if v == 0 || v > *bob {
                    return Err(Error::domain(format!("Bob block {v} outside [{bob}]")));
                }
                Ok(v - 1)
            }
        }
    }

    pub fn format_bob_block(&self, y: u64) -> String {
        match self {
            GadgetSpec::Index { m } => u64_to_bits(y, *m as usize),
            GadgetSpec::Table { .. } => (y + 1).to_string(),
        }
    }
}

fn bits_to_u64(s: &str) -> Result<u64> {
    let mut v = 0u64;
    for c in s.chars() {
        v = (v << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                _ => return Err(Error::parse(format!("bad bit {c:?} in {s:?}"))),
            };
    }
    Ok(v)
}

pub(crate) fn u64_to_bits(v: u64, width: usize) -> String {
    (0..width)
        .map(|j| if (v >> (width - 1 - j)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub(crate) fn bools_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub(crate) fn parse_bools(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::parse(format!("bad bit {c:?} in {s:?}"))),
        })
        .collect()
}

impl fmt::Display for GadgetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GadgetSpec::Index { m } => write!(f, "index({m})"),
            GadgetSpec::Table { alice, bob, table } => {
                write!(f, "table({alice}x{bob}:{})", bools_to_string(table))
            }
        }
    }
}

impl FromStr for GadgetSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let body = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| Error::parse(format!("bad gadget {s:?}")))
        };
        if s.starts_with("index(") {
            let m: u32 = body("index(")?
                .parse()
                .map_err(|_| Error::parse(format!("bad gadget {s:?}")))?;
            GadgetSpec::index(m)
        } else if s.starts_with("table(") {
            let b = body("table(")?;
            let (dims, bits) = b.split_once(':').ok_or_else(|| Error::parse(format!("bad gadget {s:?}")))?;
            let (a, bb) = dims.split_once('x').ok_or_else(|| Error::parse(format!("bad gadget {s:?}")))?;
            let a: u64 = a.parse().map_err(|_| Error::parse(format!("bad gadget {s:?}")))?;
            let bb: u64 = bb.parse().map_err(|_| Error::parse(format!("bad gadget {s:?}")))?;
            GadgetSpec::table(a, bb, parse_bools(bits)?)
        } else {
            Err(Error::parse(format!("unknown gadget {s:?}")))
        }
    }
}

/// The composition `G = g^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ComposedInstance {
    n: usize,
    gadget: GadgetSpec,
    alice_size: u64,
    bob_size: u64,
}

impl ComposedInstance {
    pub fn new(n: usize, gadget: GadgetSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("composition needs n >= 1"));
        }
        let pow = |base: u64| {
            (0..n).try_fold(1u64, |acc, _| acc.checked_mul(base)).ok_or_else(|| {
                Error::resource("composed domain", format!("{base}^{n} elements"), "u64 indices")
            })
        };
        let alice_size = pow(gadget.alice_size())?;
        let bob_size = pow(gadget.bob_size())?;
        Ok(ComposedInstance {
            n,
            gadget,
            alice_size,
            bob_size,
        })
    }

    pub fn index(n: usize, m: u32) -> Result<Self> {
        Self::new(n, GadgetSpec::index(m)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gadget(&self) -> &GadgetSpec {
        &self.gadget
    }

    /// `|[m]^n|`.
    pub fn alice_size(&self) -> u64 {
        self.alice_size
    }

    /// `|({0,1}^m)^n|`.
    pub fn bob_size(&self) -> u64 {
        self.bob_size
    }

    pub fn domain_pairs(&self) -> u128 {
        self.alice_size as u128 * self.bob_size as u128
    }

    pub fn num_outputs(&self) -> u64 {
        1u64 << self.n
    }

    #[inline]
    pub fn alice_block(&self, x: u64, i: usize) -> u64 {
        let a = self.gadget.alice_size();
        (x / a.pow((self.n - 1 - i) as u32)) % a
    }

    #[inline]
    pub fn bob_block(&self, y: u64, i: usize) -> u64 {
        match self.gadget {
            GadgetSpec::Index { m } => {
                let shift = (self.n - 1 - i) as u64 * m as u64;
                (y >> shift) & ((1u64 << m) - 1)
            }
            GadgetSpec::Table { bob, .. } => (y / bob.pow((self.n - 1 - i) as u32)) % bob,
        }
    }

    pub fn alice_blocks(&self, x: u64) -> Vec<u64> {
        (0..self.n).map(|i| self.alice_block(x, i)).collect()
    }

    pub fn bob_blocks(&self, y: u64) -> Vec<u64> {
        (0..self.n).map(|i| self.bob_block(y, i)).collect()
    }

    pub fn encode_alice(&self, xs: &[u64]) -> Result<u64> {
        let a = self.gadget.alice_size();
        if xs.len() != self.n || xs.iter().any(|&x| x >= a) {
            return Err(Error::domain(format!("Alice input must be {} values in [{}]", self.n, a)));
        }
        Ok(xs.iter().fold(0, |acc, &x| acc * a + x))
    }

    pub fn encode_bob(&self, ys: &[u64]) -> Result<u64> {
        let b = self.gadget.bob_size();
        if ys.len() != self.n || ys.iter().any(|&y| y >= b) {
            return Err(Error::domain(format!("Bob input must be {} blocks", self.n)));
        }
        Ok(ys.iter().fold(0, |acc, &y| acc * b + y))
    }

    /// Parses Bob blocks given as strings (bit strings for the index gadget).
    pub fn encode_bob_str(&self, ys: &[&str]) -> Result<u64> {
        let blocks = ys
            .iter()
            .map(|s| self.gadget.parse_bob_block(s))
            .collect::<Result<Vec<_>>>()?;
        self.encode_bob(&blocks)
    }

    /// Gadget layer of the composition: `z_i = g(x_i, y_i)`.
    pub fn compose_eval(&self, xs: &[u64], ys: &[u64]) -> Result<Vec<bool>> {
        if xs.len() != self.n || ys.len() != self.n {
            return Err(Error::domain(format!(
                "expected {} blocks per player, got {} and {}",
                self.n,
                xs.len(),
                ys.len()
            )));
        }
        xs.iter().zip(ys).map(|(&x, &y)| self.gadget.eval(x, y)).collect()
    }

    /// `G(x, y)` on encoded inputs, as an encoded output.
    #[inline]
    pub fn output_index(&self, x: u64, y: u64) -> u64 {
        (0..self.n).fold(0u64, |acc, i| {
            (acc << 1) | self.gadget.eval_unchecked(self.alice_block(x, i), self.bob_block(y, i)) as u64
        })
    }

    #[inline]
    pub fn block_output(&self, x: u64, y: u64, i: usize) -> bool {
        self.gadget.eval_unchecked(self.alice_block(x, i), self.bob_block(y, i))
    }

    pub fn full_rect(&self) -> Rect {
        Rect {
            x: Subset::full(self.alice_size),
            y: Subset::full(self.bob_size),
        }
    }

    /// All `(x, y)` with `G(x, y) = z`, in ascending `(x, y)` order.
    pub fn slice_enumerate(&self, z: &[bool], budget: &Budget) -> Result<Vec<(u64, u64)>> {
        let zi = z_index(self.n, z)?;
        budget.check_pairs("slice enumeration", self.domain_pairs())?;
        let mut out = Vec::new();
        self.for_each_in_slice(zi, |x, y| out.push((x, y)));
        Ok(out)
    }

    pub(crate) fn for_each_in_slice(&self, z: u64, mut f: impl FnMut(u64, u64)) {
        if let GadgetSpec::Index { m } = self.gadget {
            // y is free except at the pointed-to bits, which must equal z.
            let nm = self.n as u64 * m as u64;
            for x in 0..self.alice_size {
                let mut mask = 0u64;
                let mut forced = 0u64;
                for i in 0..self.n {
                    let pos = nm - 1 - (i as u64 * m as u64 + self.alice_block(x, i));
                    mask |= 1 << pos;
                    if (z >> (self.n - 1 - i)) & 1 == 1 {
                        forced |= 1 << pos;
                    }
                }
                // Enumerate submasks of the complement in increasing order.
                let all = if nm == 64 { u64::MAX } else { (1u64 << nm) - 1 };
                let free = !mask & all;
                let mut sub = 0u64;
                loop {
                    f(x, sub | forced);
                    if sub == free {
                        break;
                    }
                    sub = ((sub | mask) + 1) & free;
                }
            }
        } else {
            for x in 0..self.alice_size {
                for y in 0..self.bob_size {
                    if self.output_index(x, y) == z {
                        f(x, y);
                    }
                }
            }
        }
    }
}

impl fmt::Display for ComposedInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} g={}", self.n, self.gadget)
    }
}

impl FromStr for ComposedInstance {
    type Err = Error;
    /// Parses `"n=2 g=index(4)"` (the shorthand `"n=2 m=4"` also works).
    fn from_str(s: &str) -> Result<Self> {
        let mut n = None;
        let mut gadget = None;
        for tok in s.split_whitespace() {
            if let Some(v) = tok.strip_prefix("n=") {
                n = Some(v.parse::<usize>().map_err(|_| Error::parse(format!("bad n in {s:?}")))?);
            } else if let Some(v) = tok.strip_prefix("g=") {
                gadget = Some(v.parse::<GadgetSpec>()?);
            } else if let Some(v) = tok.strip_prefix("m=") {
                let m = v.parse::<u32>().map_err(|_| Error::parse(format!("bad m in {s:?}")))?;
                gadget = Some(GadgetSpec::index(m)?);
            } else {
                return Err(Error::parse(format!("unexpected token {tok:?} in instance")));
            }
        }
        match (n, gadget) {
            (Some(n), Some(g)) => ComposedInstance::new(n, g),
            _ => Err(Error::parse(format!("instance {s:?} needs n= and g= (or m=)"))),
        }
    }
}

/// Encodes `z ∈ {0,1}^n` with `z_1` most significant.
pub fn z_index(n: usize, z: &[bool]) -> Result<u64> {
    if z.len() != n {
        return Err(Error::domain(format!("z must have {n} bits, got {}", z.len())));
    }
    Ok(z.iter().fold(0, |acc, &b| (acc << 1) | b as u64))
}

pub fn z_from_index(n: usize, idx: u64) -> Vec<bool> {
    (0..n).map(|i| (idx >> (n - 1 - i)) & 1 == 1).collect()
}

/// A subset of `{0, ..., universe - 1}`, stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    bits: BitVec<u64, Lsb0>,
    len: u64,
}

impl Subset {
    pub fn empty(universe: u64) -> Self {
        Subset {
            bits: bitvec![u64, Lsb0; 0; universe as usize],
            len: 0,
        }
    }

    pub fn full(universe: u64) -> Self {
        Subset {
            bits: bitvec![u64, Lsb0; 1; universe as usize],
            len: universe,
        }
    }

    pub fn from_iter(universe: u64, items: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut s = Subset::empty(universe);
        for i in items {
            if i >= universe {
                return Err(Error::domain(format!("element {i} outside universe of size {universe}")));
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn insert(&mut self, i: u64) {
        if !self.bits.replace(i as usize, true) {
            self.len += 1;
        }
    }

    #[inline]
    pub fn contains(&self, i: u64) -> bool {
        self.bits.get(i as usize).map(|b| *b).unwrap_or(false)
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn universe(&self) -> u64 {
        self.bits.len() as u64
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter_ones().map(|i| i as u64)
    }

    pub fn first(&self) -> Option<u64> {
        self.bits.first_one().map(|i| i as u64)
    }

    pub fn filter(&self, mut keep: impl FnMut(u64) -> bool) -> Subset {
        let mut out = Subset::empty(self.universe());
        for i in self.iter() {
            if keep(i) {
                out.insert(i);
            }
        }
        out
    }

    pub fn is_subset(&self, other: &Subset) -> bool {
        self.universe() == other.universe() && self.iter().all(|i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &Subset) -> bool {
        self.iter().all(|i| !other.contains(i))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 16 {
            f.debug_set().entries(self.iter()).finish()
        } else {
            write!(f, "Subset(|S|={} of {})", self.len, self.universe())
        }
    }
}

/// An explicit rectangle `X × Y` of encoded inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x: Subset,
    pub y: Subset,
}

impl Rect {
    pub fn new(x: Subset, y: Subset) -> Self {
        Rect { x, y }
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty() || self.y.is_empty()
    }

    pub fn size(&self) -> u128 {
        self.x.len() as u128 * self.y.len() as u128
    }

    pub fn contains(&self, x: u64, y: u64) -> bool {
        self.x.contains(x) && self.y.contains(y)
    }
}

/// `ρ ∈ {0, 1, *}^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialAssignment {
    entries: Vec<Option<bool>>,
}

impl PartialAssignment {
    pub fn all_free(n: usize) -> Self {
        PartialAssignment {
            entries: vec![None; n],
        }
    }

    pub fn from_entries(entries: Vec<Option<bool>>) -> Self {
        PartialAssignment { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.entries[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.entries[i] = Some(v);
    }

    pub fn entries(&self) -> &[Option<bool>] {
        &self.entries
    }

    /// `free ρ = ρ^{-1}(*)`, ascending.
    pub fn free(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.entries[i].is_none()).collect()
    }

    /// `fix ρ = [n] \ free ρ`, ascending.
    pub fn fixed(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.entries[i].is_some()).collect()
    }

    pub fn consistent_with(&self, z: &[bool]) -> bool {
        z.len() == self.n() && self.entries.iter().zip(z).all(|(r, &b)| r.is_none_or(|v| v == b))
    }
}

impl fmt::Display for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            f.write_str(match e {
                None => "*",
                Some(false) => "0",
                Some(true) => "1",
            })?;
        }
        Ok(())
    }
}

impl FromStr for PartialAssignment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '*' => Ok(None),
                '0' => Ok(Some(false)),
                '1' => Ok(Some(true)),
                _ => Err(Error::parse(format!("bad partial assignment {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PartialAssignment::from_entries)
    }
}

/// An outer function `f : {0,1}^n → {0, 1, undefined}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterFunction {
    n: usize,
    values: Vec<Option<bool>>,
}

impl OuterFunction {
    /// `values[z]` for encoded `z`; `None` marks inputs outside the promise.
    pub fn new(n: usize, values: Vec<Option<bool>>) -> Result<Self> {
        if n == 0 || n > 20 || values.len() != 1 << n {
            return Err(Error::domain(format!("outer function on {n} bits needs 2^{n} values")));
        }
        if values.iter().all(Option::is_none) {
            return Err(Error::domain("outer function has no defined input"));
        }
        Ok(OuterFunction { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(&[bool]) -> Option<bool>) -> Result<Self> {
        let values = (0..1u64 << n).map(|z| f(&z_from_index(n, z))).collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, z: u64) -> Option<bool> {
        self.values[z as usize]
    }

    pub fn defined_inputs(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.values.len() as u64).filter(|&z| self.values[z as usize].is_some())
    }

    pub fn is_total(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

impl fmt::Display for OuterFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.values {
            f.write_str(match v {
                None => "*",
                Some(false) => "0",
                Some(true) => "1",
            })?;
        }
        Ok(())
    }
}

impl FromStr for OuterFunction {
    type Err = Error;
    /// A truth table such as `"0001"`, indexed by encoded `z`, with `*` for
    /// undefined entries.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.len().is_power_of_two() || s.len() < 2 {
            return Err(Error::parse(format!("truth table {s:?} must have 2^n entries")));
        }
        let n = s.len().trailing_zeros() as usize;
        let values = PartialAssignment::from_str(s)?.entries;
        Self::new(n, values)
    }
}

/// Whether `X × Y` is `ρ`-structured at density rate `delta`: `X` restricted to
/// the free blocks is `delta`-dense, `X` is constant on the fixed blocks, and
/// every output in `G(X × Y)` agrees with `ρ`.
pub fn is_structured(
    g: &ComposedInstance,
    rect: &Rect,
    rho: &PartialAssignment,
    delta: &BigRational,
    budget: &Budget,
) -> Result<bool> {
    if rect.is_empty() {
        return Err(Error::domain("is_structured needs a nonempty rectangle"));
    }
    if rho.n() != g.n() {
        return Err(Error::domain("partial assignment length differs from n"));
    }
    let fixed = rho.fixed();
    let first = rect.x.first().expect("nonempty");
    let alpha: Vec<u64> = fixed.iter().map(|&i| g.alice_block(first, i)).collect();
    if rect
        .x
        .iter()
        .any(|x| fixed.iter().zip(&alpha).any(|(&i, &a)| g.alice_block(x, i) != a))
    {
        return Ok(false);
    }
    // With X fixed on fix(ρ), the outputs on fixed blocks depend on y alone.
    for (&i, &a) in fixed.iter().zip(&alpha) {
        let want = rho.get(i).expect("fixed");
        if rect.y.iter().any(|y| g.gadget().eval_unchecked(a, g.bob_block(y, i)) != want) {
            return Ok(false);
        }
    }
    let free = rho.free();
    let var = SetVar::project_alice(g, &rect.x, &free)?;
    var.is_blockwise_dense(delta, false, budget)
}
