//! Min-entropy, deficiency, blockwise density and the density-restoring
//! partition.
//!
//! A [`SetVar`] is the uniform random variable on an explicit set of tuples.
//! Its marginal on a coordinate set `I` has min-entropy
//! `log2(|S| / max_α |{x ∈ S : x_I = α}|)` and deficiency
//! `log2(Π_{i∈I} ambient_i) - H∞`; both are returned as exact [`Bits`]. All
//! density decisions reduce to integer inequalities: with `δ = p/q`,
//! `H∞(x_I) ≥ δ·log2(P)` iff `|S|^q ≥ P^p · c^q` where `c` is the largest
//! marginal count and `P` the ambient size of `I`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Bits, Q};
use crate::gadget::{Budget, ComposedInstance, Subset};

/// Uniform distribution on an explicit set of tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetVar {
    ambient: Vec<u64>,
    coords: Vec<usize>,
    points: Vec<Vec<u64>>,
}

impl SetVar {
    /// `points` are tuples with one entry per ambient coordinate; duplicates are
    /// merged. Coordinates are labelled `0..k`.
    pub fn new(ambient: Vec<u64>, points: impl IntoIterator<Item = Vec<u64>>) -> Result<Self> {
        let coords = (0..ambient.len()).collect();
        Self::with_coords(ambient, coords, points)
    }

    /// Like [`SetVar::new`] with explicit labels (e.g. block numbers in `[n]`)
    /// used only for reporting.
    pub fn with_coords(
        ambient: Vec<u64>,
        coords: Vec<usize>,
        points: impl IntoIterator<Item = Vec<u64>>,
    ) -> Result<Self> {
        if coords.len() != ambient.len() {
            return Err(Error::domain("one label per coordinate"));
        }
        if ambient.contains(&0) {
            return Err(Error::domain("ambient coordinate domains must be nonempty"));
        }
        let mut points: Vec<Vec<u64>> = points.into_iter().collect();
        for p in &points {
            if p.len() != ambient.len() || p.iter().zip(&ambient).any(|(v, a)| v >= a) {
                return Err(Error::domain(format!("point {p:?} outside the ambient domain {ambient:?}")));
            }
        }
        points.sort();
        points.dedup();
        if points.is_empty() {
            return Err(Error::domain("support must be nonempty"));
        }
        Ok(SetVar {
            ambient,
            coords,
            points,
        })
    }

    /// The uniform variable on `X` restricted to `blocks`, with ambient `[m]`
    /// per block. The restriction must be injective on `X` (true whenever `X`
    /// is constant on the other blocks), so the result is again uniform.
    pub fn project_alice(g: &ComposedInstance, x: &Subset, blocks: &[usize]) -> Result<Self> {
        let a = g.gadget().alice_size();
        let points: Vec<Vec<u64>> = x
            .iter()
            .map(|xi| blocks.iter().map(|&i| g.alice_block(xi, i)).collect())
            .collect();
        let count = points.len();
        let var = Self::with_coords(vec![a; blocks.len()], blocks.to_vec(), points)?;
        if var.points.len() != count {
            return Err(Error::domain("projection is not injective; X is not fixed off the chosen blocks"));
        }
        Ok(var)
    }

    pub fn dims(&self) -> usize {
        self.ambient.len()
    }

    pub fn ambient(&self) -> &[u64] {
        &self.ambient
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn points(&self) -> &[Vec<u64>] {
        &self.points
    }

    pub fn len(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_positions(&self, positions: &[usize]) -> Result<()> {
        if positions.iter().any(|&i| i >= self.dims()) {
            return Err(Error::domain("coordinate outside the variable's index set"));
        }
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != positions.len() {
            return Err(Error::domain("repeated coordinate"));
        }
        Ok(())
    }

    /// Largest marginal count on `positions`, with the lexicographically
    /// smallest outcome achieving it.
    pub(crate) fn max_marginal(&self, positions: &[usize]) -> (u64, Vec<u64>) {
        max_marginal_of(&self.points, positions)
    }

    fn ambient_product(&self, positions: &[usize]) -> BigUint {
        positions.iter().map(|&i| BigUint::from(self.ambient[i])).product()
    }

    /// `H∞(X_I)` in bits; zero for `I = ∅`.
    pub fn marginal_min_entropy(&self, positions: &[usize]) -> Result<Bits> {
        self.check_positions(positions)?;
        let (c, _) = self.max_marginal(positions);
        Ok(Bits::log2_ratio(self.len(), c))
    }

    /// `D∞(X_I) = log2|ambient_I| - H∞(X_I)`; zero for `I = ∅`.
    pub fn deficiency(&self, positions: &[usize]) -> Result<Bits> {
        self.check_positions(positions)?;
        let (c, _) = self.max_marginal(positions);
        let num = self.ambient_product(positions) * BigUint::from(c);
        Ok(Bits::log2(crate::exact::q_from_big(num, BigUint::from(self.len()))))
    }

    /// Deficiency over all coordinates.
    pub fn total_deficiency(&self) -> Bits {
        let all: Vec<usize> = (0..self.dims()).collect();
        self.deficiency(&all).expect("all coordinates are valid")
    }

    /// Blockwise density: every nonempty `I` has `H∞(X_I) ≥ δ·log2|ambient_I|`
    /// (minus one bit when `essential`).
    pub fn is_blockwise_dense(&self, delta: &BigRational, essential: bool, budget: &Budget) -> Result<bool> {
        check_rate(delta)?;
        budget.check_coords("blockwise density", self.dims())?;
        let k = self.dims();
        for mask in 1u32..(1u32 << k) {
            let positions = mask_positions(mask, k);
            let (c, _) = self.max_marginal(&positions);
            if !rate_ok(self.len(), c, &self.ambient_product(&positions), delta, essential) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Runs the density-restoring partition at rate `delta`.
    ///
    /// While points remain, pick an inclusion-maximal coordinate set `I` whose
    /// marginal has rate below `delta` (or `I = ∅` when there is none), take the
    /// lexicographically smallest most likely outcome `α` of `X_I`, emit the
    /// part `{x : x_I = α}` and remove it. `I` is grown one coordinate at a time
    /// from `∅`, always adding the smallest coordinate that still lies inside
    /// some violating set, until `I` itself is violating and no strict superset
    /// is.
    pub fn density_restoring_partition(&self, delta: &BigRational, budget: &Budget) -> Result<Vec<DensityPart>> {
        check_rate(delta)?;
        let k = self.dims();
        budget.check_coords("density-restoring partition", k)?;
        let total = self.len();
        let mut remaining: Vec<Vec<u64>> = self.points.clone();
        let mut parts = Vec::new();
        let products: Vec<BigUint> = (0..1u32 << k)
            .map(|mask| self.ambient_product(&mask_positions(mask, k)))
            .collect();
        while !remaining.is_empty() {
            let size = remaining.len() as u64;
            let index = parts.len() + 1;
            let delta_i = Bits::log2_ratio(total, size);
            let full = (1u32 << k) as usize;
            let mut violating = vec![false; full];
            for mask in 1..full {
                let (c, _) = max_marginal_of(&remaining, &mask_positions(mask as u32, k));
                violating[mask] = !rate_ok(size, c, &products[mask], delta, false);
            }
            // within[S]: S is contained in some violating set.
            let mut within = violating.clone();
            for mask in (0..full).rev() {
                if !within[mask] {
                    within[mask] = (0..k).any(|j| mask & (1 << j) == 0 && within[mask | (1 << j)]);
                }
            }
            if !within[0] {
                parts.push(DensityPart {
                    index,
                    fixed: Vec::new(),
                    value: Vec::new(),
                    points: std::mem::take(&mut remaining),
                    delta: delta_i,
                    remaining_before: size,
                });
                break;
            }
            let mut chosen = 0usize;
            while let Some(j) = (0..k).find(|&j| chosen & (1 << j) == 0 && within[chosen | (1 << j)]) {
                chosen |= 1 << j;
            }
            debug_assert!(violating[chosen]);
            let fixed = mask_positions(chosen as u32, k);
            let (_, value) = max_marginal_of(&remaining, &fixed);
            let (part, rest): (Vec<_>, Vec<_>) = remaining
                .into_iter()
                .partition(|p| fixed.iter().zip(&value).all(|(&i, &v)| p[i] == v));
            remaining = rest;
            parts.push(DensityPart {
                index,
                fixed,
                value,
                points: part,
                delta: delta_i,
                remaining_before: size,
            });
        }
        Ok(parts)
    }

    /// Restriction to the given positions; must be injective.
    pub fn restrict(&self, positions: &[usize]) -> Result<SetVar> {
        self.check_positions(positions)?;
        let points: Vec<Vec<u64>> = self
            .points
            .iter()
            .map(|p| positions.iter().map(|&i| p[i]).collect())
            .collect();
        let var = SetVar::with_coords(
            positions.iter().map(|&i| self.ambient[i]).collect(),
            positions.iter().map(|&i| self.coords[i]).collect(),
            points,
        )?;
        if var.len() != self.len() {
            return Err(Error::domain("restriction is not injective"));
        }
        Ok(var)
    }
}

pub(crate) fn check_rate(delta: &BigRational) -> Result<()> {
    if !delta.is_positive() || delta > &Q::one() {
        return Err(Error::domain(format!("density rate must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

fn mask_positions(mask: u32, k: usize) -> Vec<usize> {
    (0..k).filter(|&j| mask & (1 << j) != 0).collect()
}

fn max_marginal_of(points: &[Vec<u64>], positions: &[usize]) -> (u64, Vec<u64>) {
    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
    for p in points {
        *counts.entry(positions.iter().map(|&i| p[i]).collect()).or_insert(0) += 1;
    }
    let mut best: Option<(u64, Vec<u64>)> = None;
    for (alpha, c) in counts {
        let better = match &best {
            None => true,
            Some((bc, ba)) => c > *bc || (c == *bc && alpha < *ba),
        };
        if better {
            best = Some((c, alpha));
        }
    }
    best.unwrap_or((0, Vec::new()))
}

/// `log2(total/maxc) ≥ δ·log2(product) - [essential]`, decided in integers.
fn rate_ok(total: u64, maxc: u64, product: &BigUint, delta: &BigRational, essential: bool) -> bool {
    if maxc == 0 {
        return true;
    }
    let p = delta.numer().to_u64().expect("rate numerator fits in u64");
    let q = delta.denom().to_u64().expect("rate denominator fits in u64");
    let lhs_base = BigUint::from(total) * if essential { 2u32 } else { 1u32 };
    let lhs = num_traits::pow::Pow::pow(&lhs_base, q);
    let rhs = num_traits::pow::Pow::pow(product, p) * num_traits::pow::Pow::pow(&BigUint::from(maxc), q);
    lhs >= rhs
}

/// One part `X^i` of a density-restoring partition, labelled `x_I = α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityPart {
    /// Emission order, starting at 1.
    pub index: usize,
    /// Positions `I` (within the partitioned variable), ascending.
    pub fixed: Vec<usize>,
    /// `α`, one value per position of `fixed`.
    pub value: Vec<u64>,
    pub points: Vec<Vec<u64>>,
    /// `log2(|X| / |X^{≥i}|)`.
    pub delta: Bits,
    /// `|X^{≥i}|`.
    pub remaining_before: u64,
}

impl DensityPart {
    pub fn len(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, point: &[u64]) -> bool {
        self.fixed.iter().zip(&self.value).all(|(&i, &v)| point[i] == v) && self.points.binary_search_by(|p| p.as_slice().cmp(point)).is_ok()
    }

    /// `x_{i1,i2,...}=(α1,α2,...)` with 1-based block labels and values.
    pub fn label(&self, coords: &[usize]) -> String {
        format_label(
            &self.fixed.iter().map(|&i| coords[i]).collect::<Vec<_>>(),
            &self.value,
        )
    }
}

/// Renders `x_I = α` with 1-based blocks and values.
pub fn format_label(blocks: &[usize], value: &[u64]) -> String {
    let b: Vec<String> = blocks.iter().map(|i| (i + 1).to_string()).collect();
    let v: Vec<String> = value.iter().map(|a| (a + 1).to_string()).collect();
    format!("x_{{{}}}=({})", b.join(","), v.join(","))
}

#[derive(Clone, Debug, Serialize)]
pub struct PartCheck {
    pub index: usize,
    pub label: String,
    pub size: u64,
    /// The part restricted to its unfixed coordinates is dense.
    pub density_ok: bool,
    /// `D∞(X^i_{J∖I_i})`.
    pub deficiency_lhs: Bits,
    /// `D∞(X) - (1-δ)·log2|ambient_{I_i}| + δ_i`.
    pub deficiency_rhs: Bits,
    pub deficiency_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    /// Parts are pairwise disjoint, cover the input, are constant on their
    /// labels, and record `δ_i` correctly.
    pub is_partition: bool,
    pub parts: Vec<PartCheck>,
    pub holds: bool,
    /// Index of the first part violating either bullet.
    pub first_violation: Option<usize>,
}

/// Checks both bullets of the density-restoring lemma for every part, in exact
/// arithmetic, with `δ` for the density rate and `1 - δ` for the deficiency
/// drop per fixed block.
pub fn verify_partition_lemma(
    input: &SetVar,
    parts: &[DensityPart],
    delta: &BigRational,
    budget: &Budget,
) -> Result<PartitionReport> {
    check_rate(delta)?;
    let k = input.dims();
    let input_deficiency = input.total_deficiency();
    let drop_rate = Q::one() - delta;

    let mut is_partition = true;
    let mut seen: HashMap<&[u64], usize> = HashMap::new();
    for part in parts {
        for p in &part.points {
            if seen.insert(p.as_slice(), part.index).is_some() || input.points.binary_search(p).is_err() {
                is_partition = false;
            }
            if part.fixed.iter().zip(&part.value).any(|(&i, &v)| p[i] != v) {
                is_partition = false;
            }
        }
    }
    if seen.len() as u64 != input.len() {
        is_partition = false;
    }

    let mut suffix = input.len();
    let mut checks = Vec::with_capacity(parts.len());
    let mut first_violation = None;
    for part in parts {
        if part.remaining_before != suffix || part.delta != Bits::log2_ratio(input.len(), suffix.max(1)) {
            is_partition = false;
        }
        suffix = suffix.saturating_sub(part.len());
        let free: Vec<usize> = (0..k).filter(|i| !part.fixed.contains(i)).collect();
        let (density_ok, lhs) = if part.points.is_empty() {
            (false, Bits::zero())
        } else {
            let var = SetVar::with_coords(input.ambient.clone(), input.coords.clone(), part.points.clone())?;
            let rest = var.restrict(&free)?;
            (rest.is_blockwise_dense(delta, false, budget)?, rest.total_deficiency())
        };
        let fixed_bits = Bits::log2(crate::exact::q_from_big(input.ambient_product(&part.fixed), BigUint::one()));
        let delta_i = Bits::log2_ratio(input.len(), part.remaining_before.max(1));
        let rhs = &(&input_deficiency - &fixed_bits.scale(&drop_rate)) + &delta_i;
        let deficiency_ok = lhs <= rhs;
        if (!density_ok || !deficiency_ok) && first_violation.is_none() {
            first_violation = Some(part.index);
        }
        checks.push(PartCheck {
            index: part.index,
            label: part.label(&input.coords),
            size: part.len(),
            density_ok,
            deficiency_lhs: lhs,
            deficiency_rhs: rhs,
            deficiency_ok,
        });
    }
    if suffix != 0 {
        is_partition = false;
    }
    let holds = is_partition && first_violation.is_none();
    Ok(PartitionReport {
        is_partition,
        parts: checks,
        holds,
        first_violation,
    })
}

/// Draws a random nonempty subset of `[m]^k` with each point kept with
/// probability `keep`.
pub fn random_setvar(rng: &mut impl rand::Rng, m: u64, k: usize, keep: f64) -> SetVar {
    let total: u64 = m.pow(k as u32);
    loop {
        let points: Vec<Vec<u64>> = (0..total)
            .filter(|_| rng.gen_bool(keep))
            .map(|idx| (0..k).map(|i| (idx / m.pow((k - 1 - i) as u32)) % m).collect())
            .collect();
        if !points.is_empty() {
            return SetVar::new(vec![m; k], points).expect("points are in range");
        }
    }
}
