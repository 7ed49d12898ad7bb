//! Finite atomic measure spaces, lattice vectors and rearrangements.
//!
//! Everything downstream (K-functionals, relations, synthesis) is built on
//! the componentwise vector lattice over a finite measure space. Vectors are
//! immutable once constructed and cheap to clone; the measure space is shared
//! behind an `Arc`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for generic scalar comparisons.
pub const TOL: f64 = 1e-9;

/// A finite atomic measure space: `n` atoms with strictly positive masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpace {
    weights: Vec<f64>,
}

impl MeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Arc<Self>> {
        if weights.is_empty() {
            return Err(Error::Spec("measure space needs at least one atom".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(Error::Spec("atom masses must be strictly positive".into()));
        }
        Ok(Arc::new(MeasureSpace { weights }))
    }

    /// Uniform space with unit masses.
    pub fn uniform(n: usize) -> Arc<Self> {
        MeasureSpace::new(vec![1.0; n]).expect("n >= 1")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total mass of the space.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A real-valued function on a finite measure space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeVector {
    #[serde(skip, default = "default_space")]
    space: Arc<MeasureSpace>,
    values: Vec<f64>,
}

fn default_space() -> Arc<MeasureSpace> {
    MeasureSpace::uniform(1)
}

impl PartialEq for LatticeVector {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.values == other.values
    }
}

impl LatticeVector {
    pub fn new(space: &Arc<MeasureSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Dimension(format!(
                "vector has {} entries, space has {} atoms",
                values.len(),
                space.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("vector entries must be finite".into()));
        }
        Ok(LatticeVector {
            space: Arc::clone(space),
            values,
        })
    }

    pub fn zero(space: &Arc<MeasureSpace>) -> Self {
        LatticeVector {
            space: Arc::clone(space),
            values: vec![0.0; space.len()],
        }
    }

    pub fn constant(space: &Arc<MeasureSpace>, c: f64) -> Self {
        LatticeVector {
            space: Arc::clone(space),
            values: vec![c; space.len()],
        }
    }

    pub fn basis(space: &Arc<MeasureSpace>, i: usize) -> Self {
        let mut values = vec![0.0; space.len()];
        values[i] = 1.0;
        LatticeVector {
            space: Arc::clone(space),
            values,
        }
    }

    /// Rebind deserialized values to a space (serialized vectors carry only
    /// their values, per the JSON schema).
    pub fn attach(self, space: &Arc<MeasureSpace>) -> Result<Self> {
        LatticeVector::new(space, self.values)
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::Dimension(
                "vectors live on different measure spaces".into(),
            ))
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_space(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(LatticeVector {
            space: Arc::clone(&self.space),
            values,
        })
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        LatticeVector {
            space: Arc::clone(&self.space),
            values: self.values.iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    pub fn join(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|a| c * a)
    }

    /// Positive part f+ = f v 0.
    pub fn pos_part(&self) -> Self {
        self.map(|a| a.max(0.0))
    }

    /// Negative part f- = (-f) v 0, so f = f+ - f-.
    pub fn neg_part(&self) -> Self {
        self.map(|a| (-a).max(0.0))
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Componentwise clamp to [lo, hi].
    pub fn clamp(&self, lo: f64, hi: f64) -> Self {
        self.map(|a| a.clamp(lo, hi))
    }

    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v >= -tol)
    }

    /// Componentwise `self <= other` up to tolerance.
    pub fn le(&self, other: &Self, tol: f64) -> bool {
        self.space == other.space
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(&a, &b)| a <= b + tol)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v.abs() <= tol)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Integral against the measure: sum mu_i f_i.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.space.weights())
            .map(|(&v, &w)| v * w)
            .sum()
    }

    /// Inner product of raw coordinates (no weights); pairing with dual
    /// functionals.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.same_space(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    /// Decreasing rearrangement of |f| as a step function on [0, mu(Omega)].
    ///
    /// Atoms are sorted by |f| descending, ties broken by ascending atom
    /// index so the permutation is deterministic. Zero levels are dropped.
    pub fn rearrange(&self) -> StepFunction {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&i, &j| {
            self.values[j]
                .abs()
                .partial_cmp(&self.values[i].abs())
                .unwrap()
                .then(i.cmp(&j))
        });
        let mut breakpoints = Vec::new();
        let mut levels = Vec::new();
        let mut pos = 0.0;
        for &i in &order {
            let level = self.values[i].abs();
            if level == 0.0 {
                break;
            }
            let width = self.space.weight(i);
            // Merge runs of equal levels into one interval.
            if levels.last() == Some(&level) {
                pos += width;
                *breakpoints.last_mut().unwrap() = pos;
            } else {
                pos += width;
                breakpoints.push(pos);
                levels.push(level);
            }
        }
        StepFunction { breakpoints, levels }
    }

    /// Second rearrangement f**(t) = (1/t) * integral of f* over [0, t].
    pub fn double_star(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("double_star needs t > 0, got {t}")));
        }
        Ok(self.rearrange().integral_to(t) / t)
    }
}

/// The decreasing rearrangement f*: a right-continuous nonincreasing step
/// function. `breakpoints[k]` is the right endpoint of the k-th interval,
/// `levels[k]` its value; the function vanishes past the last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl StepFunction {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_zero(&self) -> bool {
        self.levels.is_empty()
    }

    /// Value at s, right-continuous: f*(s) = inf { l : d(l) <= s }.
    pub fn value_at(&self, s: f64) -> f64 {
        if s < 0.0 {
            return self.levels.first().copied().unwrap_or(0.0);
        }
        for (bp, level) in self.breakpoints.iter().zip(&self.levels) {
            if s < *bp {
                return *level;
            }
        }
        0.0
    }

    /// Exact integral over [0, t].
    pub fn integral_to(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut left = 0.0;
        for (bp, level) in self.breakpoints.iter().zip(&self.levels) {
            if t <= left {
                break;
            }
            let right = bp.min(t);
            acc += level * (right - left);
            left = *bp;
        }
        acc
    }

    /// Total integral, equal to the L1(mu) norm of the source vector.
    pub fn total_integral(&self) -> f64 {
        let mut acc = 0.0;
        let mut left = 0.0;
        for (bp, level) in self.breakpoints.iter().zip(&self.levels) {
            acc += level * (bp - left);
            left = *bp;
        }
        acc
    }

    /// Pointwise domination `self(s) <= other(s)` for all s (checked at the
    /// union of breakpoints; both functions are constant in between).
    pub fn dominated_by(&self, other: &StepFunction, tol: f64) -> bool {
        let mut probes: Vec<f64> = Vec::new();
        probes.push(0.0);
        probes.extend_from_slice(&self.breakpoints);
        probes.extend_from_slice(&other.breakpoints);
        probes.iter().all(|&s| {
            // Evaluate just inside each interval's left edge.
            self.value_at(s) <= other.value_at(s) + tol
        })
    }
}

/// Binary and unary lattice operations, dispatchable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeOp {
    Meet,
    Join,
    Pos,
    Neg,
    Abs,
    Plus,
    Minus,
    Scale,
}

/// Componentwise realization of the lattice symbols. `Pos`, `Neg`, `Abs`
/// ignore `g`; `Scale` reads the factor from `g`'s first entry.
pub fn lattice_eval(
    f: &LatticeVector,
    g: Option<&LatticeVector>,
    op: LatticeOp,
) -> Result<LatticeVector> {
    let need_g = || g.ok_or_else(|| Error::Input(format!("{op:?} needs a second operand")));
    match op {
        LatticeOp::Meet => f.meet(need_g()?),
        LatticeOp::Join => f.join(need_g()?),
        LatticeOp::Plus => f.add(need_g()?),
        LatticeOp::Minus => f.sub(need_g()?),
        LatticeOp::Scale => Ok(f.scale(need_g()?.get(0))),
        LatticeOp::Pos => Ok(f.pos_part()),
        LatticeOp::Neg => Ok(f.neg_part()),
        LatticeOp::Abs => Ok(f.abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_on(space: &Arc<MeasureSpace>, v: &[f64]) -> LatticeVector {
        LatticeVector::new(space, v.to_vec()).unwrap()
    }

    #[test]
    fn parts_and_lattice_ops() {
        let s = MeasureSpace::uniform(2);
        let f = vec_on(&s, &[1.0, -2.0]);
        assert_eq!(f.pos_part().values(), &[1.0, 0.0]);
        assert_eq!(f.neg_part().values(), &[0.0, 2.0]);
        // f = f+ - f- with disjoint parts, exactly.
        let diff = f.pos_part().sub(&f.neg_part()).unwrap();
        assert_eq!(diff.values(), f.values());
        assert!(f.pos_part().meet(&f.neg_part()).unwrap().is_zero(0.0));

        let s3 = MeasureSpace::uniform(3);
        let a = vec_on(&s3, &[2.0, 0.0, 3.0]);
        let b = vec_on(&s3, &[1.0, 5.0, 0.0]);
        assert_eq!(a.meet(&b).unwrap().values(), &[1.0, 0.0, 0.0]);
        assert_eq!(vec_on(&s3, &[3.0, -1.0, 2.0]).abs().values(), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn mismatched_spaces_error() {
        let s2 = MeasureSpace::uniform(2);
        let s3 = MeasureSpace::uniform(3);
        let f = vec_on(&s2, &[1.0, 2.0]);
        let g = vec_on(&s3, &[1.0, 2.0, 3.0]);
        assert!(matches!(f.add(&g), Err(Error::Dimension(_))));
    }

    #[test]
    fn rearrangement_examples() {
        let s = MeasureSpace::uniform(3);
        let f = vec_on(&s, &[3.0, -1.0, 2.0]);
        let r = f.rearrange();
        assert_eq!(r.levels(), &[3.0, 2.0, 1.0]);
        assert_eq!(r.breakpoints(), &[1.0, 2.0, 3.0]);

        let s2 = MeasureSpace::new(vec![2.0, 1.0]).unwrap();
        let g = vec_on(&s2, &[1.0, 5.0]);
        let r = g.rearrange();
        assert_eq!(r.levels(), &[5.0, 1.0]);
        assert_eq!(r.breakpoints(), &[1.0, 3.0]);

        assert!(LatticeVector::zero(&s).rearrange().is_zero());
    }

    #[test]
    fn rearrangement_is_equimeasurable() {
        // integral of f* equals the L1(mu) norm, including tied levels.
        let s = MeasureSpace::new(vec![0.5, 2.0, 1.0, 1.5]).unwrap();
        let f = vec_on(&s, &[2.0, -2.0, 0.5, 0.0]);
        let r = f.rearrange();
        let l1: f64 = f.abs().integral();
        assert!((r.total_integral() - l1).abs() < 1e-12);
        assert_eq!(r.levels().len(), 2); // tied 2.0 levels merged
    }

    #[test]
    fn double_star_examples() {
        let s = MeasureSpace::uniform(3);
        let f = vec_on(&s, &[3.0, -1.0, 2.0]);
        assert!((f.double_star(2.0).unwrap() - 2.5).abs() < 1e-12);
        assert!((f.double_star(3.0).unwrap() - 2.0).abs() < 1e-12);
        let c = LatticeVector::constant(&s, 1.25);
        assert!((c.double_star(1.7).unwrap() - 1.25).abs() < 1e-12);
        assert!(f.double_star(0.0).is_err());
    }
}
