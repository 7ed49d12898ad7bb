//! Norms with polyhedral dual descriptions, and interpolation couples.
//!
//! A polyhedral-representable norm carries a finite, sign-symmetric set of
//! supporting functionals D with `norm(f) = max_{y in D} <y, f>`. That dual
//! description is what makes K-functionals, operator norms and synthesis LPs
//! exact. The only built-in non-polyhedral norm is the weighted p-norm for
//! p strictly between 1 and infinity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::space::{LatticeVector, MeasureSpace};

/// A norm on a fixed finite measure space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum NormSpec {
    /// Sum of mu_i |f_i|.
    WeightedL1,
    /// Max of |f_i| (the essential sup; weights play no role).
    LInfinity,
    /// (Sum of mu_i |f_i|^p)^(1/p) for p in (1, infinity). Not polyhedral.
    WeightedLp { p: f64 },
    /// Sum of v_k times the k-th largest |f_i| (counting measure), with v
    /// nonincreasing and nonnegative.
    Lorentz { weights: Vec<f64> },
    /// On R^2: |x1| + |x2| when x1 x2 >= 0, else max(|x1|, |x2|).
    PartitionedN1,
    /// On R^2: max(|x1|, |x2|) when x1 x2 >= 0, else |x1| + |x2|.
    PartitionedN2,
    /// max(f+) + max(f-): a norm on the sup-norm scale that is not a
    /// lattice norm.
    SumOfPartsLInf,
    /// max(|f+|_L1(mu), |f-|_L1(mu)): the L1-scale companion.
    MaxOfPartsL1,
    /// Explicit finite functional description, sign-symmetric.
    Polyhedral {
        functionals: Vec<Vec<f64>>,
        #[serde(default)]
        is_lattice_norm: bool,
    },
}

impl NormSpec {
    /// Whether the norm is monotone on absolute values. Declared per kind;
    /// the test suite spot-verifies the declarations.
    pub fn is_lattice_norm(&self) -> bool {
        match self {
            NormSpec::WeightedL1
            | NormSpec::LInfinity
            | NormSpec::WeightedLp { .. }
            | NormSpec::Lorentz { .. } => true,
            NormSpec::PartitionedN1
            | NormSpec::PartitionedN2
            | NormSpec::SumOfPartsLInf
            | NormSpec::MaxOfPartsL1 => false,
            NormSpec::Polyhedral { is_lattice_norm, .. } => *is_lattice_norm,
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        !matches!(self, NormSpec::WeightedLp { .. })
    }

    /// Check the spec against a concrete space.
    pub fn validate(&self, space: &MeasureSpace) -> Result<()> {
        match self {
            NormSpec::WeightedL1 | NormSpec::LInfinity => Ok(()),
            NormSpec::WeightedLp { p } => {
                if *p > 1.0 && p.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Spec(format!("weighted p-norm needs p in (1, inf), got {p}")))
                }
            }
            NormSpec::Lorentz { weights } => {
                if weights.len() != space.len() {
                    return Err(Error::Spec(format!(
                        "Lorentz weights have length {}, space has {} atoms",
                        weights.len(),
                        space.len()
                    )));
                }
                if weights.windows(2).any(|w| w[1] > w[0] + 1e-15) {
                    return Err(Error::Spec("Lorentz weights must be nonincreasing".into()));
                }
                if weights.is_empty() || weights[0] <= 0.0 || weights.iter().any(|&w| w < 0.0) {
                    return Err(Error::Spec(
                        "Lorentz weights must be nonnegative with a positive leading weight".into(),
                    ));
                }
                Ok(())
            }
            NormSpec::PartitionedN1 | NormSpec::PartitionedN2 => {
                if space.len() == 2 {
                    Ok(())
                } else {
                    Err(Error::Spec("partitioned norms are defined on two atoms".into()))
                }
            }
            NormSpec::SumOfPartsLInf | NormSpec::MaxOfPartsL1 => Ok(()),
            NormSpec::Polyhedral { functionals, .. } => {
                if functionals.is_empty() {
                    return Err(Error::Spec("polyhedral norm needs functionals".into()));
                }
                if functionals.iter().any(|y| y.len() != space.len()) {
                    return Err(Error::Spec("functional dimension mismatch".into()));
                }
                // Sign symmetry: every functional must have its negation in
                // the set, otherwise homogeneity fails on -f.
                for y in functionals {
                    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
                    let found = functionals.iter().any(|z| {
                        z.iter().zip(&neg).all(|(&a, &b)| (a - b).abs() <= 1e-12)
                    });
                    if !found {
                        return Err(Error::Spec(
                            "polyhedral functional set is not sign-symmetric".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Exact norm evaluation.
    pub fn evaluate(&self, f: &LatticeVector) -> Result<f64> {
        self.validate(f.space())?;
        let v = f.values();
        Ok(match self {
            NormSpec::WeightedL1 => f.abs().integral(),
            NormSpec::LInfinity => f.sup_norm(),
            NormSpec::WeightedLp { p } => {
                let s: f64 = v
                    .iter()
                    .zip(f.space().weights())
                    .map(|(&x, &w)| w * x.abs().powf(*p))
                    .sum();
                s.powf(1.0 / p)
            }
            NormSpec::Lorentz { weights } => {
                let mut sorted: Vec<f64> = v.iter().map(|x| x.abs()).collect();
                sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
                sorted.iter().zip(weights).map(|(&x, &w)| w * x).sum()
            }
            NormSpec::PartitionedN1 => {
                if v[0] * v[1] >= 0.0 {
                    v[0].abs() + v[1].abs()
                } else {
                    v[0].abs().max(v[1].abs())
                }
            }
            NormSpec::PartitionedN2 => {
                if v[0] * v[1] >= 0.0 {
                    v[0].abs().max(v[1].abs())
                } else {
                    v[0].abs() + v[1].abs()
                }
            }
            NormSpec::SumOfPartsLInf => f.pos_part().sup_norm() + f.neg_part().sup_norm(),
            NormSpec::MaxOfPartsL1 => f.pos_part().integral().max(f.neg_part().integral()),
            NormSpec::Polyhedral { functionals, .. } => functionals
                .iter()
                .map(|y| y.iter().zip(v).map(|(&a, &b)| a * b).sum())
                .fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Finite supporting set D with `norm(f) = max_{y in D} <y, f>`.
    ///
    /// Errors with `Unsupported` for the weighted p-norm; callers fall back
    /// to convex descent there.
    pub fn dual_functionals(&self, space: &Arc<MeasureSpace>) -> Result<Vec<LatticeVector>> {
        self.validate(space)?;
        let n = space.len();
        let raw: Vec<Vec<f64>> = match self {
            NormSpec::WeightedL1 => sign_patterns(n)
                .into_iter()
                .map(|s| {
                    s.iter()
                        .zip(space.weights())
                        .map(|(&sg, &w)| sg * w)
                        .collect()
                })
                .collect(),
            NormSpec::LInfinity => signed_basis(n),
            NormSpec::WeightedLp { .. } => {
                return Err(Error::Unsupported(
                    "weighted p-norms have no finite dual description".into(),
                ))
            }
            NormSpec::Lorentz { weights } => lorentz_functionals(weights),
            NormSpec::PartitionedN1 => vec![
                vec![1.0, 1.0],
                vec![-1.0, -1.0],
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            NormSpec::PartitionedN2 => vec![
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            NormSpec::SumOfPartsLInf => {
                let mut out = signed_basis(n);
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            let mut y = vec![0.0; n];
                            y[i] = 1.0;
                            y[j] = -1.0;
                            out.push(y);
                        }
                    }
                }
                out
            }
            NormSpec::MaxOfPartsL1 => {
                let mut out = Vec::new();
                for mask in 1u32..(1 << n) {
                    for sign in [1.0, -1.0] {
                        let y: Vec<f64> = (0..n)
                            .map(|i| {
                                if mask & (1 << i) != 0 {
                                    sign * space.weight(i)
                                } else {
                                    0.0
                                }
                            })
                            .collect();
                        out.push(y);
                    }
                }
                out
            }
            NormSpec::Polyhedral { functionals, .. } => functionals.clone(),
        };
        raw.into_iter()
            .map(|y| LatticeVector::new(space, y))
            .collect()
    }

    /// Vertices of the unit ball. Exact for every polyhedral kind; closed
    /// forms where available, otherwise brute-force enumeration over facet
    /// subsets (small spaces only).
    pub fn unit_ball_vertices(&self, space: &Arc<MeasureSpace>) -> Result<Vec<LatticeVector>> {
        self.validate(space)?;
        let n = space.len();
        let raw: Vec<Vec<f64>> = match self {
            NormSpec::WeightedL1 => {
                let mut out = Vec::new();
                for i in 0..n {
                    for sign in [1.0, -1.0] {
                        let mut x = vec![0.0; n];
                        x[i] = sign / space.weight(i);
                        out.push(x);
                    }
                }
                out
            }
            NormSpec::LInfinity => sign_patterns(n),
            NormSpec::WeightedLp { .. } => {
                return Err(Error::Unsupported(
                    "weighted p-norm unit ball is not a polytope".into(),
                ))
            }
            NormSpec::PartitionedN1 => vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![-1.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
                vec![1.0, -1.0],
            ],
            NormSpec::PartitionedN2 => vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
                vec![-1.0, -1.0],
            ],
            NormSpec::SumOfPartsLInf => {
                let mut out = Vec::new();
                for mask in 1u32..(1 << n) {
                    for sign in [1.0, -1.0] {
                        let x: Vec<f64> = (0..n)
                            .map(|i| if mask & (1 << i) != 0 { sign } else { 0.0 })
                            .collect();
                        out.push(x);
                    }
                }
                out
            }
            NormSpec::MaxOfPartsL1 => {
                let mut out = Vec::new();
                for i in 0..n {
                    for sign in [1.0, -1.0] {
                        let mut x = vec![0.0; n];
                        x[i] = sign / space.weight(i);
                        out.push(x);
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            let mut x = vec![0.0; n];
                            x[i] = 1.0 / space.weight(i);
                            x[j] = -1.0 / space.weight(j);
                            out.push(x);
                        }
                    }
                }
                out
            }
            NormSpec::Lorentz { .. } | NormSpec::Polyhedral { .. } => {
                let functionals = self.dual_functionals(space)?;
                return brute_force_vertices(self, space, &functionals);
            }
        };
        raw.into_iter()
            .map(|x| LatticeVector::new(space, x))
            .collect()
    }
}

fn sign_patterns(n: usize) -> Vec<Vec<f64>> {
    (0u32..(1 << n))
        .map(|mask| {
            (0..n)
                .map(|i| if mask & (1 << i) != 0 { -1.0 } else { 1.0 })
                .collect()
        })
        .collect()
}

fn signed_basis(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut y = vec![0.0; n];
            y[i] = sign;
            out.push(y);
        }
    }
    out
}

/// All distinct permutations of the Lorentz weights with all sign choices on
/// nonzero entries. By the rearrangement inequality the maximum over this
/// set reproduces the Lorentz norm.
fn lorentz_functionals(weights: &[f64]) -> Vec<Vec<f64>> {
    let mut perms: Vec<Vec<f64>> = Vec::new();
    let mut current = weights.to_vec();
    permutations(&mut current, 0, &mut perms);
    perms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    perms.dedup();
    let mut out = Vec::new();
    for perm in perms {
        let nonzero: Vec<usize> = (0..perm.len()).filter(|&i| perm[i] != 0.0).collect();
        for mask in 0u32..(1 << nonzero.len()) {
            let mut y = perm.clone();
            for (bit, &idx) in nonzero.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    y[idx] = -y[idx];
                }
            }
            out.push(y);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

fn permutations(values: &mut Vec<f64>, k: usize, out: &mut Vec<Vec<f64>>) {
    if k == values.len() {
        out.push(values.clone());
        return;
    }
    for i in k..values.len() {
        values.swap(k, i);
        permutations(values, k + 1, out);
        values.swap(k, i);
    }
}

/// Vertex enumeration for a polytope given by facets <y, x> <= 1: solve each
/// n-subset of active facets and keep feasible solutions. Exponential in
/// general; guarded for desk-scale inputs.
fn brute_force_vertices(
    norm: &NormSpec,
    space: &Arc<MeasureSpace>,
    functionals: &[LatticeVector],
) -> Result<Vec<LatticeVector>> {
    let n = space.len();
    let m = functionals.len();
    let combos = binomial(m, n);
    if combos > 2_000_000 {
        return Err(Error::Unsupported(format!(
            "vertex enumeration over {m} facets in dimension {n} is too large"
        )));
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let rows: Vec<Vec<f64>> = subset
            .iter()
            .map(|&i| functionals[i].values().to_vec())
            .collect();
        if let Ok(matrix) = Matrix::from_rows(rows) {
            if let Ok(x) = matrix.solve(&vec![1.0; n]) {
                let candidate = LatticeVector::new(space, x.clone())?;
                let value = norm.evaluate(&candidate)?;
                if (value - 1.0).abs() <= 1e-9 {
                    let is_new = vertices
                        .iter()
                        .all(|v| v.iter().zip(&x).any(|(&a, &b)| (a - b).abs() > 1e-9));
                    if is_new {
                        vertices.push(x);
                    }
                }
            }
        }
        // next n-combination of m
        let mut i = n;
        loop {
            if i == 0 {
                return vertices
                    .into_iter()
                    .map(|x| LatticeVector::new(space, x))
                    .collect();
            }
            i -= 1;
            if subset[i] != i + m - n {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(m: usize, k: usize) -> u64 {
    if k > m {
        return 0;
    }
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((m - i) as u64) / (i as u64 + 1);
    }
    acc
}

/// An interpolation couple of compatible Banach lattices over one space.
/// Both endpoint norms must be lattice norms; that makes the endpoints
/// order ideals in their sum automatically in finite dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Couple {
    space: Arc<MeasureSpace>,
    x0: NormSpec,
    x1: NormSpec,
}

impl Couple {
    pub fn new(space: &Arc<MeasureSpace>, x0: NormSpec, x1: NormSpec) -> Result<Self> {
        x0.validate(space)?;
        x1.validate(space)?;
        if !x0.is_lattice_norm() || !x1.is_lattice_norm() {
            return Err(Error::Spec(
                "couple endpoints must be lattice norms".into(),
            ));
        }
        Ok(Couple {
            space: Arc::clone(space),
            x0,
            x1,
        })
    }

    /// The (L1(mu), LInfinity) couple, where everything has a fast exact path.
    pub fn l1_linf(space: &Arc<MeasureSpace>) -> Self {
        Couple {
            space: Arc::clone(space),
            x0: NormSpec::WeightedL1,
            x1: NormSpec::LInfinity,
        }
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn x0(&self) -> &NormSpec {
        &self.x0
    }

    pub fn x1(&self) -> &NormSpec {
        &self.x1
    }

    pub fn is_l1_linf(&self) -> bool {
        self.x0 == NormSpec::WeightedL1 && self.x1 == NormSpec::LInfinity
    }

    pub fn is_polyhedral(&self) -> bool {
        self.x0.is_polyhedral() && self.x1.is_polyhedral()
    }

    /// Whether the couple is known to be an exact Calderon-Mityagin couple
    /// with respect to positive operators: the (L1, LInf) couple and couples
    /// of weighted p-norms.
    pub fn is_cm_positive(&self) -> bool {
        let lp_like = |n: &NormSpec| {
            matches!(n, NormSpec::WeightedL1 | NormSpec::WeightedLp { .. })
        };
        self.is_l1_linf()
            || (lp_like(&self.x0) && lp_like(&self.x1))
            || (self.x0 == NormSpec::LInfinity && lp_like(&self.x1))
            || (lp_like(&self.x0) && self.x1 == NormSpec::LInfinity)
    }

    /// Norm of the intersection space: sum of the endpoint norms.
    pub fn intersection_norm(&self, f: &LatticeVector) -> Result<f64> {
        Ok(self.x0.evaluate(f)? + self.x1.evaluate(f)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MeasureSpace;

    fn vec_on(space: &Arc<MeasureSpace>, v: &[f64]) -> LatticeVector {
        LatticeVector::new(space, v.to_vec()).unwrap()
    }

    #[test]
    fn partitioned_norm_values() {
        let s = MeasureSpace::uniform(2);
        let n1 = NormSpec::PartitionedN1;
        let n2 = NormSpec::PartitionedN2;
        assert_eq!(n1.evaluate(&vec_on(&s, &[1.0, -1.0])).unwrap(), 1.0);
        assert_eq!(n1.evaluate(&vec_on(&s, &[1.0, 1.0])).unwrap(), 2.0);
        assert_eq!(n2.evaluate(&vec_on(&s, &[1.0, -1.0])).unwrap(), 2.0);
        assert_eq!(n2.evaluate(&vec_on(&s, &[1.0, 1.0])).unwrap(), 1.0);
        // Not lattice norms: the norm of |f| differs from the norm of f.
        assert!(!n1.is_lattice_norm());
        assert!(!n2.is_lattice_norm());
    }

    #[test]
    fn lorentz_norm_and_functionals() {
        let s = MeasureSpace::uniform(3);
        let lor = NormSpec::Lorentz {
            weights: vec![1.0, 1.0, 0.0],
        };
        let f = vec_on(&s, &[3.0, -1.0, 2.0]);
        assert_eq!(lor.evaluate(&f).unwrap(), 5.0);
        let d = lor.dual_functionals(&s).unwrap();
        assert_eq!(d.len(), 12);
        let best = d
            .iter()
            .map(|y| y.dot(&f).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - 5.0).abs() < 1e-12);

        let bad = NormSpec::Lorentz {
            weights: vec![0.0, 1.0, 1.0],
        };
        assert!(matches!(bad.validate(&s), Err(Error::Spec(_))));
    }

    #[test]
    fn dual_functional_counts() {
        let s2 = MeasureSpace::uniform(2);
        let d = NormSpec::LInfinity.dual_functionals(&s2).unwrap();
        assert_eq!(d.len(), 4);

        let sw = MeasureSpace::new(vec![2.0, 1.0]).unwrap();
        let d1 = NormSpec::WeightedL1.dual_functionals(&sw).unwrap();
        assert_eq!(d1.len(), 4);
        let f = vec_on(&sw, &[0.5, -2.0]);
        let best = d1
            .iter()
            .map(|y| y.dot(&f).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - NormSpec::WeightedL1.evaluate(&f).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lorentz_ball_vertices() {
        let s = MeasureSpace::uniform(3);
        let lor = NormSpec::Lorentz {
            weights: vec![1.0, 1.0, 0.0],
        };
        let verts = lor.unit_ball_vertices(&s).unwrap();
        // +-e_i plus the 8 corners at height 1/2.
        assert_eq!(verts.len(), 14);
        for v in &verts {
            assert!((lor.evaluate(v).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn couple_requires_lattice_endpoints() {
        let s = MeasureSpace::uniform(2);
        assert!(Couple::new(&s, NormSpec::PartitionedN1, NormSpec::LInfinity).is_err());
        let c = Couple::l1_linf(&s);
        assert!(c.is_l1_linf() && c.is_cm_positive() && c.is_polyhedral());
    }

    #[test]
    fn remark_norms_collapse_to_partitioned_on_two_atoms() {
        // On a uniform two-atom space the L1/LInf "parts" norms reproduce
        // the partitioned norms exactly.
        let s = MeasureSpace::uniform(2);
        for (a, b) in [(0.7, 0.3), (1.0, -1.0), (-2.0, 0.5), (0.0, 0.0), (3.0, 3.0)] {
            let f = vec_on(&s, &[a, b]);
            let n1 = NormSpec::PartitionedN1.evaluate(&f).unwrap();
            let m1 = NormSpec::MaxOfPartsL1.evaluate(&f).unwrap();
            assert!((n1 - m1).abs() < 1e-12);
            let n2 = NormSpec::PartitionedN2.evaluate(&f).unwrap();
            let m2 = NormSpec::SumOfPartsLInf.evaluate(&f).unwrap();
            assert!((n2 - m2).abs() < 1e-12);
        }
    }
}
