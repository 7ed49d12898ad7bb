//! Operator representation and certification.
//!
//! Linear operators get exact couple norms by vertex enumeration over the
//! polyhedral unit balls. Black-box operators are certified sample-wise
//! against the K-curve characterizations: refutations are sound (the witness
//! re-checks independently), certification is complete only over the checked
//! sample set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kfunc::{check_relation_scaled, RelationKind};
use crate::matrix::Matrix;
use crate::norm::{Couple, NormSpec};
use crate::space::LatticeVector;

/// Domains for possibly nonlinear operators. `SolidLatticeHull` is the order
/// ideal generated by its generators: all h with |h| <= sup of the |g|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum DomainDescriptor {
    All,
    FiniteSet { points: Vec<Vec<f64>> },
    OrderInterval { lower: Vec<f64>, upper: Vec<f64> },
    SolidLatticeHull { generators: Vec<Vec<f64>> },
}

impl DomainDescriptor {
    pub fn contains(&self, f: &LatticeVector) -> bool {
        let tol = 1e-9;
        match self {
            DomainDescriptor::All => true,
            DomainDescriptor::FiniteSet { points } => points.iter().any(|p| {
                p.len() == f.len()
                    && p.iter().zip(f.values()).all(|(&a, &b)| (a - b).abs() <= tol)
            }),
            DomainDescriptor::OrderInterval { lower, upper } => {
                f.values().iter().zip(lower).all(|(&v, &l)| v >= l - tol)
                    && f.values().iter().zip(upper).all(|(&v, &u)| v <= u + tol)
            }
            DomainDescriptor::SolidLatticeHull { .. } => {
                let bound = self.hull_bound(f.len());
                f.values()
                    .iter()
                    .zip(&bound)
                    .all(|(&v, &b)| v.abs() <= b + tol)
            }
        }
    }

    fn hull_bound(&self, n: usize) -> Vec<f64> {
        match self {
            DomainDescriptor::SolidLatticeHull { generators } => {
                let mut bound = vec![0.0; n];
                for g in generators {
                    for (b, &v) in bound.iter_mut().zip(g) {
                        *b = f64::max(*b, v.abs());
                    }
                }
                bound
            }
            _ => vec![f64::INFINITY; n],
        }
    }

    pub fn contains_zero(&self, n: usize) -> bool {
        match self {
            DomainDescriptor::All | DomainDescriptor::SolidLatticeHull { .. } => true,
            DomainDescriptor::FiniteSet { points } => points
                .iter()
                .any(|p| p.iter().all(|&a| a.abs() <= 1e-9)),
            DomainDescriptor::OrderInterval { lower, upper } => {
                let _ = n;
                lower.iter().all(|&l| l <= 1e-9) && upper.iter().all(|&u| u >= -1e-9)
            }
        }
    }

    /// Closed under meet/join and two-sided domination. Order intervals and
    /// solid hulls qualify by construction; finite sets do not in general.
    pub fn is_solid_lattice(&self) -> bool {
        matches!(
            self,
            DomainDescriptor::All
                | DomainDescriptor::OrderInterval { .. }
                | DomainDescriptor::SolidLatticeHull { .. }
        )
    }

    /// The set { f : f + anchor in self }.
    pub fn shift_back(&self, anchor: &LatticeVector) -> DomainDescriptor {
        let a = anchor.values();
        let minus = |p: &[f64]| -> Vec<f64> { p.iter().zip(a).map(|(&x, &s)| x - s).collect() };
        match self {
            DomainDescriptor::All => DomainDescriptor::All,
            DomainDescriptor::FiniteSet { points } => DomainDescriptor::FiniteSet {
                points: points.iter().map(|p| minus(p)).collect(),
            },
            DomainDescriptor::OrderInterval { lower, upper } => DomainDescriptor::OrderInterval {
                lower: minus(lower),
                upper: minus(upper),
            },
            DomainDescriptor::SolidLatticeHull { .. } => {
                let bound = self.hull_bound(a.len());
                DomainDescriptor::OrderInterval {
                    lower: bound.iter().zip(a).map(|(&b, &s)| -b - s).collect(),
                    upper: bound.iter().zip(a).map(|(&b, &s)| b - s).collect(),
                }
            }
        }
    }
}

/// Componentwise scalar maps used by the built-in black boxes. All of them
/// are nondecreasing and 1-Lipschitz with phi(0) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PhiKind {
    SoftThreshold { tau: f64 },
    Saturate { cap: f64 },
    Tanh,
    LinearRamp { slope: f64 },
}

impl PhiKind {
    fn eval(&self, x: f64) -> f64 {
        match self {
            PhiKind::SoftThreshold { tau } => x.signum() * (x.abs() - tau).max(0.0),
            PhiKind::Saturate { cap } => x.clamp(-cap, *cap),
            PhiKind::Tanh => x.tanh(),
            PhiKind::LinearRamp { slope } => slope.clamp(0.0, 1.0) * x,
        }
    }
}

/// The built-in black-box registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum MapKind {
    /// f |-> (f v lo) ^ hi componentwise; omitted bounds are infinite.
    Clamp { lo: Option<f64>, hi: Option<f64> },
    PositivePart,
    /// f |-> f + offset * 1.
    Shift { offset: f64 },
    /// Componentwise nondecreasing 1-Lipschitz map with phi(0) = 0.
    Phi { phi: PhiKind },
    Negate,
    Zero,
    Scale { factor: f64 },
    /// S~f = S(f + anchor) - S(anchor).
    Renormalized { base: Box<MapKind>, anchor: Vec<f64> },
}

impl MapKind {
    pub fn eval(&self, f: &LatticeVector) -> Result<LatticeVector> {
        match self {
            MapKind::Clamp { lo, hi } => Ok(f.clamp(
                lo.unwrap_or(f64::NEG_INFINITY),
                hi.unwrap_or(f64::INFINITY),
            )),
            MapKind::PositivePart => Ok(f.pos_part()),
            MapKind::Shift { offset } => f.add(&LatticeVector::constant(f.space(), *offset)),
            MapKind::Phi { phi } => {
                LatticeVector::new(f.space(), f.values().iter().map(|&x| phi.eval(x)).collect())
            }
            MapKind::Negate => Ok(f.scale(-1.0)),
            MapKind::Zero => Ok(LatticeVector::zero(f.space())),
            MapKind::Scale { factor } => Ok(f.scale(*factor)),
            MapKind::Renormalized { base, anchor } => {
                let a = LatticeVector::new(f.space(), anchor.clone())?;
                base.eval(&f.add(&a)?)?.sub(&base.eval(&a)?)
            }
        }
    }

    /// Conservative structural flags known from the construction.
    pub fn default_flags(&self) -> DeclaredFlags {
        match self {
            MapKind::Clamp { lo, hi } => DeclaredFlags {
                order_preserving: true,
                subadditive: false,
                lipschitz_constant: Some(1.0),
                normalized: lo.unwrap_or(f64::NEG_INFINITY) <= 0.0
                    && hi.unwrap_or(f64::INFINITY) >= 0.0,
            },
            MapKind::PositivePart => DeclaredFlags {
                order_preserving: true,
                subadditive: true,
                lipschitz_constant: Some(1.0),
                normalized: true,
            },
            MapKind::Shift { offset } => DeclaredFlags {
                order_preserving: true,
                subadditive: false,
                lipschitz_constant: Some(1.0),
                normalized: *offset == 0.0,
            },
            MapKind::Phi { .. } => DeclaredFlags {
                order_preserving: true,
                subadditive: false,
                lipschitz_constant: Some(1.0),
                normalized: true,
            },
            MapKind::Negate => DeclaredFlags {
                order_preserving: false,
                subadditive: true,
                lipschitz_constant: Some(1.0),
                normalized: true,
            },
            MapKind::Zero => DeclaredFlags {
                order_preserving: true,
                subadditive: true,
                lipschitz_constant: Some(0.0),
                normalized: true,
            },
            MapKind::Scale { factor } => DeclaredFlags {
                order_preserving: *factor >= 0.0,
                subadditive: true,
                lipschitz_constant: Some(factor.abs()),
                normalized: true,
            },
            MapKind::Renormalized { base, .. } => {
                let inner = base.default_flags();
                DeclaredFlags {
                    order_preserving: inner.order_preserving,
                    subadditive: false,
                    lipschitz_constant: inner.lipschitz_constant,
                    normalized: true,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeclaredFlags {
    pub order_preserving: bool,
    pub subadditive: bool,
    pub lipschitz_constant: Option<f64>,
    pub normalized: bool,
}

/// A linear operator (matrix) or a black-box map with a declared domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "camelCase")]
pub enum OperatorSpec {
    Linear {
        matrix: Matrix,
    },
    BlackBox {
        map: MapKind,
        domain: DomainDescriptor,
        declared: DeclaredFlags,
    },
}

impl OperatorSpec {
    pub fn linear(matrix: Matrix) -> Self {
        OperatorSpec::Linear { matrix }
    }

    pub fn builtin(map: MapKind) -> Self {
        let declared = map.default_flags();
        OperatorSpec::BlackBox {
            map,
            domain: DomainDescriptor::All,
            declared,
        }
    }

    pub fn builtin_on(map: MapKind, domain: DomainDescriptor) -> Self {
        let declared = map.default_flags();
        OperatorSpec::BlackBox {
            map,
            domain,
            declared,
        }
    }

    pub fn domain(&self) -> DomainDescriptor {
        match self {
            OperatorSpec::Linear { .. } => DomainDescriptor::All,
            OperatorSpec::BlackBox { domain, .. } => domain.clone(),
        }
    }

    pub fn declared(&self) -> DeclaredFlags {
        match self {
            OperatorSpec::Linear { matrix } => DeclaredFlags {
                order_preserving: matrix.min_entry() >= 0.0,
                subadditive: true,
                lipschitz_constant: None,
                normalized: true,
            },
            OperatorSpec::BlackBox { declared, .. } => *declared,
        }
    }

    pub fn apply(&self, f: &LatticeVector) -> Result<LatticeVector> {
        match self {
            OperatorSpec::Linear { matrix } => matrix.apply_vector(f),
            OperatorSpec::BlackBox { map, domain, .. } => {
                if !domain.contains(f) {
                    return Err(Error::Domain(
                        "operator applied outside its declared domain".into(),
                    ));
                }
                map.eval(f)
            }
        }
    }
}

/// Renormalization: S~f = S(f + anchor) - S(anchor), with the domain shifted
/// accordingly. Order preservation and Lipschitz constants carry over;
/// linear operators are unchanged.
pub fn renormalize(op: &OperatorSpec, anchor: &LatticeVector) -> Result<OperatorSpec> {
    match op {
        OperatorSpec::Linear { .. } => Ok(op.clone()),
        OperatorSpec::BlackBox {
            map,
            domain,
            declared,
        } => {
            if !domain.contains(anchor) {
                return Err(Error::Domain("anchor lies outside the domain".into()));
            }
            Ok(OperatorSpec::BlackBox {
                map: MapKind::Renormalized {
                    base: Box::new(map.clone()),
                    anchor: anchor.values().to_vec(),
                },
                domain: domain.shift_back(anchor),
                declared: DeclaredFlags {
                    order_preserving: declared.order_preserving,
                    subadditive: false,
                    lipschitz_constant: declared.lipschitz_constant,
                    normalized: true,
                },
            })
        }
    }
}

/// Exact admissible couple norm of a linear operator: the larger of the two
/// endpoint operator norms, each computed over the unit-ball vertices.
pub fn operator_couple_norm(matrix: &Matrix, couple: &Couple) -> Result<f64> {
    let n0 = endpoint_operator_norm(matrix, couple.x0(), couple)?;
    let n1 = endpoint_operator_norm(matrix, couple.x1(), couple)?;
    Ok(n0.max(n1))
}

fn endpoint_operator_norm(matrix: &Matrix, norm: &NormSpec, couple: &Couple) -> Result<f64> {
    let vertices = norm.unit_ball_vertices(couple.space())?;
    let mut best: f64 = 0.0;
    for v in vertices {
        let image = matrix.apply_vector(&v)?;
        best = best.max(norm.evaluate(&image)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GpVariant {
    GpPlus,
    Gp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertVerdict {
    Certified,
    Refuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpWitness {
    pub input: Vec<f64>,
    pub part: String,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Sample-based certificate that `Sf REL C f` for every checked sample,
/// using the K-curve characterizations of the operator classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GpCertificate {
    pub class: GpVariant,
    pub constant: f64,
    pub verdict: CertVerdict,
    pub witness: Option<GpWitness>,
    pub samples_checked: usize,
    pub seed: u64,
}

/// Certify `S` as a (positive) Gagliardo-Peetre operator with constant C
/// over the given samples: GpPlus demands Sf <<_K C f, Gp demands
/// Sf <=_K C f. Refutation returns the first failing sample as witness.
pub fn certify_gp(
    op: &OperatorSpec,
    constant: f64,
    variant: GpVariant,
    samples: &[LatticeVector],
    couple: &Couple,
    seed: u64,
) -> Result<GpCertificate> {
    let kind = match variant {
        GpVariant::GpPlus => RelationKind::LlK,
        GpVariant::Gp => RelationKind::PreceqK,
    };
    for (checked, f) in samples.iter().enumerate() {
        let image = op.apply(f)?;
        let report = check_relation_scaled(kind, &image, f, constant, Some(couple))?;
        if !report.holds {
            let w = report.witness.expect("failed relation carries a witness");
            return Ok(GpCertificate {
                class: variant,
                constant,
                verdict: CertVerdict::Refuted,
                witness: Some(GpWitness {
                    input: f.values().to_vec(),
                    part: w.part,
                    t: w.t,
                    lhs: w.lhs,
                    rhs: w.rhs,
                }),
                samples_checked: checked + 1,
                seed,
            });
        }
    }
    Ok(GpCertificate {
        class: variant,
        constant,
        verdict: CertVerdict::Certified,
        witness: None,
        samples_checked: samples.len(),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GpBridgeReport {
    pub gp_plus_estimate: f64,
    pub gp_estimate: f64,
    /// Which bridge inequalities applied and whether they held.
    pub bridge_ok: bool,
    pub notes: Vec<String>,
    pub seed: u64,
}

/// Least certified constants for both classes by bisection (resolution
/// 1e-6, 64 iterations), plus the bridge inequalities that the declared
/// structure and the couple make applicable:
/// gp <= 2 gp+, gp+ <= gp for order-preserving operators on lattice domains
/// containing zero, and gp <= gp+ over couples where part-wise domination
/// implies plain domination.
pub fn gp_constant_bridge(
    op: &OperatorSpec,
    samples: &[LatticeVector],
    couple: &Couple,
    seed: u64,
) -> Result<GpBridgeReport> {
    let least = |variant: GpVariant| -> Result<f64> {
        let certified = |c: f64| -> Result<bool> {
            Ok(
                certify_gp(op, c, variant, samples, couple, seed)?.verdict
                    == CertVerdict::Certified,
            )
        };
        if certified(0.0)? {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut grow = 0;
        while !certified(hi)? {
            hi *= 2.0;
            grow += 1;
            if grow > 60 {
                return Ok(f64::INFINITY);
            }
        }
        let mut lo = 0.0;
        for _ in 0..64 {
            if hi - lo <= 1e-6 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if certified(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    };
    let gp_plus = least(GpVariant::GpPlus)?;
    let gp = least(GpVariant::Gp)?;

    let tol = 1e-5;
    let mut ok = true;
    let mut notes = Vec::new();
    if gp.is_finite() || gp_plus.is_finite() {
        if gp > 2.0 * gp_plus + tol {
            ok = false;
            notes.push(format!("gp = {gp} exceeds twice gp+ = {gp_plus}"));
        }
        let flags = op.declared();
        let domain = op.domain();
        if flags.order_preserving
            && domain.is_solid_lattice()
            && domain.contains_zero(couple.space().len())
            && gp_plus > gp + tol
        {
            ok = false;
            notes.push(format!(
                "order-preserving lattice domain: gp+ = {gp_plus} exceeds gp = {gp}"
            ));
        }
        if couple.is_cm_positive() && gp > gp_plus + tol {
            ok = false;
            notes.push(format!(
                "Calderon-Mityagin couple: gp = {gp} exceeds gp+ = {gp_plus}"
            ));
        }
    }
    Ok(GpBridgeReport {
        gp_plus_estimate: gp_plus,
        gp_estimate: gp,
        bridge_ok: ok,
        notes,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlagVerdict {
    pub verdict: CertVerdict,
    pub witness: Option<Vec<Vec<f64>>>,
}

impl FlagVerdict {
    fn certified() -> Self {
        FlagVerdict {
            verdict: CertVerdict::Certified,
            witness: None,
        }
    }

    fn refuted(witness: Vec<Vec<f64>>) -> Self {
        FlagVerdict {
            verdict: CertVerdict::Refuted,
            witness: Some(witness),
        }
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == CertVerdict::Certified
    }
}

/// Empirical verification of the structural flags over sample pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StructureReport {
    pub order_preserving: FlagVerdict,
    pub subadditive: FlagVerdict,
    pub abs_subadditive: FlagVerdict,
    /// Exact positivity for linear operators (entrywise), None for black
    /// boxes.
    pub positive: Option<FlagVerdict>,
    pub normalized: Option<FlagVerdict>,
    /// Largest observed ratio ||Sf - Sg|| / ||f - g|| on each endpoint.
    pub lipschitz_estimate: Option<f64>,
    pub pairs_checked: usize,
    pub seed: u64,
}

pub fn structure_checks(
    op: &OperatorSpec,
    couple: &Couple,
    pairs: &[(LatticeVector, LatticeVector)],
    seed: u64,
) -> Result<StructureReport> {
    let tol = 1e-9;
    let domain = op.domain();

    // Exact entrywise positivity for matrices; for linear maps order
    // preservation and positivity coincide.
    let positive = match op {
        OperatorSpec::Linear { matrix } => {
            let mut verdict = FlagVerdict::certified();
            'outer: for j in 0..matrix.ncols() {
                for i in 0..matrix.nrows() {
                    if matrix.get(i, j) < 0.0 {
                        let basis = LatticeVector::basis(couple.space(), j);
                        verdict = FlagVerdict::refuted(vec![basis.values().to_vec()]);
                        break 'outer;
                    }
                }
            }
            Some(verdict)
        }
        OperatorSpec::BlackBox { .. } => None,
    };

    let mut order_preserving = FlagVerdict::certified();
    let mut subadditive = FlagVerdict::certified();
    let mut abs_subadditive = FlagVerdict::certified();
    let mut lip: f64 = 0.0;
    let mut have_lip = false;

    if let Some(p) = &positive {
        order_preserving = p.clone();
    }

    for (a, b) in pairs {
        if !domain.contains(a) || !domain.contains(b) {
            continue;
        }
        // Comparable pair via meet/join (stays inside lattice domains).
        if domain.is_solid_lattice() && order_preserving.is_certified() {
            let lo = a.meet(b)?;
            let hi = a.join(b)?;
            if domain.contains(&lo) && domain.contains(&hi) {
                let s_lo = op.apply(&lo)?;
                let s_hi = op.apply(&hi)?;
                if !s_lo.le(&s_hi, tol) {
                    order_preserving =
                        FlagVerdict::refuted(vec![lo.values().to_vec(), hi.values().to_vec()]);
                }
            }
        }
        let sum = a.add(b)?;
        if domain.contains(&sum) {
            let s_sum = op.apply(&sum)?;
            let bound = op.apply(a)?.add(&op.apply(b)?)?;
            if subadditive.is_certified() && !s_sum.le(&bound, tol) {
                subadditive =
                    FlagVerdict::refuted(vec![a.values().to_vec(), b.values().to_vec()]);
            }
            let abs_bound = op.apply(a)?.abs().add(&op.apply(b)?.abs())?;
            if abs_subadditive.is_certified() && !s_sum.abs().le(&abs_bound, tol) {
                abs_subadditive =
                    FlagVerdict::refuted(vec![a.values().to_vec(), b.values().to_vec()]);
            }
        }
        // Lipschitz ratios on both endpoints.
        let diff_in = a.sub(b)?;
        if !diff_in.is_zero(1e-12) {
            let diff_out = op.apply(a)?.sub(&op.apply(b)?)?;
            for norm in [couple.x0(), couple.x1()] {
                let denom = norm.evaluate(&diff_in)?;
                if denom > 1e-12 {
                    lip = lip.max(norm.evaluate(&diff_out)? / denom);
                    have_lip = true;
                }
            }
        }
    }

    let normalized = if domain.contains_zero(couple.space().len()) {
        let zero = LatticeVector::zero(couple.space());
        let image = op.apply(&zero)?;
        Some(if image.is_zero(tol) {
            FlagVerdict::certified()
        } else {
            FlagVerdict::refuted(vec![zero.values().to_vec()])
        })
    } else {
        None
    };

    Ok(StructureReport {
        order_preserving,
        subadditive,
        abs_subadditive,
        positive,
        normalized,
        lipschitz_estimate: have_lip.then_some(lip),
        pairs_checked: pairs.len(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SampleGen;
    use crate::space::MeasureSpace;
    use std::sync::Arc;

    fn vec_on(space: &Arc<MeasureSpace>, v: &[f64]) -> LatticeVector {
        LatticeVector::new(space, v.to_vec()).unwrap()
    }

    #[test]
    fn couple_norm_examples() {
        let s = MeasureSpace::uniform(2);
        let couple = Couple::l1_linf(&s);
        let swap = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((operator_couple_norm(&swap, &couple).unwrap() - 1.0).abs() < 1e-12);

        let t = Matrix::from_rows(vec![vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!((operator_couple_norm(&t, &couple).unwrap() - 2.0).abs() < 1e-12);

        let zero = Matrix::zeros(2, 2);
        assert_eq!(operator_couple_norm(&zero, &couple).unwrap(), 0.0);
    }

    #[test]
    fn weighted_couple_norm_matches_row_column_sums() {
        let s = MeasureSpace::new(vec![2.0, 1.0, 0.5]).unwrap();
        let couple = Couple::l1_linf(&s);
        let mut gen = SampleGen::new(&s, 5);
        for _ in 0..20 {
            let m = gen.nonnegative_matrix(1.0);
            let exact = operator_couple_norm(&m, &couple).unwrap();
            let col = (0..3)
                .map(|j| (0..3).map(|i| s.weight(i) * m.get(i, j)).sum::<f64>() / s.weight(j))
                .fold(0.0f64, f64::max);
            let row = (0..3)
                .map(|i| m.row(i).iter().sum::<f64>())
                .fold(0.0f64, f64::max);
            assert!((exact - col.max(row)).abs() < 1e-10);
        }
    }

    #[test]
    fn clamp_certifies_negation_refutes() {
        let s = MeasureSpace::uniform(2);
        let couple = Couple::l1_linf(&s);
        let mut gen = SampleGen::new(&s, 9);
        let samples: Vec<LatticeVector> = (0..40).map(|_| gen.vector()).collect();

        let clamp = OperatorSpec::builtin(MapKind::Clamp {
            lo: Some(0.0),
            hi: Some(1.5),
        });
        let cert = certify_gp(&clamp, 1.0, GpVariant::GpPlus, &samples, &couple, 9).unwrap();
        assert_eq!(cert.verdict, CertVerdict::Certified);

        let neg = OperatorSpec::builtin(MapKind::Negate);
        let one = vec![vec_on(&s, &[1.0, 0.0])];
        let cert = certify_gp(&neg, 1.0, GpVariant::GpPlus, &one, &couple, 9).unwrap();
        assert_eq!(cert.verdict, CertVerdict::Refuted);
        assert!(cert.witness.is_some());

        let zero = OperatorSpec::builtin(MapKind::Zero);
        for variant in [GpVariant::Gp, GpVariant::GpPlus] {
            let cert = certify_gp(&zero, 0.0, variant, &samples, &couple, 9).unwrap();
            assert_eq!(cert.verdict, CertVerdict::Certified);
        }
    }

    #[test]
    fn bridge_estimates() {
        let s = MeasureSpace::uniform(3);
        let couple = Couple::l1_linf(&s);
        let mut gen = SampleGen::new(&s, 21);
        let samples: Vec<LatticeVector> = (0..30).map(|_| gen.vector()).collect();

        let half = OperatorSpec::builtin(MapKind::Scale { factor: 0.5 });
        let report = gp_constant_bridge(&half, &samples, &couple, 21).unwrap();
        assert!((report.gp_plus_estimate - 0.5).abs() < 1e-4);
        assert!((report.gp_estimate - 0.5).abs() < 1e-4);
        assert!(report.bridge_ok, "{:?}", report.notes);

        let clamp = OperatorSpec::builtin(MapKind::Clamp {
            lo: Some(0.0),
            hi: Some(1.0),
        });
        let report = gp_constant_bridge(&clamp, &samples, &couple, 21).unwrap();
        assert!(report.gp_plus_estimate <= 1.0 + 1e-4);
        assert!(report.gp_estimate <= report.gp_plus_estimate + 1e-5);
        assert!(report.bridge_ok, "{:?}", report.notes);
    }

    #[test]
    fn renormalize_floor_operator() {
        let s = MeasureSpace::uniform(2);
        let floor = OperatorSpec::builtin(MapKind::Clamp {
            lo: Some(0.5),
            hi: None,
        });
        let zero = LatticeVector::zero(&s);
        let tilde = renormalize(&floor, &zero).unwrap();
        let image = tilde.apply(&zero).unwrap();
        assert!(image.is_zero(0.0));
        let f = vec_on(&s, &[2.0, -1.0]);
        let expected = vec_on(&s, &[1.5, 0.0]); // (f v 0.5) - 0.5
        assert_eq!(tilde.apply(&f).unwrap().values(), expected.values());

        // Identity-plus-constant renormalizes to the identity.
        let shift = OperatorSpec::builtin(MapKind::Shift { offset: 3.0 });
        let tilde = renormalize(&shift, &zero).unwrap();
        assert_eq!(tilde.apply(&f).unwrap().values(), f.values());
    }

    #[test]
    fn structure_check_examples() {
        let s = MeasureSpace::uniform(2);
        let couple = Couple::l1_linf(&s);
        let mut gen = SampleGen::new(&s, 33);
        let pairs: Vec<_> = (0..60).map(|_| (gen.vector(), gen.vector())).collect();

        let bad = OperatorSpec::linear(
            Matrix::from_rows(vec![vec![1.0, -0.1], vec![0.0, 1.0]]).unwrap(),
        );
        let report = structure_checks(&bad, &couple, &pairs, 33).unwrap();
        let positive = report.positive.unwrap();
        assert_eq!(positive.verdict, CertVerdict::Refuted);
        assert_eq!(positive.witness.unwrap()[0], vec![0.0, 1.0]);

        let phi = OperatorSpec::builtin(MapKind::Phi {
            phi: PhiKind::SoftThreshold { tau: 0.5 },
        });
        let report = structure_checks(&phi, &couple, &pairs, 33).unwrap();
        assert!(report.order_preserving.is_certified());
        assert!(report.lipschitz_estimate.unwrap() <= 1.0 + 1e-9);

        let pos = OperatorSpec::builtin(MapKind::PositivePart);
        let report = structure_checks(&pos, &couple, &pairs, 33).unwrap();
        assert!(report.subadditive.is_certified());
        assert!(report.order_preserving.is_certified());
    }

    #[test]
    fn solid_hull_domains() {
        let s = MeasureSpace::uniform(2);
        let dom = DomainDescriptor::SolidLatticeHull {
            generators: vec![vec![1.0, -2.0], vec![0.5, 0.5]],
        };
        assert!(dom.contains(&vec_on(&s, &[1.0, 2.0])));
        assert!(!dom.contains(&vec_on(&s, &[1.5, 0.0])));
        assert!(dom.contains_zero(2));
        assert!(dom.is_solid_lattice());

        let anchor = vec_on(&s, &[0.5, 0.0]);
        let shifted = dom.shift_back(&anchor);
        assert!(shifted.contains(&vec_on(&s, &[0.5, 2.0])));
        assert!(!shifted.contains(&vec_on(&s, &[0.6, 0.0])));
    }
}
