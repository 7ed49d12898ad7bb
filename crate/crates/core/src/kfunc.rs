//! K-functionals, exact K-curves, and the four order relations.
//!
//! For the (L1, LInf) couple the K-functional is the integral of the
//! decreasing rearrangement, which gives an exact fast path. For general
//! polyhedral couples K(f, t) is computed by an epigraph LP over the dual
//! descriptions of the endpoint norms, and the full curve is recovered
//! exactly by concavity-driven midpoint bisection: a concave function that
//! touches its chord at the midpoint is linear on the whole interval.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpOutcome};
use crate::norm::{Couple, NormSpec};
use crate::space::{LatticeVector, MeasureSpace};

/// Linearity test tolerance for curve bisection; strictly tighter than the
/// 1e-9 used for relation verdicts so construction error stays separated
/// from decision error.
const BISECT_TOL: f64 = 1e-11;
const VERDICT_TOL: f64 = 1e-9;
const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "value")]
pub enum Saturation {
    /// K(f, t) is eventually the constant ||f||_{X0}.
    Finite(f64),
    /// The curve keeps growing with this terminal slope (cannot happen over
    /// finite-dimensional couples, kept for contract completeness).
    Unbounded { terminal_slope: f64 },
}

/// Exact piecewise-linear representation of t -> K(f, t).
///
/// The curve is linear through the origin up to the first breakpoint and
/// continues past the last breakpoint according to `saturation`. Values at
/// the breakpoints determine it completely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCurve {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    saturation: Saturation,
}

impl KCurve {
    pub fn zero() -> Self {
        KCurve {
            breakpoints: Vec::new(),
            values: Vec::new(),
            saturation: Saturation::Finite(0.0),
        }
    }

    pub fn from_parts(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        saturation: Saturation,
    ) -> Result<Self> {
        let curve = KCurve {
            breakpoints,
            values,
            saturation,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn saturation(&self) -> Saturation {
        self.saturation
    }

    pub fn is_zero(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Nonnegative, nondecreasing, concave, with a consistent tail.
    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.len() != self.values.len() {
            return Err(Error::Input("breakpoint/value length mismatch".into()));
        }
        let scale = self.values.last().copied().unwrap_or(0.0).max(1.0);
        let tol = VERDICT_TOL * scale;
        let mut prev_t = 0.0;
        let mut prev_v = 0.0;
        let mut prev_slope = f64::INFINITY;
        for (&t, &v) in self.breakpoints.iter().zip(&self.values) {
            if t <= prev_t {
                return Err(Error::Input(
                    "breakpoints must be increasing and positive".into(),
                ));
            }
            if v < prev_v - tol {
                return Err(Error::Input("curve must be nondecreasing".into()));
            }
            let slope = (v - prev_v) / (t - prev_t);
            if slope > prev_slope + tol {
                return Err(Error::Input("curve must be concave".into()));
            }
            prev_slope = slope.min(prev_slope);
            prev_t = t;
            prev_v = v;
        }
        match self.saturation {
            Saturation::Finite(s) => {
                if (s - prev_v).abs() > tol {
                    return Err(Error::Input(
                        "finite saturation must equal the last breakpoint value".into(),
                    ));
                }
            }
            Saturation::Unbounded { terminal_slope } => {
                if terminal_slope < -tol || terminal_slope > prev_slope + tol {
                    return Err(Error::Input("terminal slope breaks concavity".into()));
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        if self.breakpoints.is_empty() || t <= 0.0 {
            return 0.0;
        }
        let first = self.breakpoints[0];
        if t <= first {
            return self.values[0] * t / first;
        }
        for k in 1..self.breakpoints.len() {
            if t <= self.breakpoints[k] {
                let (t0, t1) = (self.breakpoints[k - 1], self.breakpoints[k]);
                let (v0, v1) = (self.values[k - 1], self.values[k]);
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        let last_t = *self.breakpoints.last().unwrap();
        let last_v = *self.values.last().unwrap();
        match self.saturation {
            Saturation::Finite(_) => last_v,
            Saturation::Unbounded { terminal_slope } => last_v + terminal_slope * (t - last_t),
        }
    }

    /// CSV rows `t,K` at the breakpoints (12 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,K\n");
        for (t, v) in self.breakpoints.iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", crate::fmt_sig(*t), crate::fmt_sig(*v)));
        }
        out
    }
}

/// Exact K-curve for the (L1(mu), LInf) couple: K(f, t) is the integral of
/// the decreasing rearrangement over [0, t], so the breakpoints sit at the
/// cumulative masses of the rearrangement and the saturation is ||f||_1.
pub fn k_l1linf_curve(f: &LatticeVector) -> KCurve {
    let star = f.rearrange();
    if star.is_zero() {
        return KCurve::zero();
    }
    let mut values = Vec::with_capacity(star.levels().len());
    let mut acc = 0.0;
    let mut left = 0.0;
    for (&bp, &level) in star.breakpoints().iter().zip(star.levels()) {
        acc += level * (bp - left);
        left = bp;
        values.push(acc);
    }
    KCurve {
        breakpoints: star.breakpoints().to_vec(),
        values,
        saturation: Saturation::Finite(acc),
    }
}

/// Appends rows enforcing `s_coeff * x[s_var] >= || shift + sign * block ||`
/// where `block` is the n consecutive variables starting at `block_start`.
/// WeightedL1 uses n auxiliary absolute-value variables at `abs_start`; the
/// other polyhedral kinds use their dual functionals directly.
fn add_epigraph_rows(
    lp: &mut LinearProgram,
    norm: &NormSpec,
    space: &Arc<MeasureSpace>,
    shift: &[f64],
    sign: f64,
    block_start: usize,
    s_var: usize,
    s_coeff: f64,
    abs_start: Option<usize>,
) -> Result<()> {
    let n = space.len();
    let nv = lp.num_vars;
    match norm {
        NormSpec::WeightedL1 => {
            let abs0 = abs_start.ok_or_else(|| Error::Input("missing abs block".into()))?;
            for i in 0..n {
                let mut row = vec![0.0; nv];
                row[block_start + i] = sign;
                row[abs0 + i] = -1.0;
                lp.le(row, -shift[i]);
                let mut row = vec![0.0; nv];
                row[block_start + i] = -sign;
                row[abs0 + i] = -1.0;
                lp.le(row, shift[i]);
            }
            let mut row = vec![0.0; nv];
            for i in 0..n {
                row[abs0 + i] = space.weight(i);
            }
            row[s_var] = -s_coeff;
            lp.le(row, 0.0);
        }
        NormSpec::LInfinity => {
            for i in 0..n {
                let mut row = vec![0.0; nv];
                row[block_start + i] = sign;
                row[s_var] = -s_coeff;
                lp.le(row, -shift[i]);
                let mut row = vec![0.0; nv];
                row[block_start + i] = -sign;
                row[s_var] = -s_coeff;
                lp.le(row, shift[i]);
            }
        }
        NormSpec::WeightedLp { .. } => {
            return Err(Error::Unsupported(
                "weighted p-norm has no polyhedral epigraph".into(),
            ))
        }
        _ => {
            for y in norm.dual_functionals(space)? {
                let mut row = vec![0.0; nv];
                for j in 0..n {
                    row[block_start + j] = sign * y.get(j);
                }
                row[s_var] = -s_coeff;
                let rhs: f64 = -(0..n).map(|j| y.get(j) * shift[j]).sum::<f64>();
                lp.le(row, rhs);
            }
        }
    }
    Ok(())
}

/// Builds the decomposition LP `f = f0 + f1`: variables are f0 (free),
/// then s0, s1, then any absolute-value blocks.
fn build_decomposition_lp(couple: &Couple, f: &LatticeVector) -> Result<(LinearProgram, usize)> {
    let n = f.len();
    let mut num_vars = n + 2;
    let abs0 = matches!(couple.x0(), NormSpec::WeightedL1).then(|| {
        let at = num_vars;
        num_vars += n;
        at
    });
    let abs1 = matches!(couple.x1(), NormSpec::WeightedL1).then(|| {
        let at = num_vars;
        num_vars += n;
        at
    });
    let mut lp = LinearProgram::new(num_vars);
    for i in 0..n {
        lp.set_free(i);
    }
    let zero_shift = vec![0.0; n];
    add_epigraph_rows(&mut lp, couple.x0(), couple.space(), &zero_shift, 1.0, 0, n, 1.0, abs0)?;
    add_epigraph_rows(
        &mut lp,
        couple.x1(),
        couple.space(),
        f.values(),
        -1.0,
        0,
        n + 1,
        1.0,
        abs1,
    )?;
    Ok((lp, n))
}

fn k_value_lp(couple: &Couple, f: &LatticeVector, t: f64) -> Result<(Vec<f64>, f64)> {
    let (mut lp, n) = build_decomposition_lp(couple, f)?;
    let mut objective = vec![0.0; lp.num_vars];
    objective[n] = 1.0;
    objective[n + 1] = t;
    lp.minimize(objective);
    match lp_solve(&lp) {
        LpOutcome::Optimal { x, objective } => Ok((x[..n].to_vec(), objective.max(0.0))),
        _ => Err(Error::Precision("K-functional LP failed".into())),
    }
}

/// Subgradient of the norm at x (any element of the subdifferential).
fn norm_subgradient(norm: &NormSpec, space: &Arc<MeasureSpace>, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    match norm {
        NormSpec::WeightedL1 => (0..n).map(|i| space.weight(i) * sgn(x[i])).collect(),
        NormSpec::LInfinity => {
            let mut g = vec![0.0; n];
            if let Some(i) = (0..n).max_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap()) {
                if x[i] != 0.0 {
                    g[i] = sgn(x[i]);
                }
            }
            g
        }
        NormSpec::WeightedLp { p } => {
            let value: f64 = x
                .iter()
                .zip(space.weights())
                .map(|(&v, &w)| w * v.abs().powf(*p))
                .sum::<f64>()
                .powf(1.0 / p);
            if value <= 1e-300 {
                return vec![0.0; n];
            }
            (0..n)
                .map(|i| {
                    space.weight(i) * x[i].abs().powf(p - 1.0) * sgn(x[i])
                        / value.powf(p - 1.0)
                })
                .collect()
        }
        NormSpec::Lorentz { weights } => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| x[j].abs().partial_cmp(&x[i].abs()).unwrap().then(i.cmp(&j)));
            let mut g = vec![0.0; n];
            for (rank, &i) in order.iter().enumerate() {
                g[i] = weights[rank] * sgn(x[i]);
            }
            g
        }
        _ => {
            let xv = LatticeVector::new(space, x.to_vec()).expect("same space");
            norm.dual_functionals(space)
                .expect("polyhedral norm has functionals")
                .into_iter()
                .max_by(|a, b| {
                    a.dot(&xv)
                        .unwrap()
                        .partial_cmp(&b.dot(&xv).unwrap())
                        .unwrap()
                })
                .map(|y| y.values().to_vec())
                .unwrap_or_else(|| vec![0.0; n])
        }
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Subgradient descent fallback for couples with a non-polyhedral endpoint.
/// 1e4 iterations; results are only trusted to about 1e-6 and callers must
/// treat them as approximate.
fn descent_minimize(
    couple: &Couple,
    f: &LatticeVector,
    eval: impl Fn(&[f64]) -> Result<f64>,
    grad: impl Fn(&[f64]) -> Result<Vec<f64>>,
    t: f64,
) -> Result<f64> {
    let n = f.len();
    let lambda = f.rearrange().value_at(t);
    let clamp = f.sub(&f.clamp(-lambda, lambda))?;
    let mut best_x = vec![0.0; n];
    let mut best = eval(&best_x)?;
    for cand in [f.values().to_vec(), clamp.values().to_vec()] {
        let v = eval(&cand)?;
        if v < best {
            best = v;
            best_x = cand;
        }
    }
    let _ = couple;
    let mut x = best_x;
    let diam = f.sup_norm().max(1e-9);
    for k in 0..10_000 {
        let g = grad(&x)?;
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let step = diam / ((k as f64 + 1.0).sqrt() * gnorm);
        for i in 0..n {
            x[i] -= step * g[i];
        }
        let v = eval(&x)?;
        if v < best {
            best = v;
        }
    }
    Ok(best)
}

/// K(f, t) = inf { ||f0||_X0 + t ||f1||_X1 : f = f0 + f1 }.
///
/// Dispatches to the rearrangement fast path on (L1, LInf), to an exact LP
/// for polyhedral couples, and to subgradient descent otherwise.
pub fn k_value(couple: &Couple, f: &LatticeVector, t: f64) -> Result<f64> {
    check_t(t)?;
    check_space(couple, f)?;
    if f.is_zero(0.0) {
        return Ok(0.0);
    }
    if couple.is_l1_linf() {
        return Ok(f.rearrange().integral_to(t));
    }
    k_value_general(couple, f, t)
}

/// The general path (LP or descent), bypassing the fast-path dispatch; used
/// to cross-check the two computation routes against each other.
pub fn k_value_general(couple: &Couple, f: &LatticeVector, t: f64) -> Result<f64> {
    check_t(t)?;
    check_space(couple, f)?;
    if f.is_zero(0.0) {
        return Ok(0.0);
    }
    if couple.is_polyhedral() {
        return k_value_lp(couple, f, t).map(|(_, v)| v);
    }
    let space = Arc::clone(couple.space());
    let couple2 = couple.clone();
    let fv = f.clone();
    let eval = move |x: &[f64]| -> Result<f64> {
        let f0 = LatticeVector::new(&space, x.to_vec())?;
        let f1 = fv.sub(&f0)?;
        Ok(couple2.x0().evaluate(&f0)? + t * couple2.x1().evaluate(&f1)?)
    };
    let space = Arc::clone(couple.space());
    let couple3 = couple.clone();
    let fv = f.clone();
    let grad = move |x: &[f64]| -> Result<Vec<f64>> {
        let f0 = LatticeVector::new(&space, x.to_vec())?;
        let f1 = fv.sub(&f0)?;
        let g0 = norm_subgradient(couple3.x0(), &space, f0.values());
        let g1 = norm_subgradient(couple3.x1(), &space, f1.values());
        Ok((0..x.len()).map(|i| g0[i] - t * g1[i]).collect())
    };
    descent_minimize(couple, f, eval, grad, t)
}

/// K_inf(f, t) = inf { max( ||f0||_X0, t ||f1||_X1 ) : f = f0 + f1 }.
pub fn k_inf_value(couple: &Couple, f: &LatticeVector, t: f64) -> Result<f64> {
    check_t(t)?;
    check_space(couple, f)?;
    if f.is_zero(0.0) {
        return Ok(0.0);
    }
    if couple.is_polyhedral() {
        let n = f.len();
        let mut num_vars = n + 1; // f0 free, then the bound variable
        let abs0 = matches!(couple.x0(), NormSpec::WeightedL1).then(|| {
            let at = num_vars;
            num_vars += n;
            at
        });
        let abs1 = matches!(couple.x1(), NormSpec::WeightedL1).then(|| {
            let at = num_vars;
            num_vars += n;
            at
        });
        let mut lp = LinearProgram::new(num_vars);
        for i in 0..n {
            lp.set_free(i);
        }
        let zero_shift = vec![0.0; n];
        add_epigraph_rows(&mut lp, couple.x0(), couple.space(), &zero_shift, 1.0, 0, n, 1.0, abs0)?;
        add_epigraph_rows(
            &mut lp,
            couple.x1(),
            couple.space(),
            f.values(),
            -1.0,
            0,
            n,
            1.0 / t,
            abs1,
        )?;
        let mut objective = vec![0.0; num_vars];
        objective[n] = 1.0;
        lp.minimize(objective);
        return match lp_solve(&lp) {
            LpOutcome::Optimal { objective, .. } => Ok(objective.max(0.0)),
            _ => Err(Error::Precision("K-infinity LP failed".into())),
        };
    }
    let space = Arc::clone(couple.space());
    let couple2 = couple.clone();
    let fv = f.clone();
    let eval = move |x: &[f64]| -> Result<f64> {
        let f0 = LatticeVector::new(&space, x.to_vec())?;
        let f1 = fv.sub(&f0)?;
        Ok((couple2.x0().evaluate(&f0)?).max(t * couple2.x1().evaluate(&f1)?))
    };
    let space = Arc::clone(couple.space());
    let couple3 = couple.clone();
    let fv = f.clone();
    let grad = move |x: &[f64]| -> Result<Vec<f64>> {
        let f0 = LatticeVector::new(&space, x.to_vec())?;
        let f1 = fv.sub(&f0)?;
        let v0 = couple3.x0().evaluate(&f0)?;
        let v1 = t * couple3.x1().evaluate(&f1)?;
        Ok(if v0 >= v1 {
            norm_subgradient(couple3.x0(), &space, f0.values())
        } else {
            norm_subgradient(couple3.x1(), &space, f1.values())
                .iter()
                .map(|g| -t * g)
                .collect()
        })
    };
    descent_minimize(couple, f, eval, grad, t)
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("K-functional needs t > 0, got {t}")))
    }
}

fn check_space(couple: &Couple, f: &LatticeVector) -> Result<()> {
    if couple.space() == f.space() {
        Ok(())
    } else {
        Err(Error::Dimension("vector and couple spaces differ".into()))
    }
}

#[derive(Clone, Copy)]
struct Line {
    slope: f64,
    intercept: f64,
}

impl Line {
    fn through(p: (f64, f64), q: (f64, f64)) -> Line {
        let slope = (q.1 - p.1) / (q.0 - p.0);
        Line {
            slope,
            intercept: p.1 - slope * p.0,
        }
    }

    fn at(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }
}

fn push_line(lines: &mut Vec<Line>, line: Line, tol: f64) {
    if let Some(last) = lines.last() {
        if (last.slope - line.slope).abs() <= tol && (last.intercept - line.intercept).abs() <= tol
        {
            return;
        }
    }
    lines.push(line);
}

/// Exact K-curve for a polyhedral couple via concavity bisection.
pub fn k_curve(couple: &Couple, f: &LatticeVector) -> Result<KCurve> {
    check_space(couple, f)?;
    if f.is_zero(0.0) {
        return Ok(KCurve::zero());
    }
    if couple.is_l1_linf() {
        return Ok(k_l1linf_curve(f));
    }
    if !couple.is_polyhedral() {
        return Err(Error::Unsupported(
            "exact K-curves need polyhedral endpoint norms".into(),
        ));
    }
    let norm0 = couple.x0().evaluate(f)?;
    let norm1 = couple.x1().evaluate(f)?;
    let scale = norm0.max(1.0);
    let tol = BISECT_TOL * scale;
    let eval = |t: f64| -> Result<f64> { k_value_lp(couple, f, t).map(|(_, v)| v) };

    // Bracket: the curve equals t * ||f||_X1 for small t (the f0 = 0 split)
    // and reaches the constant ||f||_X0 at finite t (the f1 = 0 split).
    let mut t_hi = norm0 / norm1;
    let mut v_hi = eval(t_hi)?;
    let mut rounds = 0;
    while norm0 - v_hi > tol {
        t_hi *= 2.0;
        v_hi = eval(t_hi)?;
        rounds += 1;
        if rounds > 80 {
            return Err(Error::Precision("saturation point not reached".into()));
        }
    }
    let mut t_lo = norm0 / norm1;
    let mut v_lo = eval(t_lo)?;
    rounds = 0;
    while t_lo * norm1 - v_lo > tol {
        t_lo *= 0.5;
        v_lo = eval(t_lo)?;
        rounds += 1;
        if rounds > 80 {
            return Err(Error::Precision("initial linear segment not reached".into()));
        }
    }

    // Midpoint bisection. A concave curve equal to its chord at the midpoint
    // is linear on the interval, so leaves are certified-linear pieces.
    let mut samples: Vec<(f64, f64)> = vec![(t_lo, v_lo)];
    if t_hi > t_lo {
        samples.push((t_hi, v_hi));
    }
    let mut stack: Vec<(f64, f64, f64, f64, u32)> = vec![(t_lo, v_lo, t_hi, v_hi, 0)];
    while let Some((a, va, b, vb, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            continue;
        }
        let vm = eval(m)?;
        let chord = 0.5 * (va + vb);
        if (vm - chord).abs() <= tol {
            continue;
        }
        if depth + 1 > MAX_DEPTH {
            return Err(Error::Precision(format!(
                "bisection depth {MAX_DEPTH} exceeded near t = {m}"
            )));
        }
        samples.push((m, vm));
        stack.push((m, vm, b, vb, depth + 1));
        stack.push((a, va, m, vm, depth + 1));
    }
    samples.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    // Merge samples into maximal collinear runs, then intersect consecutive
    // run lines to place breakpoints exactly. The initial slope ||f||_X1 and
    // the saturation level ||f||_X0 bound the line list on both sides.
    let line_tol = 1e-8 * scale;
    let mut lines: Vec<Line> = vec![Line {
        slope: norm1,
        intercept: 0.0,
    }];
    let mut run_start = 0;
    for k in 1..samples.len() {
        let candidate = Line::through(samples[run_start], samples[k]);
        let fits = (run_start..=k)
            .all(|j| (candidate.at(samples[j].0) - samples[j].1).abs() <= 8.0 * tol);
        if !fits {
            if k - 1 > run_start {
                push_line(
                    &mut lines,
                    Line::through(samples[run_start], samples[k - 1]),
                    line_tol,
                );
            }
            run_start = k - 1;
        }
    }
    if run_start + 1 < samples.len() {
        push_line(
            &mut lines,
            Line::through(samples[run_start], *samples.last().unwrap()),
            line_tol,
        );
    }
    push_line(
        &mut lines,
        Line {
            slope: 0.0,
            intercept: norm0,
        },
        line_tol,
    );

    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    for w in lines.windows(2) {
        let (l1, l2) = (w[0], w[1]);
        if l1.slope <= l2.slope {
            continue;
        }
        let t = (l2.intercept - l1.intercept) / (l1.slope - l2.slope);
        if breakpoints.last().is_some_and(|&prev| t <= prev) {
            continue;
        }
        breakpoints.push(t);
        values.push(l1.at(t));
    }
    if let Some(last) = values.last_mut() {
        // The last line is the saturation level; pin the value exactly.
        *last = norm0;
    }
    KCurve::from_parts(breakpoints, values, Saturation::Finite(norm0))
}

/// A splitting f = f0 + f1, validated on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub f0: LatticeVector,
    pub f1: LatticeVector,
}

impl Decomposition {
    pub fn new(f: &LatticeVector, f0: LatticeVector, f1: LatticeVector) -> Result<Self> {
        let residual = f.sub(&f0.add(&f1)?)?.sup_norm();
        let scale = f.sup_norm().max(1.0);
        if residual > 1e-12 * scale {
            return Err(Error::Input(format!(
                "f0 + f1 misses f by {residual:.3e}"
            )));
        }
        Ok(Decomposition { f0, f1 })
    }
}

/// Disjointness refinement (the h-trick): given any f = f0 + f1 produce a
/// decomposition whose parts satisfy 0 <= f̂i± <= fi±, f± = f̂0± + f̂1± and
/// |f| = |f̂0| + |f̂1|.
pub fn refine_decomposition(
    f: &LatticeVector,
    f0: &LatticeVector,
    f1: &LatticeVector,
) -> Result<Decomposition> {
    let sum = f0.add(f1)?;
    let scale = f.sup_norm().max(1.0);
    if f.sub(&sum)?.sup_norm() > 1e-9 * scale {
        return Err(Error::Input("refine needs f = f0 + f1".into()));
    }
    let h_pos = f0.pos_part().meet(&f1.neg_part())?;
    let h_neg = f0.neg_part().meet(&f1.pos_part())?;
    let h = h_pos.sub(&h_neg)?;
    let f0_hat = f0.sub(&h)?;
    let f1_hat = f1.add(&h)?;

    // Postconditions from the construction, re-checked numerically.
    let tol = 1e-10 * scale;
    let checks = [
        f0_hat.pos_part().le(&f0.pos_part(), tol),
        f0_hat.neg_part().le(&f0.neg_part(), tol),
        f1_hat.pos_part().le(&f1.pos_part(), tol),
        f1_hat.neg_part().le(&f1.neg_part(), tol),
        f.pos_part()
            .sub(&f0_hat.pos_part().add(&f1_hat.pos_part())?)?
            .sup_norm()
            <= tol,
        f.neg_part()
            .sub(&f0_hat.neg_part().add(&f1_hat.neg_part())?)?
            .sup_norm()
            <= tol,
        f.abs().sub(&f0_hat.abs().add(&f1_hat.abs())?)?.sup_norm() <= tol,
    ];
    if checks.iter().any(|ok| !ok) {
        return Err(Error::Assembly("refined decomposition postcondition failed".into()));
    }
    Decomposition::new(f, f0_hat, f1_hat)
}

/// Lift a positive splitting of |f| back to a splitting of f with
/// |fi| = gi, via fi = gi ∧ f+ - gi ∧ f-.
pub fn lift_decomposition(
    f: &LatticeVector,
    g0: &LatticeVector,
    g1: &LatticeVector,
) -> Result<Decomposition> {
    let scale = f.sup_norm().max(1.0);
    let tol = 1e-9 * scale;
    if !g0.is_nonnegative(tol) || !g1.is_nonnegative(tol) {
        return Err(Error::Input("lift needs g0, g1 >= 0".into()));
    }
    if f.abs().sub(&g0.add(g1)?)?.sup_norm() > tol {
        return Err(Error::Input("lift needs g0 + g1 = |f|".into()));
    }
    let build = |g: &LatticeVector| -> Result<LatticeVector> {
        g.meet(&f.pos_part())?.sub(&g.meet(&f.neg_part())?)
    };
    let f0 = build(g0)?;
    let f1 = build(g1)?;
    if f0.abs().sub(g0)?.sup_norm() > 1e-10 * scale || f1.abs().sub(g1)?.sup_norm() > 1e-10 * scale
    {
        return Err(Error::Assembly("lifted parts do not match |fi| = gi".into()));
    }
    Decomposition::new(f, f0, f1)
}

/// A near-optimal splitting for K(f, t): the clamp decomposition on the
/// (L1, LInf) fast path, the LP minimizer otherwise.
pub fn optimal_decomposition(
    couple: &Couple,
    f: &LatticeVector,
    t: f64,
    slack: f64,
) -> Result<Decomposition> {
    check_t(t)?;
    check_space(couple, f)?;
    if f.is_zero(0.0) {
        return Decomposition::new(f, f.clone(), LatticeVector::zero(f.space()));
    }
    let (f0, f1) = if couple.is_l1_linf() {
        let lambda = f.rearrange().value_at(t);
        let f1 = f.clamp(-lambda, lambda);
        (f.sub(&f1)?, f1)
    } else if couple.is_polyhedral() {
        let (x, _) = k_value_lp(couple, f, t)?;
        let f0 = LatticeVector::new(couple.space(), x)?;
        let f1 = f.sub(&f0)?;
        (f0, f1)
    } else {
        return Err(Error::Unsupported(
            "optimal decompositions need polyhedral endpoint norms".into(),
        ));
    };
    let objective = couple.x0().evaluate(&f0)? + t * couple.x1().evaluate(&f1)?;
    let k = k_value(couple, f, t)?;
    let scale = k.max(1.0);
    if objective > k + slack + VERDICT_TOL * scale {
        return Err(Error::Precision(format!(
            "decomposition objective {objective} exceeds K + slack = {}",
            k + slack
        )));
    }
    Decomposition::new(f, f0, f1)
}

/// The sum-space norm ||f||_{X0+X1} = K(f, 1).
pub fn sum_norm(couple: &Couple, f: &LatticeVector) -> Result<f64> {
    if f.is_zero(0.0) {
        return Ok(0.0);
    }
    k_value(couple, f, 1.0)
}

/// The four relations: K-curve domination for the vectors themselves or for
/// their positive/negative parts, and the rearrangement-based analogues
/// which need no couple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    PreceqK,
    LlK,
    PreceqHlp,
    LlBc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationWitness {
    /// Point where domination fails, with both curve values there.
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Which comparison failed: "" for the vectors themselves, "positive
    /// part" / "negative part" for the part-wise relations.
    pub part: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub kind: RelationKind,
    /// Scaling constant applied to the right-hand curve (1 for the plain
    /// relations).
    pub constant: f64,
    pub holds: bool,
    pub witness: Option<RelationWitness>,
    /// Minimal slack of the dominating curve when the relation holds.
    pub margin: Option<f64>,
}

fn curve_for(kind: RelationKind, v: &LatticeVector, couple: Option<&Couple>) -> Result<KCurve> {
    match kind {
        RelationKind::PreceqK | RelationKind::LlK => {
            let couple =
                couple.ok_or_else(|| Error::Input("K-relations need a couple".into()))?;
            k_curve(couple, v)
        }
        RelationKind::PreceqHlp | RelationKind::LlBc => Ok(k_l1linf_curve(v)),
    }
}

/// Compare K_g <= c * K_f at the breakpoint union plus midpoints; for
/// piecewise-linear concave curves through the origin this decides pointwise
/// domination on all of (0, inf).
fn curve_dominated(
    g: &KCurve,
    f: &KCurve,
    c: f64,
    part: &str,
) -> (bool, Option<RelationWitness>, f64) {
    let mut probes: Vec<f64> = g
        .breakpoints()
        .iter()
        .chain(f.breakpoints().iter())
        .copied()
        .collect();
    if probes.is_empty() {
        return (true, None, 0.0);
    }
    probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probes.dedup();
    let mut extended = Vec::with_capacity(2 * probes.len() + 2);
    extended.push(probes[0] * 0.5);
    for w in probes.windows(2) {
        extended.push(w[0]);
        extended.push(0.5 * (w[0] + w[1]));
    }
    extended.push(*probes.last().unwrap());
    extended.push(probes.last().unwrap() * 2.0);

    let sat = |k: &KCurve| match k.saturation() {
        Saturation::Finite(v) => v,
        Saturation::Unbounded { .. } => f64::INFINITY,
    };
    let scale = sat(g).max(c * sat(f)).max(1.0);
    let tol = VERDICT_TOL * scale;
    let mut margin = f64::INFINITY;
    for &t in &extended {
        let lhs = g.evaluate(t);
        let rhs = c * f.evaluate(t);
        if lhs > rhs + tol {
            return (
                false,
                Some(RelationWitness {
                    t,
                    lhs,
                    rhs,
                    part: part.to_string(),
                }),
                0.0,
            );
        }
        margin = margin.min(rhs - lhs);
    }
    (true, None, margin.max(0.0))
}

/// Decide `g REL c*f`. The couple is required for the K-relations and
/// ignored by the rearrangement relations.
pub fn check_relation_scaled(
    kind: RelationKind,
    g: &LatticeVector,
    f: &LatticeVector,
    c: f64,
    couple: Option<&Couple>,
) -> Result<RelationReport> {
    if g.space() != f.space() {
        return Err(Error::Dimension("relation needs a common space".into()));
    }
    let (holds, witness, margin) = match kind {
        RelationKind::PreceqK | RelationKind::PreceqHlp => {
            let gc = curve_for(kind, g, couple)?;
            let fc = curve_for(kind, f, couple)?;
            curve_dominated(&gc, &fc, c, "")
        }
        RelationKind::LlK | RelationKind::LlBc => {
            let gp = curve_for(kind, &g.pos_part(), couple)?;
            let fp = curve_for(kind, &f.pos_part(), couple)?;
            let (ok_p, wit_p, margin_p) = curve_dominated(&gp, &fp, c, "positive part");
            if !ok_p {
                (false, wit_p, 0.0)
            } else {
                let gn = curve_for(kind, &g.neg_part(), couple)?;
                let fn_ = curve_for(kind, &f.neg_part(), couple)?;
                let (ok_n, wit_n, margin_n) = curve_dominated(&gn, &fn_, c, "negative part");
                (ok_n, wit_n, margin_p.min(margin_n))
            }
        }
    };
    Ok(RelationReport {
        kind,
        constant: c,
        holds,
        witness,
        margin: holds.then_some(margin),
    })
}

pub fn check_relation(
    kind: RelationKind,
    g: &LatticeVector,
    f: &LatticeVector,
    couple: Option<&Couple>,
) -> Result<RelationReport> {
    check_relation_scaled(kind, g, f, 1.0, couple)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MeasureSpace;

    fn vec_on(space: &Arc<MeasureSpace>, v: &[f64]) -> LatticeVector {
        LatticeVector::new(space, v.to_vec()).unwrap()
    }

    #[test]
    fn l1linf_curve_example() {
        let s = MeasureSpace::uniform(3);
        let f = vec_on(&s, &[3.0, -1.0, 2.0]);
        let c = k_l1linf_curve(&f);
        assert_eq!(c.breakpoints(), &[1.0, 2.0, 3.0]);
        assert_eq!(c.values(), &[3.0, 5.0, 6.0]);
        assert_eq!(c.saturation(), Saturation::Finite(6.0));
        assert!((c.evaluate(1.5) - 4.0).abs() < 1e-12);
        assert_eq!(c.evaluate(10.0), 6.0);
        c.validate().unwrap();
    }

    #[test]
    fn k_value_paths_agree() {
        let s = MeasureSpace::uniform(3);
        let couple = Couple::l1_linf(&s);
        let f = vec_on(&s, &[3.0, -1.0, 2.0]);
        for t in [0.25, 1.0, 1.5, 2.5, 7.0] {
            let fast = k_value(&couple, &f, t).unwrap();
            let lp = k_value_general(&couple, &f, t).unwrap();
            assert!((fast - lp).abs() < 1e-9, "t={t}: fast {fast} vs lp {lp}");
        }
        assert!((k_value(&couple, &f, 1.5).unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(k_value(&couple, &LatticeVector::zero(&s), 1.0).unwrap(), 0.0);
        assert!(k_value(&couple, &f, 0.0).is_err());
        // Saturation: far out the K-value is the X0 norm.
        assert!((k_value(&couple, &f, 1e6).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn k_inf_single_atom_and_sandwich() {
        let s = MeasureSpace::uniform(1);
        let couple = Couple::l1_linf(&s);
        let f = vec_on(&s, &[1.0]);
        let v = k_inf_value(&couple, &f, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-9);

        let s3 = MeasureSpace::uniform(3);
        let couple3 = Couple::l1_linf(&s3);
        for vals in [[2.0, -1.0, 0.5], [1.0, 1.0, 1.0], [0.0, 3.0, -3.0]] {
            let f = vec_on(&s3, &vals);
            let k = k_value(&couple3, &f, 1.0).unwrap();
            let kinf = k_inf_value(&couple3, &f, 1.0).unwrap();
            assert!(kinf <= k + 1e-9);
            assert!(k <= 2.0 * kinf + 1e-9);
        }
    }

    #[test]
    fn curve_bisection_reproduces_fast_path() {
        // Force the generic LP/bisection machinery on the L1/LInf couple by
        // relabeling the L1 norm as an equivalent polyhedral description.
        let s = MeasureSpace::uniform(2);
        let funcs = NormSpec::WeightedL1
            .dual_functionals(&s)
            .unwrap()
            .iter()
            .map(|y| y.values().to_vec())
            .collect();
        let x0 = NormSpec::Polyhedral {
            functionals: funcs,
            is_lattice_norm: true,
        };
        let couple = Couple::new(&s, x0, NormSpec::LInfinity).unwrap();
        let f = vec_on(&s, &[2.0, -0.5]);
        let curve = k_curve(&couple, &f).unwrap();
        let reference = k_l1linf_curve(&f);
        for t in [0.1, 0.5, 1.0, 1.7, 2.0, 3.0, 10.0] {
            assert!(
                (curve.evaluate(t) - reference.evaluate(t)).abs() < 1e-8,
                "t={t}"
            );
        }
        assert_eq!(curve.breakpoints().len(), reference.breakpoints().len());
    }

    #[test]
    fn lorentz_couple_curve_matches_grid_lp() {
        let s = MeasureSpace::uniform(3);
        let lor = NormSpec::Lorentz {
            weights: vec![1.0, 1.0, 0.0],
        };
        let couple = Couple::new(&s, lor, NormSpec::LInfinity).unwrap();
        let f = vec_on(&s, &[1.0, 1.0, 1.0]);
        let curve = k_curve(&couple, &f).unwrap();
        // Dense-grid LP oracle.
        for i in 1..60 {
            let t = 0.1 * i as f64;
            let direct = k_value_general(&couple, &f, t).unwrap();
            assert!((curve.evaluate(t) - direct).abs() < 1e-8, "t={t}");
        }
        // This particular curve is min(t, 2).
        assert!((curve.evaluate(1.0) - 1.0).abs() < 1e-9);
        assert!((curve.evaluate(5.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn relation_examples() {
        let s = MeasureSpace::uniform(2);
        let couple = Couple::l1_linf(&s);
        let g = vec_on(&s, &[1.0, 1.0]);
        let f = vec_on(&s, &[2.0, 0.0]);
        assert!(check_relation(RelationKind::PreceqK, &g, &f, Some(&couple))
            .unwrap()
            .holds);
        assert!(check_relation(RelationKind::LlK, &g, &f, Some(&couple))
            .unwrap()
            .holds);

        let g = vec_on(&s, &[1.0, -1.0]);
        let report = check_relation(RelationKind::PreceqK, &g, &f, Some(&couple)).unwrap();
        assert!(report.holds);
        let report = check_relation(RelationKind::LlK, &g, &f, Some(&couple)).unwrap();
        assert!(!report.holds);
        let witness = report.witness.unwrap();
        assert_eq!(witness.part, "negative part");
    }

    #[test]
    fn refine_and_lift_examples() {
        let s = MeasureSpace::uniform(2);
        let f0 = vec_on(&s, &[2.0, -3.0]);
        let f1 = vec_on(&s, &[-1.0, 5.0]);
        let f = f0.add(&f1).unwrap();
        let d = refine_decomposition(&f, &f0, &f1).unwrap();
        assert_eq!(d.f0.values(), &[1.0, 0.0]);
        assert_eq!(d.f1.values(), &[0.0, 2.0]);

        // Nonnegative parts are untouched.
        let g0 = vec_on(&s, &[1.0, 0.5]);
        let g1 = vec_on(&s, &[0.0, 2.0]);
        let g = g0.add(&g1).unwrap();
        let d = refine_decomposition(&g, &g0, &g1).unwrap();
        assert_eq!(d.f0.values(), g0.values());

        let s1 = MeasureSpace::uniform(1);
        let a = vec_on(&s1, &[1.0]);
        let b = vec_on(&s1, &[-1.0]);
        let zero = a.add(&b).unwrap();
        let d = refine_decomposition(&zero, &a, &b).unwrap();
        assert!(d.f0.is_zero(0.0) && d.f1.is_zero(0.0));

        let f = vec_on(&s, &[2.0, -2.0]);
        let g0 = vec_on(&s, &[1.0, 0.0]);
        let g1 = vec_on(&s, &[1.0, 2.0]);
        let d = lift_decomposition(&f, &g0, &g1).unwrap();
        assert_eq!(d.f0.values(), &[1.0, 0.0]);
        assert_eq!(d.f1.values(), &[1.0, -2.0]);

        let whole = lift_decomposition(&f, &f.abs(), &LatticeVector::zero(&s)).unwrap();
        assert_eq!(whole.f0.values(), f.values());
        assert!(whole.f1.is_zero(0.0));
    }

    #[test]
    fn optimal_decomposition_clamp() {
        let s = MeasureSpace::uniform(3);
        let couple = Couple::l1_linf(&s);
        let f = vec_on(&s, &[3.0, -1.0, 2.0]);
        let d = optimal_decomposition(&couple, &f, 1.0, 0.0).unwrap();
        assert_eq!(d.f0.values(), &[1.0, 0.0, 0.0]);
        assert_eq!(d.f1.values(), &[2.0, -1.0, 2.0]);
        // t beyond the total mass: everything goes to f0.
        let d = optimal_decomposition(&couple, &f, 10.0, 0.0).unwrap();
        assert_eq!(d.f0.values(), f.values());
        assert!(d.f1.is_zero(0.0));
    }

    #[test]
    fn k_equals_abs_k() {
        let s = MeasureSpace::new(vec![1.0, 2.0, 0.5]).unwrap();
        let couple = Couple::l1_linf(&s);
        for vals in [[1.0, -2.0, 3.0], [0.0, -1.0, -1.0], [2.5, 0.0, -0.5]] {
            let f = vec_on(&s, &vals);
            for t in [0.3, 1.0, 2.0, 5.0] {
                let a = k_value(&couple, &f, t).unwrap();
                let b = k_value(&couple, &f.abs(), t).unwrap();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
