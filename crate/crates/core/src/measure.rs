//! Dimension, Perron vector and the normalized measure on islands.

use rug::float::Round;
use rug::ops::AssignRound;
use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generation::{GenerationFrame, Island};
use crate::numerics::{pow_certified, solve_monotone_root, CertifiedReal, Real, RootOptions, MAX_PRECISION};
use crate::typing::IncidenceTemplate;

pub type Matrix<T> = Vec<Vec<T>>;

/// `A_s` as an interval matrix.
pub fn eval_template(template: &IncidenceTemplate, s: &CertifiedReal) -> Result<Matrix<CertifiedReal>> {
    let p = s.prec();
    template
        .entries
        .iter()
        .map(|row| {
            row.iter()
                .map(|cell| {
                    cell.iter().try_fold(CertifiedReal::zero(p), |acc, r| Ok(acc + pow_certified(r, s)?))
                })
                .collect()
        })
        .collect()
}

fn power_vector_f64(a: &Matrix<f64>) -> Vec<f64> {
    let q = a.len();
    let mut v = vec![1.0; q];
    for _ in 0..5000 {
        // Shifting by the identity makes an irreducible pattern primitive.
        let mut w: Vec<f64> = (0..q).map(|i| v[i] + (0..q).map(|j| a[i][j] * v[j]).sum::<f64>()).collect();
        let norm = w.iter().cloned().fold(0.0, f64::max);
        w.iter_mut().for_each(|x| *x /= norm);
        let delta = w.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = w;
        if delta < 1e-15 {
            break;
        }
    }
    v.iter().map(|x| x.max(1e-300)).collect()
}

/// Solve `m x = b` by Gaussian elimination with partial pivoting.
fn solve_float(mut m: Matrix<Float>, mut b: Vec<Float>, prec: u32) -> Option<Vec<Float>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].clone().abs().partial_cmp(&m[j][col].clone().abs()).unwrap())?;
        if m[piv][col].is_zero() {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = Float::with_val(prec, &m[r][col] / &m[col][col]);
            for c in col..n {
                let t = Float::with_val(prec, &f * &m[col][c]);
                m[r][c] -= t;
            }
            let t = Float::with_val(prec, &f * &b[col]);
            b[r] -= t;
        }
    }
    let mut x = vec![Float::new(prec); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for c in r + 1..n {
            s -= Float::with_val(prec, &m[r][c] * &x[c]);
        }
        x[r] = Float::with_val(prec, &s / &m[r][r]);
    }
    Some(x)
}

/// Collatz–Wielandt enclosure `[min (Av)_i/v_i, max (Av)_i/v_i]` for a
/// positive `v`; valid for every matrix inside the interval matrix.
fn collatz_wielandt(a: &Matrix<CertifiedReal>, v: &[Float], prec: u32) -> CertifiedReal {
    let mut lo: Option<Float> = None;
    let mut hi: Option<Float> = None;
    for (i, row) in a.iter().enumerate() {
        let av = row
            .iter()
            .zip(v)
            .fold(CertifiedReal::zero(prec), |acc, (aij, vj)| acc + aij * &CertifiedReal::point(vj.clone()));
        let r = av / CertifiedReal::point(v[i].clone());
        lo = Some(match lo {
            Some(l) if &l <= r.lo() => l,
            _ => r.lo().clone(),
        });
        hi = Some(match hi {
            Some(h) if &h >= r.hi() => h,
            _ => r.hi().clone(),
        });
    }
    CertifiedReal::new(lo.unwrap(), hi.unwrap())
}

/// Certified enclosure of the spectral radius of a nonnegative irreducible
/// interval matrix, with a positive approximate Perron vector.
pub fn spectral_radius(a: &Matrix<CertifiedReal>) -> (CertifiedReal, Vec<Float>) {
    let prec = a.iter().flatten().map(CertifiedReal::prec).max().unwrap_or(64);
    let q = a.len();
    let mid64: Matrix<f64> = a.iter().map(|r| r.iter().map(CertifiedReal::mid_f64).collect()).collect();
    let mut v: Vec<Float> = power_vector_f64(&mid64).into_iter().map(|x| Float::with_val(prec, x)).collect();
    let mid: Matrix<Float> = a.iter().map(|r| r.iter().map(CertifiedReal::mid).collect()).collect();
    let mut best = collatz_wielandt(a, &v, prec);
    let floor = Float::with_val(prec, Float::i_exp(1, 8 - prec as i32));
    // Shifted inverse iteration: for μ above the spectral radius,
    // (μI − A)^{-1} is a positive matrix, so the iterate stays positive.
    for _ in 0..60 {
        let width = best.width();
        let mut shift = Float::with_val(prec, best.hi() + &width);
        if width.is_zero() {
            shift += &floor;
        }
        let m: Matrix<Float> = (0..q)
            .map(|i| {
                (0..q)
                    .map(|j| {
                        let d = if i == j { shift.clone() } else { Float::new(prec) };
                        Float::with_val(prec, &d - &mid[i][j])
                    })
                    .collect()
            })
            .collect();
        let Some(x) = solve_float(m, v.clone(), prec) else { break };
        if x.iter().any(|e| !(e.is_finite() && *e > 0)) {
            break;
        }
        let norm = x.iter().max_by(|a, b| a.partial_cmp(b).unwrap()).unwrap().clone();
        let x: Vec<Float> = x.into_iter().map(|e| Float::with_val(prec, &e / &norm)).collect();
        let cw = collatz_wielandt(a, &x, prec);
        let improved = cw.width() < best.width();
        if improved {
            best = cw;
            v = x;
        }
        if !improved || best.width() <= floor {
            break;
        }
    }
    (best, v)
}

fn row_sums_one(template: &IncidenceTemplate) -> bool {
    template
        .entries
        .iter()
        .all(|row| row.iter().flatten().fold(Rational::new(), |acc, r| acc + r) == 1)
}

/// The unique `α` with `r(A_α) = 1`.
pub fn solve_dimension(template: &IncidenceTemplate, tol: f64, prec: u32) -> Result<CertifiedReal> {
    if !crate::typing::check_irreducible(template) {
        return Err(Error::NotIrreducible);
    }
    if row_sums_one(template) {
        // A_1 is stochastic, so r(A_1) = 1 exactly.
        return Ok(CertifiedReal::one(prec));
    }
    let internal = tol.min(2f64.powi(-(prec as i32 - 24)));
    let opts = RootOptions { tol: internal, prec, max_prec: MAX_PRECISION, max_iter: 4 * prec as usize + 64 };
    let f = |s: &CertifiedReal| -> Result<CertifiedReal> {
        let a = eval_template(template, s)?;
        let (r, _) = spectral_radius(&a);
        Ok(r - CertifiedReal::one(s.prec()))
    };
    solve_monotone_root(f, (0.0, 1.0), &opts).map_err(|e| match e {
        Error::NoSignChange => Error::Domain("spectral radius of the count matrix is below 1".into()),
        other => other,
    })
}

fn interval_matvec(b: &[CertifiedReal], m: &Matrix<CertifiedReal>, x: &[CertifiedReal]) -> Vec<CertifiedReal> {
    b.iter()
        .zip(m)
        .map(|(bi, row)| row.iter().zip(x).fold(bi.clone(), |acc, (mij, xj)| acc + mij * xj))
        .collect()
}

/// Perron vector of `A_α` normalized by `a_1 = 1`.
///
/// The tail solves `a' = b + A'' a'` where `b` is the first column below the
/// diagonal and `A''` the trailing block. A box invariant under that affine
/// map for every matrix in the enclosure contains the exact tail.
pub fn principal_vector(template: &IncidenceTemplate, alpha: &CertifiedReal) -> Result<Vec<CertifiedReal>> {
    let prec = alpha.prec();
    let q = template.q;
    if alpha.lo() == alpha.hi() && *alpha.lo() == 1 && row_sums_one(template) {
        return Ok(vec![CertifiedReal::one(prec); q]);
    }
    if q == 1 {
        return Ok(vec![CertifiedReal::one(prec)]);
    }
    let a = eval_template(template, alpha)?;
    let b: Vec<CertifiedReal> = (1..q).map(|i| a[i][0].clone()).collect();
    let tail: Matrix<CertifiedReal> = (1..q).map(|i| a[i][1..].to_vec()).collect();
    let n = q - 1;

    let m: Matrix<Float> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = Float::with_val(prec, if i == j { 1 } else { 0 });
                    Float::with_val(prec, &d - &tail[i][j].mid())
                })
                .collect()
        })
        .collect();
    let x0 = solve_float(m, b.iter().map(CertifiedReal::mid).collect(), prec)
        .ok_or_else(|| Error::Domain("singular Perron system".into()))?;
    if x0.iter().any(|x| !(*x > 0)) {
        return Err(Error::Domain("Perron tail is not positive".into()));
    }
    // r(A'') < 1 via a Collatz–Wielandt upper bound.
    let cw = collatz_wielandt(&tail, &x0, prec);
    if !(cw.hi() < &Float::with_val(prec, 1)) {
        return Err(Error::Domain("trailing block is not a contraction".into()));
    }

    let mut eps = Float::with_val(prec, Float::i_exp(1, 16 - prec as i32));
    for _ in 0..prec {
        let x: Vec<CertifiedReal> = x0
            .iter()
            .map(|c| {
                let mut lo = Float::new(prec);
                lo.assign_round(c * (Float::with_val(prec, 1) - &eps), Round::Down);
                let mut hi = Float::new(prec);
                hi.assign_round(c * (Float::with_val(prec, 1) + &eps), Round::Up);
                CertifiedReal::new(lo, hi)
            })
            .collect();
        let y = interval_matvec(&b, &tail, &x);
        if y.iter().zip(&x).all(|(yi, xi)| xi.contains(yi)) {
            let mut x = y;
            for _ in 0..8 {
                let z = interval_matvec(&b, &tail, &x);
                x = z.iter().zip(&x).map(|(zi, xi)| zi.intersect(xi).unwrap_or_else(|| xi.clone())).collect();
            }
            let mut out = vec![CertifiedReal::one(prec)];
            out.extend(x);
            check_residual(&a, &out)?;
            return Ok(out);
        }
        eps *= 2;
        if eps > 0.25 {
            break;
        }
    }
    Err(Error::Undecidable { bits: prec, what: "Perron vector enclosure".into() })
}

fn check_residual(a: &Matrix<CertifiedReal>, v: &[CertifiedReal]) -> Result<()> {
    let prec = v[0].prec();
    let row0 = a[0].iter().zip(v).fold(CertifiedReal::zero(prec), |acc, (x, y)| acc + x * y);
    let r = row0 - CertifiedReal::one(prec);
    let mag = r.lo_f64().abs().max(r.hi_f64().abs());
    if r.contains_zero() || mag <= 1e-9 {
        Ok(())
    } else {
        Err(Error::Residual { residual: mag })
    }
}

/// Dimension, Perron vector and template; `λ(I) = |I|^α a_{type(I)}`.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureModel<R: Real> {
    pub alpha: R,
    pub perron: Vec<R>,
    #[serde(skip)]
    pub template: IncidenceTemplate,
    #[serde(skip)]
    pub prec: u32,
}

impl<R: Real> MeasureModel<R> {
    pub fn measure(&self, type_id: usize, len: &Rational) -> R {
        R::pow_rational(len, &self.alpha) * self.perron[type_id].clone()
    }

    pub fn island_measure(&self, island: &Island) -> Result<R> {
        let t = island.type_id.ok_or_else(|| Error::Untyped {
            left: island.left.to_string(),
            right: island.right.to_string(),
        })?;
        Ok(self.measure(t, &island.length()))
    }

    /// `Σ a_t |I|^α / |J|^α` over a list of `(type, |I|)` atoms.
    pub fn density(&self, parts: &[(usize, Rational)], len: &Rational) -> R {
        let p = self.prec;
        let mass = parts.iter().fold(R::from_rational(&Rational::new(), p), |acc, (t, l)| acc + self.measure(*t, l));
        mass / R::pow_rational(len, &self.alpha)
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha.to_f64()
    }
}

pub type CertifiedModel = MeasureModel<CertifiedReal>;
pub type FastModel = MeasureModel<f64>;

impl CertifiedModel {
    pub fn is_degenerate(&self) -> bool {
        *self.alpha.lo() >= 1
    }

    pub fn to_fast(&self) -> FastModel {
        MeasureModel {
            alpha: self.alpha.mid_f64(),
            perron: self.perron.iter().map(CertifiedReal::mid_f64).collect(),
            template: self.template.clone(),
            prec: 53,
        }
    }
}

pub fn build_model(template: &IncidenceTemplate, alpha_tol: f64, prec: u32) -> Result<CertifiedModel> {
    let alpha = solve_dimension(template, alpha_tol, prec)?;
    let perron = principal_vector(template, &alpha)?;
    Ok(MeasureModel { alpha, perron, template: template.clone(), prec })
}

/// Cumulative island measures of one frame for O(1) field-interval queries.
#[derive(Clone, Debug)]
pub struct FramePrefix<R: Real> {
    lefts: Vec<Rational>,
    rights: Vec<Rational>,
    cum: Vec<R>,
}

impl<R: Real> FramePrefix<R> {
    pub fn new(model: &MeasureModel<R>, frame: &GenerationFrame) -> Result<Self> {
        let mut cum = vec![R::from_rational(&Rational::new(), model.prec)];
        for isl in &frame.islands {
            let m = model.island_measure(isl)?;
            let next = cum.last().unwrap().clone() + m;
            cum.push(next);
        }
        Ok(FramePrefix {
            lefts: frame.islands.iter().map(|i| i.left.clone()).collect(),
            rights: frame.islands.iter().map(|i| i.right.clone()).collect(),
            cum,
        })
    }

    fn start_index(&self, x: &Rational) -> Result<usize> {
        if let Ok(i) = self.lefts.binary_search(x) {
            return Ok(i);
        }
        if let Ok(i) = self.rights.binary_search(x) {
            return Ok(i + 1);
        }
        Err(Error::NotFieldPoint(x.to_string()))
    }

    fn end_index(&self, y: &Rational) -> Result<usize> {
        if let Ok(i) = self.rights.binary_search(y) {
            return Ok(i + 1);
        }
        if let Ok(i) = self.lefts.binary_search(y) {
            return Ok(i);
        }
        Err(Error::NotFieldPoint(y.to_string()))
    }

    pub fn total(&self) -> R {
        self.cum.last().unwrap().clone()
    }

    /// `λ([x, y])` for field points `x ≤ y` of the frame.
    pub fn measure(&self, x: &Rational, y: &Rational) -> Result<R> {
        let s = self.start_index(x)?;
        let e = self.end_index(y)?;
        if e <= s {
            return Ok(self.cum[0].clone() - self.cum[0].clone());
        }
        Ok(self.cum[e].clone() - self.cum[s].clone())
    }
}

pub fn interval_measure<R: Real>(
    model: &MeasureModel<R>,
    frame: &GenerationFrame,
    left: &Rational,
    right: &Rational,
) -> Result<R> {
    FramePrefix::new(model, frame)?.measure(left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::parse_spec;
    use crate::typing::{classify_types, incidence_template};

    fn model(text: &str) -> (crate::typing::TypeTable, CertifiedModel) {
        let spec = parse_spec(text).unwrap();
        let table = classify_types(&spec, 12).unwrap();
        let tpl = incidence_template(&table);
        let m = build_model(&tpl, 1e-12, 128).unwrap();
        (table, m)
    }

    const CANTOR: &str = r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/3","b":"2/3"}]}"#;
    const LAMBDA_NINTH: &str =
        r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/9","b":"8/27"},{"rho":"1/3","b":"2/3"}],"scheme":"lambda"}"#;

    #[test]
    fn cantor_dimension() {
        let (_, m) = model(CANTOR);
        let exact = 2f64.ln() / 3f64.ln();
        assert!(m.alpha.width_f64() < 1e-12);
        assert!((m.alpha.mid_f64() - exact).abs() < 1e-15);
        assert_eq!(m.perron.len(), 1);
    }

    #[test]
    fn lambda_ninth_dimension_and_measures() {
        let (table, m) = model(LAMBDA_NINTH);
        // Largest root of x³ − 6x² + 5x − 1, by bisection on [4, 6].
        let p = |x: f64| x * x * x - 6.0 * x * x + 5.0 * x - 1.0;
        let (mut lo, mut hi) = (4.0f64, 6.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let expect = lo.ln() / 9f64.ln();
        assert!((m.alpha.mid_f64() - expect).abs() < 1e-12, "{} vs {expect}", m.alpha.mid_f64());
        let a = m.alpha.mid_f64();
        let i2 = &table.frames[1].islands[0];
        let i3 = &table.frames[1].islands[1];
        let l2 = m.island_measure(i2).unwrap().mid_f64();
        let l3 = m.island_measure(i3).unwrap().mid_f64();
        assert!((l2 - (3f64.powf(-a) - 9f64.powf(-a))).abs() < 1e-12);
        assert!((l3 - (1.0 - 2.0 * 3f64.powf(-a) + 9f64.powf(-a))).abs() < 1e-12);
    }

    #[test]
    fn mass_is_conserved() {
        let (table, m) = model(LAMBDA_NINTH);
        for f in &table.frames {
            let p = FramePrefix::new(&m, f).unwrap();
            assert!(p.total().contains_f64(1.0) || (p.total().mid_f64() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_radius_at_alpha_is_one() {
        let (_, m) = model(LAMBDA_NINTH);
        let a = eval_template(&m.template, &m.alpha).unwrap();
        let (r, _) = spectral_radius(&a);
        assert!(r.contains_f64(1.0));
        assert!(r.width_f64() < 1e-11);
    }

    #[test]
    fn degenerate_interval_attractor() {
        // Touching pieces tile [0,1].
        let (_, m) = model(
            r#"{"maps":[{"rho":"1/4","b":"0"},{"rho":"1/4","b":"1/4"},{"rho":"1/2","b":"1/2"}]}"#,
        );
        assert_eq!(m.alpha.lo().to_f64(), 1.0);
        assert!(m.is_degenerate());
        assert!(m.perron.iter().all(|a| a.contains_f64(1.0)));
    }

    #[test]
    fn field_interval_queries() {
        let (table, m) = model(LAMBDA_NINTH);
        let f = &table.frames[1];
        let p = FramePrefix::new(&m, f).unwrap();
        let whole = p.measure(&Rational::from(0), &Rational::from(1)).unwrap();
        assert!(whole.contains_f64(1.0) || (whole.mid_f64() - 1.0).abs() < 1e-13);
        let one = p.measure(&f.islands[1].left, &f.islands[1].right).unwrap();
        assert!((one.mid_f64() - m.island_measure(&f.islands[1]).unwrap().mid_f64()).abs() < 1e-14);
        assert!(p.measure(&Rational::from((1, 7)), &Rational::from(1)).is_err());
    }

    /// Root of a decreasing `f` on (0, 1) in plain f64.
    fn bisect(f: impl Fn(f64) -> f64) -> f64 {
        let (mut lo, mut hi) = (1e-9, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    fn radius_f64(a: &[Vec<f64>]) -> f64 {
        let mut v = vec![1.0; a.len()];
        let mut r = 0.0;
        for _ in 0..4000 {
            let w: Vec<f64> = (0..a.len()).map(|i| v[i] + (0..a.len()).map(|j| a[i][j] * v[j]).sum::<f64>()).collect();
            r = w.iter().cloned().fold(0.0, f64::max);
            v = w.iter().map(|x| x / r).collect();
        }
        // The iteration ran on A + I.
        r - 2.0
    }

    fn pair_family(rho: &str, r: &str) -> String {
        let rq = crate::numerics::parse_rational(r).unwrap();
        let pq = crate::numerics::parse_rational(rho).unwrap();
        let b2 = Rational::from(&pq * (Rational::from(1) - &rq));
        let b3 = Rational::from(1) - &rq;
        format!(r#"{{"maps":[{{"rho":"{rho}","b":"0"}},{{"rho":"{r}","b":"{b2}"}},{{"rho":"{r}","b":"{b3}"}}]}}"#)
    }

    #[test]
    fn pair_family_closed_form() {
        for (rs, r, rhos, rho) in [("1/4", 0.25f64, "1/3", 1.0 / 3.0), ("1/16", 0.0625, "1/16", 0.0625)] {
            let text = pair_family(rhos, rs);
            let (_, m) = model(&text);
            let c = rho + r - rho * r;
            let expect = bisect(|s| {
                let a = vec![
                    vec![r.powf(s), c.powf(s)],
                    vec![r.powf(2.0 * s) / c.powf(s), rho.powf(s) + r.powf(s)],
                ];
                radius_f64(&a)
            });
            assert!((m.alpha.mid_f64() - expect).abs() < 1e-10, "{} vs {expect}", m.alpha.mid_f64());
        }
    }

    #[test]
    fn four_quarters_closed_form() {
        let (_, m) = model(
            r#"{"maps":[{"rho":"1/4","b":"0"},{"rho":"1/4","b":"1/4"},{"rho":"1/4","b":"3/8"},{"rho":"1/4","b":"3/4"}]}"#,
        );
        let expect = bisect(|s| {
            let a = vec![
                vec![2.0 / 4f64.powf(s), (3.0 / 8.0f64).powf(s), 0.0],
                vec![2.0 / 6f64.powf(s), 1.0 / 4f64.powf(s), 1.0 / 3f64.powf(s)],
                vec![2.0 / 8f64.powf(s), (3.0 / 16.0f64).powf(s), 2.0 / 4f64.powf(s)],
            ];
            radius_f64(&a)
        });
        assert!((m.alpha.mid_f64() - expect).abs() < 1e-10, "{} vs {expect}", m.alpha.mid_f64());
    }

    #[test]
    fn sixteenths_first_island() {
        let (table, m) = model(&pair_family("1/16", "1/16"));
        let a = m.alpha.mid_f64();
        let first = m.island_measure(&table.frames[1].islands[0]).unwrap().mid_f64();
        assert!((first - (1.0 - 16f64.powf(-a))).abs() < 1e-12);
    }
}
