use nalgebra::{DMatrix, DVector};

use super::{check_domain, ChartDescriptor, EndChart, SharedChart};
use crate::hyperbolic::{background_inner, frame, lorentz_boost, Dimension, PolarPoint};
use crate::{Error, Result};

/// Pullback of a chart under the hyperbolic isometry induced by the ambient
/// boost `Λ(−s)` in the `(x₀, x_axis)` plane.
///
/// With this orientation the mass vector of the boosted chart is `Λ(s)·m`.
#[derive(Clone, Debug)]
pub struct BoostedChart {
    source: SharedChart,
    axis: usize,
    rapidity: f64,
    map: DMatrix<f64>,
    r_min: f64,
}

/// Boosts `chart` by `rapidity` along ambient axis `axis ∈ 1..=n`.
pub fn boost_chart(chart: SharedChart, axis: usize, rapidity: f64) -> Result<BoostedChart> {
    let n = chart.dimension();
    if !rapidity.is_finite() {
        return Err(Error::usage("rapidity must be finite"));
    }
    let map = lorentz_boost(n, axis, -rapidity)?;
    if chart.r_max().is_finite() && rapidity != 0.0 {
        return Err(Error::domain(
            "boosting needs a source chart covering all large radii; bounded grid data cannot be boosted",
        ));
    }
    let r_min = boosted_r_min(chart.r_min(), rapidity);
    Ok(BoostedChart { source: chart, axis, rapidity, map, r_min })
}

/// Smallest `r` such that every point of radius `≥ r` lands at source radius
/// `≥ r_src`. The image has `x₀' = cosh s·W − sinh s·x_axis ≥ cosh s·W − |sinh s|·r`,
/// and the right side is increasing beyond its minimum.
fn boosted_r_min(r_src: f64, s: f64) -> f64 {
    if s == 0.0 {
        return r_src;
    }
    let target = r_src.hypot(1.0);
    let (c, sh) = (s.cosh(), s.sinh().abs());
    let low = |r: f64| c * r.hypot(1.0) - sh * r;
    let mut lo = sh; // r/W = tanh|s| at the minimum
    let mut hi = lo.max(1.0);
    while low(hi) < target {
        hi *= 2.0;
    }
    if low(lo) >= target {
        return lo.max(1e-12);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if low(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // A hair above the root so that rounding never lands below the source domain.
    hi * (1.0 + 1e-12)
}

impl BoostedChart {
    pub fn source(&self) -> &SharedChart {
        &self.source
    }

    /// The image point in the source chart and the matrix `O` with
    /// `dΨ f_i = Σ_k O_ki f_k(Ψ(p))`.
    fn transport(&self, p: &PolarPoint) -> Result<(PolarPoint, DMatrix<f64>)> {
        let n = p.dim();
        let big = self.map.clone();
        let image = &big * p.ambient();
        let xq = image.rows(1, n).into_owned();
        let q = PolarPoint::from_cartesian(xq.as_slice())?;
        let fp = frame(p);
        let fq = frame(&q);
        let x = p.cartesian();
        let w = p.lapse();
        let mut o = DMatrix::zeros(n, n);
        for (i, v) in fp.iter().enumerate() {
            let mut amb = DVector::zeros(n + 1);
            amb[0] = x.dot(v) / w;
            amb.rows_mut(1, n).copy_from(v);
            let pushed = &big * amb;
            let wv = pushed.rows(1, n).into_owned();
            for (k, fk) in fq.iter().enumerate() {
                o[(k, i)] = background_inner(&xq, &wv, fk);
            }
        }
        Ok((q, o))
    }
}

impl EndChart for BoostedChart {
    fn dimension(&self) -> Dimension {
        self.source.dimension()
    }

    fn r_min(&self) -> f64 {
        self.r_min
    }

    fn descriptor(&self) -> ChartDescriptor {
        let src = self.source.descriptor();
        ChartDescriptor::new("boosted")
            .with("axis", self.axis)
            .with("rapidity", self.rapidity)
            .with("source", serde_json::to_value(src).expect("descriptor"))
    }

    fn perturbation(&self, p: &PolarPoint) -> Result<DMatrix<f64>> {
        check_domain(self, p)?;
        if self.rapidity == 0.0 {
            return self.source.perturbation(p);
        }
        let (q, o) = self.transport(p)?;
        let e = self.source.perturbation(&q)?;
        let out = o.transpose() * e * &o;
        Ok((&out + out.transpose()) * 0.5)
    }

    fn perturbation_derivatives(&self, p: &PolarPoint) -> Result<Option<Vec<DMatrix<f64>>>> {
        if self.rapidity == 0.0 {
            return self.source.perturbation_derivatives(p);
        }
        Ok(None)
    }

    fn is_radially_warped(&self) -> bool {
        self.rapidity == 0.0 && self.source.is_radially_warped()
    }
}
