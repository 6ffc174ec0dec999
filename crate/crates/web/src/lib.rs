//! Browser demo bindings. Every export returns a flat `Float64Array`;
//! the page in `index.html` reshapes and plots it.
//!
//! The plain functions carry the logic and are tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use infpdo::mollify::DyadicPartition;
use infpdo::ultrapoly::{lower_bound_check, LowerTarget, Mode, Ultrapolynomial};
use infpdo::weights::WeightSequence;
use infpdo::Result;
use wasm_bindgen::prelude::*;

const HORIZON: usize = 256;

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points.clamp(2, 4096);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Rows `rho, M(rho)` for `M_p = p!^s` on `[0, rho_max]`.
pub fn associated_curve(s: f64, rho_max: f64, points: usize) -> Result<Vec<f64>> {
    let seq = WeightSequence::gevrey(s, HORIZON)?;
    let mut out = Vec::with_capacity(2 * points);
    for rho in grid(0.0, rho_max, points) {
        out.push(rho);
        out.push(seq.associated(rho).value);
    }
    Ok(out)
}

/// Rows `xi, ln P(xi), ln(sinh(pi xi)/(pi xi)), ln lower bound` for the
/// Gevrey-1 ultrapolynomial with `l = q = 1` and bound `C~ e^{M(xi/k)}`.
pub fn ultrapoly_curve(k: f64, xi_max: f64, points: usize) -> Result<Vec<f64>> {
    let seq = WeightSequence::gevrey(1.0, HORIZON)?;
    let p = Ultrapolynomial::build(&seq, Mode::Beurling { l: 1.0 }, 1, xi_max.max(1.0))?;
    let xs = grid(0.0, xi_max, points);
    let lower = lower_bound_check(&p, &LowerTarget::Beurling { k }, &xs)?;
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(4 * xs.len());
    for (xi, ln_p, ln_bound) in lower.rows {
        let sinhc = if xi == 0.0 {
            0.0
        } else {
            ((pi * xi).sinh() / (pi * xi)).ln()
        };
        out.extend([xi, ln_p, sinhc, ln_bound]);
    }
    Ok(out)
}

/// Rows `xi, psi_0(xi), ..., psi_n(xi)` for the dyadic partition built on `p!^s`.
pub fn partition_curves(s: f64, r: f64, n: usize, xi_max: f64, points: usize) -> Result<Vec<f64>> {
    let seq = WeightSequence::gevrey(s, HORIZON)?;
    let part = DyadicPartition::new(&seq, s, r)?;
    let n = n.min(12);
    let mut out = Vec::with_capacity((n + 2) * points);
    for xi in grid(0.0, xi_max, points) {
        out.push(xi);
        for j in 0..=n {
            out.push(part.psi(j, xi)?);
        }
    }
    Ok(out)
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = associatedCurve)]
pub fn associated_curve_js(
    s: f64,
    rho_max: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsValue> {
    js(associated_curve(s, rho_max, points))
}

#[wasm_bindgen(js_name = ultrapolyCurve)]
pub fn ultrapoly_curve_js(
    k: f64,
    xi_max: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsValue> {
    js(ultrapoly_curve(k, xi_max, points))
}

#[wasm_bindgen(js_name = partitionCurves)]
pub fn partition_curves_js(
    s: f64,
    r: f64,
    n: usize,
    xi_max: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsValue> {
    js(partition_curves(s, r, n, xi_max, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn associated_matches_factorial_sup() {
        let v = associated_curve(1.0, 10.0, 11).unwrap();
        assert_eq!(v.len(), 22);
        // M(10) = ln(10^10 / 10!)
        let expect = 10.0 * 10f64.ln() - (1..=10).map(|j| (j as f64).ln()).sum::<f64>();
        assert!((v[21] - expect).abs() < 1e-12);
        assert!(v.chunks(2).all(|r| r[1] >= 0.0));
    }

    #[test]
    fn ultrapoly_tracks_sinh() {
        let v = ultrapoly_curve(2.0, 10.0, 41).unwrap();
        for row in v.chunks(4) {
            assert!((row[1] - row[2]).abs() < 1e-12, "{row:?}");
            assert!(row[1] >= row[3] - 1e-12);
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let v = partition_curves(2.0, 4.0, 8, 40.0, 81).unwrap();
        for row in v.chunks(10) {
            let sum: f64 = row[1..].iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn quasianalytic_order_is_rejected() {
        assert!(partition_curves(0.8, 4.0, 3, 10.0, 5).is_err());
    }
}
