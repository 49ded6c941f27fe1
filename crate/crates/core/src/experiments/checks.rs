//! Cut-off reduction and edge-comparison checks on a finite box.

use std::sync::Arc;

use faer::{Mat, MatRef};
use serde_json::json;

use crate::c64;
use crate::error::{Error, Result};
use crate::kernel::{
    apply_cutoff_hat, apply_cutoff_tilde, assemble, assemble_b_family, comparison_operator,
    GeneratingKernel,
};
use crate::lattice::Lattice;
use crate::magnetics::{peierls_twist, Flux, PhaseSource};
use crate::norms::{c_alpha_matrix, c_alpha_norm};
use crate::probe::ProbeReport;
use crate::spectral::eigvalsh;

/// Slack for comparing two extreme eigenvalues.
const EDGE_SLACK: f64 = 1e-10;

/// Relative slack for norm inequalities that can be tight.
const NORM_SLACK: f64 = 1e-12;

fn extremes(m: MatRef<'_, c64>) -> Result<(f64, f64)> {
    let v = eigvalsh(m)?;
    Ok((v[0], v[v.len() - 1]))
}

/// Spectral norm of a Hermitian difference.
fn hermitian_distance(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<f64> {
    let d: Mat<c64> = a - b;
    let (lo, hi) = extremes(d.as_ref())?;
    Ok(lo.abs().max(hi.abs()))
}

fn require_b_independent(gen: &GeneratingKernel) -> Result<()> {
    if matches!(gen, GeneratingKernel::BDependent { .. }) {
        return Err(Error::InvalidParameter(
            "expected a b-independent generator".into(),
        ));
    }
    Ok(())
}

fn positive_b(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "b must be positive, got {b}"
        )))
    }
}

/// Verifies `‖K - K̂_b‖ <= b‖K‖_{C²}`, `‖K_b - K̃_b‖ <= b‖K‖_{C²}` and
/// `|E_+(b) - E_+(0)| <= 2b‖K‖_{C²} + |sup σ(K̃_b) - sup σ(K̂_b)|`.
pub fn cutoff_reduction_check(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b: Flux,
) -> Result<ProbeReport> {
    require_b_independent(gen)?;
    let bv = b.value();
    positive_b(bv)?;
    let k = assemble(lattice, gen, Flux::ZERO)?;
    let kb = peierls_twist(&k, b, PhaseSource::Standard)?;
    let hat = apply_cutoff_hat(&k, b)?;
    let tilde = apply_cutoff_tilde(&k, b, PhaseSource::Standard)?;
    let c2 = c_alpha_norm(&k, 2.0);
    let bound = bv * c2;

    let mut r = ProbeReport::new("cutoff_reduction")
        .input("b", bv)
        .input("dim", k.dim())
        .input("kernel", gen.description());
    r.measure("c2_norm", c2);
    let hat_dist = hermitian_distance(k.matrix.as_ref(), hat.matrix.as_ref())?;
    r.check_le("untwisted_cutoff", hat_dist, bound * (1.0 + NORM_SLACK));
    let tilde_dist = hermitian_distance(kb.matrix.as_ref(), tilde.matrix.as_ref())?;
    r.check_le("twisted_cutoff", tilde_dist, bound * (1.0 + NORM_SLACK));

    let (_, e0) = extremes(k.matrix.as_ref())?;
    let (_, eb) = extremes(kb.matrix.as_ref())?;
    let (_, sup_hat) = extremes(hat.matrix.as_ref())?;
    let (_, sup_tilde) = extremes(tilde.matrix.as_ref())?;
    r.measure("e_plus_0", e0);
    r.measure("e_plus_b", eb);
    let rhs = 2.0 * bound + (sup_tilde - sup_hat).abs();
    r.check_le("edge_reduction", (eb - e0).abs(), rhs + EDGE_SLACK);
    Ok(r)
}

/// Checks `inf σ(A_b(t)) - 1e-10 <= inf σ(K̃_b)` and
/// `sup σ(K̃_b) <= sup σ(A_b(t)) + 1e-10`, and reports `‖A_b(1/b) - K̂_b‖/b`.
pub fn edge_comparison_check(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b: Flux,
    t: f64,
) -> Result<ProbeReport> {
    require_b_independent(gen)?;
    let bv = b.value();
    positive_b(bv)?;
    let k = assemble(lattice, gen, Flux::ZERO)?;
    let tilde = apply_cutoff_tilde(&k, b, PhaseSource::Standard)?;
    let a = comparison_operator(&k, b, t)?;
    let (tilde_inf, tilde_sup) = extremes(tilde.matrix.as_ref())?;
    let (a_inf, a_sup) = extremes(a.matrix.as_ref())?;

    let mut r = ProbeReport::new("edge_comparison")
        .input("b", bv)
        .input("t", t)
        .input("dim", k.dim())
        .input("kernel", gen.description());
    r.measure("sup_tilde", tilde_sup);
    r.measure("inf_tilde", tilde_inf);
    r.check_le("sup_comparison", tilde_sup, a_sup + EDGE_SLACK);
    r.check_ge("inf_comparison", tilde_inf, a_inf - EDGE_SLACK);

    let hat = apply_cutoff_hat(&k, b)?;
    let a_ref = comparison_operator(&k, b, 1.0 / bv)?;
    let dist = hermitian_distance(a_ref.matrix.as_ref(), hat.matrix.as_ref())?;
    r.measure("comparison_defect_over_b", dist / bv);
    Ok(r)
}

/// `C0 = e^u u` with `u = 1/(4 tanh 2)`: on the support of `K̂_b`,
/// `e^{b r²/(4 tanh 2)} - 1 <= C0·b·⟨r⟩²`.
pub fn comparison_constant() -> f64 {
    let u = 0.25 / 2f64.tanh();
    u * u.exp()
}

/// `‖A_b(1/b) - K̂_b‖/b <= C0‖K‖_{C²}` over `b = 2^{-k}`, `k_min <= k <= k_max`.
pub fn comparison_scaling_check(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    k_min: u32,
    k_max: u32,
) -> Result<ProbeReport> {
    require_b_independent(gen)?;
    if k_min > k_max {
        return Err(Error::InvalidParameter(format!(
            "k_min {k_min} > k_max {k_max}"
        )));
    }
    let k = assemble(lattice, gen, Flux::ZERO)?;
    let bound = comparison_constant() * c_alpha_norm(&k, 2.0);
    let mut r = ProbeReport::new("comparison_scaling")
        .input("k_min", k_min)
        .input("k_max", k_max)
        .input("kernel", gen.description());
    let mut b_values = Vec::new();
    let mut ratios = Vec::new();
    for e in k_min..=k_max {
        let b = 0.5f64.powi(e as i32);
        let hat = apply_cutoff_hat(&k, Flux(b))?;
        let a = comparison_operator(&k, Flux(b), 1.0 / b)?;
        b_values.push(b);
        ratios.push(hermitian_distance(a.matrix.as_ref(), hat.matrix.as_ref())? / b);
    }
    r.measure("b", json!(b_values));
    r.measure("ratios", json!(ratios));
    let max = ratios.iter().copied().fold(0.0, f64::max);
    r.check_le("max_ratio", max, bound * (1.0 + NORM_SLACK));
    Ok(r)
}

/// `sup σ(A_b(t))` is nonincreasing in `t` for kernels with nonnegative
/// entries: the growth factor decreases entrywise and the top eigenvalue of a
/// nonnegative matrix is monotone in its entries.
pub fn comparison_monotonicity_check(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b: Flux,
    t_values: &[f64],
) -> Result<ProbeReport> {
    require_b_independent(gen)?;
    if !gen.is_nonnegative() {
        return Err(Error::InvalidParameter(format!(
            "monotonicity needs a nonnegative kernel, got {}",
            gen.description()
        )));
    }
    if t_values.len() < 2 || t_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "need at least two increasing t values".into(),
        ));
    }
    let k = assemble(lattice, gen, Flux::ZERO)?;
    let sups = t_values
        .iter()
        .map(|&t| Ok(extremes(comparison_operator(&k, b, t)?.matrix.as_ref())?.1))
        .collect::<Result<Vec<_>>>()?;
    let mut r = ProbeReport::new("comparison_monotonicity")
        .input("b", b.value())
        .input("t", json!(t_values))
        .input("kernel", gen.description());
    r.measure("sup", json!(sups));
    let worst = sups
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    r.check_le("max_increase", worst, EDGE_SLACK);
    Ok(r)
}

/// `‖K(·;b) - K(·;0)‖_{C⁰} <= s‖base‖_{C⁰}|b|` for a `b`-dependent generator,
/// plus Hermiticity of the twisted family, at each `b`.
pub fn b_family_bound_check(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b_values: &[f64],
) -> Result<ProbeReport> {
    let GeneratingKernel::BDependent {
        base,
        modulation_scale,
    } = gen
    else {
        return Err(Error::InvalidParameter(
            "b_family_bound_check needs a BDependent generator".into(),
        ));
    };
    let k0 = assemble(lattice, gen, Flux::ZERO)?;
    let base_c0 = c_alpha_norm(&assemble(lattice, base, Flux::ZERO)?, 0.0);
    let mut r = ProbeReport::new("b_family_bound")
        .input("b", json!(b_values))
        .input("kernel", gen.description());
    r.measure("base_c0", base_c0);
    let mut worst_slack = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    let mut hermitian = true;
    for &b in b_values {
        let kb = assemble(lattice, gen, Flux(b))?;
        let d: Mat<c64> = &kb.matrix - &k0.matrix;
        let measured = c_alpha_matrix(d.as_ref(), lattice, 0.0);
        let bound = modulation_scale.abs() * base_c0 * b.abs();
        let slack = bound * (1.0 + NORM_SLACK) - measured;
        if slack < worst_slack {
            worst_slack = slack;
            worst = (measured, bound * (1.0 + NORM_SLACK));
        }
        hermitian &= assemble_b_family(lattice, gen, Flux(b))?.hermiticity_defect() <= 1e-12;
    }
    r.check_le("c0_difference", worst.0, worst.1);
    r.check_that("hermitian", hermitian);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_square_lattice;

    fn square(n: usize) -> Arc<Lattice> {
        Arc::new(build_square_lattice(n).unwrap())
    }

    #[test]
    fn tiny_b_makes_cutoffs_trivial() {
        // √b·diam <= 1 on a 4×4 box
        let lat = square(4);
        let r = cutoff_reduction_check(&lat, &GeneratingKernel::power_decay(), Flux(0.05)).unwrap();
        assert!(r.is_ok(), "{r:?}");
        assert_eq!(r.measured["untwisted_cutoff"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn cutoff_bounds_hold() {
        let lat = square(10);
        for (gen, b) in [
            (GeneratingKernel::HarperNN, 0.25),
            (GeneratingKernel::power_decay(), 0.1),
        ] {
            let r = cutoff_reduction_check(&lat, &gen, Flux(b)).unwrap();
            assert!(r.is_ok(), "{r:?}");
        }
    }

    #[test]
    fn harper_cutoff_at_b_one_removes_nothing() {
        // nearest neighbours sit at distance 1 = 1/√b
        let lat = square(6);
        let r = cutoff_reduction_check(&lat, &GeneratingKernel::HarperNN, Flux(1.0)).unwrap();
        assert_eq!(r.measured["untwisted_cutoff"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn edge_comparison_holds() {
        let lat = square(10);
        for b in [1e-3, 0.2] {
            let r =
                edge_comparison_check(&lat, &GeneratingKernel::HarperNN, Flux(b), 1.0 / b).unwrap();
            assert!(r.is_ok(), "{r:?}");
        }
        let r = edge_comparison_check(
            &lat,
            &GeneratingKernel::ExpDecay { rate: 1.0 },
            Flux(0.1),
            10.0,
        )
        .unwrap();
        assert!(r.is_ok(), "{r:?}");
    }

    #[test]
    fn comparison_constant_value() {
        let u = 1.0 / (4.0 * 2f64.tanh());
        assert!((comparison_constant() - u * u.exp()).abs() < 1e-15);
        assert!((comparison_constant() - 0.33613).abs() < 1e-4);
    }

    #[test]
    fn harper_comparison_defect_is_explicit() {
        // every entry is 1 at distance 1, so A - K̂ = (e^{b/(4 tanh 2)} - 1)·K
        let lat = square(8);
        let k = assemble(&lat, &GeneratingKernel::HarperNN, Flux::ZERO).unwrap();
        let (_, top) = extremes(k.matrix.as_ref()).unwrap();
        let b = 0.125;
        let r = edge_comparison_check(&lat, &GeneratingKernel::HarperNN, Flux(b), 1.0).unwrap();
        let expected = ((b / (4.0 * 2f64.tanh())).exp() - 1.0) * top / b;
        let got = r.measured["comparison_defect_over_b"].as_f64().unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn scaling_and_monotonicity() {
        let lat = square(8);
        let r = comparison_scaling_check(&lat, &GeneratingKernel::power_decay(), 2, 7).unwrap();
        assert!(r.is_ok(), "{r:?}");
        let r = comparison_monotonicity_check(
            &lat,
            &GeneratingKernel::HarperNN,
            Flux(0.2),
            &[0.5, 1.0, 5.0],
        )
        .unwrap();
        assert!(r.is_ok(), "{r:?}");
        let staggered = GeneratingKernel::StaggeredMassHarper { mass: 1.0 };
        assert!(comparison_monotonicity_check(&lat, &staggered, Flux(0.2), &[0.5, 1.0]).is_err());
    }

    #[test]
    fn b_family_bound() {
        let lat = square(6);
        let gen = GeneratingKernel::b_dependent(GeneratingKernel::HarperNN, 0.5);
        let r = b_family_bound_check(&lat, &gen, &[0.01, 0.1, 0.3]).unwrap();
        assert!(r.is_ok(), "{r:?}");
        assert!(b_family_bound_check(&lat, &GeneratingKernel::HarperNN, &[0.1]).is_err());
    }
}
