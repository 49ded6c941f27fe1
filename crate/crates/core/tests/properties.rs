use std::sync::Arc;

use magband::experiments::{
    lipschitz_probe, symmetry_defect, EdgeSelector, FluxSweep, SweepModel, Verdict,
};
use magband::kernel::assemble;
use magband::lattice::{build_deformed_lattice, build_square_lattice};
use magband::magnetics::peierls_twist;
use magband::norms::{embedding_check, operator_norm, schur_holmgren_norm};
use magband::resolvent::{factorization_defect, resolvent};
use magband::spectral::{
    eigh, eigvalsh, hausdorff_sets, projector_defects, projector_from_eigen, ContourSpec,
};
use magband::{c64, Flux, GeneratingKernel, Lattice, PhaseSource, SpectralSummary};
use proptest::prelude::*;

fn square(n: usize) -> Arc<Lattice> {
    Arc::new(build_square_lattice(n).unwrap())
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn generator() -> impl Strategy<Value = GeneratingKernel> {
    prop_oneof![
        Just(GeneratingKernel::HarperNN),
        (0.5f64..2.0).prop_map(|rate| GeneratingKernel::ExpDecay { rate }),
        (4.0f64..8.0).prop_map(|exponent| GeneratingKernel::PowerDecay { exponent }),
        (0.0f64..2.0).prop_map(|mass| GeneratingKernel::StaggeredMassHarper { mass }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn twist_is_hermitian_and_bounded_by_schur(gen in generator(), b in -4.0f64..4.0) {
        let k = assemble(&square(6), &gen, Flux::ZERO).unwrap();
        let kb = peierls_twist(&k, Flux(b), PhaseSource::Standard).unwrap();
        prop_assert!(kb.hermiticity_defect() <= 1e-12);
        // unimodular phases leave the column sums of |K| unchanged
        prop_assert!((schur_holmgren_norm(&kb) - schur_holmgren_norm(&k)).abs() <= 1e-12);
        prop_assert!(operator_norm(&kb).unwrap() <= schur_holmgren_norm(&k) * (1.0 + 1e-12));
    }

    #[test]
    fn spectrum_is_even_in_b(gen in generator(), b in 0.0f64..3.0) {
        let d = symmetry_defect(&square(6), &gen, Flux(b), PhaseSource::Standard).unwrap();
        prop_assert!(d <= 1e-10, "defect {d}");
    }

    #[test]
    fn edges_move_by_at_most_the_norm_change(gen in generator(), b in 0.0f64..2.0) {
        let k = assemble(&square(6), &gen, Flux::ZERO).unwrap();
        let kb = peierls_twist(&k, Flux(b), PhaseSource::Standard).unwrap();
        let s0 = eigvalsh(k.matrix.as_ref()).unwrap();
        let s1 = eigvalsh(kb.matrix.as_ref()).unwrap();
        let d = &kb.matrix - &k.matrix;
        let dist = eigvalsh(d.as_ref()).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let n = s0.len();
        prop_assert!((s0[n - 1] - s1[n - 1]).abs() <= dist + 1e-12);
        prop_assert!((s0[0] - s1[0]).abs() <= dist + 1e-12);
        prop_assert!(hausdorff_sets(&s0, &s1).unwrap() <= dist + 1e-12);
    }

    #[test]
    fn factorization_is_exact(b in -0.5f64..0.5, re in 4.5f64..8.0, im in -1.0f64..1.0) {
        let k = assemble(&square(5), &GeneratingKernel::HarperNN, Flux::ZERO).unwrap();
        let z = c64::new(re, im);
        let g = resolvent(&k, z).unwrap();
        prop_assert!(factorization_defect(&k, &g, Flux(b)).unwrap() <= 1e-12);
    }

    #[test]
    fn projectors_are_orthogonal_and_commute(mass in 0.5f64..2.0, b in 0.0f64..0.3) {
        let gen = GeneratingKernel::StaggeredMassHarper { mass };
        let k = assemble(&square(6), &gen, Flux::ZERO).unwrap();
        let kb = peierls_twist(&k, Flux(b), PhaseSource::Standard).unwrap();
        let eig = eigh(kb.matrix.as_ref()).unwrap();
        let top = eig.values[eig.values.len() - 1];
        let contour = ContourSpec::through(0.0, top + 1.0, 64).unwrap();
        let p = projector_from_eigen(&eig, &contour).unwrap();
        let d = projector_defects(p.as_ref(), kb.matrix.as_ref());
        prop_assert!(d.idempotence <= 1e-10 && d.self_adjointness <= 1e-10 && d.commutator <= 1e-10);
    }

    #[test]
    fn deformed_sites_move_at_most_the_amplitude(amplitude in 0.0f64..0.49, seed in any::<u64>()) {
        let lat = build_deformed_lattice(5, amplitude, seed).unwrap();
        let image = lat.integer_image().unwrap();
        let pos = lat.positions();
        for (p, v) in pos.iter().zip(image) {
            let dx = p.x1 - v[0] as f64;
            let dy = p.x2 - v[1] as f64;
            prop_assert!((dx * dx + dy * dy).sqrt() <= amplitude + 1e-15);
        }
        for i in 0..pos.len() {
            for j in 0..i {
                prop_assert!((pos[i] - pos[j]).norm() > 0.0);
            }
        }
    }

    #[test]
    fn hausdorff_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 1..8),
        b in prop::collection::vec(-5.0f64..5.0, 1..8),
        c in prop::collection::vec(-5.0f64..5.0, 1..8),
    ) {
        let (a, b, c) = (sorted(a), sorted(b), sorted(c));
        let ab = hausdorff_sets(&a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff_sets(&b, &a).unwrap());
        prop_assert_eq!(hausdorff_sets(&a, &a).unwrap(), 0.0);
        let via = hausdorff_sets(&a, &c).unwrap() + hausdorff_sets(&c, &b).unwrap();
        prop_assert!(ab <= via + 1e-12);
    }

    #[test]
    fn linear_edges_are_bounded(e0 in -5.0f64..5.0, slope in 0.1f64..3.0) {
        let b: Vec<f64> = (0..8).map(|k| if k == 0 { 0.0 } else { 2f64.powi(k - 9) }).collect();
        let rows = b
            .iter()
            .map(|&x| SpectralSummary::from_eigenvalues(vec![e0 - 10.0, e0 + slope * x], None).unwrap())
            .collect();
        let sweep = FluxSweep::from_rows(
            SweepModel::new("linear", "none", PhaseSource::Standard),
            b,
            rows,
        )
        .unwrap();
        let r = lipschitz_probe(&sweep, EdgeSelector::EPlus, 0.0, 3.0).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Bounded);
        prop_assert!((r.max_quotient - slope).abs() <= 1e-9 * slope.max(1.0) / 2f64.powi(-8));
    }

    #[test]
    fn embedding_holds_for_exponential_kernels(rate in 0.5f64..3.0) {
        let k = assemble(&square(6), &GeneratingKernel::ExpDecay { rate }, Flux::ZERO).unwrap();
        prop_assert!(embedding_check(&k, 3.0, 1.5, 0.25).unwrap().pass);
    }
}
