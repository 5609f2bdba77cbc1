use concept_fock::classicality::{
    build_kolmogorov_model, check_all_i_zero, check_classical, check_theorem1, check_theorem2,
    check_theorem3, compute_derived, KolmogorovModel,
};
use concept_fock::datamodel::{likert_to_weight, load_dataset, write_dataset};
use concept_fock::fitter::{fit_record, M2Mode};
use concept_fock::fock::{
    entangled_state_from_table, fock_membership, quadrant_masses, solution_interval,
    table_from_margins, theorem4_forward, CombinationParams, FockParameters, SecondSectorTable,
};
use concept_fock::hilbert::{
    construct_frame_for, first_sector_interval, first_sector_mu, interference_capacity,
    interference_term, solve_first_sector_angle, Frame,
};
use concept_fock::stats::{one_sample_t_test, paired_t_test, sorted_regression, t_cdf};
use concept_fock::{ConceptPairDataset, MembershipRecord, Pair};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn any_record() -> impl Strategy<Value = MembershipRecord> {
    prop::array::uniform8(unit()).prop_map(|w| MembershipRecord::new("r", w).unwrap())
}

fn atoms() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0..1.0f64).prop_filter_map("zero mass", |a| {
        let s: f64 = a.iter().sum();
        (s > 1e-6).then(|| a.map(|x| x / s))
    })
}

/// Atoms that are multiples of 1/64, so every sum is exact.
fn dyadic_atoms() -> impl Strategy<Value = [f64; 4]> {
    (0u32..=64, 0u32..=64, 0u32..=64).prop_filter_map("over unit mass", |(a, b, c)| {
        (a + b + c <= 64).then(|| [a, b, c, 64 - a - b - c].map(|k| k as f64 / 64.0))
    })
}

fn classical_record() -> impl Strategy<Value = MembershipRecord> {
    atoms().prop_map(|a| KolmogorovModel::new(a).unwrap().record("k"))
}

fn marginals() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(unit())
}

fn verdicts(r: &MembershipRecord, tol: f64) -> [bool; 5] {
    [
        check_theorem1(r, tol).verdict.holds,
        check_theorem2(r, tol).holds,
        check_theorem3(r, tol).holds,
        check_classical(r, tol).holds,
        check_all_i_zero(r, tol).holds,
    ]
}

fn swapped(f: &Frame) -> Frame {
    let s = [1, 0, 3, 2];
    Frame {
        vectors: s.map(|k| f.vectors[k]),
        phases_deg: s.map(|k| f.phases_deg[k]),
        marginals: s.map(|k| f.marginals[k]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dataset_round_trip(recs in prop::collection::vec(("[A-Za-z ,\"']{0,10}[A-Za-z]", prop::array::uniform8(unit())), 0..12)) {
        let records = recs
            .into_iter()
            .enumerate()
            .map(|(i, (name, w))| MembershipRecord::new(format!("{i}{name}"), w).unwrap())
            .collect();
        let ds = ConceptPairDataset::new("p", records).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        prop_assert_eq!(load_dataset(buf.as_slice(), "p").unwrap(), ds);
    }

    #[test]
    fn likert_weight_ignores_order(col in prop::collection::vec(-3i32..=3, 1..50).prop_shuffle(), seed in any::<u64>()) {
        let mut shuffled = col.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed % n as u64) as usize);
        shuffled.reverse();
        prop_assert_eq!(likert_to_weight(&col).unwrap(), likert_to_weight(&shuffled).unwrap());
    }

    #[test]
    fn likert_flip_complements(col in prop::collection::vec(-3i32..=3, 1..50)) {
        let flipped: Vec<i32> = col.iter().map(|s| -s).collect();
        let sum = likert_to_weight(&col).unwrap() + likert_to_weight(&flipped).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classical_records_satisfy_every_theorem(r in classical_record()) {
        prop_assert_eq!(verdicts(&r, 1e-9), [true; 5]);
        let d = compute_derived(&r);
        for i in d.i_values() {
            prop_assert!(i.abs() <= 1e-12);
        }
        prop_assert!((r.conjunctions().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn perturbed_records_fail_every_theorem(
        r in classical_record(),
        idx in prop::sample::subsequence((0..8usize).collect::<Vec<_>>(), 1..=8),
        sizes in prop::array::uniform8(1e-3..0.1f64),
        signs in prop::array::uniform8(any::<bool>()),
    ) {
        let mut w = r.weights();
        for &k in &idx {
            let d = if signs[k] { sizes[k] } else { -sizes[k] };
            // flip direction where the bound would swallow the change
            w[k] = if (0.0..=1.0).contains(&(w[k] + d)) { w[k] + d } else { w[k] - d };
        }
        let p = MembershipRecord::new("p", w).unwrap();
        let v = verdicts(&p, 1e-9);
        prop_assert!(v.iter().all(|&x| x == v[0]), "{:?}", v);
    }

    #[test]
    fn redundant_identity_follows_exactly(a in dyadic_atoms()) {
        let r = KolmogorovModel::new(a).unwrap().record("d");
        let t = check_theorem1(&r, 0.0);
        prop_assert!(t.verdict.holds);
        prop_assert!(t.redundant.holds);
    }

    #[test]
    fn kolmogorov_round_trip(a in dyadic_atoms()) {
        let r = KolmogorovModel::new(a).unwrap().record("d");
        let m = build_kolmogorov_model(&r, 0.0).unwrap();
        prop_assert_eq!(m.marginals(), r.marginals());
        prop_assert_eq!(m.atoms, r.conjunctions());
    }

    #[test]
    fn footnote_identity(r in any_record()) {
        let d = compute_derived(&r);
        prop_assert!((d.i_aap() - (d.i_total - d.i_a - d.i_ap)).abs() <= 1e-15);
        prop_assert!((d.i_bbp() - (d.i_total - d.i_b - d.i_bp)).abs() <= 1e-15);
    }

    #[test]
    fn classical_panels_are_never_rejected(panel in prop::collection::vec(atoms(), 2..40)) {
        let sums: Vec<f64> = panel
            .iter()
            .map(|a| KolmogorovModel::new(*a).unwrap().record("k").conjunctions().iter().sum())
            .collect();
        if let Ok(t) = one_sample_t_test(&sums, 1.0, 0.05, None) {
            prop_assert!(!t.rejected);
        }
    }

    #[test]
    fn table_round_trip(ma in unit(), mb in unit(), s in unit()) {
        let lo = (ma + mb - 1.0).max(0.0);
        let hi = ma.min(mb);
        let t = table_from_margins(ma, mb, lo + s * (hi - lo)).unwrap();
        let back = quadrant_masses(&entangled_state_from_table(&t));
        for (x, y) in back.masses().iter().zip(t.masses()) {
            prop_assert!((x - y).abs() <= 1e-14);
        }
        let r = theorem4_forward(&t);
        for i in compute_derived(&r).i_values() {
            prop_assert!(i.abs() <= 1e-12);
        }
    }

    #[test]
    fn t_cdf_is_symmetric(t in -50.0..50.0f64, df in 0.1..200.0f64) {
        let s = t_cdf(t, df).unwrap() + t_cdf(-t, df).unwrap();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn paired_test_is_antisymmetric(xy in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..30)) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let a = paired_t_test(&x, &y, 0.05, None).unwrap();
        let b = paired_t_test(&y, &x, 0.05, None).unwrap();
        prop_assert_eq!(a.statistic, -b.statistic);
        prop_assert_eq!(a.p_value, b.p_value);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
    }

    #[test]
    fn regression_ignores_order(v in prop::collection::vec(-1.0..1.0f64, 3..60).prop_shuffle()) {
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(sorted_regression(&v).unwrap(), sorted_regression(&sorted).unwrap());
        let r = sorted_regression(&v).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.r_squared));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constructed_frames_hold_invariants(m in marginals()) {
        let f = construct_frame_for(m).unwrap();
        prop_assert!(f.residuals().max() < 1e-10);
        for p in Pair::ALL {
            let (x, y) = p.concepts();
            let cap = interference_capacity(m[x.index()], m[y.index()]);
            prop_assert!(interference_term(&f, p).abs() <= cap + 1e-9);
        }
    }

    #[test]
    fn first_sector_swap_symmetry(m in marginals(), phases in prop::array::uniform4(-180.0..180.0f64)) {
        let mut f = construct_frame_for(m).unwrap();
        f.phases_deg = phases;
        let g = swapped(&f);
        // (A, B) <-> (B, A), (A, B') <-> (B, A'), ...
        for (p, q) in [(Pair::AB, Pair::AB), (Pair::ABp, Pair::ApB), (Pair::ApB, Pair::ABp), (Pair::ApBp, Pair::ApBp)] {
            prop_assert!((first_sector_mu(&f, p) - first_sector_mu(&g, q)).abs() <= 1e-12);
        }
    }

    #[test]
    fn angle_solvable_iff_inside(m in marginals(), target in unit()) {
        let f = construct_frame_for(m).unwrap();
        for p in Pair::ALL {
            let iv = first_sector_interval(&f, p);
            if (target - iv.lo).abs() < 1e-9 || (target - iv.hi).abs() < 1e-9 {
                continue;
            }
            prop_assert_eq!(iv.contains(target, 0.0), solve_first_sector_angle(&f, p, target).is_ok());
        }
    }

    #[test]
    fn second_sector_weight_interpolates(m in marginals(), s in unit(), m2 in unit(), phi in 0.0..180.0f64) {
        let f = construct_frame_for(m).unwrap();
        let (lo, hi) = ((m[0] + m[1] - 1.0).max(0.0), m[0].min(m[1]));
        let table = table_from_margins(m[0], m[1], lo + s * (hi - lo)).unwrap();
        let at = |w: f64| FockParameters { table, combinations: [CombinationParams::from_m2(w, phi); 4] };
        for p in Pair::ALL {
            let first = fock_membership(&at(0.0), &f, p);
            prop_assert!((fock_membership(&at(1.0), &f, p) - table.get(p)).abs() <= 1e-15);
            let mid = (1.0 - m2) * first + m2 * table.get(p);
            prop_assert!((fock_membership(&at(m2), &f, p) - mid).abs() <= 1e-12);
            let u = solution_interval(&f, &table, p);
            prop_assert!(u.contains(fock_membership(&at(m2), &f, p), 1e-12));
        }
    }

    #[test]
    fn sector_phases_are_inert(m in marginals(), m2 in unit(), phi in 0.0..180.0f64, theta in -360.0..360.0f64, rho in -360.0..360.0f64) {
        let f = construct_frame_for(m).unwrap();
        let table = SecondSectorTable::from_masses([0.25; 4]);
        let base = CombinationParams::from_m2(m2, phi);
        let moved = CombinationParams { theta_deg: theta, rho_deg: rho, ..base };
        let a = FockParameters { table, combinations: [base; 4] };
        let b = FockParameters { table, combinations: [moved; 4] };
        for p in Pair::ALL {
            prop_assert_eq!(fock_membership(&a, &f, p).to_bits(), fock_membership(&b, &f, p).to_bits());
        }
    }

    #[test]
    fn fits_are_exact_where_feasible(r in any_record()) {
        let fit = fit_record(&r, M2Mode::Minimal).unwrap();
        for v in fit.marginal_residuals {
            prop_assert!(v.abs() < 1e-10);
        }
        for c in &fit.combinations {
            prop_assert_eq!(c.feasible, c.solution_interval.contains(c.target, 1e-12));
            if c.feasible {
                prop_assert!(c.residual.abs() < 1e-9, "{:?}", c);
            } else {
                prop_assert!((c.residual.abs() - c.distance).abs() < 1e-9);
            }
        }
        prop_assert_eq!(fit_record(&r, M2Mode::Minimal).unwrap(), fit);
    }

    #[test]
    fn target_mode_stays_exact(r in any_record(), v in unit()) {
        let fit = fit_record(&r, M2Mode::Target(v)).unwrap();
        for c in fit.combinations.iter().filter(|c| c.feasible) {
            prop_assert!(c.residual.abs() < 1e-9, "{:?}", c);
        }
    }

    #[test]
    fn emergence_only_limit(ma in unit(), mb in unit()) {
        let m = [ma, mb, 1.0 - ma, 1.0 - mb];
        let f = construct_frame_for(m).unwrap();
        let params = FockParameters {
            table: SecondSectorTable::from_masses([0.25; 4]),
            combinations: [CombinationParams::from_m2(0.0, 90.0); 4],
        };
        let conj = Pair::ALL.map(|p| fock_membership(&params, &f, p));
        let r = MembershipRecord::from_weights_unchecked("e", [m[0], m[1], m[2], m[3], conj[0], conj[1], conj[2], conj[3]]);
        let d = compute_derived(&r);
        for i in [d.i_a, d.i_b, d.i_ap, d.i_bp] {
            prop_assert!((i + 0.5).abs() <= 1e-15, "{}", i);
        }
        prop_assert!((d.i_total + 1.0).abs() <= 1e-15);
    }
}
