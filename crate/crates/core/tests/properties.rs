use proptest::prelude::*;

use ::maxcorr::linalg::{
    hermitian_eigenvalues, kron, partial_trace, psd_pinv_sqrt, realign, singular_values, ComplexMatrix, Side, C64,
    RANK_TOL,
};
use ::maxcorr::maxcorr::{mu, mu_classical, mu_schmidt, mu_variational};
use ::maxcorr::maxent::{
    bell_fidelity, concurrence, decomposition_search, fidelity_mu_lower_bound, mu_ent_upper, ppt_check, twirl_clifford, twirl_exact, Decomposition, SearchConfig, RECONSTRUCTION_TOL,
};
use ::maxcorr::states::{
    apply_local, embed_classical, isotropic, measure_computational, random_channel, random_density, random_product,
    random_pure, random_unitary, state_distance, tensor_bipartite, validate, BipartiteState, ClassicalJoint,
    LocalChannel, RngSeed,
};

fn matrix(rows: usize, cols: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        let (re, im) = entries[i * cols + j];
        C64::new(re, im)
    })
}

fn arb_square(max: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |e| matrix(n, n, &e))
    })
}

/// `(d_a, d_b, rank, seed)` with both sides at most `max`.
fn arb_state(max: usize) -> impl Strategy<Value = BipartiteState> {
    (1..=max, 1..=max, any::<u64>()).prop_flat_map(|(da, db, seed)| {
        (1..=da * db).prop_map(move |rank| random_density(da, db, rank, RngSeed(seed)).unwrap())
    })
}

fn arb_two_qubit() -> impl Strategy<Value = BipartiteState> {
    (1..=4usize, any::<u64>()).prop_map(|(rank, seed)| random_density(2, 2, rank, RngSeed(seed)).unwrap())
}

fn arb_channel(side: Side, d_in: usize) -> impl Strategy<Value = LocalChannel> {
    (1..=3usize, 1..=3usize, any::<u64>()).prop_map(move |(d_out, extra, seed)| {
        let kraus = extra.max(d_in.div_ceil(d_out));
        random_channel(side, d_in, d_out, kraus, RngSeed(seed)).unwrap()
    })
}

fn arb_joint(max: usize) -> impl Strategy<Value = ClassicalJoint> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(0.0..1.0f64, r * c).prop_filter_map("all-zero weights", move |w| {
            ClassicalJoint::from_weights(r, c, w).ok()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realigned_product_has_rank_one(a in arb_square(3), b in arb_square(3)) {
        let (da, db) = (a.rows(), b.rows());
        let s = singular_values(&realign(&kron(&a, &b), da, db).unwrap());
        for x in &s[1..] {
            prop_assert!(*x <= 1e-10 * s[0].max(1e-300));
        }
    }

    #[test]
    fn realign_preserves_hs_norm(m in arb_square(9), split in 0..3usize) {
        let n = m.rows();
        let (da, db) = [(1, n), (n, 1), (n, 1)][split];
        let s = singular_values(&realign(&m, da, db).unwrap());
        let lhs: f64 = s.iter().map(|x| x * x).sum();
        let rhs = m.frobenius_norm().powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-300));
    }

    #[test]
    fn pinv_sqrt_gives_support_projector(g in arb_square(4), drop in 0..3usize) {
        let n = g.rows();
        let keep = n.saturating_sub(drop).max(1);
        let g = ComplexMatrix::from_fn(n, keep, |i, j| g[(i, j)]);
        let m = (&g * &g.adjoint()).hermitian_part();
        let r = psd_pinv_sqrt(&m, RANK_TOL).unwrap();
        let p = &(&r * &m) * &r;
        prop_assert!((&p * &p).max_abs_diff(&p) <= 1e-8);
        prop_assert!(p.hermiticity_deviation() <= 1e-8);
    }

    #[test]
    fn partial_trace_of_kron(a in arb_square(3), b in arb_square(3)) {
        let (da, db) = (a.rows(), b.rows());
        let k = kron(&a, &b);
        let ta = partial_trace(&k, da, db, Side::B).unwrap();
        prop_assert!(ta.max_abs_diff(&a.scale_complex(b.trace())) <= 1e-12);
        let tb = partial_trace(&k, da, db, Side::A).unwrap();
        prop_assert!(tb.max_abs_diff(&b.scale_complex(a.trace())) <= 1e-12);
    }

    #[test]
    fn constructors_are_valid(da in 1..=3usize, db in 1..=3usize, seed in any::<u64>(), eps in 0.0..=1.0f64) {
        prop_assert!(validate(&random_density(da, db, da * db, RngSeed(seed)).unwrap()).is_valid());
        prop_assert!(validate(&random_pure(da, db, RngSeed(seed))).is_valid());
        prop_assert!(validate(&random_product(da, db, RngSeed(seed))).is_valid());
        prop_assert!(validate(&isotropic(eps).unwrap()).is_valid());
    }

    #[test]
    fn randomized_constructors_are_deterministic(da in 1..=3usize, db in 1..=3usize, seed in any::<u64>()) {
        let a = random_density(da, db, 1, RngSeed(seed)).unwrap();
        let b = random_density(da, db, 1, RngSeed(seed)).unwrap();
        prop_assert_eq!(a.rho(), b.rho());
        prop_assert_eq!(random_unitary(da, RngSeed(seed)), random_unitary(da, RngSeed(seed)));
    }

    #[test]
    fn embed_then_measure_is_identity(p in arb_joint(4)) {
        prop_assert_eq!(measure_computational(&embed_classical(&p)), p);
    }

    #[test]
    fn tensor_marginals_factor(r in arb_state(2), s in arb_state(2)) {
        let t = tensor_bipartite(&r, &s);
        let a = kron(&r.marginal(Side::A), &s.marginal(Side::A));
        let b = kron(&r.marginal(Side::B), &s.marginal(Side::B));
        prop_assert!(t.marginal(Side::A).max_abs_diff(&a) <= 1e-12);
        prop_assert!(t.marginal(Side::B).max_abs_diff(&b) <= 1e-12);
    }

    #[test]
    fn local_channels_keep_states_valid(
        (s, ch) in arb_state(3).prop_flat_map(|s| {
            let d = s.d_b();
            (Just(s), arb_channel(Side::B, d))
        })
    ) {
        let out = apply_local(&s, &ch).unwrap();
        prop_assert!((out.rho().trace().re - 1.0).abs() <= 1e-10);
        prop_assert_eq!(out.rho().hermiticity_deviation(), 0.0);
        prop_assert!(validate(&out).is_valid());
    }

    #[test]
    fn classical_and_embedded_mu_agree(p in arb_joint(4)) {
        let classical = mu_classical(&p).unwrap().mu;
        let quantum = mu(&embed_classical(&p)).unwrap();
        prop_assert!((classical - quantum).abs() <= 1e-8, "{classical} vs {quantum}");
    }

    #[test]
    fn leading_coefficient_is_one_and_mu_in_range(s in arb_state(3)) {
        let r = mu_schmidt(&s).unwrap();
        prop_assert!(r.lambda1_deviation <= 1e-7);
        prop_assert!(r.mu >= 0.0 && r.mu <= 1.0 + 1e-9);
    }

    #[test]
    fn mu_tensorizes(r in arb_state(2), s in arb_state(2)) {
        let both = mu(&tensor_bipartite(&r, &s)).unwrap();
        let each = mu(&r).unwrap().max(mu(&s).unwrap());
        prop_assert!((both - each).abs() <= 1e-7, "{both} vs {each}");
    }

    #[test]
    fn local_channels_never_increase_mu(
        (s, ch) in arb_state(3).prop_flat_map(|s| {
            let d = s.d_a();
            (Just(s), arb_channel(Side::A, d))
        })
    ) {
        let out = apply_local(&s, &ch).unwrap();
        prop_assert!(mu(&out).unwrap() <= mu(&s).unwrap() + 1e-7);
    }

    #[test]
    fn local_unitaries_leave_mu_unchanged(s in arb_state(3), seed in any::<u64>(), on_a in any::<bool>()) {
        let (side, d) = if on_a { (Side::A, s.d_a()) } else { (Side::B, s.d_b()) };
        let u = LocalChannel::unitary(side, random_unitary(d, RngSeed(seed))).unwrap();
        let out = apply_local(&s, &u).unwrap();
        prop_assert!((mu(&out).unwrap() - mu(&s).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn measurement_never_increases_mu(s in arb_state(3)) {
        let classical = mu_classical(&measure_computational(&s)).unwrap().mu;
        prop_assert!(mu(&s).unwrap() >= classical - 1e-8);
    }

    #[test]
    fn bell_fidelity_bounds_mu(s in arb_two_qubit()) {
        prop_assert!(fidelity_mu_lower_bound(&s).unwrap() <= mu(&s).unwrap() + 1e-8);
    }

    #[test]
    fn twirl_closed_form_matches_clifford_average(s in arb_two_qubit()) {
        let exact = twirl_exact(&s).unwrap();
        prop_assert!(state_distance(&exact, &twirl_clifford(&s).unwrap()) <= 1e-10);
        prop_assert!((bell_fidelity(&exact).unwrap() - bell_fidelity(&s).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn ppt_agrees_with_concurrence(s in arb_two_qubit()) {
        let ppt = ppt_check(&s).unwrap();
        let c = concurrence(&s).unwrap();
        prop_assert!(ppt.is_ppt == (c <= 1e-7), "min eig {} concurrence {c}", ppt.min_eigenvalue);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn variational_oracle_sandwich(s in arb_state(3), seed in any::<u64>()) {
        let exact = mu(&s).unwrap();
        let v = mu_variational(&s, 8, 3000, RngSeed(seed)).unwrap().value;
        prop_assert!(v <= exact + 1e-6, "{v} above {exact}");
        prop_assert!(v >= exact - 1e-4, "{v} below {exact}");
    }

    #[test]
    fn search_bounds_are_certified(s in arb_state(2), seed in any::<u64>(), k in 1..=6usize) {
        let cfg = SearchConfig { k, restarts: 2, iters: 40, seed: RngSeed(seed) };
        let r = decomposition_search(&s, &cfg).unwrap();
        let d = &r.decomposition;
        prop_assert!(d.residual() <= RECONSTRUCTION_TOL);
        prop_assert!(d.components().iter().all(|c| validate(c).is_valid()));
        prop_assert!((mu_ent_upper(d).unwrap() - r.upper_bound).abs() <= 1e-12);
        prop_assert!(r.upper_bound <= mu(&s).unwrap() + 1e-12);
    }

    #[test]
    fn faithfulness_never_contradicted(s in arb_two_qubit(), seed in any::<u64>()) {
        let cfg = SearchConfig { k: 4, restarts: 2, iters: 30, seed: RngSeed(seed) };
        let r = decomposition_search(&s, &cfg).unwrap();
        let ppt = ppt_check(&s).unwrap();
        prop_assert!(fidelity_mu_lower_bound(&s).unwrap() <= r.upper_bound + 1e-8);
        if ppt.is_ppt {
            prop_assert!(r.upper_bound <= 1e-6, "separable state left at {}", r.upper_bound);
        } else {
            prop_assert!(r.upper_bound > 1e-8);
        }
    }

    #[test]
    fn isotropic_sandwich(eps in 0.0..(2.0 / 3.0), seed in any::<u64>()) {
        let target = isotropic(eps).unwrap();
        let lower = fidelity_mu_lower_bound(&target).unwrap();
        let cfg = SearchConfig { k: 4, restarts: 3, iters: 40, seed: RngSeed(seed) };
        let upper = decomposition_search(&target, &cfg).unwrap().upper_bound;
        prop_assert!((lower - (1.0 - 1.5 * eps)).abs() <= 1e-10);
        prop_assert!(lower <= upper + 1e-8);
        prop_assert!(upper <= 1.0 - eps + 1e-8);
    }

    #[test]
    fn decompositions_push_through_channels(
        (s, ch) in arb_state(2).prop_flat_map(|s| {
            let d = s.d_a();
            (Just(s), arb_channel(Side::A, d))
        }),
        seed in any::<u64>(),
    ) {
        let cfg = SearchConfig { k: 3, restarts: 2, iters: 30, seed: RngSeed(seed) };
        let d = decomposition_search(&s, &cfg).unwrap().decomposition;
        let mapped = d.map_local(&ch).unwrap();
        prop_assert!(mapped.residual() <= RECONSTRUCTION_TOL);
        prop_assert!(mu_ent_upper(&mapped).unwrap() <= mu_ent_upper(&d).unwrap() + 1e-7);
    }

    #[test]
    fn product_decompositions_bound_by_max(r in arb_two_qubit(), s in arb_two_qubit(), seed in any::<u64>()) {
        let cfg = SearchConfig { k: 3, restarts: 2, iters: 30, seed: RngSeed(seed) };
        let dr = decomposition_search(&r, &cfg).unwrap().decomposition;
        let ds = Decomposition::trivial(s);
        let prod = dr.tensor(&ds).unwrap();
        let expected = mu_ent_upper(&dr).unwrap().max(mu_ent_upper(&ds).unwrap());
        prop_assert!((mu_ent_upper(&prod).unwrap() - expected).abs() <= 1e-7);
    }

    #[test]
    fn spectrum_of_valid_states_is_nonnegative(s in arb_state(3)) {
        let min = hermitian_eigenvalues(s.rho()).unwrap().last().copied().unwrap();
        prop_assert!(min >= -1e-10);
    }
}
