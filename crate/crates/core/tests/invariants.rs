use cv_entangler::linalg;
use cv_entangler::protocols::{classify, protocol1_mu, Bipartition, ProtocolId};
use cv_entangler::random::{random_physical_cm, random_symplectic};
use cv_entangler::{CovarianceMatrix, NoiseInjection, SymplecticForm};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_maps_preserve_omega(seed in any::<u64>(), n in 1usize..=4) {
        let s = random_symplectic(n, &mut rng(seed));
        let scale = s.matrix().amax().powi(2);
        prop_assert!(s.symplectic_defect() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn transposing_twice_is_identity(seed in any::<u64>(), n in 2usize..=4, mask in 1u32..15) {
        let cm = random_physical_cm(n, &mut rng(seed));
        let j: Vec<usize> = (0..n).filter(|m| mask & (1 << m) != 0).collect();
        prop_assume!(!j.is_empty() && j.len() < n);
        let once = CovarianceMatrix::from_matrix(cm.partial_transpose(&j).unwrap()).unwrap();
        prop_assert_eq!(&once.partial_transpose(&j).unwrap(), cm.matrix());
    }

    #[test]
    fn transposing_a_side_or_its_complement_agrees(seed in any::<u64>(), n in 2usize..=4, mask in 1u32..15) {
        let cm = random_physical_cm(n, &mut rng(seed));
        let j: Vec<usize> = (0..n).filter(|m| mask & (1 << m) != 0).collect();
        prop_assume!(!j.is_empty() && j.len() < n);
        let rest: Vec<usize> = (0..n).filter(|m| !j.contains(m)).collect();
        let (a, b) = (cm.min_eig_ppt(&j).unwrap(), cm.min_eig_ppt(&rest).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * cm.matrix().amax(), "{} vs {}", a, b);
    }

    #[test]
    fn symplectic_maps_and_noise_keep_states_physical(seed in any::<u64>(), n in 1usize..=4, v in 0.0f64..2.0) {
        let mut g = rng(seed);
        let cm = random_physical_cm(n, &mut g);
        let out = cm.apply(&random_symplectic(n, &mut g)).unwrap();
        let w: Vec<f64> = (0..2 * n).map(|k| ((seed >> k) & 1) as f64 - 0.5).collect();
        let out = out.inject_noise(&NoiseInjection::new(w, v).unwrap()).unwrap();
        prop_assert!(out.is_physical(1e-9 * out.matrix().amax()));
    }

    #[test]
    fn product_states_are_ppt_across_the_cut(seed in any::<u64>(), k in 1usize..=2, l in 1usize..=2) {
        let mut g = rng(seed);
        let product = random_physical_cm(k, &mut g).tensor(&random_physical_cm(l, &mut g));
        let left: Vec<usize> = (0..k).collect();
        prop_assert!(product.min_eig_ppt(&left).unwrap() >= -1e-9 * product.matrix().amax());
    }

    #[test]
    fn embedding_matches_direct_solver(seed in any::<u64>(), n in 1usize..=4) {
        let cm = random_physical_cm(n, &mut rng(seed));
        let pt = cm.partial_transpose(&[0]).unwrap();
        let omega = SymplecticForm::new(n);
        let a = linalg::min_hermitian_eigenvalue(&pt, omega.matrix());
        let b = linalg::min_hermitian_eigenvalue_direct(&pt, omega.matrix());
        prop_assert!((a - b).abs() <= 1e-9 * cm.matrix().amax());
    }

    #[test]
    fn flipping_c_leaves_the_report_unchanged(r in 0.01f64..2.5, p in 1u8..=3) {
        let cm = ProtocolId::from_number(p).unwrap().state(r).unwrap();
        let a = classify(&cm).unwrap();
        let b = classify(&cm.flip_mode(2).unwrap()).unwrap();
        for bp in Bipartition::ALL {
            prop_assert!((a.min_eig(bp) - b.min_eig(bp)).abs() < 1e-10);
        }
    }

    #[test]
    fn protocol1_outer_modes_mirror_each_other(r in 0.01f64..2.5) {
        let rep = classify(&ProtocolId::P1.state(r).unwrap()).unwrap();
        prop_assert!((rep.min_eig(Bipartition::ABC) - rep.min_eig(Bipartition::CAB)).abs() < 1e-10);
    }

    #[test]
    fn nonclassicality_decreases_with_squeezing(r in 0.01f64..2.0, dr in 0.01f64..0.5) {
        let lo = ProtocolId::P1.pre_bs(r).unwrap().nonclassicality();
        let hi = ProtocolId::P1.pre_bs(r + dr).unwrap().nonclassicality();
        prop_assert!(hi < lo);
        prop_assert!((lo - protocol1_mu(r)).abs() < 1e-10);
    }
}

#[test]
fn entanglement_appears_only_after_the_splitter() {
    for p in ProtocolId::ALL {
        for r in cv_entangler::protocols::R_GRID {
            assert!(classify(&p.pre_bs(r).unwrap())
                .unwrap()
                .entangled()
                .is_empty());
            assert!(!classify(&p.state(r).unwrap())
                .unwrap()
                .entangled()
                .is_empty());
        }
    }
}

#[test]
fn vacuum_report_is_all_zero() {
    let rep = classify(&CovarianceMatrix::vacuum(3)).unwrap();
    for e in &rep.entries {
        assert!(e.min_eigenvalue.abs() < 1e-14);
    }
}
