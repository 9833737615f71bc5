use cantor_core::certify::Verdict;
use cantor_core::maps::RationalMap;
use cantor_core::parabolic::{
    certify_parabolic, compute_abc, parabolic_convergence, PLambdaSpec, ParabolicOptions, ParabolicSpec, PnSpec,
};
use num_complex::Complex64;

#[test]
fn plambda_certifies_with_phase() {
    let spec = ParabolicSpec::Plambda(PLambdaSpec::new(3, 2, Complex64::from_polar(1e-10, 1.1)));
    let rep = certify_parabolic(&spec, &ParabolicOptions::default());
    assert_eq!(rep.verdict, Verdict::Certified);
    let s = rep.signature.unwrap();
    assert_eq!((s.p, s.n), (0, 2));
    assert_eq!(rep.family, "plambda");
}

#[test]
fn pn_signature_degrees() {
    for n in 2..=4u32 {
        let spec = ParabolicSpec::Pn(PnSpec::geometric(n, 1.0 / (25.0 * (n * n) as f64)));
        let rep = certify_parabolic(&spec, &ParabolicOptions::default());
        assert!(rep.verdict.is_certified(), "n={n}: {:?}", rep.verdict);
        let s = rep.signature.unwrap();
        assert_eq!(s.n, n as usize);
        assert!(s.degrees.iter().all(|&d| d == n + 1));
    }
}

#[test]
fn too_large_lambda_is_rejected_or_fails() {
    let spec = ParabolicSpec::Plambda(PLambdaSpec::new(3, 2, Complex64::new(0.2, 0.0)));
    let rep = certify_parabolic(&spec, &ParabolicOptions::default());
    assert!(!rep.verdict.is_certified());
}

#[test]
fn abc_geometric_fixed_point() {
    // independent: P(1) = 1 with the returned constants, evaluated directly
    let n = 3u32;
    let s: f64 = 1.0 / 225.0;
    let k = (2 * n + 2) as i32;
    let c: Vec<Complex64> = (1..n).map(|i| Complex64::new(s.powi(i as i32).powi(k), 0.0)).collect();
    let (a, b, cc) = compute_abc(n, &c).unwrap();
    let spec = ParabolicSpec::Pn(PnSpec::geometric(n, s));
    let map = spec.compile().unwrap();
    let one = Complex64::new(1.0, 0.0);
    assert!((map.eval(one).unwrap() - one).norm() < 1e-12);
    assert!(b.norm() < s.powi(2 * n as i32 + 1));
    assert!((a - 1.0).norm() < 1e-6 && cc.norm() < 1e-6);
}

#[test]
fn basin_orbit_approaches_slowly() {
    let spec = ParabolicSpec::Plambda(PLambdaSpec::new(3, 2, Complex64::new(1e-10, 0.0)));
    let map = spec.compile().unwrap();
    let step = parabolic_convergence(&map, Complex64::new(-0.3, 0.0), Complex64::new(0.0, 0.0), 0.1, 20, 10_000);
    assert!(step.unwrap().is_some());
}
