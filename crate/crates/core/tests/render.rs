use cantor_core::certify::{certify, CertifyOptions};
use cantor_core::params::synth;
use cantor_core::render::{basin_transitions, render, RenderJob, RenderMode, INNER_RGB, OUTER_RGB};
use num_complex::Complex64;

fn job(mode: RenderMode) -> RenderJob {
    RenderJob { center: Complex64::new(0.0, 0.0), half_width: 1.2, width: 96, height: 64, mode, max_iter: 500 }
}

#[test]
fn basin_image_has_both_traps_and_structure() {
    let (spec, _) = synth(1, &[4, 4], 1.0).unwrap();
    let map = spec.compile().unwrap();
    let geom = certify(&spec, &CertifyOptions::default()).geometry.unwrap();
    let img = render(&map, &geom, &job(RenderMode::Basin)).unwrap();
    let px: Vec<[u8; 3]> = img.rgb.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    assert!(px.contains(&OUTER_RGB));
    assert!(px.contains(&INNER_RGB));
    let row: Vec<[u8; 3]> = (0..96).map(|i| img.pixel(i, 32)).collect();
    assert!(basin_transitions(&row) >= 2);
}

#[test]
fn modes_are_deterministic_and_sized() {
    let (spec, _) = synth(0, &[3, 4, 5], 1.0).unwrap();
    let map = spec.compile().unwrap();
    let geom = certify(&spec, &CertifyOptions::default()).geometry.unwrap();
    for mode in [RenderMode::Escape, RenderMode::Itinerary { depth: 2 }] {
        let a = render(&map, &geom, &job(mode)).unwrap();
        let b = render(&map, &geom, &job(mode)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_ppm().len(), "P6\n96 64\n255\n".len() + 96 * 64 * 3);
    }
    let mut big = job(RenderMode::Basin);
    big.width = 10_000;
    assert!(render(&map, &geom, &big).is_err());
}

#[test]
fn quarter_turn_symmetry() {
    // degrees (4,4,4): gcd of d_1 and all D_i is 4
    let (spec, _) = synth(1, &[4, 4, 4], 1.0).unwrap();
    let map = spec.compile().unwrap();
    let geom = certify(&spec, &CertifyOptions::default()).geometry.unwrap();
    let side = 96;
    let r = (spec.params[1].log10_mag * std::f64::consts::LN_10).exp();
    let j = RenderJob {
        center: Complex64::new(0.0, 0.0),
        half_width: 3.0 * r,
        width: side,
        height: side,
        mode: RenderMode::Basin,
        max_iter: 500,
    };
    let img = render(&map, &geom, &j).unwrap();
    let mut agree = 0;
    for y in 0..side {
        for x in 0..side {
            // a quarter turn sends pixel (x, y) to (side-1-y, x)
            if img.pixel(x, y) == img.pixel(side - 1 - y, x) {
                agree += 1;
            }
        }
    }
    let frac = agree as f64 / (side * side) as f64;
    assert!(frac >= 0.999, "{frac}");
}

#[test]
fn mcmullen_axis_transitions() {
    use cantor_core::family::McMullenSpec;
    let spec = McMullenSpec { k: 3, l: 3, eta: Complex64::new(0.001, 0.0) }.to_family();
    let map = spec.compile().unwrap();
    let geom = certify(&spec, &CertifyOptions::default()).geometry.unwrap();
    let j = RenderJob {
        center: Complex64::new(0.0, 0.0),
        half_width: 0.15,
        width: 512,
        height: 512,
        mode: RenderMode::Basin,
        max_iter: 1000,
    };
    let img = render(&map, &geom, &j).unwrap();
    let row: Vec<[u8; 3]> = (256..512).map(|i| img.pixel(i, 256)).collect();
    // nested preimage annuli add transitions as resolution grows; 2n is the floor
    assert!(basin_transitions(&row) >= 4);
}
