mod common;

use common::*;
use detviz::clash::detect_clashes;
use detviz::geom::{Aabb, Mat3, RigidTransform, Vec3};
use detviz::volume::{make_box, SuperVolume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(lo: [f64; 3], hi: [f64; 3]) -> SuperVolume {
    box_sv("c", &Aabb::new(Vec3::from(lo), Vec3::from(hi)))
}

fn named(name: &str, sv: SuperVolume) -> SuperVolume {
    SuperVolume { name: name.into(), ..sv }
}

#[test]
fn overlapping_cubes_give_a_closed_loop() {
    let scene = [named("a", unit([0.0; 3], [1.0; 3])), named("b", unit([0.5; 3], [1.5; 3]))];
    let r = detect_clashes(&scene).unwrap();
    assert_eq!(r.pairs.len(), 1);
    let p = &r.pairs[0];
    assert!(!p.contained);
    assert_eq!(p.loops.len(), 1);
    let l = &p.loops[0];
    assert!(l.first().unwrap().distance(*l.last().unwrap()) < 1e-9);
    // Every loop point lies on the boundary of the 0.5³ overlap box.
    for q in l {
        assert!((0..3).all(|k| q[k] >= 0.5 - 1e-9 && q[k] <= 1.0 + 1e-9));
        assert!((0..3).any(|k| (q[k] - 0.5).abs() < 1e-9 || (q[k] - 1.0).abs() < 1e-9));
    }
    assert!((p.overlap_volume - 0.125).abs() < 1e-9);
}

#[test]
fn contact_and_disjoint_are_not_clashes() {
    let a = named("a", unit([0.0; 3], [1.0; 3]));
    for b in [unit([2.0; 3], [3.0; 3]), unit([1.0, 0.0, 0.0], [2.0, 1.0, 1.0]), unit([1.0; 3], [2.0; 3])] {
        let r = detect_clashes(&[a.clone(), named("b", b)]).unwrap();
        assert!(r.pairs.is_empty(), "{:?}", r.pair_names());
    }
}

#[test]
fn containment_is_flagged() {
    let r = detect_clashes(&[named("big", unit([0.0; 3], [4.0; 3])), named("small", unit([1.0; 3], [2.0; 3]))]).unwrap();
    assert_eq!(r.pairs.len(), 1);
    assert!(r.pairs[0].contained && r.pairs[0].loops.is_empty());
}

#[test]
fn report_is_sorted_and_covers_volumes_inside_one_supervolume() {
    let sv = SuperVolume::new(
        "pair",
        vec![make_box("p", [1.0; 3]).unwrap(), make_box("q", [1.0; 3]).unwrap().transformed(&RigidTransform::translation(Vec3::new(1.0, 0.0, 0.0)))],
    )
    .unwrap();
    let other = named("z", unit([-5.0; 3], [5.0; 3]));
    let r = detect_clashes(&[other, sv]).unwrap();
    let names = r.pair_names();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(names.contains(&("pair/p".into(), "pair/q".into())));
    assert_eq!(names.len(), 3);
}

/// Rotated boxes against the separating-axis test, with the membership
/// oracle confirming every decisive overlap.
#[test]
fn rotated_boxes_agree_with_separating_axes() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut checked, mut overlapping) = (0, 0);
    while checked < 150 {
        let place = |rng: &mut ChaCha8Rng| {
            let h = [rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)];
            let r = Mat3::from_euler_xyz(rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3));
            let t = Vec3::new(rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
            (RigidTransform { rotation: r, translation: t }, h)
        };
        let (ta, ha) = place(&mut rng);
        let (tb, hb) = place(&mut rng);
        let depth = sat_penetration(&ta, ha, &tb, hb);
        if depth.abs() < 0.05 {
            continue;
        }
        checked += 1;
        let a = SuperVolume::single(make_box("a", ha).unwrap()).with_transform(ta);
        let b = SuperVolume { name: "b".into(), ..SuperVolume::single(make_box("b", hb).unwrap()).with_transform(tb) };
        let region = a.world_bounds().intersection(&b.world_bounds());
        let member = membership_overlap(&mut rng, &region, 100_000, |p| in_oriented_box(&ta, ha, p), |p| in_oriented_box(&tb, hb, p));
        let sat = depth > 0.0;
        assert_eq!(member, sat, "membership and SAT disagree, depth {depth}");
        let got = !detect_clashes(&[SuperVolume { name: "a".into(), ..a }, b]).unwrap().pairs.is_empty();
        assert_eq!(got, sat, "depth {depth}");
        overlapping += sat as usize;
    }
    assert!(overlapping > 20 && overlapping < 130, "{overlapping}");
}
