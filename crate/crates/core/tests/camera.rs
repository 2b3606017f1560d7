use std::f64::consts::PI;

use detviz::camera::*;
use detviz::error::Error;
use detviz::geom::Vec3;
use proptest::prelude::*;

fn view() -> ViewSpec {
    ViewSpec::new(Vec3::new(800.0, -600.0, 300.0), Vec3::new(10.0, 20.0, -5.0), 35.0).unwrap()
}

#[test]
fn zero_delta_is_identity() {
    let v = view();
    assert_eq!(apply_nav(&v, &NavDelta::default()).unwrap(), v);
}

#[test]
fn focal_factors_multiply() {
    let d = NavDelta { d_focal: 2.0, pending: true, ..NavDelta::default() };
    let v = apply_nav(&apply_nav(&view(), &d).unwrap(), &d).unwrap();
    assert_eq!(v.focal_mm, 140.0);
    let merged = d.merge(&d);
    assert_eq!(apply_nav(&view(), &merged).unwrap().focal_mm, 140.0);
}

#[test]
fn eye_onto_target_is_degenerate() {
    let v = view();
    let d = NavDelta { d_eye: v.target - v.eye, pending: true, ..NavDelta::default() };
    assert_eq!(apply_nav(&v, &d).unwrap_err(), Error::DegenerateView);
}

#[test]
fn isometric_ignores_offsets_along_the_axis() {
    let v = set_projection(&view(), ModeKind::Isometric, None).unwrap();
    let axis = (v.target - v.eye).normalized().unwrap();
    let p = Vec3::new(40.0, -70.0, 12.0);
    let (a, b) = (project(p, &v).unwrap(), project(p + axis * 333.0, &v).unwrap());
    assert!((a.u - b.u).abs() < 1e-9 && (a.v - b.v).abs() < 1e-9);
    assert!((b.depth - a.depth - 333.0).abs() < 1e-9);
}

#[test]
fn z_projection_flattens_z() {
    let v = set_projection(&view(), ModeKind::ProjZPos, None).unwrap();
    let (a, b) = (project(Vec3::new(5.0, 7.0, -100.0), &v).unwrap(), project(Vec3::new(5.0, 7.0, 90.0), &v).unwrap());
    assert!((a.u - b.u).abs() < 1e-12 && (a.v - b.v).abs() < 1e-12);
    assert_eq!(drag_orbit(&v, 0.1, 0.0).unwrap_err(), Error::ModeLocked);
}

#[test]
fn phi_needs_an_angle() {
    assert!(matches!(set_projection(&view(), ModeKind::ProjPhi, None), Err(Error::InvalidArgument(_))));
    assert!(matches!(set_projection(&view(), ModeKind::ProjZPos, Some(0.3)), Err(Error::InvalidArgument(_))));
}

#[test]
fn full_turn_returns_home() {
    let v = view();
    let w = drag_orbit(&v, 2.0 * PI / DRAG_RADIANS_PER_SCREEN, 0.0).unwrap();
    assert!(w.eye.distance(v.eye) < 1e-6 * v.distance());
    assert_eq!(drag_orbit(&v, 0.0, 0.0).unwrap(), v);
}

#[test]
fn fit_view_frames_the_bounding_sphere() {
    let b = detviz::geom::Aabb::new(Vec3::new(-100.0, -50.0, 0.0), Vec3::new(100.0, 50.0, 400.0));
    let v = fit_view(&b);
    let r = b.diagonal() / 2.0;
    // The sphere radius seen at the target spans the half frame height.
    assert!((NORMAL_FOCAL_MM * r / v.distance() - FRAME_HALF_HEIGHT).abs() < 1e-9);
    for k in 0..8 {
        let c = Vec3::new(
            if k & 1 == 0 { b.min.x } else { b.max.x },
            if k & 2 == 0 { b.min.y } else { b.max.y },
            if k & 4 == 0 { b.min.z } else { b.max.z },
        );
        let p = project(c, &v).unwrap();
        assert!(p.u.abs() <= FRAME_HALF_WIDTH && p.v.abs() <= FRAME_HALF_HEIGHT, "{p:?}");
    }
}

proptest! {
    #[test]
    fn drag_keeps_the_orbit_radius(du in -3.0f64..3.0, dv in -1.0f64..1.0) {
        let v = view();
        let w = drag_orbit(&v, du, dv).unwrap();
        prop_assert!((w.distance() - v.distance()).abs() <= 1e-9 * v.distance());
        prop_assert_eq!(w.target, v.target);
    }

    #[test]
    fn perspective_matches_pinhole_formula(x in -500.0f64..500.0, y in -500.0f64..500.0, z in -500.0f64..500.0) {
        // Independent pinhole model: camera basis from eye/target with world z up.
        let v = view();
        let p = Vec3::new(x, y, z);
        let fwd = (v.target - v.eye).normalized().unwrap();
        let right = fwd.cross(Vec3::new(0.0, 0.0, 1.0)).normalized().unwrap();
        let up = right.cross(fwd);
        let d = p - v.eye;
        let zc = d.dot(fwd);
        prop_assume!(zc > 1.0);
        let got = project(p, &v).unwrap();
        prop_assert!((got.u - v.focal_mm * d.dot(right) / zc).abs() < 1e-9);
        prop_assert!((got.v - v.focal_mm * d.dot(up) / zc).abs() < 1e-9);
        prop_assert!((got.depth - zc).abs() < 1e-9);
    }
}
