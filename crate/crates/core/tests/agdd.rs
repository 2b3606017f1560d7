mod common;

use std::path::Path;

use common::*;
use detviz::agdd::*;
use detviz::csg::enclosed_volume;
use detviz::error::Error;
use detviz::geom::{Aabb, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

const TWO_BOXES: &str = r#"<AGDD><section name="S">
  <box name="b" X_Y_Z="2 2 2"/>
  <composition name="pair">
    <posXYZ volume="b" X_Y_Z="-100 0 0"/>
    <posXYZ volume="b" X_Y_Z="100 0 0"/>
  </composition>
  <boolean name="cut" op="subtraction">
    <posXYZ volume="b"/>
    <posXYZ volume="b" X_Y_Z="1 0 0"/>
  </boolean>
</section></AGDD>"#;

fn fixture() -> GeometryTree {
    load_agdd(Path::new(&format!("{FIXTURES}/detector.xml"))).unwrap()
}

#[test]
fn fixture_has_one_hundred_nodes_and_round_trips() {
    let t = fixture();
    assert_eq!(t.node_count(), 100);
    let text = serialize_agdd(&t);
    let back = parse_agdd(&text).unwrap();
    assert!(back.same_content(&t));
    assert_eq!(back.paths(), t.paths());
    assert_eq!(serialize_agdd(&back), text);
}

#[test]
fn repeated_placements_differ_by_their_offset() {
    let t = parse_agdd(TWO_BOXES).unwrap();
    let a = t.find_path("AGDD/S/pair/b").unwrap();
    let b = t.find_path("AGDD/S/pair/b[1]").unwrap();
    let (wa, wb) = (t.world_transform(a).unwrap(), t.world_transform(b).unwrap());
    assert_eq!(wb.translation - wa.translation, Vec3::new(200.0, 0.0, 0.0));
    let svs = instantiate(&t, &[t.find_path("S/pair").unwrap()]).unwrap();
    assert_eq!(svs.len(), 2);
    assert_eq!(svs[0].name, "AGDD/S/pair/b");
    assert_eq!(svs[1].world_bounds(), Aabb::new(Vec3::new(99.0, -1.0, -1.0), Vec3::new(101.0, 1.0, 1.0)));
}

#[test]
fn boolean_node_matches_the_volume_oracle() {
    let t = parse_agdd(TWO_BOXES).unwrap();
    let id = t.find_path("AGDD/S/cut").unwrap();
    let svs = instantiate(&t, &[id]).unwrap();
    assert_eq!(svs.len(), 1);
    let got = enclosed_volume(&svs[0]).unwrap();
    let (a, b) = (Aabb::new(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0)), Aabb::new(Vec3::new(0.0, -1.0, -1.0), Vec3::new(2.0, 1.0, 1.0)));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mc = mc_volume(&mut rng, &a, 1_000_000, |p| in_box(&a, p) && !in_box(&b, p));
    assert!((got - mc).abs() <= 0.01 * mc, "{got} vs {mc}");
}

#[test]
fn selecting_the_root_of_a_one_box_document() {
    let t = parse_agdd(r#"<AGDD><section name="S"><box name="b" X_Y_Z="2 2 2"/></section></AGDD>"#).unwrap();
    let t = toggle_select(&t, t.root.id).unwrap();
    let svs = instantiate_selected(&t).unwrap();
    assert_eq!(svs.len(), 1);
    assert!(svs[0].transform.is_identity());
    assert_eq!(svs[0].volumes.len(), 1);
}

#[test]
fn flags_toggle_and_cover_subtrees() {
    let t = fixture();
    let id = t.find_path("AGDD/Barrel/BarrelWheels").unwrap();
    let once = toggle_deploy(&t, id).unwrap();
    assert!(once.node(id).unwrap().deployed);
    assert_eq!(toggle_deploy(&once, id).unwrap(), t);

    let sel = toggle_select(&t, id).unwrap();
    let n = sel.node(id).unwrap();
    let mut all = true;
    fn walk(n: &TreeNode, all: &mut bool) {
        *all &= n.selected;
        n.children.iter().for_each(|c| walk(c, all));
    }
    walk(n, &mut all);
    assert!(all);
    assert_eq!(sel.selected_ids().len(), 67);
    assert_eq!(instantiate_selected(&sel).unwrap().len(), 48);
    assert_eq!(toggle_select(&sel, id).unwrap(), t);
    assert!(matches!(toggle_deploy(&t, 100_000), Err(Error::NotFound(_))));
}

#[test]
fn reload_keeps_flags_and_survives_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geo.xml");
    std::fs::write(&path, TWO_BOXES).unwrap();
    let t = load_agdd(&path).unwrap();
    let pair = t.find_path("AGDD/S/pair").unwrap();
    let t = toggle_select(&toggle_deploy(&t, pair).unwrap(), pair).unwrap();

    let same = reload(&t).unwrap();
    assert!(same.same_content(&t));
    assert_eq!(same.revision, t.revision + 1);
    assert_eq!(same.selected_ids(), t.selected_ids());

    std::fs::write(&path, TWO_BOXES.replace("</section>", "<tubs name=\"extra\" Rio_Z=\"1 2 3\"/></section>")).unwrap();
    let grown = reload(&same).unwrap();
    assert!(grown.find_path("AGDD/S/extra").is_some());
    let p = grown.find_path("AGDD/S/pair").unwrap();
    assert!(grown.node(p).unwrap().deployed && grown.node(p).unwrap().selected);
    assert!(!grown.node(grown.find_path("AGDD/S/extra").unwrap()).unwrap().selected);

    std::fs::write(&path, "<AGDD><section name=\"S\"><box name=").unwrap();
    assert!(matches!(reload(&grown), Err(Error::Parse { .. })));
}

#[test]
fn schema_errors_name_the_problem() {
    let e = parse_agdd(r#"<AGDD><section name="S"><box name="b" X_Y_Z="2 2"/></section></AGDD>"#).unwrap_err();
    assert!(matches!(&e, Error::Schema { message, .. } if message.contains("X_Y_Z")), "{e}");
    let e = parse_agdd(r#"<AGDD><section name="S"><composition name="c"><posXYZ volume="ghost"/></composition></section></AGDD>"#)
        .unwrap_err();
    assert_eq!(e, Error::DanglingReference { from: "c".into(), to: "ghost".into() });
    let e = parse_agdd(r#"<AGDD><section name="S"><box name="b" X_Y_Z="1 1 1"/><box name="b" X_Y_Z="2 2 2"/></section></AGDD>"#)
        .unwrap_err();
    assert!(matches!(e, Error::Schema { .. }));
    let e = parse_agdd(r#"<AGDD><section name="S"><box name="b" X_Y_Z="0 1 1"/></section></AGDD>"#).unwrap_err();
    assert!(matches!(e, Error::InvalidDimension(_) | Error::Schema { .. }), "{e}");
    assert!(matches!(load_agdd(Path::new("/nonexistent/x.xml")), Err(Error::Io { .. })));
}
