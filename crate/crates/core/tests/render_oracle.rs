mod common;

use common::{occluded, painter_violations, random_scene, random_view};
use detviz::render::{render_detailed, RenderOptions};
use detviz::volume::Volume;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn visible_edges_and_fill_order_match_ray_casting() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut total, mut bad) = (0usize, 0usize);
    // Negative control: the oracle must see hidden facet corners as hidden.
    let mut control_hidden = 0usize;
    for scene_no in 0..20 {
        let scene = random_scene(&mut rng, 20);
        let view = random_view(&mut rng);
        let cam = view.camera().unwrap();
        let out = render_detailed(&scene, &view, &RenderOptions::default()).unwrap();
        let world: Vec<Volume> = scene.iter().flat_map(|s| s.world_volumes()).collect();
        let lens: Vec<f64> = out.edges.iter().map(|e| e.a.distance(e.b)).collect();
        let sum: f64 = lens.iter().sum();
        for _ in 0..200 {
            let mut x = rng.gen::<f64>() * sum;
            let mut k = 0;
            while k + 1 < lens.len() && x > lens[k] {
                x -= lens[k];
                k += 1;
            }
            let e = &out.edges[k];
            let p = e.a.lerp(e.b, (x / lens[k]).clamp(0.0, 1.0));
            total += 1;
            if occluded(&cam, &world, p, 1e-7) {
                bad += 1;
            }
        }
        for v in &world {
            for f in &v.facets {
                let c = f.vertices.iter().fold(detviz::geom::Vec3::ZERO, |a, p| a + *p) / f.vertices.len() as f64;
                if occluded(&cam, &world, c, 1e-7) {
                    control_hidden += 1;
                }
            }
        }
        let (pv, _) = painter_violations(&cam, &out, 1e-7);
        assert_eq!(pv, 0, "scene {scene_no}: painter order violated; {:?}", out.stats);
    }
    assert!(control_hidden > 100, "oracle sees only {control_hidden} hidden facet centers");
    assert!(bad * 1000 <= total, "{bad} of {total} edge samples occluded");
}
