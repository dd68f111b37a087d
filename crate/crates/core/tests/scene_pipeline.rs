use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use physkit_core::mpm::{decode_pios, encode_pios, Collider, TriangleMesh};
use physkit_core::scene::{
    read_physics, read_piod, read_pios16, write_annotations, example_elastic_cube, RasterConfig, SceneSpec,
    TrajectoryRecord,
};
use physkit_core::Vec3;
use serde_json::json;

/// The example cube dropped onto a static slab loaded from a mesh file next
/// to the scene.
fn cube_on_slab(dir: &Path) -> SceneSpec {
    let slab = TriangleMesh::cuboid(Vec3::new(-0.15, -0.15, -0.02), Vec3::new(0.15, 0.15, 0.02));
    fs::write(dir.join("slab.off"), slab.to_off()).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&example_elastic_cube().to_json()).unwrap();
    json["materials"].as_array_mut().unwrap().push(json!({
        "name": "oak",
        "surface": { "dynamic_friction": 0.4, "static_friction": 0.5, "density": 0.7, "restitution": 0.3 }
    }));
    json["objects"].as_array_mut().unwrap().push(json!({
        "asset_id": "oak_slab",
        "class": "solid",
        "shape": { "kind": "mesh", "path": "slab.off" },
        "pose": { "position": [0.3, 0.3, 0.2], "rotation": [1.0, 0.0, 0.0, 0.0] },
        "velocity": [0.0, 0.0, 0.0],
        "material": "oak"
    }));
    let spec = SceneSpec::from_json(&json.to_string()).unwrap();
    fs::write(dir.join("scene.json"), spec.to_json()).unwrap();
    spec
}

#[test]
fn static_mesh_becomes_an_sdf_collider_that_stops_the_cube() {
    let dir = tempfile::tempdir().unwrap();
    let spec = cube_on_slab(dir.path());
    let mut rt = spec.build(dir.path()).unwrap();
    assert!(rt.simulation.colliders().iter().any(|c| matches!(c, Collider::Sdf(_))));
    assert!(rt.owners.iter().all(|&o| o == 1));
    for _ in 0..20 {
        rt.simulation.advance_frame().unwrap();
    }
    // Slab top at z = 0.22; the cube must rest on it rather than the floor plane.
    let lowest = rt.simulation.particles.x.iter().map(|x| x.z).fold(f64::INFINITY, f64::min);
    assert!(lowest > 0.2 - 0.02, "lowest particle at {lowest}");
}

#[test]
fn annotations_are_consistent_with_the_scene() {
    let dir = tempfile::tempdir().unwrap();
    let spec = cube_on_slab(dir.path());
    let mut rt = spec.build(dir.path()).unwrap();
    let mut frames = Vec::new();
    for _ in 0..6 {
        rt.simulation.advance_frame().unwrap();
        frames.push(rt.snapshot());
    }
    let tracks = spec.camera_tracks(frames.len(), dir.path()).unwrap();
    let cfg = RasterConfig {
        width: 48,
        height: 36,
        fov_deg: 50.0,
        splat_radius: 1,
    };
    let out = dir.path().join("annotations");
    fs::create_dir_all(&out).unwrap();
    let summary = write_annotations(&spec, &frames, &tracks, &cfg, &out).unwrap();

    let physics = read_physics(&fs::read_to_string(out.join("physics.json")).unwrap()).unwrap();
    assert_eq!(physics.keys().copied().collect::<Vec<_>>(), vec![1, 2]);
    assert_eq!(physics[&2].asset_id, "oak_slab");

    let mut seen = BTreeSet::new();
    for f in summary.files.iter().filter(|p| p.extension().is_some_and(|e| e == "pios16")) {
        let (h, w, ids) = read_pios16(&fs::read(out.join(f)).unwrap()).unwrap();
        let depth_path = out.join("depth").join(f.file_stem().unwrap()).with_extension("piod");
        let (dh, dw, depth) = read_piod(&fs::read(depth_path).unwrap()).unwrap();
        assert_eq!((h, w), (dh, dw));
        for (id, d) in ids.iter().zip(&depth) {
            assert_eq!(*id == 0, *d == 0.0);
            assert!(*d >= 0.0);
        }
        seen.extend(ids.into_iter().filter(|&i| i != 0));
    }
    assert!(seen.iter().all(|id| physics.contains_key(id)));
    assert_eq!(seen.len(), 2, "both objects should be visible from some camera");

    let trajectory: Vec<TrajectoryRecord> = fs::read_to_string(out.join("trajectory.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(trajectory.len(), 2 * frames.len());
    let slab: Vec<_> = trajectory.iter().filter(|r| r.object_id == 2).collect();
    assert!(slab.iter().all(|r| r.position == [0.3, 0.3, 0.2]));
    let cube: Vec<f64> = trajectory.iter().filter(|r| r.object_id == 1).map(|r| r.position[2]).collect();
    assert!(cube.first().unwrap() > cube.last().unwrap());
}

#[test]
fn checkpoints_round_trip_at_single_precision() {
    let spec = example_elastic_cube();
    let mut rt = spec.build(Path::new(".")).unwrap();
    rt.simulation.advance_frame().unwrap();
    let p = &rt.simulation.particles;
    let q = decode_pios(&encode_pios(p)).unwrap();
    assert_eq!(q.len(), p.len());
    assert_eq!(q.material_id, p.material_id);
    for (a, b) in p.x.iter().zip(&q.x) {
        assert!((a - b).norm() <= 1e-6 * a.norm());
    }
    assert_eq!(encode_pios(&q), encode_pios(p));
}

#[test]
fn material_variants_keep_structure_and_pass_validation() {
    let spec = example_elastic_cube();
    let variants = physkit_core::scene::vary_materials(&spec, 25, 99);
    let ids: BTreeSet<_> = variants.iter().map(|v| v.id.clone()).collect();
    assert_eq!(ids.len(), 25);
    for v in &variants {
        v.validate(None).unwrap();
        assert_eq!(v.asset_ids(), spec.asset_ids());
        let s = v.materials[0].surface;
        assert!(s.static_friction >= s.dynamic_friction);
    }
    assert_ne!(variants[0].materials, variants[1].materials);
}
