use kornlab::constants::{compute_report, ConstantsOptions, ConstantsReport, ReportRequest};
use kornlab::hodge::harmonic_basis;
use kornlab::linalg::EigOptions;
use kornlab::mesh::{
    boundary_components, format_mesh, generate_primitive, parse_mesh, read_mesh, refine_uniform, write_mesh, Mesh,
    Point, Primitive, TagSelector, TAG_N, TAG_T,
};
use proptest::prelude::*;

const KEYS: [&str; 6] = ["c_p", "c_k_s", "c_k_irrot", "c_m", "c_m_coexact", "c_m_grad"];

fn report(m: &Mesh) -> ConstantsReport {
    compute_report(m, &ReportRequest::default(), &ConstantsOptions::default()).unwrap()
}

fn rotation(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    let k = axis.map(|x| x / n);
    let (s, c) = angle.sin_cos();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let cross = match (i, j) {
                (0, 1) => -k[2],
                (0, 2) => k[1],
                (1, 0) => k[2],
                (1, 2) => -k[0],
                (2, 0) => -k[1],
                (2, 1) => k[0],
                _ => 0.0,
            };
            c * f64::from(u8::from(i == j)) + s * cross + (1.0 - c) * k[i] * k[j]
        })
    })
}

fn apply(r: &[[f64; 3]; 3], p: Point, shift: Point) -> Point {
    std::array::from_fn(|i| (0..3).map(|j| r[i][j] * p[j]).sum::<f64>() + shift[i])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn constants_invariant_under_rigid_motions(
        axis in prop::array::uniform3(0.1f64..1.0),
        angle in 0.0f64..std::f64::consts::TAU,
        shift in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let m = generate_primitive(Primitive::SlabMixed, 2);
        let r = rotation(axis, angle);
        let moved = m.transformed(|p| apply(&r, p, shift)).unwrap();
        let (a, b) = (report(&m), report(&moved));
        for k in KEYS {
            let (x, y) = (a.value(k).unwrap(), b.value(k).unwrap());
            prop_assert!((x - y).abs() <= 1e-9 * x, "{k}: {x} vs {y}");
        }
    }

    #[test]
    fn dilation_scales_lengths_and_keeps_korn(s in 0.2f64..5.0) {
        let m = generate_primitive(Primitive::SlabMixed, 2);
        let scaled = m.transformed(|p| p.map(|x| s * x)).unwrap();
        let (a, b) = (report(&m), report(&scaled));
        for k in ["c_p", "c_m", "c_m_coexact"] {
            let (x, y) = (a.value(k).unwrap(), b.value(k).unwrap());
            prop_assert!((y - s * x).abs() <= 1e-9 * s * x, "{k}: {x} scaled by {s} gave {y}");
        }
        for k in ["c_k_s", "c_k_t", "c_k_irrot"] {
            let (x, y) = (a.value(k).unwrap(), b.value(k).unwrap());
            prop_assert!((x - y).abs() <= 1e-9 * x, "{k}: {x} vs {y}");
        }
    }
}

#[test]
fn harmonic_dimension_counts_tunnels_and_boundary_components() {
    let eig = EigOptions::default();
    let dim = |p: Primitive, sel: TagSelector| {
        let m = sel.apply(&generate_primitive(p, 1)).unwrap();
        harmonic_basis(&m, Some(TAG_T), &eig).unwrap().dim()
    };
    // Γ_t = ∅: first Betti number; Γ_t = Γ: second Betti number
    assert_eq!(dim(Primitive::UnitCube, TagSelector::None), 0);
    assert_eq!(dim(Primitive::UnitCube, TagSelector::All), 0);
    assert_eq!(dim(Primitive::CubeWithTunnel, TagSelector::None), 1);
    assert_eq!(dim(Primitive::CubeWithTunnel, TagSelector::All), 0);
}

#[test]
fn boundary_topology_of_primitives() {
    let cube = generate_primitive(Primitive::UnitCube, 2);
    assert_eq!(cube.boundary_euler_characteristic(), 2);
    let tunnel = generate_primitive(Primitive::CubeWithTunnel, 1);
    assert_eq!(tunnel.boundary_euler_characteristic(), 0);
    assert_eq!(tunnel.num_slices(), 2);
    assert_eq!(refine_uniform(&tunnel).boundary_euler_characteristic(), 0);
    assert_eq!(boundary_components(&cube, TAG_T).count, 1);
}

#[test]
fn refinement_multiplies_tets_and_keeps_volume() {
    for p in [Primitive::UnitCube, Primitive::SlabMixed, Primitive::CubeWithTunnel] {
        let m = generate_primitive(p, 1);
        let f = refine_uniform(&m);
        assert_eq!(f.num_tets(), 8 * m.num_tets());
        assert!((f.total_volume() - p.volume()).abs() <= 1e-12 * p.volume());
        let area = |m: &Mesh| m.boundary_area(TAG_T) + m.boundary_area(TAG_N);
        assert!((area(&f) - area(&m)).abs() <= 1e-12 * area(&m));
    }
}

#[test]
fn mesh_file_round_trip_preserves_constants() {
    let m = generate_primitive(Primitive::SlabMixed, 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slab.km");
    write_mesh(&m, &path).unwrap();
    let back = read_mesh(&path).unwrap();
    assert_eq!(format_mesh(&back), format_mesh(&m));
    assert_eq!(parse_mesh(&format_mesh(&m)).unwrap().num_tets(), m.num_tets());
    assert_eq!(report(&back).to_json(), report(&m).to_json());
}
