//! Reference curves of the worked examples, checked node by node.

use hj_inverse::{catalog, hopflax, Grid, GridFn, Hamiltonian};

fn load(name: &str) -> Vec<(f64, f64)> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split('\t').map(|v| v.trim().parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

fn worst(curve: &GridFn, data: &[(f64, f64)]) -> f64 {
    data.iter()
        .map(|&(x, y)| (curve.nearest(&[x]).unwrap_or_else(|| panic!("{x} outside the curve")) - y).abs())
        .fold(0.0, f64::max)
}

fn roi() -> Grid {
    Grid::line(-4.0, 4.0, 1001).unwrap()
}

fn curves(name: &str) -> (GridFn, GridFn, GridFn) {
    let e = catalog::entry(name).unwrap();
    let h = e.hamiltonian.build().unwrap();
    let t = e.horizon;
    let lip = e.spec.analytic_lipschitz();
    // enough room for a forward pass, and for a backward-forward round trip on the box
    let cells = hopflax::round_trip_cells(&h, &roi(), lip, t).unwrap();
    let wide = roi().grow(&cells.iter().map(|&c| c as i64).collect::<Vec<_>>()).unwrap();
    let u = e.spec.sample(&catalog::initial_grid_for(&h, &wide, lip, t).unwrap()).unwrap();
    let fwd = hopflax::forward(&h, &u, t).unwrap().restrict(&roi()).unwrap();
    let bwd = hopflax::backward(&h, &u, t).unwrap().restrict(&roi()).unwrap();
    let target = e.spec.sample(&wide).unwrap();
    let proj = hopflax::compose_project(&h, &target, t).unwrap().restrict(&roi()).unwrap();
    (fwd, bwd, proj)
}

const TOL: f64 = 1e-9;

#[test]
fn first_example_target_and_minimal_datum() {
    let (fwd, _, _) = curves("u1");
    assert!(worst(&fwd, &load("u1_forward_t0.5.tsv")) < TOL);
    let h = Hamiltonian::isotropic(1);
    let ut = catalog::entry("u1").unwrap().target().unwrap();
    let u0 = hopflax::backward(&h, &ut, 0.5).unwrap();
    assert!(worst(&u0, &load("u1_tilde_u0_t0.5.tsv")) < TOL);
}

#[test]
fn double_well_curves() {
    let (fwd, bwd, proj) = curves("u3");
    assert!(worst(&fwd, &load("u3_forward_t1.tsv")) < TOL);
    assert!(worst(&bwd, &load("u3_backward_t1.tsv")) < TOL);
    assert!(worst(&proj, &load("u3_projection_t1.tsv")) < TOL);
}

#[test]
fn twin_peak_curves() {
    let (fwd, bwd, proj) = curves("u4");
    assert!(worst(&fwd, &load("u4_forward_t0.5.tsv")) < TOL);
    assert!(worst(&bwd, &load("u4_backward_t0.5.tsv")) < TOL);
    assert!(worst(&proj, &load("u4_projection_t0.5.tsv")) < TOL);
}
