use rbf_advect::geometry::{generate_nodes, perturb_nodes};
use rbf_advect::linalg::eigen::eigenvalues;
use rbf_advect::methods::FdStencils;
use rbf_advect::voronoi::{assemble_penalty, build_voronoi, jump_magnitude_1d, PenaltyOperator};
use rbf_advect::{Domain, PointSet};

fn penalty(nodes: &PointSet, p: usize, n: usize) -> PenaltyOperator {
    let st = FdStencils::build(&nodes.points, p, n).unwrap();
    let vd = build_voronoi(&nodes.points, &Domain::Star).unwrap();
    assemble_penalty(&vd, &st)
}

fn small_sets() -> Vec<PointSet> {
    let d = Domain::Star;
    let x = generate_nodes(&d, 0.14, 4).unwrap();
    let y = perturb_nodes(&d, &x, 0.5, 5).unwrap();
    assert!(x.len() <= 200, "{} nodes", x.len());
    vec![x, y]
}

#[test]
fn penalty_annihilates_polynomials_of_the_stencil_degree() {
    for nodes in small_sets() {
        for (p, n) in [(2, 12), (3, 20)] {
            let pen = penalty(&nodes, p, n);
            for a in 0..=p as i32 {
                for b in 0..=(p as i32 - a) {
                    let u: Vec<f64> = nodes.points.iter().map(|q| (q[0] + 0.3).powi(a) * (q[1] - 0.1).powi(b)).collect();
                    let mut out = vec![0.0; u.len()];
                    pen.p.matvec(&u, &mut out);
                    let worst = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    assert!(worst <= 1e-9, "p={p} x^{a} y^{b}: {worst}");
                }
            }
        }
    }
}

#[test]
fn penalty_is_symmetric_positive_semidefinite() {
    for nodes in small_sets() {
        let pen = penalty(&nodes, 2, 12);
        let dense = pen.p.to_dense();
        let n = dense.rows();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(dense.row(i)[j], dense.row(j)[i]);
            }
        }
        let norm = dense.norm_fro();
        let eigs = eigenvalues(&dense).unwrap();
        let min = eigs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10 * norm, "min eigenvalue {min}, ‖P‖ {norm}");
        assert!(pen.gamma < 0.0);
    }
}

#[test]
fn voronoi_edges_pair_distinct_neighbours() {
    let nodes = generate_nodes(&Domain::Star, 0.1, 8).unwrap();
    let vd = build_voronoi(&nodes.points, &Domain::Star).unwrap();
    assert!((vd.total_area() - Domain::Star.area()).abs() < 0.01 * Domain::Star.area());
    for e in &vd.edges {
        assert!(e.i < e.j);
        assert!(e.length > 0.0);
        let (pi, pj) = (nodes.points[e.i], nodes.points[e.j]);
        let di = ((e.midpoint[0] - pi[0]).powi(2) + (e.midpoint[1] - pi[1]).powi(2)).sqrt();
        let dj = ((e.midpoint[0] - pj[0]).powi(2) + (e.midpoint[1] - pj[1]).powi(2)).sqrt();
        assert!((di - dj).abs() < 1e-9);
    }
}

#[test]
fn one_dimensional_jumps_shrink_with_the_stencil() {
    let js: Vec<f64> = [12, 18, 24].iter().map(|&n| jump_magnitude_1d(40, n, 4).unwrap()).collect();
    assert!(js[0] > js[1] && js[1] > js[2], "{js:?}");
    let r = jump_magnitude_1d(40, 12, 4).unwrap() / jump_magnitude_1d(80, 12, 4).unwrap();
    assert!((1.0 / 3.0..=3.0).contains(&r), "{r}");
    assert_eq!(jump_magnitude_1d(30, 30, 3).unwrap(), 0.0);
}
