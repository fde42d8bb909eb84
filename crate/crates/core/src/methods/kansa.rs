use super::{GlobalOperator, Method, OperatorMeta, OPS};
use crate::error::Result;
use crate::geometry::Point;
use crate::interp::LocalSystem;
use crate::linalg::Matrix;

/// One global interpolation problem over all nodes; dense rows.
pub fn build_kansa(x: &[Point], y: &[Point], p: usize) -> Result<GlobalOperator> {
    let sys = LocalSystem::assemble(x, p, "global node set")?;
    let mut mats = sys.weight_matrices(&OPS, y).into_iter();
    let e = mats.next().unwrap();
    let d1 = mats.next().unwrap();
    let d2 = mats.next().unwrap();
    Ok(GlobalOperator {
        meta: OperatorMeta { method: Method::Kansa, degree: p, local_size: None, patches: None, nodes: x.len(), evals: y.len() },
        e: Matrix::Dense(e),
        d1: Matrix::Dense(d1),
        d2: Matrix::Dense(d2),
    })
}
