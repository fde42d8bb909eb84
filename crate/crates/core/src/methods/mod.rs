//! Global evaluation and differentiation matrices for the three trial spaces.

mod fd;
mod kansa;
mod pum;

pub use fd::{build_fd, build_fd_with, FdStencils};
pub use kansa::build_kansa;
pub use pum::{build_patch_cover, build_pum, shepard_weight, wendland, PatchCover};

use crate::interp::Op;
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Kansa,
    Pum,
    Fd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kansa => "kansa",
            Method::Pum => "pum",
            Method::Fd => "fd",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMeta {
    pub method: Method,
    pub degree: usize,
    /// FD stencil size or PUM target patch size.
    pub local_size: Option<usize>,
    pub patches: Option<usize>,
    pub nodes: usize,
    pub evals: usize,
}

/// `E(Y,X)`, `D¹(Y,X)`, `D²(Y,X)` for one method.
#[derive(Clone, Debug)]
pub struct GlobalOperator {
    pub meta: OperatorMeta,
    pub e: Matrix,
    pub d1: Matrix,
    pub d2: Matrix,
}

impl GlobalOperator {
    pub fn matrix(&self, op: Op) -> &Matrix {
        match op {
            Op::Value => &self.e,
            Op::Deriv(0) => &self.d1,
            Op::Deriv(_) => &self.d2,
        }
    }

    pub fn nodes(&self) -> usize {
        self.meta.nodes
    }

    pub fn evals(&self) -> usize {
        self.meta.evals
    }
}

pub(crate) const OPS: [Op; 3] = [Op::Value, Op::Deriv(0), Op::Deriv(1)];
