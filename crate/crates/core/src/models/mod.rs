//! Concrete models: the half-plane and cusped-graph backends and their spec files.

pub mod cusped;
pub mod half_plane;
pub mod spec;
pub mod word;

pub use cusped::CuspedModel;
pub use half_plane::HalfPlaneModel;
pub use spec::GroupSpec;

use crate::error::Result;

/// A built model of either backend.
#[derive(Debug)]
pub enum AnyModel {
    HalfPlane(HalfPlaneModel),
    Cusped(CuspedModel),
}

impl AnyModel {
    pub fn build(spec: &GroupSpec) -> Result<Self> {
        Ok(match spec {
            GroupSpec::HalfPlane(s) => AnyModel::HalfPlane(HalfPlaneModel::build(s)?),
            GroupSpec::CuspedCayley(s) => AnyModel::Cusped(CuspedModel::build(s)?),
        })
    }

    pub fn backend(&self) -> crate::space::Backend {
        crate::with_model!(self, m => crate::space::Space::backend(m))
    }
}

/// Runs `$body` with `$m` bound to the concrete model.
#[macro_export]
macro_rules! with_model {
    ($model:expr, $m:ident => $body:expr) => {
        match $model {
            $crate::models::AnyModel::HalfPlane($m) => $body,
            $crate::models::AnyModel::Cusped($m) => $body,
        }
    };
}
