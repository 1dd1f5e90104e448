//! Small models shared by unit tests.

use crate::models::{CuspedModel, GroupSpec, HalfPlaneModel};

pub fn psl(truncation: f64) -> HalfPlaneModel {
    let text = format!(
        "model = \"half_plane\"\ngenerators = [[1, 1, 0, 1], [0, -1, 1, 0]]\nparabolics = [[[1, 1, 0, 1]]]\n\
         horoball_height = 1.0\ntruncation_radius = {truncation}\nbasepoint = [0.0, 1.0]\n"
    );
    let GroupSpec::HalfPlane(spec) = GroupSpec::parse(&text).unwrap() else { unreachable!() };
    HalfPlaneModel::build(&spec).unwrap()
}

pub fn graph(parabolics: &str, truncation: f64) -> CuspedModel {
    let text = format!("model = \"cusped_cayley\"\ngenerators = [\"a\", \"b\"]\n{parabolics}\ntruncation_radius = {truncation}\n");
    let GroupSpec::CuspedCayley(spec) = GroupSpec::parse(&text).unwrap() else { unreachable!() };
    CuspedModel::build(&spec).unwrap()
}

/// F(a, b) on its Cayley tree.
pub fn free2(truncation: f64) -> CuspedModel {
    graph("", truncation)
}

/// F(a, b) relative to `<a>` with horoballs of depth 4.
pub fn free2_cusped(truncation: f64) -> CuspedModel {
    graph("parabolics = [[\"a\"]]\nmax_depth = 4", truncation)
}
