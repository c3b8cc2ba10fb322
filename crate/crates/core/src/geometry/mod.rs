//! Upper half-plane geometry: points, Möbius maps, fundamental polygons with
//! side pairings, and Schottky data on the Riemann sphere.

mod mobius;
mod schottky;
mod surface;
mod word;

pub use mobius::{disk_to_half_plane, hyperbolic_distance, mobius_apply, HPoint, Mobius};
pub use schottky::{hausdorff, Circle, SchottkyData};
pub use surface::{Geodesic, Location, Side, SurfaceKind, SurfaceModel, Vertex};
pub use word::{Letter, Word};
