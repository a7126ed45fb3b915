//! Geodetic geometry for road centerlines and community districts.
//!
//! Coordinates are WGS84 degrees. Metric quantities (lengths, spacing, areas)
//! are computed in a local equirectangular frame centred on the geometry
//! being measured; see [`LocalFrame`].

mod join;
mod point;
mod polygon;
mod polyline;
mod projection;

pub use join::{spatial_join, subsample_per_community, Located, SpatialJoin};
pub use point::GeoPoint;
pub use polygon::{point_in_polygon, CommunityDistrict, Polygon};
pub use polyline::{length_inside, polyline_length, sample_equidistant, Polyline, SamplePoint};
pub use projection::{project_local, unproject_local, LocalFrame, EARTH_RADIUS_M};
