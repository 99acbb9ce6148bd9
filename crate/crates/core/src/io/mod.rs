//! Reading and writing tables, solution documents and SVG maps.

mod document;
mod svg;
mod table_csv;

pub use document::{
    CellEntry, Labels, Masses, ReconstitutionSection, SolutionDocument, SupplementarySection,
    SCHEMA_VERSION,
};
pub use svg::{render_map, render_svg, MapKind, MapOptions, MapPlot, MapPoint, PointClass};
pub use table_csv::{read_table, read_table_str, write_table, ReadOptions};
