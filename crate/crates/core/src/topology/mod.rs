//! Sublevel-set topology: grid filtration, separating saddles, the well
//! labeling maps, and the landscape assumption report.

mod grid;
mod jmap;

pub use grid::{GridFiltration, Labeling};
pub use jmap::{
    check_assumptions, construct_jmaps, detect_separating_saddles, exit_height, AssumptionReport,
    ComponentInfo, JMap, JMapEntry, SaddleKind, SaddleRef, SeparatingSaddle, Verdict,
};
