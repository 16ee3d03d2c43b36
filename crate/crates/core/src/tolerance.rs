use serde::{Deserialize, Serialize};

/// Tolerances shared by every routine in the crate.
///
/// `geometric` is used for containment and consistency tests, `optimizer`
/// for the stopping rule of numerical searches, `contact_band` is the
/// relative width of the shell in which a vertex or facet counts as touching
/// a sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub geometric: f64,
    pub optimizer: f64,
    pub contact_band: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            geometric: 1e-9,
            optimizer: 1e-6,
            contact_band: 1e-7,
        }
    }
}

impl Tolerance {
    pub fn with_band(mut self, band: f64) -> Self {
        self.contact_band = band;
        self
    }
}
