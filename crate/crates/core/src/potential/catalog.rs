//! Named potential catalog.
//!
//! Each entry is an expression in the standard grammar plus default
//! parameters and a default domain, chosen to realize a particular landscape
//! shape (well counts, barrier orderings, assumption verdicts). Parameters
//! can be overridden entry-by-entry.

use std::collections::BTreeMap;

use super::domain::DomainGeometry;
use super::{parse_potential, PotentialSpec};
use crate::error::ParseError;

pub struct CatalogEntry {
    pub name: &'static str,
    pub expr: &'static str,
    pub defaults: &'static [(&'static str, f64)],
    pub domain: DomainGeometry,
    pub summary: &'static str,
}

impl CatalogEntry {
    pub fn default_params(&self) -> BTreeMap<String, f64> {
        self.defaults
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect()
    }

    /// Spec with user overrides merged over the defaults.
    pub fn spec_with(
        &self,
        overrides: &BTreeMap<String, f64>,
    ) -> Result<PotentialSpec, ParseError> {
        let mut params = self.default_params();
        for (k, v) in overrides {
            params.insert(k.clone(), *v);
        }
        parse_potential(self.expr, &params)
    }

    pub fn spec(&self) -> PotentialSpec {
        self.spec_with(&BTreeMap::new())
            .expect("catalog entries parse")
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

static ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "flat",
        expr: "0",
        defaults: &[],
        domain: DomainGeometry::Interval { a: -1.0, b: 1.0 },
        summary: "zero potential; pure Brownian exit",
    },
    CatalogEntry {
        name: "shallow_well",
        expr: "c*x^2",
        defaults: &[("c", 1.5)],
        domain: DomainGeometry::Interval { a: -1.0, b: 1.0 },
        summary: "single harmonic well, barrier c at both endpoints",
    },
    CatalogEntry {
        name: "double_well",
        expr: "s*(x^2-1)^2",
        defaults: &[("s", 1.0)],
        domain: DomainGeometry::Interval { a: -2.0, b: 2.0 },
        summary: "symmetric double well, boundary barrier 9s, interior saddle s",
    },
    CatalogEntry {
        name: "tilted_double_well",
        expr: "s*((x^2-1)^2 + c*x*(x^2-4))",
        defaults: &[("c", 0.2), ("s", 1.0)],
        domain: DomainGeometry::Interval { a: -2.0, b: 2.0 },
        summary: "double well with asymmetric minima but equal boundary values; both endpoints stay exit gates",
    },
    CatalogEntry {
        name: "tilted_linear",
        expr: "(x^2-1)^2 + c*x",
        defaults: &[("c", 0.2)],
        domain: DomainGeometry::Interval { a: -2.0, b: 2.0 },
        summary: "linearly tilted double well; boundary values differ so only one endpoint is an exit gate",
    },
    CatalogEntry {
        name: "triple_well",
        expr: "s*(x^2*(x^2-2.25)^2 + t*x*(x^2-4))",
        defaults: &[("t", 0.12), ("s", 1.0)],
        domain: DomainGeometry::Interval { a: -2.0, b: 2.0 },
        summary: "three wells in one boundary-level component; gate of the deep well is both endpoints, the others escape over interior saddles",
    },
    CatalogEntry {
        name: "hip1",
        expr: "a*exp(-p*x^2) + q*x^2",
        defaults: &[("a", 3.0), ("p", 4.0), ("q", 1.0)],
        domain: DomainGeometry::Interval { a: -1.5, b: 1.5 },
        summary: "even double well with central barrier above the boundary values: two equal-depth maximal wells (uniqueness fails)",
    },
    CatalogEntry {
        name: "hip2",
        expr: "d1*exp(-k1*(x-c1)^2) + d2*exp(-k2*(x-c2)^2) + q*(x-q0)^2",
        defaults: &[
            ("d1", 3.0),
            ("k1", 6.0),
            ("c1", -0.8),
            ("d2", 1.6),
            ("k2", 2.2),
            ("c2", 1.45),
            ("q", 0.4),
            ("q0", 0.3),
        ],
        domain: DomainGeometry::Interval { a: -1.8, b: 1.95 },
        summary: "deepest well walled off inside the domain: its sublevel component never reaches the boundary",
    },
    CatalogEntry {
        name: "hip3",
        expr: "s*((x^2-1)^2 + t*x)",
        defaults: &[("s", 5.0), ("t", 0.5)],
        domain: DomainGeometry::Interval { a: -1.5, b: 1.15 },
        summary: "deep well drains to the endpoint that is NOT the boundary minimum",
    },
    CatalogEntry {
        name: "hip4",
        expr: "s*((x^2-1)^2 + t*x^3*(x^2-2))",
        defaults: &[("t", 0.25), ("s", 1.0)],
        domain: DomainGeometry::Interval { a: -SQRT2, b: SQRT2 },
        summary: "interior saddle exactly at the boundary level: the maximal well has a separating saddle on its boundary",
    },
    CatalogEntry {
        name: "twin_floor",
        expr: "s*(x^2-1)^2*(1 + g*x)",
        defaults: &[("g", 0.15), ("s", 1.0)],
        domain: DomainGeometry::Interval { a: -1.8, b: 1.8 },
        summary: "two exactly-equal minima sharing one well; the labeling tie-break is exercised",
    },
    CatalogEntry {
        name: "two_well_2d",
        expr: "s*((x^2-1)^2 + a*y^2)",
        defaults: &[("s", 0.3), ("a", 4.0)],
        domain: DomainGeometry::Ball { center: [0.0, 0.0], radius: 1.6 },
        summary: "two planar wells; exits concentrate at the two boundary-trace minima on the x axis",
    },
    CatalogEntry {
        name: "ring_2d",
        expr: "(x^2+y^2-1)^2 + a*y^2 + b*y",
        defaults: &[("a", 0.5), ("b", 0.1)],
        domain: DomainGeometry::Ball { center: [0.0, 0.0], radius: 1.7 },
        summary: "broken ring: two crescent basins, a separating saddle at the low pass and a non-separating one at the high pass",
    },
];

pub fn catalog_entry(name: &str) -> Option<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.name == name)
}

pub fn catalog_names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}
