//! Published reference energies for the 2D hydrogen atom and the exciton
//! anchor, with the state each entry refers to.

use serde::{Deserialize, Serialize};

/// Field strengths (a.u.) of the table rows.
pub const TABLE_FIELDS: [f64; 8] = [0.5, 1.0, 2.0, 4.0, 10.0, 100.0, 1000.0, 10000.0];

/// Tilt angles (degrees) of the table columns.
pub const TABLE_ANGLES_DEG: [f64; 4] = [0.0, 27.0, 54.0, 81.0];

/// First excited state.
pub const TABLE_E1: [[f64; 4]; 8] = [
    [-0.27678405, -0.26528554, -0.23126243, -0.17640957],
    [-0.20392330, -0.18813374, -0.14614052, -0.08150442],
    [0.04130874, 0.06072439, 0.09548195, 0.14038591],
    [0.67852876, 0.69653696, 0.67573616, 0.62258164],
    [2.95734799, 2.94208198, 2.62839018, 2.14718594],
    [43.74850351, 44.23373675, 35.01722779, 26.51275203],
    [480.93444481, 456.24798403, 371.78493695, 277.87663177],
    [4945.43794585, 4650.63170583, 3780.99288744, 2816.81434104],
];

/// Second excited state.
pub const TABLE_E2: [[f64; 4]; 8] = [
    [-0.10686554, -0.08765517, -0.07627428, -0.11025339],
    [0.00707007, 0.03794284, 0.06357988, 0.02558182],
    [0.31437038, 0.36132446, 0.36535958, 0.28228436],
    [1.04219925, 1.10783242, 1.02157341, 0.79709702],
    [3.50447015, 3.57886264, 3.12007058, 2.39508346],
    [45.41374489, 45.60201238, 37.19013487, 28.16742401],
    [486.47671280, 464.85293413, 393.52867231, 299.03138826],
    [4966.59383286, 4723.50218673, 4022.90347429, 3060.77202297],
];

/// Third excited state.
pub const TABLE_E3: [[f64; 4]; 8] = [
    [0.04072983, -0.01085554, 0.00438870, -0.05474697],
    [0.49549097, 0.1425023882, 0.17184677, 0.15375924],
    [1.57853526, 0.50673360, 0.50625030, 0.42459900],
    [4.00329697, 1.31189496, 1.22852674, 1.00456007],
    [11.89181281, 3.90040567, 3.54926952, 2.86808926],
    [140.5148315, 46.95758876, 41.68141369, 33.12068670],
    [1470.80545235, 477.30100986, 438.29023420, 345.22282692],
    [14854.71822028, 4847.91395473, 4451.92041328, 3496.02256291],
];

/// Exciton ground state at 2 T, untilted field, in meV.
pub const EXCITON_ANCHOR_MEV: f64 = -18.03467;
pub const EXCITON_ANCHOR_TESLA: f64 = 2.0;

/// How a state is singled out among the levels of one `(B, α)` point.
/// Written as `E3` or `m0_n1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// `k`-th level in energy order, 0 = ground state.
    Energy(usize),
    /// `radial`-th level (0-based) of angular momentum `m`; untilted field only.
    Axial { m: i64, radial: usize },
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateLabel::Energy(k) => write!(f, "E{k}"),
            StateLabel::Axial { m, radial } => write!(f, "m{m}_n{radial}"),
        }
    }
}

impl std::str::FromStr for StateLabel {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> crate::error::Result<Self> {
        let bad = || crate::error::Error::Config(format!("state label must look like E3 or m0_n1, got {s:?}"));
        if let Some(k) = s.strip_prefix('E').or_else(|| s.strip_prefix('e')) {
            return k.parse().map(StateLabel::Energy).map_err(|_| bad());
        }
        let rest = s.strip_prefix('m').ok_or_else(bad)?;
        let (m, n) = rest.split_once("_n").ok_or_else(bad)?;
        Ok(StateLabel::Axial {
            m: m.parse().map_err(|_| bad())?,
            radial: n.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for StateLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which table an entry comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table {
    E1,
    E2,
    E3,
}

impl Table {
    pub fn values(self) -> &'static [[f64; 4]; 8] {
        match self {
            Table::E1 => &TABLE_E1,
            Table::E2 => &TABLE_E2,
            Table::E3 => &TABLE_E3,
        }
    }

    /// State the entry at tilt `alpha_deg` refers to. Tilted columns and the
    /// first two tables follow energy order; the untilted column of the third
    /// table is the second `m = 0` level, which lies above many `m < 0`
    /// levels once the field is on.
    pub fn label(self, alpha_deg: f64) -> StateLabel {
        match (self, alpha_deg == 0.0) {
            (Table::E1, _) => StateLabel::Energy(1),
            (Table::E2, _) => StateLabel::Energy(2),
            (Table::E3, true) => StateLabel::Axial { m: 0, radial: 1 },
            (Table::E3, false) => StateLabel::Energy(3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Table::E1 => "E1",
            Table::E2 => "E2",
            Table::E3 => "E3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub table: Table,
    pub b: f64,
    pub alpha_deg: f64,
    pub energy: f64,
    pub label: StateLabel,
}

/// All table entries, row by row.
pub fn entries() -> Vec<ReferenceEntry> {
    let mut out = Vec::with_capacity(96);
    for table in [Table::E1, Table::E2, Table::E3] {
        for (i, &b) in TABLE_FIELDS.iter().enumerate() {
            for (j, &a) in TABLE_ANGLES_DEG.iter().enumerate() {
                out.push(ReferenceEntry {
                    table,
                    b,
                    alpha_deg: a,
                    energy: table.values()[i][j],
                    label: table.label(a),
                });
            }
        }
    }
    out
}

pub fn lookup(table: Table, b: f64, alpha_deg: f64) -> Option<f64> {
    let i = TABLE_FIELDS.iter().position(|&x| x == b)?;
    let j = TABLE_ANGLES_DEG.iter().position(|&x| x == alpha_deg)?;
    Some(table.values()[i][j])
}
