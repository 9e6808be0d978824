//! JSON form of a [`DivisibilityReport`].

use std::io::Write;

use serde::Serialize;

use super::{AbsoluteFlag, DivisibilityReport, Kind};
use crate::channels::io::{complex_rows, ChoiDoc};
use crate::error::Result;

#[derive(Serialize)]
struct WitnessDoc {
    w: Vec<Vec<[f64; 2]>>,
    lambda: Vec<Vec<[f64; 2]>>,
    objective: f64,
}

#[derive(Serialize)]
struct ReportDoc {
    kind: Kind,
    distance: f64,
    intermediate_choi: ChoiDoc,
    witness: Option<WitnessDoc>,
    absolute_flag: AbsoluteFlag,
    trivial_bounds: Option<[f64; 2]>,
    sdp_gap: f64,
}

pub fn report_to_json(r: &DivisibilityReport) -> Result<serde_json::Value> {
    let doc = ReportDoc {
        kind: r.kind,
        distance: r.distance,
        intermediate_choi: ChoiDoc::new(&r.intermediate),
        witness: r.witness.as_ref().map(|w| WitnessDoc {
            w: complex_rows(w.w.matrix()),
            lambda: complex_rows(w.lambda.matrix()),
            objective: w.objective,
        }),
        absolute_flag: r.absolute_flag,
        trivial_bounds: r.trivial_bounds,
        sdp_gap: r.sdp_gap,
    };
    Ok(serde_json::to_value(doc)?)
}

pub fn write_report<W: Write>(r: &DivisibilityReport, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &report_to_json(r)?)?;
    Ok(())
}
