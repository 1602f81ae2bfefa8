//! Reproduction suite: √(Q_F/I_F) per measurement for the standard channel
//! selections, and short-pulse uncertainties at low intensity.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fisher::FisherReport;
use crate::pipeline::{presets, run_point};

/// Column pulse lengths in FWHM cycles; `None` is the monochromatic field.
pub const COLUMNS: [Option<f64>; 4] = [Some(5.0), Some(10.0), Some(20.0), None];

/// Measurement rows, in print order.
pub const MEASURES: [&str; 5] = ["full", "yield", "coarse", "spec", "spec coarse"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    SingleChannel,
    FiveChannels,
    FiveChannelPairs,
}

impl Selection {
    pub const ALL: [Selection; 3] = [Selection::SingleChannel, Selection::FiveChannels, Selection::FiveChannelPairs];

    pub fn label(self) -> &'static str {
        match self {
            Selection::SingleChannel => "single event",
            Selection::FiveChannels => "five events, one branch",
            Selection::FiveChannelPairs => "five events with intracycle partners",
        }
    }

    pub fn config(self, cycles: Option<f64>) -> crate::config::RunConfig {
        match self {
            Selection::SingleChannel => presets::single_channel(cycles),
            Selection::FiveChannels => presets::five_channels(cycles, false),
            Selection::FiveChannelPairs => presets::five_channels(cycles, true),
        }
    }
}

/// √(Q_F/I_F) for each measurement of `report`, in `MEASURES` order.
pub fn ratios(report: &FisherReport) -> [f64; 5] {
    let c = &report.cfi;
    [c.full, c.yield_, c.coarse, c.spec, c.spec_coarse].map(|f| report.ratio(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub selection: Selection,
    /// `values[measure][column]`.
    pub values: [[f64; 4]; 5],
}

pub fn ratio_table(selection: Selection) -> Result<RatioTable> {
    let mut values = [[0.0; 4]; 5];
    for (j, &cycles) in COLUMNS.iter().enumerate() {
        let r = ratios(&run_point(&selection.config(cycles))?);
        for (i, v) in r.into_iter().enumerate() {
            values[i][j] = v;
        }
    }
    Ok(RatioTable { selection, values })
}

/// Intensity (W/cm²) and number of measurements of the short-pulse rows.
pub const SHORT_PULSE_POINTS: [(f64, f64); 3] = [(1.13e14, 4.3e5), (1.53e14, 4.1e5), (1.82e14, 2.1e5)];

/// Relative uncertainties (%) of a three-cycle pulse. Spectral binning with
/// experiment-specific edges is not included; `spec_coarse` uses uniform
/// bins of the configured width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortPulseRow {
    pub intensity_wcm2: f64,
    pub n_measurements: f64,
    pub optimal: Option<f64>,
    pub full: Option<f64>,
    pub coarse: Option<f64>,
    #[serde(rename = "yield")]
    pub yield_: Option<f64>,
    pub spec: Option<f64>,
    pub spec_coarse: Option<f64>,
}

pub fn short_pulse_row(intensity_wcm2: f64, n_measurements: f64) -> Result<ShortPulseRow> {
    let r = run_point(&presets::short_pulse(intensity_wcm2, n_measurements))?;
    let u = r.uncertainty_pct;
    Ok(ShortPulseRow {
        intensity_wcm2,
        n_measurements,
        optimal: u.optimal,
        full: u.full,
        coarse: u.coarse,
        yield_: u.yield_,
        spec: u.spec,
        spec_coarse: u.spec_coarse,
    })
}
