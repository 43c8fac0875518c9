//! NTC thermistor model behind a voltage divider and an ADC.
//!
//! The same formulas are available inside contracts as the builtins
//! `\ntc_resistance`, `\ntc_voltage` and `\ntc_code`. The arithmetic here is
//! written in the same operation order as the logic definitions in the
//! corpus, so both routes give bit-identical results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const KELVIN_OFFSET: f64 = 273.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermistorParams {
    /// Resistance at the reference temperature, ohms.
    pub r0: f64,
    /// Beta coefficient, kelvin.
    pub beta: f64,
    /// Reference temperature, °C.
    pub t0: f64,
    /// Series resistor of the divider, ohms.
    pub r_series: f64,
    /// Divider supply, volts.
    pub v_supply: f64,
    /// ADC scale, counts per volt.
    pub counts_per_volt: f64,
}

impl Default for ThermistorParams {
    fn default() -> Self {
        ThermistorParams {
            r0: 10000.0,
            beta: 3988.0,
            t0: 25.0,
            r_series: 5360.0,
            v_supply: 5.0,
            counts_per_volt: 250.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    #[error("temperature {0} °C is at or below absolute zero")]
    BelowAbsoluteZero(f64),
    #[error("thermistor parameters must be strictly positive")]
    InvalidParams,
    #[error("invalid table range [{t_min}, {t_max}] with {n} entries")]
    InvalidRange { t_min: i64, t_max: i64, n: usize },
    #[error("{value} is outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
}

impl ThermistorParams {
    pub fn validate(&self) -> Result<(), ThermoError> {
        let all = [
            self.r0,
            self.beta,
            self.r_series,
            self.v_supply,
            self.counts_per_volt,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) && self.t0 + KELVIN_OFFSET > 0.0 {
            Ok(())
        } else {
            Err(ThermoError::InvalidParams)
        }
    }
}

/// Thermistor resistance in ohms at `t` °C (beta equation).
pub fn resistance(t: f64, p: &ThermistorParams) -> Result<f64, ThermoError> {
    p.validate()?;
    if !(t + KELVIN_OFFSET > 0.0) {
        return Err(ThermoError::BelowAbsoluteZero(t));
    }
    Ok(p.r0 * (p.beta * (1.0 / (t + KELVIN_OFFSET) - 1.0 / (p.t0 + KELVIN_OFFSET))).exp())
}

/// Voltage across the thermistor in the divider, volts.
pub fn divider_voltage(t: f64, p: &ThermistorParams) -> Result<f64, ThermoError> {
    let r = resistance(t, p)?;
    Ok((p.v_supply * r) / (r + p.r_series))
}

/// Unrounded ADC level `counts_per_volt · U(t) + 0.5`.
pub fn adc_level(t: f64, p: &ThermistorParams) -> Result<f64, ThermoError> {
    Ok(p.counts_per_volt * divider_voltage(t, p)? + 0.5)
}

/// ADC code: the level rounded half up.
pub fn adc_code(t: f64, p: &ThermistorParams) -> Result<i64, ThermoError> {
    Ok(adc_level(t, p)?.floor() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub temperature: i64,
    pub code: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupTable {
    pub t_min: i64,
    pub t_max: i64,
    pub entries: Vec<TableEntry>,
}

/// Samples `n` integer temperatures spread evenly over `[t_min, t_max]`,
/// rounding each position toward `t_min`.
pub fn build_table(
    t_min: i64,
    t_max: i64,
    n: usize,
    p: &ThermistorParams,
) -> Result<LookupTable, ThermoError> {
    let invalid = ThermoError::InvalidRange { t_min, t_max, n };
    if t_min >= t_max || n < 2 {
        return Err(invalid);
    }
    let span = t_max - t_min;
    let steps = (n - 1) as i64;
    if span < steps {
        // two samples would share a temperature
        return Err(invalid);
    }
    let mut entries = Vec::with_capacity(n);
    for i in 0..n as i64 {
        let temperature = t_min + (i * span).div_euclid(steps);
        entries.push(TableEntry {
            temperature,
            code: adc_code(temperature as f64, p)?,
        });
    }
    Ok(LookupTable {
        t_min,
        t_max,
        entries,
    })
}

impl LookupTable {
    /// `temperature,code` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("temperature,code\n");
        for e in &self.entries {
            out.push_str(&format!("{},{}\n", e.temperature, e.code));
        }
        out
    }

    /// Ghost-array declarations holding the sampling points, for pasting
    /// into a `.mc` file.
    pub fn to_mc_snippet(&self, prefix: &str) -> String {
        let n = self.entries.len();
        let join = |f: &dyn Fn(&TableEntry) -> i64| {
            self.entries
                .chunks(10)
                .map(|c| {
                    c.iter()
                        .map(|e| f(e).to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                })
                .collect::<Vec<_>>()
                .join(",\n  @     ")
        };
        format!(
            "/*@ ghost int32_t {prefix}_TEMP[{n}] = {{\n  @     {}\n  @ }};\n  @ ghost int32_t {prefix}_CODE[{n}] = {{\n  @     {}\n  @ }};\n  @*/\n",
            join(&|e| e.temperature),
            join(&|e| e.code),
        )
    }
}

/// Piecewise-linear code between the bracketing sample points.
pub fn pwl_code(t: f64, table: &LookupTable) -> Result<f64, ThermoError> {
    let lo = table.t_min as f64;
    let hi = table.t_max as f64;
    let out = ThermoError::OutOfRange { value: t, lo, hi };
    let first = table.entries.first().ok_or(out.clone())?;
    let last = table.entries.last().ok_or(out.clone())?;
    if !(t >= first.temperature as f64 && t <= last.temperature as f64) {
        return Err(out);
    }
    // index of the last sample at or below t
    let i = table
        .entries
        .partition_point(|e| (e.temperature as f64) <= t)
        - 1;
    let a = table.entries[i];
    if a.temperature as f64 == t || i + 1 == table.entries.len() {
        return Ok(a.code as f64);
    }
    let b = table.entries[i + 1];
    let frac = (t - a.temperature as f64) / (b.temperature - a.temperature) as f64;
    Ok(a.code as f64 + frac * (b.code - a.code) as f64)
}

/// Largest integer temperature in the table range whose code is at least
/// `d`. Where the code is strictly decreasing this is the unique `t` with
/// `D(t) >= d > D(t + 1)`; on a plateau the warmest temperature wins.
pub fn temp_from_code(
    d: i64,
    table: &LookupTable,
    p: &ThermistorParams,
) -> Result<i64, ThermoError> {
    let code = |t: i64| adc_code(t as f64, p);
    let (lo_code, hi_code) = (code(table.t_max)?, code(table.t_min)?);
    if d < lo_code || d > hi_code {
        return Err(ThermoError::OutOfRange {
            value: d as f64,
            lo: lo_code as f64,
            hi: hi_code as f64,
        });
    }
    // D is non-increasing, so `D(t) >= d` holds on a prefix of the range.
    let (mut lo, mut hi) = (table.t_min, table.t_max);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if code(mid)? >= d {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_point() {
        let p = ThermistorParams::default();
        assert_eq!(resistance(25.0, &p).unwrap(), 10000.0);
    }

    #[test]
    fn absolute_zero_rejected() {
        let p = ThermistorParams::default();
        assert!(matches!(
            resistance(-273.15, &p),
            Err(ThermoError::BelowAbsoluteZero(_))
        ));
    }

    #[test]
    fn table_rejects_degenerate_ranges() {
        let p = ThermistorParams::default();
        assert!(build_table(10, 10, 5, &p).is_err());
        assert!(build_table(0, 10, 1, &p).is_err());
        assert!(build_table(0, 10, 12, &p).is_err());
        assert_eq!(build_table(0, 10, 11, &p).unwrap().entries.len(), 11);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = ThermistorParams::default();
        let t = build_table(0, 3, 4, &p).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("temperature,code\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
