use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{AcField, DecouplingSequence};
use crate::numeric::simpson;

/// Φ by direct integration of `γ y(t) B(t)` over the pulse timeline.
///
/// Each constant-sign free segment is integrated with composite Simpson using
/// `nodes_per_half_period` intervals per half period of the field (scaled by
/// the segment length). The integrand is smooth inside a segment and the
/// modulation is zero inside pulse windows, so segment edges are the only
/// discontinuities. Shares nothing with the closed form except the timeline.
pub fn quadrature_phase_oracle(
    field: &AcField,
    seq: &DecouplingSequence,
    gamma_e: f64,
    nodes_per_half_period: usize,
) -> Result<f64> {
    if nodes_per_half_period < 50 {
        return Err(Error::invalid(
            "nodes_per_half_period",
            format!("{nodes_per_half_period} is below the minimum of 50"),
        ));
    }
    let f = field.frequency();
    let omega = 2.0 * PI * f;
    let phase = field.total_phase();
    let integrand = |t: f64| (omega * t + phase).cos();

    let mut total = 0.0;
    for seg in seq.free_segments() {
        let dur = seg.duration();
        if dur <= 0.0 {
            continue;
        }
        let intervals = (nodes_per_half_period as f64 * dur * 2.0 * f).ceil() as usize;
        total += seg.sign * simpson(integrand, seg.start, seg.end, intervals);
    }
    Ok(gamma_e * field.amplitude() * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_sequence, Family, GAMMA_E};

    #[test]
    fn zero_field() {
        let seq = build_sequence(Family::Xy8, 1, 2.376e-6, 124e-9).unwrap();
        let f = AcField::new(0.0, 2e5, 0.0).unwrap();
        assert_eq!(
            quadrature_phase_oracle(&f, &seq, GAMMA_E, 200).unwrap(),
            0.0
        );
    }

    #[test]
    fn rejects_coarse_grids() {
        let seq = build_sequence(Family::Xy8, 1, 2.376e-6, 124e-9).unwrap();
        let f = AcField::new(1e-6, 2e5, 0.0).unwrap();
        assert!(quadrature_phase_oracle(&f, &seq, GAMMA_E, 49).is_err());
    }

    #[test]
    fn reference_accumulation_point() {
        let seq = build_sequence(Family::Xy8, 1, 2.376e-6, 124e-9).unwrap();
        let f = AcField::new(0.74e-6, 2e5, 0.0).unwrap();
        let q = quadrature_phase_oracle(&f, &seq, GAMMA_E, 200).unwrap();
        assert!((q - 1.654).abs() < 1e-3, "q = {q}");
    }
}
