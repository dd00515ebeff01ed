use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{FeatureSpec, FrameError, OutcomeKind, TreatmentFrame, TreatmentMeta};

/// JSON written next to a frame CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    pub schema: Vec<FeatureSpec>,
    pub outcome_kind: OutcomeKind,
    pub treatment_meta: TreatmentMeta,
    pub n_rows: usize,
    pub n_treated: usize,
    pub n_control: usize,
    pub frame_sha256: String,
}

impl FrameSidecar {
    pub fn describe(frame: &TreatmentFrame) -> Self {
        let (n_treated, n_control) = frame.arm_sizes();
        Self {
            schema: frame.schema().to_vec(),
            outcome_kind: frame.outcome_kind,
            treatment_meta: frame.meta.clone(),
            n_rows: frame.n_rows(),
            n_treated,
            n_control,
            frame_sha256: frame.fingerprint(),
        }
    }
}

/// Writes the feature columns followed by `w` (0/1) and `y`. Floats use the
/// shortest representation that reads back to the same value.
pub fn write_frame_csv<W: Write>(frame: &TreatmentFrame, w: W) -> Result<(), FrameError> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = frame.feature_names();
    header.push("w".into());
    header.push("y".into());
    wtr.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..frame.n_rows() {
        row.clear();
        row.extend((0..frame.schema().len()).map(|j| frame.column(j)[i].to_string()));
        row.push(if frame.treatment()[i] { "1" } else { "0" }.into());
        row.push(frame.outcomes()[i].to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a frame CSV back using the schema and metadata from its sidecar.
pub fn read_frame_csv<R: Read>(
    reader: R,
    sidecar: &FrameSidecar,
) -> Result<TreatmentFrame, FrameError> {
    let mut frame = TreatmentFrame::new(
        sidecar.schema.clone(),
        sidecar.outcome_kind,
        sidecar.treatment_meta.clone(),
    )?;
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut expected = frame.feature_names();
    expected.push("w".into());
    expected.push("y".into());
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(FrameError::Schema(
            "frame header does not match sidecar schema".into(),
        ));
    }
    let p = frame.schema().len();
    let mut x = vec![0.0; p];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, FrameError> {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| FrameError::Parse {
                    line,
                    reason: format!("column {i} is not a number"),
                })
        };
        for (j, slot) in x.iter_mut().enumerate() {
            *slot = num(j)?;
        }
        let w = match rec.get(p) {
            Some("1") => true,
            Some("0") => false,
            other => {
                return Err(FrameError::Parse {
                    line,
                    reason: format!("treatment `{}` is not 0/1", other.unwrap_or("")),
                })
            }
        };
        frame.push_row(&x, w, num(p + 1)?)?;
    }
    if frame.n_rows() != sidecar.n_rows {
        return Err(FrameError::Schema(format!(
            "sidecar records {} rows, csv holds {}",
            sidecar.n_rows,
            frame.n_rows()
        )));
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec((-1e6f64..1e6, any::<bool>(), -1e3f64..1e3), 0..40)) {
            let mut f = TreatmentFrame::new(
                vec![FeatureSpec::new("x1", FeatureKind::Continuous)],
                OutcomeKind::Continuous,
                TreatmentMeta { control: "4.6".into(), treated: "4.7".into() },
            ).unwrap();
            for (x, w, y) in &rows {
                f.push_row(&[*x], *w, *y).unwrap();
            }
            let mut buf = Vec::new();
            write_frame_csv(&f, &mut buf).unwrap();
            let back = read_frame_csv(buf.as_slice(), &FrameSidecar::describe(&f)).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(back.fingerprint(), f.fingerprint());
        }
    }

    #[test]
    fn rejects_bad_treatment() {
        let f = TreatmentFrame::new(
            vec![FeatureSpec::new("x1", FeatureKind::Continuous)],
            OutcomeKind::Continuous,
            TreatmentMeta {
                control: "a".into(),
                treated: "b".into(),
            },
        )
        .unwrap();
        let mut side = FrameSidecar::describe(&f);
        side.n_rows = 1;
        let err = read_frame_csv("x1,w,y\n1,2,3\n".as_bytes(), &side).unwrap_err();
        assert!(matches!(err, FrameError::Parse { line: 2, .. }));
        assert!(read_frame_csv("x2,w,y\n".as_bytes(), &side).is_err());
    }
}
