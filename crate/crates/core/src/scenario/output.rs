//! Time-series CSV and binary matrix dumps.

use std::io::{self, Read, Write};

use crate::evolve::{unwrap_phases, Observation};
use crate::linalg::{DenseMatrix, C64};

const MAGIC: &[u8; 4] = b"FQU1";

/// Header of the time-series CSV for `m` parameters and `n` fiber axes.
pub fn csv_header(m: usize, n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=m).map(|l| format!("sigma_{l}")));
    cols.extend((1..=m).map(|l| format!("dsigma_dt_{l}")));
    cols.extend((1..=n).map(|k| format!("exp_q_{k}")));
    cols.extend((1..=n).map(|k| format!("exp_p_{k}")));
    cols.extend(
        [
            "norm",
            "phase_total",
            "phase_geometric",
            "unitarity_defect",
            "phase_total_unwrapped",
            "phase_geometric_unwrapped",
        ]
        .map(String::from),
    );
    cols.join(",")
}

/// One row per observation; phases are wrapped to `(-pi, pi]` and also
/// unwrapped along the rows.
pub fn timeseries_csv(rows: &[Observation], m: usize, n: usize) -> String {
    let total_u = unwrap_phases(&rows.iter().map(|o| o.overlap_total).collect::<Vec<_>>());
    let geo_u = unwrap_phases(&rows.iter().map(|o| o.overlap_geometric).collect::<Vec<_>>());
    let mut out = csv_header(m, n);
    out.push('\n');
    for (i, o) in rows.iter().enumerate() {
        let mut fields: Vec<f64> = vec![o.t];
        fields.extend(&o.sigma);
        fields.extend(&o.dsigma_dt);
        fields.extend(&o.exp_q);
        fields.extend(&o.exp_p);
        fields.push(o.norm);
        fields.push(o.overlap_total.1.atan2(o.overlap_total.0));
        fields.push(o.overlap_geometric.1.atan2(o.overlap_geometric.0));
        fields.push(o.unitarity_defect);
        fields.push(total_u[i]);
        fields.push(geo_u[i]);
        let line: Vec<String> = fields.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// `FQU1`, `u32` rows, `u32` cols, 4 reserved zero bytes, then row-major
/// `(re, im)` pairs, all little-endian.
pub fn write_fqu(w: &mut impl Write, m: &DenseMatrix) -> io::Result<()> {
    let too_big = || io::Error::new(io::ErrorKind::InvalidInput, "matrix too large for a u32 header");
    let rows = u32::try_from(m.nrows()).map_err(|_| too_big())?;
    let cols = u32::try_from(m.ncols()).map_err(|_| too_big())?;
    let mut buf = Vec::with_capacity(16 + 16 * m.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    buf.extend_from_slice(&[0u8; 4]);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)
}

pub fn read_fqu(r: &mut impl Read) -> io::Result<DenseMatrix> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not an FQU1 matrix dump"));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let mut body = vec![0u8; 16 * rows * cols];
    r.read_exact(&mut body)?;
    let f = |i: usize| f64::from_le_bytes(body[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    Ok(DenseMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        C64::new(f(k), f(k + 1))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fqu_round_trip() {
        let m = DenseMatrix::from_fn(3, 2, |i, j| C64::new(i as f64 + 0.25, -(j as f64) * 1e-300));
        let mut buf = Vec::new();
        write_fqu(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 16);
        assert_eq!(&buf[..4], b"FQU1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 3);
        assert_eq!(read_fqu(&mut buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn header_columns() {
        assert_eq!(
            csv_header(2, 1),
            "t,sigma_1,sigma_2,dsigma_dt_1,dsigma_dt_2,exp_q_1,exp_p_1,norm,phase_total,phase_geometric,\
             unitarity_defect,phase_total_unwrapped,phase_geometric_unwrapped"
        );
    }
}
