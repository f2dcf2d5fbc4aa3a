//! CSV emitters. Floats use the shortest representation that round-trips,
//! undefined values are written as `NaN`.

use std::io::Write;

use super::{CorrelationMap2D, Histogram1D, HomWindowResult, MuPoint, Quadrant, QuadrantResult};

fn writer<W: Write>(out: W, header: &[&str]) -> csv::Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

/// `bin_start_ps,count`
pub fn write_hist_csv<W: Write>(hist: &Histogram1D, out: W) -> csv::Result<()> {
    let mut w = writer(out, &["bin_start_ps", "count"])?;
    for (i, c) in hist.counts.iter().enumerate() {
        w.write_record([hist.bin_start(i).to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `t1_ps,t2_ps,count` over nonzero cells, bin left edges.
pub fn write_map_csv<W: Write>(map: &CorrelationMap2D, out: W) -> csv::Result<()> {
    let mut w = writer(out, &["t1_ps", "t2_ps", "count"])?;
    let bw = map.bin_width;
    for (r, c, n) in map.nonzero() {
        w.write_record([
            (r as u64 * bw).to_string(),
            (c as u64 * bw).to_string(),
            n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One quadrant table entry: a channel pair at one pulse separation.
#[derive(Debug, Clone)]
pub struct QuadrantRow {
    pub delta_t: f64,
    /// e.g. `B-X`.
    pub pair: String,
    pub result: QuadrantResult,
}

/// `delta_t_ps,pair,quadrant,raw,g2`
pub fn write_quadrant_csv<W: Write>(rows: &[QuadrantRow], out: W) -> csv::Result<()> {
    let mut w = writer(out, &["delta_t_ps", "pair", "quadrant", "raw", "g2"])?;
    for row in rows {
        for q in Quadrant::ALL {
            w.write_record([
                row.delta_t.to_string(),
                row.pair.clone(),
                q.label().to_string(),
                row.result.same.get(q).to_string(),
                opt(row.result.g2.get(q)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `delta_t_ps,mu_B,mu_X`
pub fn write_mu_csv<W: Write>(points: &[MuPoint], out: W) -> csv::Result<()> {
    let mut w = writer(out, &["delta_t_ps", "mu_B", "mu_X"])?;
    for p in points {
        w.write_record([p.delta_t.to_string(), p.mu_b.to_string(), p.mu_x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `window_index,g2`
pub fn write_hom_series_csv<W: Write>(result: &HomWindowResult, out: W) -> csv::Result<()> {
    let mut w = writer(out, &["window_index", "g2"])?;
    for (i, g) in &result.series {
        w.write_record([i.to_string(), g.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlate::Quadrants;

    #[test]
    fn hist_layout() {
        let h = Histogram1D {
            bin_width: 25,
            origin: 0,
            counts: vec![3, 0],
        };
        let mut buf = Vec::new();
        write_hist_csv(&h, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bin_start_ps,count\n0,3\n25,0\n");
    }

    #[test]
    fn map_omits_zero_cells() {
        let mut m = CorrelationMap2D::zeros(25, 4);
        m.add(1, 3, 2);
        let mut buf = Vec::new();
        write_map_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t1_ps,t2_ps,count\n25,75,2\n");
    }

    #[test]
    fn quadrant_rows() {
        let result = QuadrantResult {
            boundary: 600.0,
            split_bin: 24,
            same: Quadrants { ee: 0, el: 7, le: 1, ll: 0 },
            displaced: Quadrants { ee: 0, el: 2, le: 1, ll: 4 },
            g2: Quadrants { ee: None, el: Some(3.5), le: Some(1.0), ll: Some(0.0) },
        };
        let rows = [QuadrantRow { delta_t: 100.0, pair: "B-X".into(), result }];
        let mut buf = Vec::new();
        write_quadrant_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "delta_t_ps,pair,quadrant,raw,g2\n100,B-X,ee,0,NaN\n100,B-X,el,7,3.5\n100,B-X,le,1,1\n100,B-X,ll,0,0\n"
        );
    }
}
