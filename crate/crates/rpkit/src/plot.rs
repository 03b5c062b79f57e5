//! Histograms as CSV bins and standalone SVG.
//!
//! The SVG is assembled from fixed-precision numbers only, so identical
//! inputs give identical bytes.

use std::fmt::Write;

pub const DEFAULT_BINS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

/// Equal-width bins over `[lo, hi]`; the last bin is closed. Values outside
/// the range or non-finite are ignored.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Histogram {
    assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        if !(lo..=hi).contains(&v) {
            continue;
        }
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Histogram { lo, hi, counts }
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.bins() as f64;
        let lower = self.lo + w * i as f64;
        let upper = if i + 1 == self.bins() {
            self.hi
        } else {
            self.lo + w * (i + 1) as f64
        };
        (lower, upper)
    }

    /// `bin,lower,upper,count`, one row per bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,lower,upper,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let (a, b) = self.edges(i);
            writeln!(out, "{i},{a:.6},{b:.6},{c}").unwrap();
        }
        out
    }

    pub fn to_svg(&self, title: &str, x_label: &str) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const LEFT: f64 = 60.0;
        const RIGHT: f64 = 20.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 50.0;
        let plot_w = W - LEFT - RIGHT;
        let plot_h = H - TOP - BOTTOM;
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bar_w = plot_w / self.bins() as f64;

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0}" height="{H:.0}" viewBox="0 0 {W:.0} {H:.0}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(
            s,
            r##"<rect width="{W:.0}" height="{H:.0}" fill="#ffffff"/>"##
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(title)
        )
        .unwrap();
        for (i, &c) in self.counts.iter().enumerate() {
            let h = plot_h * c as f64 / max;
            writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="#ffffff" stroke-width="0.5"><title>{c}</title></rect>"##,
                LEFT + bar_w * i as f64,
                TOP + plot_h - h,
                bar_w,
                h
            )
            .unwrap();
        }
        let base = TOP + plot_h;
        writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#000000"/>"##,
            LEFT + plot_w
        )
        .unwrap();
        writeln!(s, r##"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{base:.2}" stroke="#000000"/>"##).unwrap();
        for k in 0..=4 {
            let frac = k as f64 / 4.0;
            let x = LEFT + plot_w * frac;
            let v = self.lo + (self.hi - self.lo) * frac;
            writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.2}</text>"#,
                base + 16.0
            )
            .unwrap();
            let y = base - plot_h * frac;
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.0}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                max * frac
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            H - 10.0,
            escape(x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Households</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0
        )
        .unwrap();
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_partition_the_values() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let h = histogram(&v, 30, 0.0, 1.0);
        assert_eq!(h.bins(), 30);
        assert_eq!(h.total(), 101);
        assert_eq!(h.counts[29], 4);
        assert_eq!(h.to_csv().lines().count(), 31);
        assert_eq!(h.edges(29).1, 1.0);
    }

    #[test]
    fn out_of_range_is_ignored_and_svg_is_stable() {
        let h = histogram(&[-0.1, 0.5, 1.1, f64::NAN], 4, 0.0, 1.0);
        assert_eq!(h.counts, vec![0, 0, 1, 0]);
        let a = h.to_svg("AEI <hat>", "AEI");
        assert_eq!(a, h.to_svg("AEI <hat>", "AEI"));
        assert!(a.contains("AEI &lt;hat&gt;"));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
    }
}
