use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::garment::{Vec2, WeakPerspectiveCamera};
use crate::geometry::{Polyline3, TriMesh, Vec3};

/// Kernel width in pixels.
pub const DEFAULT_SIGMA: f64 = 2.0;

/// Something to splat into one heatmap channel.
pub enum HeatmapSource<'a> {
    /// Curves, resampled at half-pixel projected spacing.
    Curves(&'a [Polyline3]),
    /// A surface region, sampled densely enough to leave no pixel gaps.
    Surface(&'a TriMesh),
    /// Explicit 3D samples.
    Points(&'a [Vec3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapChannel {
    pub name: String,
    /// Row-major, `width * height` values in [0, 1].
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapStack {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<HeatmapChannel>,
}

impl HeatmapStack {
    pub fn channel(&self, name: &str) -> Option<&HeatmapChannel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn value(&self, channel: usize, x: usize, y: usize) -> f32 {
        self.channels[channel].values[y * self.width + x]
    }
}

/// Pixels per scene unit along each image axis.
fn pixels_per_unit(camera: &WeakPerspectiveCamera, width: usize, height: usize) -> f64 {
    camera.s * 0.5 * width.max(height) as f64
}

fn sample_pixels(source: &HeatmapSource, camera: &WeakPerspectiveCamera, width: usize, height: usize) -> Vec<Vec2> {
    let ppu = pixels_per_unit(camera, width, height);
    let project = |p: &Vec3| camera.project_pixel(p, width, height);
    match source {
        HeatmapSource::Points(pts) => pts.iter().map(project).collect(),
        HeatmapSource::Curves(curves) => curves
            .iter()
            .flat_map(|c| c.resampled(0.5 / ppu))
            .map(|p| project(&p))
            .collect(),
        HeatmapSource::Surface(mesh) => {
            let mut out = Vec::new();
            for f in 0..mesh.face_count() {
                let [a, b, c] = mesh.triangle(f).map(|p| project(&p));
                let longest = [(a - b).norm(), (b - c).norm(), (c - a).norm()].into_iter().fold(0.0, f64::max);
                let n = longest.ceil().max(1.0) as usize;
                for i in 0..=n {
                    for j in 0..=(n - i) {
                        let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                        out.push(a + (b - a) * u + (c - a) * v);
                    }
                }
            }
            out
        }
    }
}

/// One channel per `(name, source)`: each sample contributes the kernel
/// `exp(-|q - x|^2 / (2 sigma^2))` around its projected pixel position `x`,
/// and overlapping kernels fuse by maximum.
pub fn render_heatmaps(
    sources: &[(String, HeatmapSource)],
    camera: &WeakPerspectiveCamera,
    width: usize,
    height: usize,
    sigma: f64,
) -> Result<HeatmapStack> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("heatmap sigma must be positive, got {sigma}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidConfig("heatmap size must be nonzero".into()));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let channels = sources
        .iter()
        .map(|(name, src)| {
            let samples = sample_pixels(src, camera, width, height);
            // Rows are independent, so each row is filled in parallel.
            let rows: Vec<Vec<f32>> = (0..height)
                .into_par_iter()
                .map(|y| {
                    let mut row = vec![0f64; width];
                    for s in &samples {
                        if (s.y - y as f64).abs() > radius as f64 + 1.0 {
                            continue;
                        }
                        let x0 = (s.x.round() as isize - radius).max(0);
                        let x1 = (s.x.round() as isize + radius).min(width as isize - 1);
                        for x in x0..=x1 {
                            let d2 = (x as f64 - s.x).powi(2) + (y as f64 - s.y).powi(2);
                            let k = (-d2 / (2.0 * sigma * sigma)).exp();
                            let px = &mut row[x as usize];
                            if k > *px {
                                *px = k;
                            }
                        }
                    }
                    row.into_iter().map(|v| v as f32).collect()
                })
                .collect();
            HeatmapChannel {
                name: name.clone(),
                values: rows.concat(),
            }
        })
        .collect();
    Ok(HeatmapStack {
        width,
        height,
        channels,
    })
}

/// Binary 16-bit PGM, values scaled to 0..=65535.
pub fn pgm_bytes(width: usize, height: usize, values: &[f32]) -> Vec<u8> {
    assert_eq!(values.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for v in values {
        let q = (f64::from(*v).clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, values: &[f32]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pgm_bytes(width, height, values)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Camera mapping scene (x, y) to pixel (x, -y) on a 64x64 image:
    /// normalized u = x / 32 - 1 + 1/64 puts x = 10 on pixel center 10.
    fn pixel_camera() -> WeakPerspectiveCamera {
        let s = 1.0 / 32.0;
        WeakPerspectiveCamera::new(s, [-1.0 + 0.5 / 32.0, 1.0 - 0.5 / 32.0]).unwrap()
    }

    fn at(px: f64, py: f64) -> Vec3 {
        Vec3::new(px, -py, 0.0)
    }

    #[test]
    fn kernel_peak_and_closed_form() {
        let cam = pixel_camera();
        assert!((cam.project_pixel(&at(10.0, 10.0), 64, 64) - Vec2::new(10.0, 10.0)).norm() < 1e-12);
        let pts = [at(10.0, 10.0)];
        let h = render_heatmaps(&[("p".into(), HeatmapSource::Points(&pts))], &cam, 64, 64, 2.0).unwrap();
        assert_eq!(h.value(0, 10, 10), 1.0);
        assert!((f64::from(h.value(0, 12, 10)) - (-4.0f64 / 8.0).exp()).abs() < 1e-6);
        assert!((f64::from(h.value(0, 11, 11)) - (-2.0f64 / 8.0).exp()).abs() < 1e-6);
        assert!(h.channels[0].values.iter().all(|&v| v <= 1.0));
    }

    #[test]
    fn overlapping_kernels_fuse_by_max() {
        let cam = pixel_camera();
        let pts = [at(10.0, 10.0), at(13.0, 10.0)];
        let h = render_heatmaps(&[("p".into(), HeatmapSource::Points(&pts))], &cam, 64, 64, 2.0).unwrap();
        // Pixel 11 is 1 from the first point and 2 from the second.
        let expected = (-1.0f64 / 8.0).exp();
        assert!((f64::from(h.value(0, 11, 10)) - expected).abs() < 1e-6);
        assert!(f64::from(h.value(0, 11, 10)) < expected + (-4.0f64 / 8.0).exp() - 0.1);
    }

    #[test]
    fn curve_channel_has_no_gaps() {
        let cam = pixel_camera();
        let c = Polyline3::new(vec![at(5.0, 20.0), at(50.0, 20.0)], false).unwrap();
        let curves = [c];
        let h = render_heatmaps(&[("c".into(), HeatmapSource::Curves(&curves))], &cam, 64, 64, 2.0).unwrap();
        for x in 5..=50 {
            assert!(h.value(0, x, 20) > 0.96, "x = {x}");
        }
        assert!(h.value(0, 30, 40) == 0.0);
    }

    #[test]
    fn pgm_header_and_scaling() {
        let b = pgm_bytes(2, 1, &[0.0, 1.0]);
        assert!(b.starts_with(b"P5\n2 1\n65535\n"));
        assert_eq!(&b[b.len() - 4..], &[0, 0, 255, 255]);
    }
}
