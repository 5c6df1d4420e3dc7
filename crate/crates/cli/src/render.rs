//! Raster output: carpet cylinder sets and point clouds to binary PGM.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use carpet_recur::boxcount::PointCloud;
use carpet_recur::recur::CoverBudget;
use carpet_recur::Carpet;

/// A square grayscale image; pixel 0 is set (black), 255 clear.
pub struct Image {
    pub resolution: u32,
    pixels: Vec<u8>,
}

impl Image {
    fn blank(resolution: u32) -> Self {
        Self {
            resolution,
            pixels: vec![255; resolution as usize * resolution as usize],
        }
    }

    /// Mark the pixel holding grid cell `(px, py)`; the top image row is
    /// the `y = 1` side.
    fn set(&mut self, px: u32, py: u32) {
        let row = self.resolution - 1 - py;
        self.pixels[row as usize * self.resolution as usize + px as usize] = 0;
    }

    #[allow(dead_code)] // test helper
    pub fn black_pixels(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 0).count()
    }

    /// Binary PGM (P5), maxval 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.resolution, self.resolution).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Pixel range `[p_min, p_max]` covered by the half-open interval
/// `[lo, hi)` on a `res`-cell grid over `[0, 1)`, exact rational floor.
fn pixel_range(lo: &BigRational, hi: &BigRational, res: u32) -> Option<(u32, u32)> {
    let resr = BigRational::from_integer(res.into());
    let a = lo * &resr;
    let b = hi * &resr;
    let p_min = a.floor().to_integer().to_i64().unwrap_or(0).max(0);
    let bfloor = b.floor();
    let p_max = if bfloor == b {
        bfloor.to_integer().to_i64().unwrap_or(0) - 1
    } else {
        bfloor.to_integer().to_i64().unwrap_or(0)
    };
    let p_max = p_max.min(i64::from(res) - 1);
    if p_min > p_max {
        None
    } else {
        Some((p_min as u32, p_max as u32))
    }
}

/// Render the carpet by iterating cylinders to the depth where the cell
/// size drops to one pixel (`m1^n >= resolution`; the taller base then
/// satisfies it too). Errors with the cylinder count when it exceeds the
/// budget.
pub fn render_carpet(carpet: &Carpet, resolution: u32, budget: &CoverBudget) -> Result<Image, u64> {
    let mut depth = 0u64;
    let mut cells = 1u128;
    while cells < u128::from(resolution) {
        cells *= u128::from(carpet.m1());
        depth += 1;
    }
    let words = (carpet.alphabet_len() as u128).pow(depth as u32);
    if words > u128::from(budget.max_cylinders) {
        return Err(words.min(u128::from(u64::MAX)) as u64);
    }

    let mut img = Image::blank(resolution);
    let alphabet = carpet.alphabet();
    let mut idx = vec![0usize; depth as usize];
    loop {
        let pairs: Vec<(u32, u32)> = idx.iter().map(|&i| alphabet[i]).collect();
        let w = carpet_recur::CylinderWord::from_pairs(carpet.m1(), carpet.m2(), &pairs)
            .expect("alphabet digits valid");
        let rect = w.rect();
        if let (Some((x0, x1)), Some((y0, y1))) = (
            pixel_range(&rect.x_lo, &rect.x_hi, resolution),
            pixel_range(&rect.y_lo, &rect.y_hi, resolution),
        ) {
            for px in x0..=x1 {
                for py in y0..=y1 {
                    img.set(px, py);
                }
            }
        }
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                return Ok(img);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < alphabet.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Render a point cloud: each point marks the pixel containing its
/// coding, by exact rational floor.
pub fn render_cloud(cloud: &PointCloud, resolution: u32) -> Image {
    let mut img = Image::blank(resolution);
    let resr = BigRational::from_integer(resolution.into());
    let top = i64::from(resolution) - 1;
    for p in cloud.points() {
        let (x, y) = p.coding_point();
        debug_assert!(!x.is_negative() && !y.is_negative());
        let px = (x * &resr).floor().to_integer().to_i64().unwrap_or(top).min(top);
        let py = (y * &resr).floor().to_integer().to_i64().unwrap_or(top).min(top);
        img.set(px as u32, py as u32);
    }
    img
}
