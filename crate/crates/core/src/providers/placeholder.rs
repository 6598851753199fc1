use image::codecs::png::PngEncoder;
use image::{ImageEncoder, Rgb, RgbImage};
use sha2::{Digest, Sha256};

/// Deterministic stand-in image: horizontal sky, sea and sand bands whose
/// colours come from the prompt digest, with checkerboard dithering where
/// the bands meet.
pub fn placeholder_png(prompt: &str, width: u32, height: u32) -> Vec<u8> {
    let d = Sha256::digest(prompt.as_bytes());
    let colour = |i: usize| Rgb([d[i] / 2 + 64, d[i + 1] / 2 + 64, d[i + 2] / 2 + 64]);
    let bands = [colour(0), colour(3), colour(6), colour(9)];
    let band_h = (height / bands.len() as u32).max(1);
    // dark outline row position and a small "sun" position, also digest-driven
    let sun_x = u32::from(d[12]) * width / 256;
    let sun_r = 6 + u32::from(d[13] % 10);

    let img = RgbImage::from_fn(width, height, |x, y| {
        let band = ((y / band_h) as usize).min(bands.len() - 1);
        let within = y % band_h;
        let dx = x.abs_diff(sun_x);
        let dy = y.abs_diff(band_h / 2);
        if dx * dx + dy * dy <= sun_r * sun_r {
            return Rgb([240, 220, 120]);
        }
        if within == 0 && band > 0 {
            return Rgb([16, 16, 24]);
        }
        if within < 4 && band > 0 && (x + y) % 2 == 0 {
            return bands[band - 1];
        }
        bands[band]
    });

    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(img.as_raw(), width, height, image::ExtendedColorType::Rgb8)
        .expect("encoding an in-memory RGB image cannot fail");
    out
}
