//! Raster and point-cloud files: 8-bit sRGB PNG, grayscale PNG masks,
//! `DPTH` depth rasters and little-endian `f32` point clouds.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use cslf_core::image::{RgbImage, RgbaImage8};
use cslf_core::Vec3;
use image::{ImageBuffer, ImageFormat, Luma, Rgb, Rgba};

use crate::{Error, Result};

pub const DEPTH_MAGIC: [u8; 4] = *b"DPTH";
pub const DEPTH_HEADER_LEN: usize = 16;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn png<P: image::Pixel<Subpixel = u8> + image::PixelWithColorType>(
    width: usize,
    height: usize,
    raw: Vec<u8>,
) -> Result<Vec<u8>>
where
    [P::Subpixel]: image::EncodableLayout,
{
    let buf: ImageBuffer<P, Vec<u8>> = ImageBuffer::from_raw(width as u32, height as u32, raw)
        .ok_or_else(|| Error::Internal(String::from("pixel buffer does not match the image size")))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Internal(format!("png encoding failed: {e}")))?;
    Ok(out.into_inner())
}

/// PNG bytes of an 8-bit sRGB raster.
pub fn encode_rgb8(width: usize, height: usize, pixels: &[[u8; 3]]) -> Result<Vec<u8>> {
    png::<Rgb<u8>>(width, height, pixels.iter().flatten().copied().collect())
}

/// PNG bytes of a float sRGB image, quantized per channel.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    encode_rgb8(img.width, img.height, &img.to_srgb8())
}

pub fn encode_rgba8(img: &RgbaImage8) -> Result<Vec<u8>> {
    png::<Rgba<u8>>(img.width, img.height, img.pixels.iter().flatten().copied().collect())
}

pub fn write_rgb8(path: &Path, width: usize, height: usize, pixels: &[[u8; 3]]) -> Result<()> {
    write_bytes(path, &encode_rgb8(width, height, pixels)?)
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<()> {
    write_bytes(path, &encode_png(img)?)
}

fn decode(path: &Path) -> Result<image::DynamicImage> {
    let bytes = read_bytes(path)?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads any PNG as 8-bit RGB; returns `(width, height, pixels)`.
pub fn read_rgb8(path: &Path) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let img = decode(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok((w, h, img.pixels().map(|p| p.0).collect()))
}

pub fn read_png(path: &Path) -> Result<RgbImage> {
    let (w, h, px) = read_rgb8(path)?;
    Ok(RgbImage::from_srgb8(w, h, &px)?)
}

/// Masks are 8-bit grayscale: 255 inside, 0 outside.
pub fn write_mask(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    let raw = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_bytes(path, &png::<Luma<u8>>(width, height, raw)?)
}

pub fn read_mask(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let img = decode(path)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut mask = Vec::with_capacity(w * h);
    for p in img.pixels() {
        match p.0[0] {
            0 => mask.push(false),
            255 => mask.push(true),
            v => return Err(Error::format(path, format!("mask value {v} is neither 0 nor 255"))),
        }
    }
    Ok((w, h, mask))
}

/// `DPTH`, `u32` width, `u32` height, `u32` reserved (zero), then
/// `width * height` little-endian `f32` ray depths in raster order.
pub fn encode_depth(width: usize, height: usize, depth: &[f32]) -> Result<Vec<u8>> {
    if depth.len() != width * height {
        return Err(Error::Internal(format!("{} depth values for a {width}x{height} raster", depth.len())));
    }
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::Internal(format!("raster dimension {v} too large")));
    let mut out = Vec::with_capacity(DEPTH_HEADER_LEN + 4 * depth.len());
    out.extend_from_slice(&DEPTH_MAGIC);
    out.extend_from_slice(&dim(width)?.to_le_bytes());
    out.extend_from_slice(&dim(height)?.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for d in depth {
        out.extend_from_slice(&d.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_depth(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < DEPTH_HEADER_LEN || bytes[..4] != DEPTH_MAGIC {
        return Err(Error::format(path, "not a DPTH depth raster"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice")) as usize;
    let (w, h) = (word(4), word(8));
    let body = &bytes[DEPTH_HEADER_LEN..];
    if body.len() != 4 * w * h {
        return Err(Error::format(
            path,
            format!("depth raster {w}x{h} needs {} bytes, file has {}", 4 * w * h, body.len()),
        ));
    }
    let depth = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    Ok((w, h, depth))
}

pub fn write_depth(path: &Path, width: usize, height: usize, depth: &[f32]) -> Result<()> {
    write_bytes(path, &encode_depth(width, height, depth)?)
}

pub fn read_depth(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    decode_depth(path, &read_bytes(path)?)
}

/// Points stored as little-endian `f32` triples.
pub fn write_cloud(path: &Path, cloud: &[Vec3]) -> Result<()> {
    let mut out = Vec::with_capacity(12 * cloud.len());
    for p in cloud {
        for c in p.to_array() {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    write_bytes(path, &out)
}

pub fn read_cloud(path: &Path) -> Result<Vec<Vec3>> {
    let bytes = read_bytes(path)?;
    if bytes.len() % 12 != 0 {
        return Err(Error::format(path, format!("{} bytes is not a whole number of f32 triples", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f64::from(f32::from_le_bytes(c[i..i + 4].try_into().expect("4-byte slice")));
            Vec3::new(f(0), f(4), f(8))
        })
        .collect())
}
