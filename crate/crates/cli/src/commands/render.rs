use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use image::{imageops, GrayImage, Luma, Rgb, RgbImage};
use nsrm_core::data::read_tensor;
use nsrm_core::ChannelStack;

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Input `.nsrm` tensor.
    #[arg(long)]
    pub tensor: PathBuf,
    /// Output image (format from extension, PNG recommended).
    #[arg(long)]
    pub out: PathBuf,
    /// Channel to draw; repeat for several. Default: all.
    #[arg(long = "channel")]
    pub channels: Vec<usize>,
    /// Draw the per-pixel maximum of the selected channels in gray.
    #[arg(long)]
    pub grayscale: bool,
    /// Integer upscaling factor (nearest neighbour).
    #[arg(long, default_value_t = 1)]
    pub scale: u32,
}

const PALETTE: [[f64; 3]; 7] = [
    [1.0, 1.0, 1.0],
    [1.0, 0.2, 0.2],
    [1.0, 0.6, 0.1],
    [1.0, 1.0, 0.2],
    [0.2, 1.0, 0.3],
    [0.2, 0.6, 1.0],
    [0.8, 0.3, 1.0],
];

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub enum Rendered {
    Gray(GrayImage),
    Color(RgbImage),
}

/// One channel, or `grayscale`, gives a gray image of the (maximum) value.
/// Several channels give a composite where each pixel takes the tint of its
/// strongest channel, scaled by that value; ties go to the later channel.
pub fn render(stack: &ChannelStack, channels: &[usize], grayscale: bool) -> Result<Rendered> {
    let selected: Vec<usize> = if channels.is_empty() {
        (0..stack.channels).collect()
    } else {
        channels.to_vec()
    };
    if let Some(&c) = selected.iter().find(|&&c| c >= stack.channels) {
        bail!("channel {c} out of range: tensor has {} channels", stack.channels);
    }
    if selected.is_empty() {
        bail!("tensor has no channels");
    }
    let (w, h) = (stack.width as u32, stack.height as u32);
    let strongest = |i: usize| {
        selected
            .iter()
            .map(|&c| (c, stack.channel(c)[i] as f64))
            .fold((selected[0], f64::NEG_INFINITY), |a, b| if b.1 >= a.1 { b } else { a })
    };
    if grayscale || selected.len() == 1 {
        let img = GrayImage::from_fn(w, h, |x, y| {
            Luma([to_u8(strongest((y * w + x) as usize).1)])
        });
        return Ok(Rendered::Gray(img));
    }
    let img = RgbImage::from_fn(w, h, |x, y| {
        let (c, v) = strongest((y * w + x) as usize);
        let tint = PALETTE[c % PALETTE.len()];
        Rgb(tint.map(|t| to_u8(t * v)))
    });
    Ok(Rendered::Color(img))
}

pub fn run(args: &RenderArgs) -> Result<()> {
    if args.scale == 0 {
        bail!("--scale must be at least 1");
    }
    let stack = read_tensor(&args.tensor)?;
    let (nw, nh) = (stack.width as u32 * args.scale, stack.height as u32 * args.scale);
    let filter = imageops::FilterType::Nearest;
    let res = match render(&stack, &args.channels, args.grayscale)? {
        Rendered::Gray(img) => imageops::resize(&img, nw, nh, filter).save(&args.out),
        Rendered::Color(img) => imageops::resize(&img, nw, nh, filter).save(&args.out),
    };
    res.with_context(|| format!("writing {}", args.out.display()))
}
