//! Two-channel GAF-MTF images.

use crate::error::{Error, Result};
use crate::gaf::GafImage;
use crate::mtf::MtfImage;
use crate::tica::Image;

/// Aligned GAF (channel 0) and MTF (channel 1) images of one size.
#[derive(Debug, Clone, PartialEq)]
pub struct DualChannelImage {
    pub gaf: GafImage,
    pub mtf: MtfImage,
}

impl DualChannelImage {
    pub fn size(&self) -> usize {
        self.gaf.size()
    }

    pub fn channels(&self) -> usize {
        2
    }

    /// Interleaved `[row][col][channel]` tensor.
    pub fn to_image(&self) -> Image {
        let s = self.size();
        let g = self.gaf.matrix.as_slice();
        let m = self.mtf.matrix.as_slice();
        let data = g.iter().zip(m).flat_map(|(&a, &b)| [a, b]).collect();
        Image::new(s, 2, data).expect("shape checked at assembly")
    }
}

pub fn assemble_dual_channel(gaf: GafImage, mtf: MtfImage) -> Result<DualChannelImage> {
    if gaf.size() != mtf.size() {
        return Err(Error::invalid(format!(
            "channel sizes differ: GAF {0}x{0}, MTF {1}x{1}",
            gaf.size(),
            mtf.size()
        )));
    }
    Ok(DualChannelImage { gaf, mtf })
}
