#pragma once

#include <string>

#include "vidpred/core/tensor.hpp"

namespace vidpred::io {

/// Decode an image file to a planar RGB tensor (3,H,W) with values in [0,1].
/// Throws on unreadable/undecodable files, naming the path.
Tensor load_image_rgb(const std::string& path);

/// Write a (3,H,W) tensor in [0,1] as an 8-bit PNG/JPEG (by extension).
void save_image_rgb(const std::string& path, const Tensor& frame);

/// Area-resample a (3,H,W) frame (the anti-aliasing choice for downscale).
Tensor resize_area(const Tensor& frame, int64_t out_h, int64_t out_w);

/// Tile (3,H,W) frames into one horizontal strip with a 2px divider.
Tensor hstack_frames(const std::vector<Tensor>& frames);

}  // namespace vidpred::io
