#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cimtrain/tensor.hpp"

namespace cimtrain {

struct Dataset {
    std::vector<Tensor> images;  // each {depth, h, w}, values in [0, 1]
    std::vector<int> labels;
    int num_classes = 0;
};

// Deterministic synthetic pattern classification set: class c draws from a
// family of oriented stripe / checkerboard patterns (distinct period per
// class beyond the four base orientations), with per-sample phase jitter and
// additive Gaussian pixel noise. Labels are balanced round-robin. The same
// (n, h, w, num_classes, seed) always yields identical bytes.
Dataset synthetic_dataset(int n, int depth, int h, int w, int num_classes,
                          std::uint64_t seed);

// Binary tensor container, all multi-byte fields little-endian:
//   bytes 0..3   magic "CIMT"
//   u32          format version (currently 1)
//   u32          image count
//   u32 x3       depth, height, width
//   u32          class count
//   u16 x count  labels
//   u16 x count*depth*height*width
//                pixel levels in raster order (image, depth, row, col);
//                fixed-point: value = level / 65535, so [0,1] round-trips
//                to within 1/131070 and files round-trip bit-exactly.
// save_dataset clamps pixels to [0,1] before encoding. load_dataset throws
// IoError naming the path on missing files, short reads, bad magic/version,
// or labels outside the declared class count.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

}  // namespace cimtrain
