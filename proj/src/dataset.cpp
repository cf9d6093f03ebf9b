#include "cimtrain/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cimtrain/errors.hpp"
#include "cimtrain/rng.hpp"

namespace cimtrain {

namespace {

constexpr std::uint64_t kDataStream = 0x64617461;  // dataset sampling

// base pattern value at (r, c): four orientations, phase-shifted
double pattern_value(int base, int period, int phase, int r, int c) {
    int t = 0;
    switch (base) {
        case 0: t = r + phase; break;           // horizontal stripes
        case 1: t = c + phase; break;           // vertical stripes
        case 2: t = r + c + phase; break;       // diagonal stripes
        default: {                              // checkerboard
            const int half = std::max(1, period / 2);
            return ((r / half + c / half + phase) % 2) ? 1.0 : 0.0;
        }
    }
    const int m = ((t % period) + period) % period;
    return m < (period + 1) / 2 ? 1.0 : 0.0;
}

}  // namespace

Dataset synthetic_dataset(int n, int depth, int h, int w, int num_classes,
                          std::uint64_t seed) {
    if (n < 1 || depth < 1 || h < 2 || w < 2)
        throw std::invalid_argument("synthetic_dataset: degenerate shape");
    if (num_classes < 2 || num_classes > 16)
        throw std::invalid_argument("synthetic_dataset: need 2..16 classes");

    const rng::Key root = rng::Key(seed).fork(kDataStream);
    Dataset ds;
    ds.num_classes = num_classes;
    ds.images.reserve(static_cast<std::size_t>(n));
    ds.labels.reserve(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
        const int label = i % num_classes;
        const int base = label % 4;
        // second bank of classes uses a tighter stripe period
        const int period = (label / 4 == 0) ? 4 : (label / 4 == 1) ? 2 : 3;
        const rng::Key k = root.fork(static_cast<std::uint64_t>(i));
        const int phase =
            static_cast<int>(rng::below(k.fork(0), static_cast<std::uint64_t>(period)));

        Tensor img({depth, h, w});
        for (int d = 0; d < depth; ++d) {
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    const double v = pattern_value(base, period, phase, r, c);
                    const double noise =
                        0.15 * rng::gaussian(k.fork(
                                   1 + ((static_cast<std::uint64_t>(d) * h + r) * w + c)));
                    img.at3(d, r, c) = std::clamp(v + noise, 0.0, 1.0);
                }
            }
        }
        ds.images.push_back(std::move(img));
        ds.labels.push_back(label);
    }
    return ds;
}

namespace {

constexpr char kMagic[4] = {'C', 'I', 'M', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        const char b = static_cast<char>((v >> (8 * i)) & 0xff);
        out.write(&b, 1);
    }
}

std::uint16_t get_u16(std::istream& in, const std::string& path) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2))
        throw IoError("truncated dataset file: " + path);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IoError("truncated dataset file: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
    if (ds.images.size() != ds.labels.size())
        throw std::invalid_argument("save_dataset: image/label count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open dataset file for writing: " + path);

    const std::vector<int> shape =
        ds.images.empty() ? std::vector<int>{0, 0, 0} : ds.images.front().shape();
    if (shape.size() != 3)
        throw std::invalid_argument("save_dataset: images must be rank-3 tensors");
    out.write(kMagic, 4);
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(ds.images.size()));
    for (int d : {shape[0], shape[1], shape[2]}) put_u32(out, static_cast<std::uint32_t>(d));
    put_u32(out, static_cast<std::uint32_t>(ds.num_classes));
    for (int label : ds.labels) put_u16(out, static_cast<std::uint16_t>(label));
    for (const Tensor& img : ds.images) {
        if (img.shape() != shape)
            throw std::invalid_argument("save_dataset: images must share one shape");
        for (std::size_t j = 0; j < img.size(); ++j) {
            const double c = std::clamp(img[j], 0.0, 1.0);
            put_u16(out, static_cast<std::uint16_t>(std::lround(c * 65535.0)));
        }
    }
    out.close();
    if (!out) throw IoError("write failure on dataset file: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);

    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
        throw IoError("not a dataset container (bad magic): " + path);
    if (get_u32(in, path) != kFormatVersion)
        throw IoError("unsupported dataset format version: " + path);

    const std::uint32_t count = get_u32(in, path);
    const std::uint32_t depth = get_u32(in, path);
    const std::uint32_t height = get_u32(in, path);
    const std::uint32_t width = get_u32(in, path);
    const std::uint32_t classes = get_u32(in, path);
    if (count > 0 && (depth == 0 || height == 0 || width == 0))
        throw IoError("dataset declares empty image shape: " + path);

    Dataset ds;
    ds.num_classes = static_cast<int>(classes);
    ds.labels.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t label = get_u16(in, path);
        if (label >= classes)
            throw IoError("dataset label outside declared class count: " + path);
        ds.labels.push_back(label);
    }
    ds.images.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor img({static_cast<int>(depth), static_cast<int>(height),
                    static_cast<int>(width)});
        for (std::size_t j = 0; j < img.size(); ++j) img[j] = get_u16(in, path) / 65535.0;
        ds.images.push_back(std::move(img));
    }
    return ds;
}

}  // namespace cimtrain
