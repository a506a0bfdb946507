#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmevade {

/// Raised for malformed shapes and argument-contract violations.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ImageIOError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major interleaved raster (y, x, channel). Channels is 1 or 3.
template <class Sample>
class BasicImage {
public:
    BasicImage() = default;
    BasicImage(int height, int width, int channels, Sample fill = Sample{})
        : height_(height), width_(width), channels_(channels)
    {
        if (height < 0 || width < 0)
            throw ShapeError("image dimensions must be non-negative");
        if (channels != 1 && channels != 3)
            throw ShapeError("image must have 1 or 3 channels");
        data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
    }
    BasicImage(int height, int width, int channels, std::vector<Sample> data)
        : BasicImage(height, width, channels)
    {
        if (data.size() != data_.size())
            throw ShapeError("image data length does not match height*width*channels");
        data_ = std::move(data);
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    Sample& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
    const Sample& at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

    std::span<Sample> data() noexcept { return data_; }
    std::span<const Sample> data() const noexcept { return data_; }
    std::vector<Sample>& samples() noexcept { return data_; }
    const std::vector<Sample>& samples() const noexcept { return data_; }

    bool same_shape(const auto& other) const noexcept
    {
        return height_ == other.height() && width_ == other.width() && channels_ == other.channels();
    }

    friend bool operator==(const BasicImage&, const BasicImage&) = default;

private:
    std::size_t index(int y, int x, int c) const noexcept
    {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 1;
    std::vector<Sample> data_;
};

using ImageU8 = BasicImage<std::uint8_t>;
/// Samples nominally in [0,1]; may leave that range inside optimization.
using ImageF = BasicImage<double>;

ImageF to_float(const ImageU8& img);
/// Clamp to [0,1], scale by 255, round half away from zero.
ImageU8 to_u8(const ImageF& img);
std::uint8_t to_u8_sample(double v) noexcept;

/// Luma plane (H x W) with BT.601 weights 0.299/0.587/0.114 applied as the
/// exact integer ratio (299 R + 587 G + 114 B) / 1000. Gray images pass through.
std::vector<double> luma_plane(const ImageU8& img);
std::vector<double> luma_plane(const ImageF& img);

/// Adds a per-pixel luma offset to every channel, then rounds and clamps.
/// The BT.601 weights sum to one, so the luma of the result moves by `delta`
/// up to quantization.
ImageU8 add_luma_delta(const ImageU8& img, std::span<const double> delta);

void require_same_shape(const ImageU8& a, const ImageU8& b, const char* what);

// --- I/O -------------------------------------------------------------------

/// Reads an 8-bit PNG (gray or RGB; palettes expanded) or a binary PPM/PGM.
/// JPEG input is refused so no lossy pre-distortion can sneak in.
ImageU8 load_image(const std::filesystem::path& path);
/// Format chosen by extension: .png, .ppm (3 channels) or .pgm (1 channel).
void save_image(const ImageU8& img, const std::filesystem::path& path);

ImageU8 decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const ImageU8& img);
ImageU8 decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const ImageU8& img);

// --- quality metrics ---------------------------------------------------------

/// Returned by psnr() for identical inputs; compares above every finite PSNR.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

struct QualityReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double q90 = 0.0;
};

/// 10 log10(255^2 / MSE) over all samples jointly.
double psnr(const ImageU8& a, const ImageU8& b);

inline constexpr int kSsimWindow = 8;

/// Mean SSIM over every 8x8 window (stride 1, uniform weights), averaged over
/// channels. C1 = (0.01*255)^2, C2 = (0.03*255)^2.
double ssim(const ImageU8& a, const ImageU8& b);

/// q-quantile of |a - b| over all samples: the sorted value at index
/// ceil(q * (N - 1)). q must lie in (0, 1).
double quantile_diff(const ImageU8& a, const ImageU8& b, double q);

QualityReport quality(const ImageU8& a, const ImageU8& b);

}  // namespace wmevade
