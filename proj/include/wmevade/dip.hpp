#pragma once

#include "wmevade/codecs.hpp"
#include "wmevade/image.hpp"
#include "wmevade/transforms.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace wmevade::dip {

/// Dense (channels, height, width) tensor; `grad` is empty until a parameter
/// gradient is attached.
template <class T>
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;
    std::vector<T> grad;

    Tensor() = default;
    Tensor(int c, int h, int w, T fill = T{})
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill)
    {
    }

    std::size_t size() const noexcept { return data.size(); }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
    T& at(int c, int y, int x) { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
    T at(int c, int y, int x) const { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
};

/// Desk-scale "skip" encoder-decoder.
///
/// Each of `depth` levels halves the resolution with a stride-2 3x3 conv and
/// a 3x3 conv; a 1x1 conv taps `skip_channels` features off the level input.
/// The decoder upsamples (nearest), concatenates the skip features, and
/// applies a 3x3 then a 1x1 conv. All convs use reflection padding and are
/// followed by batch normalization (per channel over the spatial grid) and a
/// leaky rectifier; a final 1x1 conv and sigmoid produce the image.
struct NetConfig {
    int depth = 3;
    int channels = 32;
    int skip_channels = 4;
    int input_channels = 16;
    int output_channels = 3;
    double leaky_slope = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_channels, int out_channels, int kernel, int stride, bool with_bias = true);

    Tensor<T> forward(const Tensor<T>& x);
    /// Accumulates weight/bias gradients; returns the input gradient.
    Tensor<T> backward(const Tensor<T>& grad_out);

    Tensor<T> weight;  // (out, in * k * k, 1)
    Tensor<T> bias;    // (out, 1, 1), empty when the conv has no bias
    int in_channels = 0, out_channels = 0, kernel = 1, stride = 1;

private:
    std::vector<T> cols_;
    int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
};

/// Per-channel normalization over the spatial grid (batch of one) with a
/// learned scale and shift. Normalizes in place.
template <class T>
class BatchNorm {
public:
    BatchNorm() = default;
    explicit BatchNorm(int channels);

    void forward(Tensor<T>& x);
    /// Accumulates scale/shift gradients; returns the input gradient.
    Tensor<T> backward(const Tensor<T>& grad_out);

    Tensor<T> gamma;  // (channels, 1, 1), starts at 1
    Tensor<T> beta;   // (channels, 1, 1), starts at 0
    static constexpr double kEps = 1e-5;

private:
    std::vector<T> xhat_;
    std::vector<double> inv_std_;
    int height_ = 0, width_ = 0;
};

template <class T>
class SkipNet {
public:
    /// Draws weights (fan-in scaled uniform) and the frozen iid N(0,1) input
    /// from cfg.seed. height and width must be divisible by 2^depth.
    SkipNet(const NetConfig& cfg, int height, int width);

    /// G(z), each sample strictly inside (0,1).
    const Tensor<T>& forward();
    /// Back-propagates dLoss/dOutput for the most recent forward().
    void backward(const Tensor<T>& grad_output);
    void zero_grad();

    std::vector<Tensor<T>*> parameters();
    std::size_t parameter_count();
    /// Sign of every leaky-rectifier input in the most recent forward(), in a
    /// fixed order. Finite differences are only exact while this stays put.
    std::vector<bool> rectifier_signs() const;
    const Tensor<T>& input() const { return z_; }
    const NetConfig& config() const { return cfg_; }
    int height() const { return height_; }
    int width() const { return width_; }

private:
    std::vector<Conv2d<T>*> convs();

    struct Level {
        Conv2d<T> skip, down, conv, dec3, dec1;
        BatchNorm<T> skip_bn, down_bn, conv_bn, dec3_bn, dec1_bn;
        // forward caches
        Tensor<T> skip_out, down_out, level_out, dec3_out, dec_out;
    };

    NetConfig cfg_;
    int height_, width_;
    Tensor<T> z_;
    std::vector<Level> levels_;
    Conv2d<T> head_;
    Tensor<T> output_;
    bool forward_done_ = false;
};

template <class T>
class Adam {
public:
    Adam(std::vector<Tensor<T>*> params, AdamConfig cfg = {});
    /// theta <- theta - lr * mhat / (sqrt(vhat) + eps), with bias-corrected moments.
    void step();
    long steps() const noexcept { return t_; }

private:
    std::vector<Tensor<T>*> params_;
    std::vector<std::vector<double>> m_, v_;
    AdamConfig cfg_;
    long t_ = 0;
};

/// Mean squared error over all samples and its gradient w.r.t. `output`.
template <class T>
double mse_loss(const Tensor<T>& output, const Tensor<T>& target, Tensor<T>* grad = nullptr);

template <class T>
Tensor<T> image_to_tensor(const ImageU8& img);
template <class T>
ImageF tensor_to_image(const Tensor<T>& t);

// --- evasion -----------------------------------------------------------------------

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int iteration, const std::string& what)
        : std::runtime_error(what), iteration_(iteration)
    {
    }
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// Detection oracle queried on recorded iterates.
struct Detector {
    Message message;
    CodecConfig codec;
    double gamma = 0.75;

    DetectionResult operator()(const ImageU8& img) const { return detect(img, message, codec, gamma); }
};

struct TraceRecord {
    int iteration = 0;  // 1-based count of forward evaluations
    double loss = 0.0;
    double psnr_vs_watermarked = 0.0;
    std::optional<double> psnr_vs_clean;
    std::optional<double> bit_accuracy;
    std::optional<bool> detected;
    std::optional<BandProfile> fbe;
    std::optional<ImageU8> snapshot;
};

struct EvasionTrace {
    std::vector<TraceRecord> records;
    double final_loss = 0.0;
};

struct EvasionOptions {
    int iterations = 500;
    int record_stride = 10;
    bool record_fbe = false;
    bool keep_snapshots = true;
    std::optional<Detector> detector;
    std::optional<ImageU8> clean;  // adds psnr_vs_clean to each record
    AdamConfig adam;
};

/// Fits G_theta(z) to `watermarked` by Adam on the MSE loss and records every
/// record_stride-th iterate. Throws DivergenceError on a non-finite loss.
EvasionTrace run_evasion(const ImageU8& watermarked, const NetConfig& net, const EvasionOptions& opt);

inline constexpr double kFbeDenominatorFloor = 1e-8;

/// Per-band mean of |F(target) - F(iterate)| / |F(target)| on the luma plane,
/// skipping bins with |F(target)| below kFbeDenominatorFloor. A band whose
/// bins are all skipped is reported as NaN.
BandProfile compute_fbe(const ImageF& iterate, const ImageU8& target, const BandMap& bands);

/// Iteration indices whose PSNR against the watermarked image reaches psnr_floor.
std::vector<int> select_query_candidates(const EvasionTrace& trace, double psnr_floor);

}  // namespace wmevade::dip
