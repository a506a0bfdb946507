#pragma once

#include "wmevade/image.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wmevade {

class CodecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Rng;

/// n-bit watermark payload.
class Message {
public:
    Message() = default;
    explicit Message(std::vector<std::uint8_t> bits);
    static Message zeros(int n);
    static Message random(int n, std::uint64_t seed);
    static Message random(int n, Rng& rng);

    /// Lowercase hex, big-endian bit order: bit 0 is the most significant bit
    /// of the first nibble. Lengths that are not a multiple of four are padded
    /// with zero bits at the end.
    std::string to_hex() const;
    /// `bits` defaults to 4 * hex.size(); padding bits must be zero.
    static Message from_hex(std::string_view hex, std::optional<int> bits = std::nullopt);

    int size() const noexcept { return static_cast<int>(bits_.size()); }
    bool operator[](int i) const { return bits_[i] != 0; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
    Message inverted() const;

    friend bool operator==(const Message&, const Message&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Fraction of positions where the two messages agree.
double bit_accuracy(const Message& a, const Message& b);

enum class CodecKind { Lsb, DwtDctSvd, Spectral };

std::string_view to_string(CodecKind kind);
CodecKind parse_codec_kind(std::string_view name);

inline constexpr int kDefaultMessageBits = 32;

struct CodecConfig {
    CodecKind kind = CodecKind::DwtDctSvd;
    /// LSB: unused beyond validation. DwtDctSvd: QIM step on the top singular
    /// value. Spectral: QIM step of strength * H * W / 400 on carrier bins.
    double strength = 12.0;
    int band = 5;  // spectral only
    std::uint64_t seed = 0x5EEDull;
    int message_bits = kDefaultMessageBits;
    int redundancy = 0;  // 0 selects the codec default

    void validate() const;
    int effective_redundancy() const;
    std::string describe() const;
};

/// Default configuration per codec kind (LSB r=8; DwtDctSvd step 12;
/// spectral step 128*HW/400 in band 5 with r=3).
CodecConfig default_codec(CodecKind kind);

ImageU8 embed_lsb(const ImageU8& img, const Message& w, const CodecConfig& cfg);
Message decode_lsb(const ImageU8& img, const CodecConfig& cfg);

ImageU8 embed_dwtdctsvd(const ImageU8& img, const Message& w, const CodecConfig& cfg);
Message decode_dwtdctsvd(const ImageU8& img, const CodecConfig& cfg);

ImageU8 embed_spectral(const ImageU8& img, const Message& w, const CodecConfig& cfg);
Message decode_spectral(const ImageU8& img, const CodecConfig& cfg);

/// Dispatch on cfg.kind.
ImageU8 embed(const ImageU8& img, const Message& w, const CodecConfig& cfg);
Message decode(const ImageU8& img, const CodecConfig& cfg);

struct DetectionResult {
    double bit_accuracy = 0.0;
    bool detected = false;
    double gamma = 0.75;
    /// Decoding raised a CodecError; bit_accuracy was computed on an all-zero message.
    bool decode_failed = false;
};

/// detected = BA(decode(img), w) > gamma, strictly. gamma must lie in (0.5, 1].
DetectionResult detect(const ImageU8& img, const Message& w, const CodecConfig& codec, double gamma);

namespace detail {

struct Bin {
    int u = 0;
    int v = 0;
    friend bool operator==(const Bin&, const Bin&) = default;
};

/// Seeded carrier bins for the spectral codec (canonical half of each
/// conjugate pair). Throws CodecError when the band is too small.
std::vector<Bin> spectral_carriers(int height, int width, const CodecConfig& cfg);

/// Spectral embedding on a real luma plane, before any 8-bit quantization.
std::vector<double> spectral_embed_plane(std::span<const double> luma, int height, int width, const Message& w,
                                         const CodecConfig& cfg);

}  // namespace detail

}  // namespace wmevade
