#include "wmevade/codecs.hpp"

#include "wmevade/rng.hpp"
#include "wmevade/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace wmevade {

// --- Message -------------------------------------------------------------------

Message::Message(std::vector<std::uint8_t> bits) : bits_(std::move(bits))
{
    if (bits_.empty())
        throw std::invalid_argument("message must carry at least one bit");
    for (auto& b : bits_)
        b = b ? 1 : 0;
}

Message Message::zeros(int n) { return Message(std::vector<std::uint8_t>(std::max(n, 0), 0)); }

Message Message::random(int n, Rng& rng)
{
    std::vector<std::uint8_t> bits(std::max(n, 0));
    for (auto& b : bits)
        b = static_cast<std::uint8_t>(rng.next() >> 63);
    return Message(std::move(bits));
}

Message Message::random(int n, std::uint64_t seed)
{
    Rng rng(seed);
    return random(n, rng);
}

std::string Message::to_hex() const
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < bits_.size(); i += 4) {
        int nibble = 0;
        for (std::size_t j = 0; j < 4; ++j)
            nibble = (nibble << 1) | (i + j < bits_.size() ? bits_[i + j] : 0);
        out.push_back(digits[nibble]);
    }
    return out;
}

Message Message::from_hex(std::string_view hex, std::optional<int> nbits)
{
    const int n = nbits.value_or(static_cast<int>(hex.size()) * 4);
    if (n < 1 || (n + 3) / 4 != static_cast<int>(hex.size()))
        throw std::invalid_argument("hex length does not match bit count");
    std::vector<std::uint8_t> bits;
    bits.reserve(hex.size() * 4);
    for (char ch : hex) {
        int v;
        if (ch >= '0' && ch <= '9')
            v = ch - '0';
        else if (ch >= 'a' && ch <= 'f')
            v = ch - 'a' + 10;
        else if (ch >= 'A' && ch <= 'F')
            v = ch - 'A' + 10;
        else
            throw std::invalid_argument("invalid hex digit in message");
        for (int j = 3; j >= 0; --j)
            bits.push_back(static_cast<std::uint8_t>((v >> j) & 1));
    }
    for (std::size_t i = n; i < bits.size(); ++i)
        if (bits[i])
            throw std::invalid_argument("nonzero padding bits in hex message");
    bits.resize(n);
    return Message(std::move(bits));
}

Message Message::inverted() const
{
    std::vector<std::uint8_t> b = bits_;
    for (auto& x : b)
        x ^= 1;
    return Message(std::move(b));
}

double bit_accuracy(const Message& a, const Message& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("bit_accuracy: message lengths differ");
    if (a.size() == 0)
        throw std::invalid_argument("bit_accuracy: empty messages");
    int agree = 0;
    for (int i = 0; i < a.size(); ++i)
        agree += a[i] == b[i];
    return double(agree) / a.size();
}

// --- configuration ---------------------------------------------------------------

std::string_view to_string(CodecKind kind)
{
    switch (kind) {
    case CodecKind::Lsb: return "lsb";
    case CodecKind::DwtDctSvd: return "dwtdctsvd";
    case CodecKind::Spectral: return "spectral";
    }
    return "?";
}

CodecKind parse_codec_kind(std::string_view name)
{
    if (name == "lsb")
        return CodecKind::Lsb;
    if (name == "dwtdctsvd" || name == "dwt-dct-svd")
        return CodecKind::DwtDctSvd;
    if (name == "spectral")
        return CodecKind::Spectral;
    throw std::invalid_argument("unknown codec: " + std::string(name));
}

void CodecConfig::validate() const
{
    if (!(strength > 0.0) || !std::isfinite(strength))
        throw std::invalid_argument("codec strength must be a positive finite number");
    if (band < 1 || band > kDefaultBands)
        throw std::invalid_argument("codec band must lie in 1..5");
    if (message_bits < 1)
        throw std::invalid_argument("message_bits must be >= 1");
    if (redundancy < 0)
        throw std::invalid_argument("redundancy must be >= 0");
}

int CodecConfig::effective_redundancy() const
{
    if (redundancy > 0)
        return redundancy;
    switch (kind) {
    case CodecKind::Lsb: return 8;
    case CodecKind::Spectral: return 3;
    case CodecKind::DwtDctSvd: return 0;  // every block, round robin
    }
    return 1;
}

std::string CodecConfig::describe() const
{
    std::ostringstream os;
    os << to_string(kind);
    if (kind == CodecKind::Spectral)
        os << "-b" << band;
    return os.str();
}

CodecConfig default_codec(CodecKind kind)
{
    CodecConfig c;
    c.kind = kind;
    switch (kind) {
    case CodecKind::Lsb: c.strength = 1.0; break;
    case CodecKind::DwtDctSvd: c.strength = 12.0; break;
    case CodecKind::Spectral: c.strength = 128.0; c.band = 5; break;
    }
    return c;
}

namespace {

void require_message(const Message& w, const CodecConfig& cfg)
{
    cfg.validate();
    if (w.size() != cfg.message_bits)
        throw std::invalid_argument("message length does not match codec message_bits");
}

// Majority vote per bit; ties go to the sign of the summed soft evidence
// (positive favours 1), and to 0 when that is zero as well.
struct VoteBox {
    std::vector<int> ones, total;
    std::vector<double> soft;
    explicit VoteBox(int n) : ones(n, 0), total(n, 0), soft(n, 0.0) {}

    void add(int bit_index, int bit, double evidence)
    {
        ones[bit_index] += bit;
        total[bit_index] += 1;
        soft[bit_index] += evidence;
    }

    Message result() const
    {
        std::vector<std::uint8_t> bits(ones.size());
        for (std::size_t i = 0; i < bits.size(); ++i) {
            const int zeros = total[i] - ones[i];
            if (ones[i] != zeros)
                bits[i] = ones[i] > zeros;
            else
                bits[i] = soft[i] > 0.0;
        }
        return Message(std::move(bits));
    }
};

// Parity lattice: bit 0 on even multiples of step, bit 1 on odd multiples.
double qim_target(double value, double step, int bit)
{
    const double m = std::round((value / step - bit) / 2.0);
    return step * (2.0 * m + bit);
}

struct QimReading {
    int bit;
    double margin;  // distance to the decision boundary in steps, in [0, 0.5]
};

QimReading qim_read(double value, double step)
{
    const double x = value / step;
    const double m = std::round(x);
    const long long mi = static_cast<long long>(m);
    return {static_cast<int>(((mi % 2) + 2) % 2), 0.5 - std::abs(x - m)};
}

// --- LSB -------------------------------------------------------------------------------

std::vector<std::size_t> lsb_positions(const ImageU8& img, const CodecConfig& cfg)
{
    const std::size_t need = static_cast<std::size_t>(cfg.message_bits) * cfg.effective_redundancy();
    const std::size_t pixels = img.pixel_count();
    if (pixels < need)
        throw CodecError("lsb: image too small for message_bits * redundancy carriers");
    std::vector<std::size_t> idx(pixels);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(mix_seed(cfg.seed, 0x15B));
    for (std::size_t i = 0; i < need; ++i)
        std::swap(idx[i], idx[i + rng.below(pixels - i)]);
    idx.resize(need);
    return idx;
}

int lsb_channel(const ImageU8& img) { return img.channels() == 3 ? 2 : 0; }

}  // namespace

ImageU8 embed_lsb(const ImageU8& img, const Message& w, const CodecConfig& cfg)
{
    require_message(w, cfg);
    const auto pos = lsb_positions(img, cfg);
    ImageU8 out = img;
    const int ch = lsb_channel(img), stride = img.channels();
    auto d = out.data();
    for (std::size_t j = 0; j < pos.size(); ++j) {
        auto& s = d[pos[j] * stride + ch];
        s = static_cast<std::uint8_t>((s & 0xFE) | (w[static_cast<int>(j % w.size())] ? 1 : 0));
    }
    return out;
}

Message decode_lsb(const ImageU8& img, const CodecConfig& cfg)
{
    cfg.validate();
    const auto pos = lsb_positions(img, cfg);
    const int ch = lsb_channel(img), stride = img.channels();
    auto d = img.data();
    VoteBox votes(cfg.message_bits);
    for (std::size_t j = 0; j < pos.size(); ++j)
        votes.add(static_cast<int>(j % cfg.message_bits), d[pos[j] * stride + ch] & 1, 0.0);
    return votes.result();
}

// --- DWT-DCT-SVD -------------------------------------------------------------------

namespace {

constexpr int kSvdBlock = 4;

struct LlLayout {
    int blocks_y = 0, blocks_x = 0;
    int count() const { return blocks_y * blocks_x; }
};

LlLayout dwt_layout(const ImageU8& img, const CodecConfig& cfg)
{
    if (img.height() % 8 || img.width() % 8 || img.height() == 0 || img.width() == 0)
        throw CodecError("dwtdctsvd: image dimensions must be positive multiples of 8");
    LlLayout l{img.height() / 2 / kSvdBlock, img.width() / 2 / kSvdBlock};
    if (l.count() < cfg.message_bits)
        throw CodecError("dwtdctsvd: fewer LL blocks than message bits");
    return l;
}

Mat4 ll_block(const HaarBands& b, int by, int bx)
{
    Mat4 m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            m[i * 4 + j] = b.ll[static_cast<std::size_t>(by * 4 + i) * b.width + bx * 4 + j];
    return m;
}

double top_singular_value(const Mat4& ll)
{
    const auto coeffs = dct2d(ll, kSvdBlock);
    Mat4 c;
    std::copy(coeffs.begin(), coeffs.end(), c.begin());
    return svd_block(c).s[0];
}

ImageU8 dwt_embed_pass(const ImageU8& host, const Message& w, const CodecConfig& cfg, const LlLayout& lay)
{
    const auto y = luma_plane(host);
    HaarBands bands = haar_dwt2(y, host.height(), host.width());
    for (int by = 0; by < lay.blocks_y; ++by) {
        for (int bx = 0; bx < lay.blocks_x; ++bx) {
            const int j = by * lay.blocks_x + bx;
            const int bit = w[j % w.size()];
            const auto coeffs = dct2d(ll_block(bands, by, bx), kSvdBlock);
            Mat4 c;
            std::copy(coeffs.begin(), coeffs.end(), c.begin());
            Svd4 svd = svd_block(c);
            // Singular values are nonnegative, so a negative lattice point is
            // replaced by the nearest one above zero carrying the same bit.
            double target = qim_target(svd.s[0], cfg.strength, bit);
            if (target < 0.0)
                target += 2.0 * cfg.strength;
            // A black block has no preferred direction; put the carrier on the
            // DC coefficient so it lifts the block instead of being clipped.
            if (svd.s[0] < 1e-9) {
                for (int i = 0; i < 4; ++i)
                    svd.u[i * 4] = svd.v[i * 4] = i == 0 ? 1.0 : 0.0;
            }
            svd.s[0] = target;
            const Mat4 rebuilt = svd.reconstruct();
            const auto spatial = idct2d(rebuilt, kSvdBlock);
            for (int i = 0; i < 4; ++i)
                for (int k = 0; k < 4; ++k)
                    bands.ll[static_cast<std::size_t>(by * 4 + i) * bands.width + bx * 4 + k] = spatial[i * 4 + k];
        }
    }
    const auto y2 = haar_idwt2(bands);
    std::vector<double> delta(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        delta[i] = y2[i] - y[i];
    return add_luma_delta(host, delta);
}

// True when every block decodes to its intended bit with a comfortable margin.
bool dwt_carriers_hold(const ImageU8& img, const Message& w, const CodecConfig& cfg, const LlLayout& lay)
{
    const auto y = luma_plane(img);
    const HaarBands bands = haar_dwt2(y, img.height(), img.width());
    for (int by = 0; by < lay.blocks_y; ++by)
        for (int bx = 0; bx < lay.blocks_x; ++bx) {
            const int j = by * lay.blocks_x + bx;
            const auto r = qim_read(top_singular_value(ll_block(bands, by, bx)), cfg.strength);
            if (r.bit != w[j % w.size()] || r.margin < 0.25)
                return false;
        }
    return true;
}

constexpr int kRefinePasses = 4;

}  // namespace

ImageU8 embed_dwtdctsvd(const ImageU8& img, const Message& w, const CodecConfig& cfg)
{
    require_message(w, cfg);
    const LlLayout lay = dwt_layout(img, cfg);
    // 8-bit rounding and clamping perturb the coefficients; re-embedding on the
    // quantized result pulls drifted carriers back onto their lattice.
    ImageU8 out = dwt_embed_pass(img, w, cfg, lay);
    for (int pass = 0; pass < kRefinePasses && !dwt_carriers_hold(out, w, cfg, lay); ++pass)
        out = dwt_embed_pass(out, w, cfg, lay);
    return out;
}

Message decode_dwtdctsvd(const ImageU8& img, const CodecConfig& cfg)
{
    cfg.validate();
    const LlLayout lay = dwt_layout(img, cfg);
    const auto y = luma_plane(img);
    const HaarBands bands = haar_dwt2(y, img.height(), img.width());
    VoteBox votes(cfg.message_bits);
    for (int by = 0; by < lay.blocks_y; ++by)
        for (int bx = 0; bx < lay.blocks_x; ++bx) {
            const int j = by * lay.blocks_x + bx;
            const auto r = qim_read(top_singular_value(ll_block(bands, by, bx)), cfg.strength);
            votes.add(j % cfg.message_bits, r.bit, r.bit ? r.margin : -r.margin);
        }
    return votes.result();
}

// --- spectral ------------------------------------------------------------------------

namespace detail {

std::vector<Bin> spectral_carriers(int height, int width, const CodecConfig& cfg)
{
    cfg.validate();
    if (height < 2 || width < 2)
        throw CodecError("spectral: image too small");
    const BandMap map = radial_bands(height, width, kDefaultBands);
    std::vector<Bin> pool;
    for (int u = 0; u < height; ++u)
        for (int v = 0; v < width; ++v) {
            if (map.at(u, v) != cfg.band)
                continue;
            const int cu = (height - u) % height, cv = (width - v) % width;
            if (cu == u && cv == v)
                continue;  // self-conjugate bins have no free real part to pair
            if (std::pair(u, v) < std::pair(cu, cv))
                pool.push_back({u, v});
        }
    const std::size_t need = static_cast<std::size_t>(cfg.message_bits) * cfg.effective_redundancy();
    if (pool.size() < need)
        throw CodecError("spectral: band too small to host message_bits * redundancy carriers");
    Rng rng(mix_seed(cfg.seed, 0x5EC0 + cfg.band));
    for (std::size_t i = 0; i < need; ++i)
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    pool.resize(need);
    return pool;
}

std::vector<double> spectral_embed_plane(std::span<const double> luma, int height, int width, const Message& w,
                                         const CodecConfig& cfg)
{
    require_message(w, cfg);
    const auto carriers = spectral_carriers(height, width, cfg);
    const double step = cfg.strength * height * width / 400.0;
    const ComplexGrid spec = fft2(luma, height, width);
    ComplexGrid change(height, width);
    for (std::size_t j = 0; j < carriers.size(); ++j) {
        const auto [u, v] = carriers[j];
        const double re = spec.at(u, v).real();
        const double d = qim_target(re, step, w[static_cast<int>(j % w.size())]) - re;
        change.at(u, v) += d;
        change.at((height - u) % height, (width - v) % width) += d;
    }
    auto delta = ifft2_real(change);
    for (std::size_t i = 0; i < delta.size(); ++i)
        delta[i] += luma[i];
    return delta;
}

}  // namespace detail

namespace {

ImageU8 spectral_embed_pass(const ImageU8& host, const Message& w, const CodecConfig& cfg)
{
    const auto y = luma_plane(host);
    auto y2 = detail::spectral_embed_plane(y, host.height(), host.width(), w, cfg);
    for (std::size_t i = 0; i < y.size(); ++i)
        y2[i] -= y[i];
    return add_luma_delta(host, y2);
}

template <class Visit>
void visit_spectral_carriers(const ImageU8& img, const CodecConfig& cfg, Visit visit)
{
    const auto carriers = detail::spectral_carriers(img.height(), img.width(), cfg);
    const double step = cfg.strength * img.height() * img.width() / 400.0;
    const ComplexGrid spec = fft2(luma_plane(img), img.height(), img.width());
    for (std::size_t j = 0; j < carriers.size(); ++j)
        visit(static_cast<int>(j % cfg.message_bits), qim_read(spec.at(carriers[j].u, carriers[j].v).real(), step));
}

bool spectral_carriers_hold(const ImageU8& img, const Message& w, const CodecConfig& cfg)
{
    bool ok = true;
    visit_spectral_carriers(img, cfg, [&](int bit_index, QimReading r) {
        ok = ok && r.bit == w[bit_index] && r.margin >= 0.25;
    });
    return ok;
}

}  // namespace

ImageU8 embed_spectral(const ImageU8& img, const Message& w, const CodecConfig& cfg)
{
    require_message(w, cfg);
    ImageU8 out = spectral_embed_pass(img, w, cfg);
    for (int pass = 0; pass < kRefinePasses && !spectral_carriers_hold(out, w, cfg); ++pass)
        out = spectral_embed_pass(out, w, cfg);
    return out;
}

Message decode_spectral(const ImageU8& img, const CodecConfig& cfg)
{
    cfg.validate();
    VoteBox votes(cfg.message_bits);
    visit_spectral_carriers(img, cfg, [&](int bit_index, QimReading r) {
        votes.add(bit_index, r.bit, r.bit ? r.margin : -r.margin);
    });
    return votes.result();
}

// --- dispatch + detector -------------------------------------------------------------

ImageU8 embed(const ImageU8& img, const Message& w, const CodecConfig& cfg)
{
    switch (cfg.kind) {
    case CodecKind::Lsb: return embed_lsb(img, w, cfg);
    case CodecKind::DwtDctSvd: return embed_dwtdctsvd(img, w, cfg);
    case CodecKind::Spectral: return embed_spectral(img, w, cfg);
    }
    throw std::invalid_argument("unknown codec kind");
}

Message decode(const ImageU8& img, const CodecConfig& cfg)
{
    switch (cfg.kind) {
    case CodecKind::Lsb: return decode_lsb(img, cfg);
    case CodecKind::DwtDctSvd: return decode_dwtdctsvd(img, cfg);
    case CodecKind::Spectral: return decode_spectral(img, cfg);
    }
    throw std::invalid_argument("unknown codec kind");
}

DetectionResult detect(const ImageU8& img, const Message& w, const CodecConfig& codec, double gamma)
{
    if (!(gamma > 0.5 && gamma <= 1.0))
        throw std::invalid_argument("detection threshold gamma must lie in (0.5, 1]");
    DetectionResult r;
    r.gamma = gamma;
    Message decoded;
    try {
        decoded = decode(img, codec);
    } catch (const CodecError&) {
        decoded = Message::zeros(w.size());
        r.decode_failed = true;
    }
    r.bit_accuracy = bit_accuracy(decoded, w);
    r.detected = r.bit_accuracy > gamma;
    return r;
}

}  // namespace wmevade
