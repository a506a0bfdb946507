#include "support.hpp"

#include "wmevade/codecs.hpp"
#include "wmevade/transforms.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace wmevade;

TEST_CASE("Message hex serialization")
{
    const Message m({1, 0, 1, 0, 1, 1, 1, 1});
    CHECK(m.to_hex() == "af");
    CHECK(Message::from_hex("af") == m);
    CHECK(Message::from_hex("AF") == m);

    const Message odd({1, 1, 1});
    CHECK(odd.to_hex() == "e");
    CHECK(Message::from_hex("e", 3) == odd);
    CHECK_THROWS(Message::from_hex("f", 3));  // nonzero padding bit
    CHECK_THROWS(Message::from_hex("zz"));

    for (int t = 0; t < 50; ++t) {
        const Message r = Message::random(1 + t, 10 + t);
        CHECK(Message::from_hex(r.to_hex(), r.size()) == r);
    }
    CHECK_THROWS(Message(std::vector<std::uint8_t>{}));
}

TEST_CASE("bit accuracy")
{
    const Message w = Message::random(32, 3);
    CHECK(bit_accuracy(w, w) == 1.0);
    CHECK(bit_accuracy(w, w.inverted()) == 0.0);
    CHECK_THROWS(bit_accuracy(w, Message::random(31, 3)));

    Rng rng(77);
    double sum = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i)
        sum += bit_accuracy(Message::random(32, rng), Message::random(32, rng));
    CHECK(std::abs(sum / trials - 0.5) < 0.01);
}

TEST_CASE("codec names and config validation")
{
    for (auto k : {CodecKind::Lsb, CodecKind::DwtDctSvd, CodecKind::Spectral})
        CHECK(parse_codec_kind(to_string(k)) == k);
    CHECK_THROWS(parse_codec_kind("rivagan"));

    CodecConfig c = default_codec(CodecKind::Spectral);
    c.band = 6;
    CHECK_THROWS(c.validate());
    c.band = 5;
    c.strength = 0;
    CHECK_THROWS(c.validate());
    CHECK(default_codec(CodecKind::Spectral).describe() == "spectral-b5");
}

TEST_CASE("round trip on every codec")
{
    const ImageU8 img = testing::desk_image(3);
    for (auto k : {CodecKind::Lsb, CodecKind::DwtDctSvd, CodecKind::Spectral}) {
        CAPTURE(to_string(k));
        for (int band = 1; band <= (k == CodecKind::Spectral ? 5 : 1); ++band) {
            CodecConfig cfg = default_codec(k);
            cfg.band = band;
            for (int t = 0; t < 4; ++t) {
                const Message w = Message::random(32, 1000 + t);
                const ImageU8 wm = embed(img, w, cfg);
                CHECK(decode(wm, cfg) == w);
                CHECK(psnr(wm, img) >= 35.0);
            }
        }
    }
}

TEST_CASE("LSB changes only least significant bits of the blue channel")
{
    const ImageU8 img = testing::random_image(32, 32, 3, 8);
    const CodecConfig cfg = default_codec(CodecKind::Lsb);
    const ImageU8 wm = embed(img, Message::random(32, 2), cfg);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c = 0; c < 3; ++c) {
                const int d = std::abs(int(wm.at(y, x, c)) - int(img.at(y, x, c)));
                CHECK(d <= (c == 2 ? 1 : 0));
            }
    CHECK(psnr(wm, img) >= 48.13);
}

TEST_CASE("gray images are supported")
{
    const ImageU8 img = testing::random_image(64, 64, 1, 11);
    for (auto k : {CodecKind::Lsb, CodecKind::DwtDctSvd, CodecKind::Spectral}) {
        const CodecConfig cfg = default_codec(k);
        const Message w = Message::random(32, 5);
        CHECK(decode(embed(img, w, cfg), cfg) == w);
    }
}

TEST_CASE("DWT-DCT-SVD writes ones into black blocks")
{
    // An all-zero block has top singular value 0; bit 1 must land above zero.
    ImageU8 img = testing::random_image(64, 64, 3, 12);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = 0;
    const CodecConfig cfg = default_codec(CodecKind::DwtDctSvd);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Message w = Message::random(32, s);
        CHECK(decode(embed(img, w, cfg), cfg) == w);
    }
    CHECK(decode(embed(ImageU8(64, 64, 3), Message::random(32, 9), cfg), cfg) == Message::random(32, 9));
}

TEST_CASE("codec size limits raise CodecError")
{
    const ImageU8 tiny = testing::random_image(8, 8, 3, 1);
    CHECK_THROWS_AS(embed(tiny, Message::random(32, 1), default_codec(CodecKind::DwtDctSvd)), CodecError);
    CHECK_THROWS_AS(embed(ImageU8(12, 12, 3), Message::random(32, 1), default_codec(CodecKind::DwtDctSvd)),
                    CodecError);
    CHECK_THROWS_AS(embed(tiny, Message::random(32, 1), default_codec(CodecKind::Spectral)), CodecError);
}

TEST_CASE("detect applies a strict threshold and flags decode failures")
{
    const ImageU8 img = testing::desk_image(5);
    const CodecConfig cfg = default_codec(CodecKind::DwtDctSvd);
    const Message w = Message::random(32, 9);
    const ImageU8 wm = embed(img, w, cfg);

    const DetectionResult full = detect(wm, w, cfg, 1.0);
    CHECK(full.bit_accuracy == 1.0);
    CHECK_FALSE(full.detected);  // 1.0 > 1.0 is false
    CHECK(detect(wm, w, cfg, 0.75).detected);

    // 24 of 32 agreeing bits is exactly 0.75: not detected at gamma 0.75.
    std::vector<std::uint8_t> bits = w.bits();
    for (int i = 0; i < 8; ++i)
        bits[i] ^= 1;
    const ImageU8 wm24 = embed(img, Message(bits), cfg);
    const DetectionResult at = detect(wm24, w, cfg, 0.75);
    CHECK(at.bit_accuracy == 0.75);
    CHECK_FALSE(at.detected);

    CHECK_THROWS(detect(wm, w, cfg, 0.5));
    CHECK_THROWS(detect(wm, w, cfg, 1.01));

    const DetectionResult failed = detect(testing::random_image(8, 8, 3, 2), w, cfg, 0.75);
    CHECK(failed.decode_failed);
    CHECK(failed.bit_accuracy == bit_accuracy(Message::zeros(32), w));
}

TEST_CASE("spectral carriers sit in the requested band")
{
    for (int band = 1; band <= 5; ++band) {
        CodecConfig cfg = default_codec(CodecKind::Spectral);
        cfg.band = band;
        const auto carriers = detail::spectral_carriers(64, 64, cfg);
        CHECK(carriers.size() == static_cast<std::size_t>(cfg.message_bits * cfg.effective_redundancy()));
        const BandMap m = radial_bands(64, 64);
        std::set<std::pair<int, int>> seen;
        for (const auto& b : carriers) {
            CHECK(m.at(b.u, b.v) == band);
            const auto conj = std::pair{(64 - b.u) % 64, (64 - b.v) % 64};
            CHECK(conj != std::pair{b.u, b.v});
            CHECK(seen.insert({b.u, b.v}).second);
            CHECK(seen.count(conj) == 0);
        }
    }
}

TEST_CASE("spectral embedding only touches carrier bins")
{
    CodecConfig cfg = default_codec(CodecKind::Spectral);
    cfg.band = 3;
    const ImageU8 img = testing::desk_image(1);
    const auto luma = luma_plane(img);
    const auto marked = detail::spectral_embed_plane(luma, 64, 64, Message::random(32, 4), cfg);
    std::vector<double> delta(luma.size());
    for (std::size_t i = 0; i < luma.size(); ++i)
        delta[i] = marked[i] - luma[i];
    const ComplexGrid d = fft2(delta, 64, 64);
    std::set<std::pair<int, int>> support;
    for (const auto& b : detail::spectral_carriers(64, 64, cfg)) {
        support.insert({b.u, b.v});
        support.insert({(64 - b.u) % 64, (64 - b.v) % 64});
    }
    double outside = 0, inside = 0;
    for (int u = 0; u < 64; ++u)
        for (int v = 0; v < 64; ++v)
            (support.count({u, v}) ? inside : outside) += std::norm(d.at(u, v));
    CHECK(inside > 0);
    CHECK(outside < 1e-12 * inside);
}

TEST_CASE("different keys place different carriers")
{
    CodecConfig a = default_codec(CodecKind::Spectral), b = a;
    b.seed = a.seed + 1;
    CHECK_FALSE(detail::spectral_carriers(64, 64, a) == detail::spectral_carriers(64, 64, b));
    CHECK(detail::spectral_carriers(64, 64, a) == detail::spectral_carriers(64, 64, a));
}
