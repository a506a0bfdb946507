#include "support.hpp"

#include "wmevade/baselines.hpp"
#include "wmevade/transforms.hpp"

#include <doctest.h>

#include <cmath>

using namespace wmevade;

TEST_CASE("brightness and contrast")
{
    const ImageU8 img = testing::desk_image(2);
    CHECK(adjust_brightness(img, 1.0) == img);
    CHECK(adjust_contrast(img, 1.0) == img);

    CHECK(adjust_brightness(ImageU8(4, 4, 3, std::uint8_t{200}), 0.5) == ImageU8(4, 4, 3, std::uint8_t{100}));

    ImageU8 two(2, 2, 1, std::vector<std::uint8_t>{50, 150, 150, 50});
    CHECK(adjust_contrast(two, 0.5) == ImageU8(2, 2, 1, std::vector<std::uint8_t>{75, 125, 125, 75}));

    CHECK_THROWS(adjust_brightness(img, 0.0));
    CHECK_THROWS(adjust_contrast(img, 1.5));
}

TEST_CASE("gaussian noise")
{
    const ImageU8 img = testing::desk_image(4);
    CHECK(add_gaussian_noise(img, 1.0 / (2 * 255 * 7), 3) == img);
    CHECK(add_gaussian_noise(img, 0.05, 3) == add_gaussian_noise(img, 0.05, 3));
    CHECK_FALSE(add_gaussian_noise(img, 0.05, 3) == add_gaussian_noise(img, 0.05, 4));

    // Mid-gray image: clamping never triggers at sigma 0.1 for all but far tails.
    const ImageU8 gray(128, 128, 3, std::uint8_t{128});
    const ImageU8 noisy = add_gaussian_noise(gray, 0.1, 11);
    double s2 = 0;
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const double d = double(noisy.samples()[i]) - 128.0;
        s2 += d * d;
    }
    const double sd = std::sqrt(s2 / double(gray.size()));
    CHECK(std::abs(sd - 25.5) / 25.5 < 0.02);
}

TEST_CASE("gaussian blur")
{
    const ImageU8 flat(16, 16, 3, std::uint8_t{77});
    CHECK(gaussian_blur(flat, 1.5) == flat);

    const auto k = gaussian_kernel(1.0);
    CHECK(k.size() == 7u);
    double sum = 0;
    for (double v : k)
        sum += v;
    CHECK(sum == doctest::Approx(1.0));

    // An impulse spreads into the separable kernel product.
    ImageU8 imp(15, 15, 1, std::uint8_t{0});
    imp.at(7, 7, 0) = 200;
    const ImageU8 out = gaussian_blur(imp, 1.0);
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx)
            CHECK(out.at(7 + dy, 7 + dx, 0) == to_u8_sample(200.0 / 255.0 * k[dy + 3] * k[dx + 3]));

    const BandMap m = radial_bands(64, 64);
    for (int i = 0; i < 8; ++i) {
        const ImageU8 img = testing::desk_image(i);
        const auto e0 = band_energy(fft2(luma_plane(img), 64, 64), m);
        const auto e1 = band_energy(fft2(luma_plane(gaussian_blur(img, 1.0)), 64, 64), m);
        CHECK(e1.values[4] < e0.values[4]);
    }
}

TEST_CASE("JPEG quantization round trip")
{
    const auto q50 = jpeg_quant_table(50, false);
    CHECK(q50[0] == 16);
    CHECK(jpeg_quant_table(100, false)[0] == 1);
    CHECK(jpeg_quant_table(1, true)[63] == 255);

    double prev = 1e9;
    for (int q : {100, 80, 60, 40, 20}) {
        double mean = 0;
        for (int i = 0; i < 16; ++i) {
            const ImageU8 img = testing::desk_image(i);
            const double p = psnr(jpeg_compress(img, q), img);
            if (q == 100)
                CHECK(psnr(jpeg_compress(img, q, false), img) >= 40.0);
            mean += p / 16;
        }
        CHECK(mean <= prev);
        prev = mean;
    }
    for (int i = 0; i < 16; ++i) {
        const ImageU8 img = testing::desk_image(i);
        CHECK(psnr(jpeg_compress(img, 1), img) < 30.0);
    }

    // Constant images stay constant; only the DC level can drift.
    const ImageU8 flat(24, 40, 3, std::uint8_t{90});
    CHECK(jpeg_compress(flat, 100) == flat);
    for (int q : {1, 10, 50}) {
        const ImageU8 out = jpeg_compress(flat, q);
        CHECK(out.same_shape(flat));
        for (std::size_t i = 3; i < out.size(); ++i)
            CHECK(out.samples()[i] == out.samples()[i % 3]);
        CHECK(std::abs(int(out.samples()[0]) - 90) <= 8);
    }
    CHECK_THROWS(jpeg_compress(flat, 0));
    CHECK_THROWS(jpeg_compress(flat, 101));
}

TEST_CASE("sweep grids")
{
    CHECK(default_grid(EvasionMethod::Brightness).points() == 100);
    CHECK(default_grid(EvasionMethod::Contrast).points() == 100);
    CHECK(default_grid(EvasionMethod::GaussianNoise).points() == 100);
    CHECK(default_grid(EvasionMethod::Jpeg).points() == 100);
    CHECK(default_grid(EvasionMethod::Blur).points() == 99);
    CHECK(default_grid(EvasionMethod::Dip).points() == 50);

    const SweepGrid g = default_grid(EvasionMethod::Brightness);
    CHECK(g.value(0) == 0.01);
    CHECK(g.value(99) == 1.0);

    const ImageU8 img = testing::desk_image(0);
    const auto cands = sweep(EvasionMethod::Brightness, g, img);
    REQUIRE(cands.size() == 100);
    CHECK(cands.back().image == img);
    for (std::size_t i = 1; i < cands.size(); ++i)
        CHECK(cands[i].parameter > cands[i - 1].parameter);
    CHECK(sweep(EvasionMethod::Jpeg, default_grid(EvasionMethod::Jpeg), img).size() == 100);

    const auto n1 = sweep(EvasionMethod::GaussianNoise, {EvasionMethod::GaussianNoise, "std", 0.1, 0.2, 0.05}, img, 9);
    const auto n2 = sweep(EvasionMethod::GaussianNoise, {EvasionMethod::GaussianNoise, "std", 0.1, 0.2, 0.05}, img, 9);
    REQUIRE(n1.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(n1[i].image == n2[i].image);

    CHECK_THROWS(sweep(EvasionMethod::Dip, default_grid(EvasionMethod::Dip), img));
    CHECK_THROWS(SweepGrid{EvasionMethod::Jpeg, "quality", 5, 1, 1}.validate());
    CHECK_THROWS(SweepGrid{EvasionMethod::Jpeg, "quality", 1, 5, 0}.validate());
    for (auto m : {EvasionMethod::Brightness, EvasionMethod::Contrast, EvasionMethod::GaussianNoise,
                   EvasionMethod::Jpeg, EvasionMethod::Blur, EvasionMethod::Dip})
        CHECK(parse_evasion_method(to_string(m)) == m);
}
