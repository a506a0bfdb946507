#include "support.hpp"

#include "wmevade/transforms.hpp"

#include <Eigen/SVD>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace wmevade;

namespace {

std::vector<double> random_grid(int h, int w, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> g(static_cast<std::size_t>(h) * w);
    for (auto& v : g)
        v = rng.uniform() * 2.0 - 1.0;
    return g;
}

// Direct O(N^2) DFT.
ComplexGrid naive_dft(const std::vector<double>& g, int h, int w)
{
    ComplexGrid out(h, w);
    for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) {
            Complex acc = 0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double ang = -2.0 * std::numbers::pi * (double(u) * y / h + double(v) * x / w);
                    acc += g[y * w + x] * Complex(std::cos(ang), std::sin(ang));
                }
            out.at(u, v) = acc;
        }
    return out;
}

double max_rel_diff(const ComplexGrid& a, const ComplexGrid& b)
{
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.bins.size(); ++i) {
        num = std::max(num, std::abs(a.bins[i] - b.bins[i]));
        den = std::max(den, std::abs(b.bins[i]));
    }
    return num / den;
}

}  // namespace

TEST_CASE("fft2 matches a direct DFT")
{
    for (auto [h, w] : {std::pair{8, 8}, std::pair{16, 12}, std::pair{5, 7}, std::pair{1, 9}}) {
        const auto g = random_grid(h, w, 100 + h * w);
        CHECK(max_rel_diff(fft2(g, h, w), naive_dft(g, h, w)) < 1e-9);
    }
}

TEST_CASE("fft2 closed forms")
{
    std::vector<double> c(6 * 10, 0.25);
    const ComplexGrid f = fft2(c, 6, 10);
    CHECK(std::abs(f.at(0, 0) - Complex(0.25 * 60)) < 1e-12);
    for (std::size_t i = 1; i < f.bins.size(); ++i)
        CHECK(std::abs(f.bins[i]) < 1e-12);

    std::vector<double> d(8 * 8, 0.0);
    d[0] = 1.0;
    for (const auto& b : fft2(d, 8, 8).bins)
        CHECK(std::abs(b - Complex(1.0)) < 1e-12);
}

TEST_CASE("ifft2 inverts fft2 and Parseval holds")
{
    for (int t = 0; t < 100; ++t) {
        const int h = 1 + t % 13, w = 2 + (t * 7) % 17;
        const auto g = random_grid(h, w, 7000 + t);
        const ComplexGrid f = fft2(g, h, w);
        const auto back = ifft2_real(f);
        double err = 0, mag = 0, e_space = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            err = std::max(err, std::abs(back[i] - g[i]));
            mag = std::max(mag, std::abs(g[i]));
            e_space += g[i] * g[i];
        }
        CHECK(err / mag < 1e-9);
        CHECK(std::abs(f.energy() - double(h * w) * e_space) / (double(h * w) * e_space) < 1e-6);
    }
}

TEST_CASE("radial bands partition the spectrum")
{
    const BandMap m = radial_bands(64, 64);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(32, 32) == 5);  // (-32, -32) is the farthest bin

    // Brute-force scan with the normalized radius in floating point.
    std::vector<std::size_t> brute(5, 0);
    double rmax = 0;
    for (int u = 0; u < 64; ++u)
        for (int v = 0; v < 64; ++v)
            rmax = std::max(rmax, std::hypot(signed_frequency(u, 64), signed_frequency(v, 64)));
    for (int u = 0; u < 64; ++u)
        for (int v = 0; v < 64; ++v) {
            const double r = std::hypot(signed_frequency(u, 64), signed_frequency(v, 64)) / rmax;
            const int b = r == 0 ? 1 : static_cast<int>(std::ceil(r * 5 - 1e-12));
            ++brute[b - 1];
        }
    const auto counts = m.counts();
    std::size_t total = 0;
    for (int b = 0; b < 5; ++b) {
        CHECK(counts[b] == brute[b]);
        total += counts[b];
    }
    CHECK(total == 64u * 64u);

    const BandMap odd = radial_bands(9, 14, 3);
    std::size_t t2 = 0;
    for (auto c : odd.counts())
        t2 += c;
    CHECK(t2 == 9u * 14u);
}

TEST_CASE("band energy")
{
    const BandMap m = radial_bands(16, 16);
    std::vector<double> c(256, 3.0);
    const BandProfile flat = band_energy(fft2(c, 16, 16), m);
    CHECK(flat.values[0] > 0);
    for (int b = 1; b < 5; ++b)
        CHECK(flat.values[b] == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<double> checker(256);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            checker[y * 16 + x] = ((x + y) % 2) ? 1.0 : -1.0;
    const ComplexGrid cs = fft2(checker, 16, 16);
    const BandProfile hf = band_energy(cs, m);
    CHECK(hf.values[4] == doctest::Approx(cs.energy()));

    const auto g = random_grid(16, 16, 9);
    const ComplexGrid gs = fft2(g, 16, 16);
    CHECK(band_energy(gs, m).total() == doctest::Approx(gs.energy()));
}

TEST_CASE("8x8 DCT")
{
    std::vector<double> k(64, 7.0);
    const Block8 d = dct8x8(k);
    CHECK(d[0] == doctest::Approx(56.0));  // 8 * c for the orthonormal DC basis
    for (int i = 1; i < 64; ++i)
        CHECK(std::abs(d[i]) < 1e-12);

    for (int t = 0; t < 100; ++t) {
        const auto b = random_grid(8, 8, 300 + t);
        const Block8 back = idct8x8(dct8x8(b));
        for (int i = 0; i < 64; ++i)
            CHECK(std::abs(back[i] - b[i]) < 1e-8);
    }
    for (int t = 0; t < 20; ++t) {
        const auto b = random_grid(4, 4, 900 + t);
        const auto back = idct2d(dct2d(b, 4), 4);
        for (int i = 0; i < 16; ++i)
            CHECK(std::abs(back[i] - b[i]) < 1e-8);
    }
    CHECK_THROWS(dct8x8(std::vector<double>(63)));
}

TEST_CASE("Haar DWT")
{
    std::vector<double> c(6 * 8, 2.5);
    const HaarBands hb = haar_dwt2(c, 6, 8);
    for (double v : hb.ll)
        CHECK(v == doctest::Approx(5.0));
    for (const auto* band : {&hb.lh, &hb.hl, &hb.hh})
        for (double v : *band)
            CHECK(v == 0.0);

    for (int t = 0; t < 100; ++t) {
        const int h = 2 * (1 + t % 7), w = 2 * (1 + t % 5);
        const auto g = random_grid(h, w, 500 + t);
        const auto back = haar_idwt2(haar_dwt2(g, h, w));
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(std::abs(back[i] - g[i]) < 1e-8);
    }
    CHECK_THROWS(haar_dwt2(std::vector<double>(15), 3, 5));
}

TEST_CASE("4x4 SVD")
{
    Mat4 diag{};
    diag[0] = 3;
    diag[5] = 2;
    diag[10] = 1;
    const Svd4 d = svd_block(diag);
    CHECK(d.s[0] == doctest::Approx(3));
    CHECK(d.s[1] == doctest::Approx(2));
    CHECK(d.s[2] == doctest::Approx(1));
    CHECK(std::abs(d.s[3]) < 1e-12);

    for (int t = 0; t < 200; ++t) {
        const auto g = random_grid(4, 4, 1200 + t);
        Mat4 a;
        std::copy(g.begin(), g.end(), a.begin());
        if (t % 10 == 0)  // rank-deficient: duplicate a row
            std::copy(a.begin(), a.begin() + 4, a.begin() + 8);
        const Svd4 r = svd_block(a);
        const Mat4 back = r.reconstruct();
        for (int i = 0; i < 16; ++i)
            CHECK(std::abs(back[i] - a[i]) < 1e-8);
        for (int i = 0; i < 3; ++i)
            CHECK(r.s[i] >= r.s[i + 1]);
        CHECK(r.s[3] >= 0.0);

        // Independent Jacobi oracle.
        Eigen::Matrix4d m;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                m(i, j) = a[i * 4 + j];
        Eigen::JacobiSVD<Eigen::Matrix4d> oracle(m);
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(r.s[i] - oracle.singularValues()(i)) < 1e-8);

        // Orthonormal factors.
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double uu = 0, vv = 0;
                for (int k = 0; k < 4; ++k) {
                    uu += r.u[k * 4 + i] * r.u[k * 4 + j];
                    vv += r.v[k * 4 + i] * r.v[k * 4 + j];
                }
                CHECK(std::abs(uu - (i == j)) < 1e-8);
                CHECK(std::abs(vv - (i == j)) < 1e-8);
            }
    }
}
