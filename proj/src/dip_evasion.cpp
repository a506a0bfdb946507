#include "wmevade/dip.hpp"

#include <cmath>
#include <string>

namespace wmevade::dip {

EvasionTrace run_evasion(const ImageU8& watermarked, const NetConfig& net_cfg, const EvasionOptions& opt)
{
    if (opt.iterations < 1)
        throw std::invalid_argument("run_evasion: iterations must be >= 1");
    if (opt.record_stride < 1)
        throw std::invalid_argument("run_evasion: record_stride must be >= 1");
    if (opt.clean && !opt.clean->same_shape(watermarked))
        throw ShapeError("run_evasion: clean reference shape differs from the watermarked image");

    NetConfig cfg = net_cfg;
    cfg.output_channels = watermarked.channels();
    SkipNet<float> net(cfg, watermarked.height(), watermarked.width());
    Adam<float> adam(net.parameters(), opt.adam);
    const Tensor<float> target = image_to_tensor<float>(watermarked);

    std::optional<BandMap> bands;
    if (opt.record_fbe)
        bands = radial_bands(watermarked.height(), watermarked.width());

    EvasionTrace trace;
    trace.records.reserve(static_cast<std::size_t>(opt.iterations / opt.record_stride));
    Tensor<float> grad;
    for (int it = 1; it <= opt.iterations; ++it) {
        const Tensor<float>& out = net.forward();
        const double loss = mse_loss(out, target, &grad);
        if (!std::isfinite(loss))
            throw DivergenceError(it, "run_evasion: non-finite loss at iteration " + std::to_string(it));
        trace.final_loss = loss;

        if (it % opt.record_stride == 0) {
            TraceRecord rec;
            rec.iteration = it;
            rec.loss = loss;
            const ImageF iterate = tensor_to_image(out);
            ImageU8 snap = to_u8(iterate);
            rec.psnr_vs_watermarked = psnr(snap, watermarked);
            if (opt.clean)
                rec.psnr_vs_clean = psnr(snap, *opt.clean);
            if (opt.detector) {
                const DetectionResult d = (*opt.detector)(snap);
                rec.bit_accuracy = d.bit_accuracy;
                rec.detected = d.detected;
            }
            if (bands)
                rec.fbe = compute_fbe(iterate, watermarked, *bands);
            if (opt.keep_snapshots)
                rec.snapshot = std::move(snap);
            trace.records.push_back(std::move(rec));
        }

        net.zero_grad();
        net.backward(grad);
        adam.step();
    }
    return trace;
}

BandProfile compute_fbe(const ImageF& iterate, const ImageU8& target, const BandMap& bands)
{
    if (!iterate.same_shape(target))
        throw ShapeError("compute_fbe: iterate and target shapes differ");
    if (bands.height != target.height() || bands.width != target.width() || bands.bands != kDefaultBands)
        throw ShapeError("compute_fbe: band map does not match the image");

    const int h = target.height(), w = target.width();
    const ComplexGrid ft = fft2(luma_plane(to_float(target)), h, w);
    const ComplexGrid fi = fft2(luma_plane(iterate), h, w);

    std::array<double, kDefaultBands> sum{};
    std::array<std::size_t, kDefaultBands> count{};
    for (std::size_t i = 0; i < ft.bins.size(); ++i) {
        const double den = std::abs(ft.bins[i]);
        if (den < kFbeDenominatorFloor)
            continue;
        const int b = bands.band_of[i] - 1;
        sum[b] += std::abs(ft.bins[i] - fi.bins[i]) / den;
        ++count[b];
    }
    BandProfile p;
    for (int b = 0; b < kDefaultBands; ++b)
        p.values[b] = count[b] ? sum[b] / double(count[b]) : std::nan("");
    return p;
}

std::vector<int> select_query_candidates(const EvasionTrace& trace, double psnr_floor)
{
    std::vector<int> out;
    for (const auto& r : trace.records)
        if (r.psnr_vs_watermarked >= psnr_floor)
            out.push_back(r.iteration);
    return out;
}

}  // namespace wmevade::dip
