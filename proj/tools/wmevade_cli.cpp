// wmevade command-line front end.
//
//   wmevade embed    --in clean.png  --codec spectral --band 5 --out dir
//   wmevade detect   --in image.png  --codec spectral --message <hex> --out dir
//   wmevade evade    --in wm.png     --method dip --message <hex> --out dir
//   wmevade sweep    --config bench.json --out dir
//   wmevade spectrum --corpus dir    --codec dwtdctsvd --out dir
//   wmevade trace    --in clean.png  --codec spectral --out dir
//
// Exit status: 0 success, 1 usage error, 2 runtime failure.

#include "wmevade/baselines.hpp"
#include "wmevade/codecs.hpp"
#include "wmevade/dip.hpp"
#include "wmevade/harness.hpp"
#include "wmevade/image.hpp"
#include "wmevade/transforms.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace wmevade;
using nlohmann::json;

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CodecArgs {
    std::string kind = "dwtdctsvd";
    std::optional<double> strength;
    std::optional<int> band;
    std::optional<std::uint64_t> key;
    int bits = kDefaultMessageBits;

    void attach(CLI::App* app)
    {
        app->add_option("--codec", kind, "lsb | dwtdctsvd | spectral")->capture_default_str();
        app->add_option("--strength", strength, "embedding strength (codec default when omitted)");
        app->add_option("--band", band, "radial band 1..5 (spectral)");
        app->add_option("--key", key, "carrier placement seed");
        app->add_option("--bits", bits, "message length")->capture_default_str();
    }

    CodecConfig resolve() const
    {
        CodecConfig c;
        try {
            c = default_codec(parse_codec_kind(kind));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        if (strength)
            c.strength = *strength;
        if (band)
            c.band = *band;
        if (key)
            c.seed = *key;
        c.message_bits = bits;
        try {
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

struct MessageArgs {
    std::string hex;
    std::uint64_t seed = 1;

    void attach(CLI::App* app)
    {
        app->add_option("--message", hex, "payload as hex (random from --message-seed when omitted)");
        app->add_option("--message-seed", seed, "seed for a random payload")->capture_default_str();
    }

    Message resolve(int bits) const
    {
        if (hex.empty())
            return Message::random(bits, seed);
        try {
            return Message::from_hex(hex, bits);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
};

void write_json(const fs::path& path, const json& j)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

json quality_json(const QualityReport& q)
{
    auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"psnr", finite(q.psnr)}, {"ssim", q.ssim}, {"q90", q.q90}};
}

json detection_json(const DetectionResult& d)
{
    return {{"bit_accuracy", d.bit_accuracy},
            {"detected", d.detected},
            {"gamma", d.gamma},
            {"decode_failed", d.decode_failed}};
}

// Residual band energies as fractions of the residual's total energy.
std::array<double, kDefaultBands> residual_profile(const ImageU8& clean, const ImageU8& marked)
{
    const auto a = luma_plane(to_float(clean));
    const auto b = luma_plane(to_float(marked));
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        diff[i] = b[i] - a[i];
    const auto spec = fft2(diff, clean.height(), clean.width());
    const BandProfile p = band_energy(spec, radial_bands(clean.height(), clean.width()));
    const double total = p.total();
    std::array<double, kDefaultBands> out{};
    for (int k = 0; k < kDefaultBands; ++k)
        out[k] = total > 0 ? p.values[k] / total : 0.0;
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Watermark embedding, detection and evasion laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "wmevade 0.1.0");

    std::string in_path, out_dir, clean_path, config_path, corpus_dir, method_name = "dip";
    double gamma = 0.75;
    std::optional<double> parameter;
    int iterations = 500, stride = 10, max_images = 0;
    std::uint64_t seed = 0;
    bool snapshots = false;
    CodecArgs codec_args;
    MessageArgs msg_args;

    auto* embed_cmd = app.add_subcommand("embed", "embed a payload into an image");
    embed_cmd->add_option("--in", in_path, "clean image (PNG/PPM)")->required();
    embed_cmd->add_option("--out", out_dir, "output directory")->required();
    codec_args.attach(embed_cmd);
    msg_args.attach(embed_cmd);

    auto* detect_cmd = app.add_subcommand("detect", "decode and threshold bit accuracy");
    detect_cmd->add_option("--in", in_path, "image to test")->required();
    detect_cmd->add_option("--out", out_dir, "output directory")->required();
    detect_cmd->add_option("--gamma", gamma, "detection threshold in (0.5, 1]")->capture_default_str();
    codec_args.attach(detect_cmd);
    msg_args.attach(detect_cmd);

    auto* evade_cmd = app.add_subcommand("evade", "one evasion method on one watermarked image");
    evade_cmd->add_option("--in", in_path, "watermarked image")->required();
    evade_cmd->add_option("--out", out_dir, "output directory")->required();
    evade_cmd->add_option("--method", method_name, "brightness | contrast | noise | jpeg | blur | dip")
        ->capture_default_str();
    evade_cmd->add_option("--param", parameter, "apply a single parameter value instead of searching");
    evade_cmd->add_option("--clean", clean_path, "clean image for quality numbers");
    evade_cmd->add_option("--gamma", gamma, "detection threshold in (0.5, 1]")->capture_default_str();
    evade_cmd->add_option("--iterations", iterations, "DIP iterations")->capture_default_str();
    evade_cmd->add_option("--stride", stride, "DIP record stride")->capture_default_str();
    evade_cmd->add_option("--seed", seed, "noise / network seed")->capture_default_str();
    codec_args.attach(evade_cmd);
    msg_args.attach(evade_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "full benchmark from a JSON config");
    sweep_cmd->add_option("--config", config_path, "benchmark config (JSON)");
    sweep_cmd->add_option("--corpus", corpus_dir, "override the corpus directory");
    sweep_cmd->add_option("--max-images", max_images, "override max_images");
    sweep_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* spectrum_cmd = app.add_subcommand("spectrum", "band profiles of watermark residuals");
    spectrum_cmd->add_option("--in", in_path, "single clean image");
    spectrum_cmd->add_option("--corpus", corpus_dir, "directory of clean images");
    spectrum_cmd->add_option("--max-images", max_images, "limit on corpus images");
    spectrum_cmd->add_option("--out", out_dir, "output directory")->required();
    codec_args.attach(spectrum_cmd);
    msg_args.attach(spectrum_cmd);

    auto* trace_cmd = app.add_subcommand("trace", "DIP trajectories with band errors");
    trace_cmd->add_option("--in", in_path, "clean image")->required();
    trace_cmd->add_option("--out", out_dir, "output directory")->required();
    trace_cmd->add_option("--gamma", gamma, "detection threshold in (0.5, 1]")->capture_default_str();
    trace_cmd->add_option("--iterations", iterations, "DIP iterations")->capture_default_str();
    trace_cmd->add_option("--stride", stride, "record stride")->capture_default_str();
    trace_cmd->add_option("--seed", seed, "network seed")->capture_default_str();
    trace_cmd->add_flag("--snapshots", snapshots, "write a PNG per recorded iterate");
    codec_args.attach(trace_cmd);
    msg_args.attach(trace_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const fs::path out(out_dir);
        if (iterations < 1 || stride < 1)
            throw UsageError("--iterations and --stride must be >= 1");

        if (*embed_cmd) {
            const CodecConfig codec = codec_args.resolve();
            const Message w = msg_args.resolve(codec.message_bits);
            const ImageU8 clean = load_image(in_path);
            const ImageU8 wm = embed(clean, w, codec);
            fs::create_directories(out);
            save_image(wm, out / "watermarked.png");
            json j = {{"codec", codec.describe()}, {"message", w.to_hex()}, {"bits", w.size()}};
            j["quality"] = quality_json(quality(clean, wm));
            write_json(out / "embed.json", j);
            std::printf("%s  psnr %.2f dB  message %s\n", (out / "watermarked.png").c_str(), psnr(clean, wm),
                        w.to_hex().c_str());
        } else if (*detect_cmd) {
            const CodecConfig codec = codec_args.resolve();
            const Message w = msg_args.resolve(codec.message_bits);
            if (!(gamma > 0.5 && gamma <= 1.0))
                throw UsageError("--gamma must lie in (0.5, 1]");
            const DetectionResult d = detect(load_image(in_path), w, codec, gamma);
            fs::create_directories(out);
            write_json(out / "detection.json", detection_json(d));
            std::printf("bit accuracy %.4f  %s\n", d.bit_accuracy, d.detected ? "DETECTED" : "not detected");
        } else if (*evade_cmd) {
            EvasionMethod method;
            try {
                method = parse_evasion_method(method_name);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            if (!(gamma > 0.5 && gamma <= 1.0))
                throw UsageError("--gamma must lie in (0.5, 1]");
            const CodecConfig codec = codec_args.resolve();
            const Message w = msg_args.resolve(codec.message_bits);
            const ImageU8 wm = load_image(in_path);
            std::optional<ImageU8> clean;
            if (!clean_path.empty())
                clean = load_image(clean_path);
            fs::create_directories(out);

            std::vector<Candidate> cands;
            if (method == EvasionMethod::Dip) {
                if (parameter)
                    iterations = static_cast<int>(*parameter);
                dip::EvasionOptions opt;
                opt.iterations = iterations;
                opt.record_stride = parameter ? iterations : stride;
                opt.detector = dip::Detector{w, codec, gamma};
                opt.clean = clean;
                dip::NetConfig net;
                net.seed = seed;
                dip::EvasionTrace trace = dip::run_evasion(wm, net, opt);
                emit_trajectories(trace, out, "trace");
                for (auto& r : trace.records)
                    cands.push_back({double(r.iteration), std::move(*r.snapshot)});
            } else if (parameter) {
                cands.push_back({*parameter, apply_baseline(method, wm, *parameter, seed)});
            } else {
                cands = sweep(method, default_grid(method), wm, seed);
            }

            std::optional<std::size_t> pick;
            if (parameter)
                pick = cands.size() - 1;
            else
                pick = best_evasion(cands, w, codec, gamma, wm);

            json j = {{"method", std::string(to_string(method))}, {"gamma", gamma}, {"candidates", cands.size()}};
            if (!pick) {
                j["evaded"] = false;
                write_json(out / "evade.json", j);
                std::printf("no candidate evades detection at gamma %.2f\n", gamma);
                return 0;
            }
            const Candidate& best = cands[*pick];
            const DetectionResult d = detect(best.image, w, codec, gamma);
            save_image(best.image, out / "evaded.png");
            j["evaded"] = !d.detected;
            j["parameter"] = best.parameter;
            j["detection"] = detection_json(d);
            j["psnr_vs_watermarked"] = psnr(best.image, wm);
            if (clean)
                j["quality_vs_clean"] = quality_json(quality(best.image, *clean));
            write_json(out / "evade.json", j);
            std::printf("%s  parameter %g  bit accuracy %.4f  %s\n", (out / "evaded.png").c_str(), best.parameter,
                        d.bit_accuracy, d.detected ? "still detected" : "evaded");
        } else if (*sweep_cmd) {
            BenchmarkConfig cfg = config_path.empty() ? default_benchmark_config() : load_benchmark_config(config_path);
            if (!corpus_dir.empty())
                cfg.corpus = corpus_dir;
            if (max_images > 0)
                cfg.max_images = max_images;
            cfg.out = out;
            if (cfg.corpus.empty())
                throw UsageError("sweep needs a corpus (config 'corpus' or --corpus)");
            fs::create_directories(out);
            {
                std::ofstream os(out / "config.json", std::ios::binary | std::ios::trunc);
                os << to_json(cfg) << '\n';
            }
            const SweepReport rep = run_benchmark(cfg);
            emit_report(rep, out);
            std::printf("%zu evasion cells, %zu rate cells -> %s\n", rep.cells.size(), rep.rates.size(),
                        (out / "report.csv").c_str());
        } else if (*spectrum_cmd) {
            const CodecConfig codec = codec_args.resolve();
            const Message w = msg_args.resolve(codec.message_bits);
            std::vector<NamedImage> images;
            if (!corpus_dir.empty())
                images = load_corpus(corpus_dir, max_images);
            else if (!in_path.empty())
                images.push_back({fs::path(in_path).filename().string(), load_image(in_path)});
            else
                throw UsageError("spectrum needs --in or --corpus");
            fs::create_directories(out);
            std::ofstream os(out / "spectrum.csv", std::ios::binary | std::ios::trunc);
            os << "image,codec,band1,band2,band3,band4,band5\n";
            std::array<double, kDefaultBands> mean{};
            for (const auto& item : images) {
                const auto prof = residual_profile(item.image, embed(item.image, w, codec));
                os << item.name << ',' << codec.describe();
                for (int k = 0; k < kDefaultBands; ++k) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, ",%.6f", prof[k]);
                    os << buf;
                    mean[k] += prof[k] / double(images.size());
                }
                os << '\n';
            }
            std::printf("%s residual energy by band:", codec.describe().c_str());
            for (double v : mean)
                std::printf(" %.3f", v);
            std::printf("\n");
        } else if (*trace_cmd) {
            if (!(gamma > 0.5 && gamma <= 1.0))
                throw UsageError("--gamma must lie in (0.5, 1]");
            const CodecConfig codec = codec_args.resolve();
            const Message w = msg_args.resolve(codec.message_bits);
            const ImageU8 clean = load_image(in_path);
            const ImageU8 wm = embed(clean, w, codec);
            dip::EvasionOptions opt;
            opt.iterations = iterations;
            opt.record_stride = stride;
            opt.record_fbe = true;
            opt.keep_snapshots = snapshots;
            opt.detector = dip::Detector{w, codec, gamma};
            opt.clean = clean;
            dip::NetConfig net;
            net.seed = seed;
            const dip::EvasionTrace trace = dip::run_evasion(wm, net, opt);
            fs::create_directories(out);
            save_image(wm, out / "watermarked.png");
            emit_trajectories(trace, out, "trace", snapshots);
            std::printf("%zu records -> %s\n", trace.records.size(), (out / "trace.jsonl").c_str());
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "wmevade: %s\n", e.what());
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "wmevade: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "wmevade: %s\n", e.what());
        return 2;
    }
    return 0;
}
