#include "wmevade/harness.hpp"

#include "wmevade/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace wmevade {

using nlohmann::json;

namespace {

template <class Detected, class Psnr>
std::optional<std::size_t> pick_best(std::size_t n, Detected&& detected, Psnr&& psnr_of)
{
    std::optional<std::size_t> best;
    double best_psnr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (detected(i))
            continue;
        const double p = psnr_of(i);
        if (!best || p > best_psnr) {
            best = i;
            best_psnr = p;
        }
    }
    return best;
}

// --- config parsing ---------------------------------------------------------------

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& dst, const std::string& where)
{
    if (!obj.contains(key))
        return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

CodecConfig parse_codec(const json& j)
{
    if (j.is_string())
        return default_codec(parse_codec_kind(j.get<std::string>()));
    check_keys(j, {"kind", "strength", "band", "seed", "message_bits", "redundancy"}, "codecs[]");
    if (!j.contains("kind"))
        throw ConfigError("codecs[]: missing 'kind'");
    CodecConfig c = default_codec(parse_codec_kind(j.at("kind").get<std::string>()));
    read(j, "strength", c.strength, "codecs[]");
    read(j, "band", c.band, "codecs[]");
    read(j, "seed", c.seed, "codecs[]");
    read(j, "message_bits", c.message_bits, "codecs[]");
    read(j, "redundancy", c.redundancy, "codecs[]");
    return c;
}

json codec_json(const CodecConfig& c)
{
    return json{{"kind", std::string(to_string(c.kind))}, {"strength", c.strength}, {"band", c.band},
                {"seed", c.seed},  {"message_bits", c.message_bits},          {"redundancy", c.redundancy}};
}

MethodSpec parse_method(const json& j)
{
    if (j.is_string()) {
        const auto m = parse_evasion_method(j.get<std::string>());
        return {m, default_grid(m)};
    }
    check_keys(j, {"method", "lo", "hi", "step"}, "methods[]");
    if (!j.contains("method"))
        throw ConfigError("methods[]: missing 'method'");
    const auto m = parse_evasion_method(j.at("method").get<std::string>());
    MethodSpec spec{m, default_grid(m)};
    read(j, "lo", spec.grid.lo, "methods[]");
    read(j, "hi", spec.grid.hi, "methods[]");
    read(j, "step", spec.grid.step, "methods[]");
    return spec;
}

// --- per-image pipeline -------------------------------------------------------------

struct MethodResult {
    // Per gamma: the chosen candidate (if any) and its quality against the clean image.
    std::vector<std::optional<std::pair<double, QualityReport>>> best;
};

struct CodecResult {
    double ba_watermarked = 0.0;
    double ba_clean = 0.0;
    std::vector<MethodResult> methods;
};

struct ImageResult {
    bool done = false;
    std::vector<CodecResult> codecs;
};

std::vector<Candidate> dip_candidates(const ImageU8& wm, const BenchmarkConfig& cfg, const SweepGrid& grid,
                                      std::uint64_t seed)
{
    grid.validate();
    dip::EvasionOptions opt;
    opt.iterations = static_cast<int>(std::floor(grid.hi));
    opt.record_stride = std::max(1, static_cast<int>(std::lround(grid.step)));
    opt.adam = cfg.dip.adam;
    dip::NetConfig net = cfg.dip.net;
    net.seed = seed;
    dip::EvasionTrace trace = dip::run_evasion(wm, net, opt);

    const std::vector<int> keep = dip::select_query_candidates(trace, cfg.dip.psnr_floor);
    std::vector<Candidate> out;
    out.reserve(keep.size());
    std::size_t k = 0;
    for (auto& rec : trace.records) {
        if (k < keep.size() && rec.iteration == keep[k]) {
            out.push_back({double(rec.iteration), std::move(*rec.snapshot)});
            ++k;
        }
    }
    return out;
}

ImageResult process_image(const NamedImage& item, const BenchmarkConfig& cfg, const std::vector<Message>& messages)
{
    const ImageU8& clean = item.image;
    const std::uint64_t image_seed = mix_seed(cfg.seed, content_hash(clean));
    ImageResult res;
    res.codecs.resize(cfg.codecs.size());

    for (std::size_t ci = 0; ci < cfg.codecs.size(); ++ci) {
        const CodecConfig& codec = cfg.codecs[ci];
        const Message& w = messages[ci];
        const ImageU8 wm = embed(clean, w, codec);
        CodecResult& cr = res.codecs[ci];
        cr.ba_watermarked = detect(wm, w, codec, 1.0).bit_accuracy;
        cr.ba_clean = detect(clean, w, codec, 1.0).bit_accuracy;

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const MethodSpec& spec = cfg.methods[mi];
            std::vector<Candidate> cands;
            if (spec.method == EvasionMethod::Dip)
                cands = dip_candidates(wm, cfg, spec.grid, image_seed);
            else
                cands = sweep(spec.method, spec.grid, wm, mix_seed(image_seed, ci * 64 + mi));

            std::vector<double> ba(cands.size()), pw(cands.size());
            for (std::size_t i = 0; i < cands.size(); ++i) {
                ba[i] = detect(cands[i].image, w, codec, 1.0).bit_accuracy;
                pw[i] = psnr(cands[i].image, wm);
            }
            MethodResult mr;
            for (double gamma : cfg.gammas) {
                const auto idx = pick_best(
                    cands.size(), [&](std::size_t i) { return ba[i] > gamma; }, [&](std::size_t i) { return pw[i]; });
                if (idx)
                    mr.best.emplace_back(std::pair{cands[*idx].parameter, quality(cands[*idx].image, clean)});
                else
                    mr.best.emplace_back(std::nullopt);
            }
            cr.methods.push_back(std::move(mr));
        }
    }
    res.done = true;
    return res;
}

SweepReport aggregate(const BenchmarkConfig& cfg, std::span<const NamedImage> corpus,
                      const std::vector<ImageResult>& results)
{
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (results[i].done)
            order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (corpus[a].name != corpus[b].name)
            return corpus[a].name < corpus[b].name;
        return content_hash(corpus[a].image) < content_hash(corpus[b].image);
    });

    SweepReport rep;
    for (std::size_t ci = 0; ci < cfg.codecs.size(); ++ci) {
        const std::string label = cfg.codecs[ci].describe();
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi) {
                const double gamma = cfg.gammas[gi];
                MethodCell cell;
                cell.codec = label;
                cell.method = cfg.methods[mi].method;
                cell.gamma = gamma;
                double sp = 0.0, ss = 0.0, sq = 0.0;
                for (std::size_t i : order) {
                    const CodecResult& cr = results[i].codecs[ci];
                    const auto& best = cr.methods[mi].best[gi];
                    ImageOutcome oc;
                    oc.image = corpus[i].name;
                    oc.codec = label;
                    oc.method = cell.method;
                    oc.gamma = gamma;
                    oc.detectable = cr.ba_watermarked > gamma;
                    oc.evaded = oc.detectable && best.has_value();
                    if (best) {
                        oc.parameter = best->first;
                        oc.psnr = best->second.psnr;
                        oc.ssim = best->second.ssim;
                        oc.q90 = best->second.q90;
                    }
                    if (oc.detectable)
                        ++cell.detectable;
                    if (oc.evaded) {
                        ++cell.evaded;
                        sp += oc.psnr;
                        ss += oc.ssim;
                        sq += oc.q90;
                    }
                    rep.outcomes.push_back(std::move(oc));
                }
                cell.success_rate = cell.detectable ? double(cell.evaded) / cell.detectable : 0.0;
                cell.marker = masking_marker(cell.success_rate, cfg.mask_thresholds);
                if (cell.marker.empty() && cell.evaded > 0) {
                    cell.psnr = sp / cell.evaded;
                    cell.ssim = ss / cell.evaded;
                    cell.q90 = sq / cell.evaded;
                }
                rep.cells.push_back(std::move(cell));
            }
        }
        for (double gamma : cfg.gammas) {
            RateCell rc;
            rc.codec = label;
            rc.gamma = gamma;
            std::size_t tp = 0, fp = 0;
            for (std::size_t i : order) {
                tp += results[i].codecs[ci].ba_watermarked > gamma;
                fp += results[i].codecs[ci].ba_clean > gamma;
            }
            if (!order.empty()) {
                rc.tpr = double(tp) / double(order.size());
                rc.fpr = double(fp) / double(order.size());
            }
            rep.rates.push_back(rc);
        }
    }
    return rep;
}

}  // namespace

// --- config ------------------------------------------------------------------------------

void BenchmarkConfig::validate() const
{
    if (codecs.empty())
        throw ConfigError("benchmark: at least one codec is required");
    std::set<std::string> labels;
    for (const auto& c : codecs) {
        try {
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("benchmark codec: ") + e.what());
        }
        if (!labels.insert(c.describe()).second)
            throw ConfigError("benchmark: duplicate codec '" + c.describe() + "'");
    }
    if (gammas.empty())
        throw ConfigError("benchmark: gamma list is empty");
    for (double g : gammas)
        if (!(g > 0.5 && g <= 1.0))
            throw ConfigError("benchmark: gamma values must lie in (0.5, 1]");
    for (const auto& m : methods) {
        try {
            m.grid.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("benchmark grid: ") + e.what());
        }
        if (m.method == EvasionMethod::Dip && m.grid.hi < 1.0)
            throw ConfigError("benchmark: DIP grid needs at least one iteration");
    }
    if (!(mask_thresholds[0] <= mask_thresholds[1] && mask_thresholds[1] <= mask_thresholds[2]))
        throw ConfigError("benchmark: mask thresholds must be ascending");
    if (parallelism < 1)
        throw ConfigError("benchmark: parallelism must be >= 1");
    if (max_images < 0)
        throw ConfigError("benchmark: max_images must be >= 0");
    try {
        dip.net.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("benchmark dip: ") + e.what());
    }
}

BenchmarkConfig default_benchmark_config()
{
    BenchmarkConfig cfg;
    cfg.codecs = {default_codec(CodecKind::Lsb), default_codec(CodecKind::DwtDctSvd),
                  default_codec(CodecKind::Spectral)};
    for (auto m : {EvasionMethod::Brightness, EvasionMethod::Contrast, EvasionMethod::GaussianNoise,
                   EvasionMethod::Jpeg, EvasionMethod::Blur, EvasionMethod::Dip})
        cfg.methods.push_back({m, default_grid(m)});
    return cfg;
}

BenchmarkConfig parse_benchmark_config(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    check_keys(j,
               {"corpus", "max_images", "codecs", "message_seed", "gammas", "methods", "mask_thresholds", "out",
                "parallelism", "seed", "dip"},
               "config");

    BenchmarkConfig cfg = default_benchmark_config();
    try {
        if (j.contains("corpus"))
            cfg.corpus = j.at("corpus").get<std::string>();
        if (j.contains("out"))
            cfg.out = j.at("out").get<std::string>();
        read(j, "max_images", cfg.max_images, "config");
        read(j, "message_seed", cfg.message_seed, "config");
        read(j, "gammas", cfg.gammas, "config");
        read(j, "mask_thresholds", cfg.mask_thresholds, "config");
        read(j, "parallelism", cfg.parallelism, "config");
        read(j, "seed", cfg.seed, "config");
        if (j.contains("codecs")) {
            cfg.codecs.clear();
            for (const auto& c : j.at("codecs"))
                cfg.codecs.push_back(parse_codec(c));
        }
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j.at("methods"))
                cfg.methods.push_back(parse_method(m));
        }
        if (j.contains("dip")) {
            const json& d = j.at("dip");
            check_keys(d,
                       {"depth", "channels", "skip_channels", "input_channels", "leaky_slope", "lr", "beta1", "beta2",
                        "eps", "psnr_floor"},
                       "dip");
            read(d, "depth", cfg.dip.net.depth, "dip");
            read(d, "channels", cfg.dip.net.channels, "dip");
            read(d, "skip_channels", cfg.dip.net.skip_channels, "dip");
            read(d, "input_channels", cfg.dip.net.input_channels, "dip");
            read(d, "leaky_slope", cfg.dip.net.leaky_slope, "dip");
            read(d, "lr", cfg.dip.adam.lr, "dip");
            read(d, "beta1", cfg.dip.adam.beta1, "dip");
            read(d, "beta2", cfg.dip.adam.beta2, "dip");
            read(d, "eps", cfg.dip.adam.eps, "dip");
            read(d, "psnr_floor", cfg.dip.psnr_floor, "dip");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

BenchmarkConfig load_benchmark_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_benchmark_config(ss.str());
}

std::string to_json(const BenchmarkConfig& cfg)
{
    json j;
    j["corpus"] = cfg.corpus.string();
    j["max_images"] = cfg.max_images;
    j["codecs"] = json::array();
    for (const auto& c : cfg.codecs)
        j["codecs"].push_back(codec_json(c));
    j["message_seed"] = cfg.message_seed;
    j["gammas"] = cfg.gammas;
    j["methods"] = json::array();
    for (const auto& m : cfg.methods)
        j["methods"].push_back(
            {{"method", std::string(to_string(m.method))}, {"lo", m.grid.lo}, {"hi", m.grid.hi}, {"step", m.grid.step}});
    j["mask_thresholds"] = cfg.mask_thresholds;
    j["out"] = cfg.out.string();
    j["parallelism"] = cfg.parallelism;
    j["seed"] = cfg.seed;
    j["dip"] = {{"depth", cfg.dip.net.depth},
                {"channels", cfg.dip.net.channels},
                {"skip_channels", cfg.dip.net.skip_channels},
                {"input_channels", cfg.dip.net.input_channels},
                {"leaky_slope", cfg.dip.net.leaky_slope},
                {"lr", cfg.dip.adam.lr},
                {"beta1", cfg.dip.adam.beta1},
                {"beta2", cfg.dip.adam.beta2},
                {"eps", cfg.dip.adam.eps},
                {"psnr_floor", cfg.dip.psnr_floor}};
    return j.dump(2);
}

// --- corpus ------------------------------------------------------------------------------

std::vector<NamedImage> load_corpus(const std::filesystem::path& dir, int max_images)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw ImageIOError("corpus directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (max_images > 0 && files.size() > static_cast<std::size_t>(max_images))
        files.resize(max_images);
    if (files.empty())
        throw ImageIOError("corpus directory has no images: " + dir.string());
    std::vector<NamedImage> out;
    out.reserve(files.size());
    for (const auto& f : files)
        out.push_back({f.filename().string(), load_image(f)});
    return out;
}

std::uint64_t content_hash(const ImageU8& img)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint8_t b) {
        h ^= b;
        h *= 0x100000001b3ull;
    };
    for (int v : {img.height(), img.width(), img.channels()})
        for (int s = 0; s < 32; s += 8)
            mix(static_cast<std::uint8_t>(v >> s));
    for (std::uint8_t b : img.data())
        mix(b);
    return h;
}

// --- selection and rates ---------------------------------------------------------------

std::optional<std::size_t> best_evasion(std::span<const Candidate> candidates,
                                        const std::function<bool(const ImageU8&)>& detected,
                                        const ImageU8& reference)
{
    return pick_best(
        candidates.size(), [&](std::size_t i) { return detected(candidates[i].image); },
        [&](std::size_t i) { return psnr(candidates[i].image, reference); });
}

std::optional<std::size_t> best_evasion(std::span<const Candidate> candidates, const Message& w,
                                        const CodecConfig& codec, double gamma, const ImageU8& reference)
{
    return best_evasion(
        candidates, [&](const ImageU8& img) { return detect(img, w, codec, gamma).detected; }, reference);
}

Rates tpr_fpr(const CodecConfig& codec, const Message& w, double gamma, std::span<const ImageU8> watermarked,
              std::span<const ImageU8> clean)
{
    if (watermarked.empty() || clean.empty())
        throw std::invalid_argument("tpr_fpr: image sets must be nonempty");
    std::size_t tp = 0, fp = 0;
    for (const auto& img : watermarked)
        tp += detect(img, w, codec, gamma).detected;
    for (const auto& img : clean)
        fp += detect(img, w, codec, gamma).detected;
    return {double(tp) / double(watermarked.size()), double(fp) / double(clean.size())};
}

std::string masking_marker(double rate, const std::array<double, 3>& t)
{
    if (rate < t[0])
        return "<" + std::to_string(static_cast<int>(std::lround(t[0] * 100))) + "%";
    if (rate < t[1])
        return "<" + std::to_string(static_cast<int>(std::lround(t[1] * 100))) + "%";
    if (rate < t[2])
        return "<" + std::to_string(static_cast<int>(std::lround(t[2] * 100))) + "%";
    return "";
}

// --- benchmark ---------------------------------------------------------------------------

SweepReport run_benchmark(const BenchmarkConfig& cfg)
{
    cfg.validate();
    const auto corpus = load_corpus(cfg.corpus, cfg.max_images);
    return run_benchmark(cfg, corpus);
}

SweepReport run_benchmark(const BenchmarkConfig& cfg, std::span<const NamedImage> corpus)
{
    cfg.validate();
    if (corpus.empty())
        throw ConfigError("benchmark: corpus is empty");

    std::vector<Message> messages;
    for (std::size_t ci = 0; ci < cfg.codecs.size(); ++ci)
        messages.push_back(Message::random(cfg.codecs[ci].message_bits, cfg.message_seed));

    std::vector<ImageResult> results(corpus.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mu;
    std::string first_error;

    auto worker = [&] {
        for (;;) {
            if (failed.load())
                return;
            const std::size_t i = next.fetch_add(1);
            if (i >= corpus.size())
                return;
            try {
                results[i] = process_image(corpus[i], cfg, messages);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mu);
                if (!failed.exchange(true))
                    first_error = corpus[i].name + ": " + e.what();
                return;
            }
        }
    };
    const int width = std::min<int>(cfg.parallelism, static_cast<int>(corpus.size()));
    if (width <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < width; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    if (failed) {
        if (!cfg.out.empty()) {
            try {
                emit_report(aggregate(cfg, corpus, results), cfg.out, "report_partial");
            } catch (const std::exception&) {
                // the original failure is the one worth reporting
            }
        }
        throw BenchmarkError("benchmark aborted on " + first_error);
    }
    return aggregate(cfg, corpus, results);
}

}  // namespace wmevade
