#pragma once

#include "wmevade/baselines.hpp"
#include "wmevade/codecs.hpp"
#include "wmevade/dip.hpp"
#include "wmevade/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wmevade {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct MethodSpec {
    EvasionMethod method = EvasionMethod::Dip;
    SweepGrid grid;
};

/// DIP settings used by the benchmark. The DIP grid maps to iterations =
/// floor(grid.hi) recorded every grid.step iterations.
struct DipSettings {
    dip::NetConfig net;
    dip::AdamConfig adam;
    double psnr_floor = 0.0;  // proxy-quality floor for detector queries
};

struct BenchmarkConfig {
    std::filesystem::path corpus;
    int max_images = 0;  // 0 keeps every image; otherwise the first N by name
    std::vector<CodecConfig> codecs;
    std::uint64_t message_seed = 1;
    std::vector<double> gammas{0.55, 0.65, 0.75, 0.85};
    std::vector<MethodSpec> methods;
    std::array<double, 3> mask_thresholds{0.10, 0.75, 0.90};
    std::filesystem::path out;
    int parallelism = 1;
    std::uint64_t seed = 0;
    DipSettings dip;

    void validate() const;
};

/// Defaults: the three codecs at default strength, every evasion method on
/// its default grid, gammas {0.55, 0.65, 0.75, 0.85}.
BenchmarkConfig default_benchmark_config();

/// Reads a JSON document; absent keys keep the defaults above. Throws
/// ConfigError on unknown keys, wrong types or invalid values.
BenchmarkConfig parse_benchmark_config(std::string_view json_text);
BenchmarkConfig load_benchmark_config(const std::filesystem::path& path);
std::string to_json(const BenchmarkConfig& cfg);

struct NamedImage {
    std::string name;
    ImageU8 image;
};

/// PNG/PPM/PGM files of `dir`, sorted by file name, truncated to max_images.
std::vector<NamedImage> load_corpus(const std::filesystem::path& dir, int max_images = 0);

/// Among the undetected candidates, the index of the one with the highest PSNR
/// against `reference`; ties keep the earliest. Empty when every candidate is
/// detected.
std::optional<std::size_t> best_evasion(std::span<const Candidate> candidates,
                                        const std::function<bool(const ImageU8&)>& detected,
                                        const ImageU8& reference);
std::optional<std::size_t> best_evasion(std::span<const Candidate> candidates, const Message& w,
                                        const CodecConfig& codec, double gamma, const ImageU8& reference);

struct Rates {
    double tpr = 0.0;
    double fpr = 0.0;
};

/// TPR over `watermarked`, FPR over `clean`, both scored against the fixed w.
Rates tpr_fpr(const CodecConfig& codec, const Message& w, double gamma, std::span<const ImageU8> watermarked,
              std::span<const ImageU8> clean);

/// "", "<90%", "<75%" or "<10%" for the tightest threshold the rate falls below.
std::string masking_marker(double success_rate, const std::array<double, 3>& thresholds);

struct MethodCell {
    std::string codec;
    EvasionMethod method = EvasionMethod::Dip;
    double gamma = 0.0;
    int detectable = 0;  // images detected before evasion
    int evaded = 0;
    double success_rate = 0.0;
    std::string marker;
    // Means over evaded images against the clean image; empty for masked cells.
    std::optional<double> psnr, ssim, q90;
};

struct RateCell {
    std::string codec;
    double gamma = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

/// Best evasion of one watermarked image under one (codec, method, gamma).
struct ImageOutcome {
    std::string image;
    std::string codec;
    EvasionMethod method = EvasionMethod::Dip;
    double gamma = 0.0;
    bool detectable = false;
    bool evaded = false;
    double parameter = 0.0;
    double psnr = 0.0;  // against the clean image
    double ssim = 0.0;
    double q90 = 0.0;
};

struct SweepReport {
    std::vector<MethodCell> cells;
    std::vector<RateCell> rates;
    std::vector<ImageOutcome> outcomes;
};

class BenchmarkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs the full protocol on the corpus named by cfg.corpus.
SweepReport run_benchmark(const BenchmarkConfig& cfg);
/// Same, on an explicit corpus. The report does not depend on corpus order.
/// When an image pipeline fails and cfg.out is set, the images finished so
/// far are written as a partial report before BenchmarkError is thrown.
SweepReport run_benchmark(const BenchmarkConfig& cfg, std::span<const NamedImage> corpus);

/// report.csv, report.json and outcomes.csv under `dir` (created if needed);
/// `stem` replaces "report"/"outcomes" prefixes when given.
void emit_report(const SweepReport& report, const std::filesystem::path& dir, const std::string& stem = "report");
void write_report_csv(const SweepReport& report, std::ostream& os);
void write_outcomes_csv(const SweepReport& report, std::ostream& os);

/// <stem>.jsonl (one record per line), <stem>.csv with columns
/// iter,psnr_vs_Iw,psnr_vs_clean,BA, and <stem>_iter<NNNN>.png for every
/// record that kept a snapshot when `snapshots` is set.
void emit_trajectories(const dip::EvasionTrace& trace, const std::filesystem::path& dir, const std::string& stem,
                       bool snapshots = false);
void write_trace_jsonl(const dip::EvasionTrace& trace, std::ostream& os);
void write_trace_csv(const dip::EvasionTrace& trace, std::ostream& os);

/// 64-bit FNV-1a over shape and samples; seeds per-image randomness.
std::uint64_t content_hash(const ImageU8& img);

}  // namespace wmevade
