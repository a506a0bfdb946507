#include "support.hpp"

#include "wmevade/harness.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

using namespace wmevade;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<NamedImage> small_corpus(int n)
{
    std::vector<NamedImage> out;
    for (int i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "desk_%03d.png", i);
        out.push_back({name, testing::desk_image(i)});
    }
    return out;
}

BenchmarkConfig cheap_config()
{
    BenchmarkConfig cfg = default_benchmark_config();
    cfg.codecs = {default_codec(CodecKind::Lsb)};
    cfg.gammas = {0.65, 0.85};
    cfg.methods = {{EvasionMethod::Brightness, default_grid(EvasionMethod::Brightness)},
                   {EvasionMethod::Jpeg, default_grid(EvasionMethod::Jpeg)}};
    return cfg;
}

}  // namespace

TEST_CASE("best_evasion on a hand-built candidate set")
{
    // Five candidates; PSNR against the reference grows with the offset index
    // reversed, and detection is read off a lookup by first sample value.
    const ImageU8 ref(4, 4, 1, std::uint8_t{100});
    std::vector<Candidate> cands;
    const int offsets[] = {9, 3, 1, 3, 20};
    for (int i = 0; i < 5; ++i)
        cands.push_back({double(i), ImageU8(4, 4, 1, static_cast<std::uint8_t>(100 + offsets[i]))});
    // PSNRs: offset 1 > 3 = 3 > 9 > 20.

    auto detected_if = [](std::set<int> flagged) {
        return [flagged](const ImageU8& img) { return flagged.count(img.samples()[0] - 100) > 0; };
    };
    CHECK_FALSE(best_evasion(cands, detected_if({9, 3, 1, 20}), ref).has_value());
    CHECK(best_evasion(cands, detected_if({9, 3, 1}), ref) == std::optional<std::size_t>(4));
    CHECK(best_evasion(cands, detected_if({}), ref) == std::optional<std::size_t>(2));
    CHECK(best_evasion(cands, detected_if({1}), ref) == std::optional<std::size_t>(1));  // tie: earliest
    CHECK(best_evasion(std::span<const Candidate>{}, detected_if({}), ref) == std::nullopt);
}

TEST_CASE("best_evasion matches brute force on random sets")
{
    Rng rng(2024);
    for (int t = 0; t < 100; ++t) {
        const ImageU8 ref = testing::random_image(6, 6, 1, 50 + t);
        const std::size_t n = 1 + rng.below(12);
        std::vector<Candidate> cands;
        std::vector<bool> flag;
        for (std::size_t i = 0; i < n; ++i) {
            ImageU8 img = ref;
            const int changes = static_cast<int>(rng.below(4));
            for (int k = 0; k < changes; ++k)
                img.samples()[rng.below(img.size())] ^= static_cast<std::uint8_t>(1 + rng.below(8));
            cands.push_back({double(i), std::move(img)});
            flag.push_back(rng.below(3) == 0);
        }
        std::size_t calls = 0;
        auto detected = [&](const ImageU8& img) {
            for (std::size_t i = 0; i < n; ++i)
                if (&cands[i].image == &img)
                    return bool(flag[i]);
            ++calls;
            return true;
        };
        std::optional<std::size_t> brute;
        for (std::size_t i = 0; i < n; ++i)
            if (!flag[i] && (!brute || psnr(cands[i].image, ref) > psnr(cands[*brute].image, ref)))
                brute = i;
        CHECK(best_evasion(cands, detected, ref) == brute);
        CHECK(calls == 0);
    }
}

TEST_CASE("TPR and FPR")
{
    const auto corpus = small_corpus(8);
    const CodecConfig codec = default_codec(CodecKind::DwtDctSvd);
    const Message w = Message::random(32, 1);
    std::vector<ImageU8> clean, marked;
    for (const auto& item : corpus) {
        clean.push_back(item.image);
        marked.push_back(embed(item.image, w, codec));
    }
    const Rates r = tpr_fpr(codec, w, 0.75, marked, clean);
    CHECK(r.tpr == 1.0);
    CHECK(r.fpr <= 0.25);
    CHECK(tpr_fpr(codec, w, 1.0, marked, clean).fpr == 0.0);
    double prev_t = 2, prev_f = 2;
    for (double g : {0.55, 0.65, 0.75, 0.85, 1.0}) {
        const Rates x = tpr_fpr(codec, w, g, marked, clean);
        CHECK(x.tpr <= prev_t);
        CHECK(x.fpr <= prev_f);
        prev_t = x.tpr;
        prev_f = x.fpr;
    }
    CHECK_THROWS(tpr_fpr(codec, w, 0.75, {}, clean));
}

TEST_CASE("masking markers")
{
    const std::array<double, 3> t{0.10, 0.75, 0.90};
    CHECK(masking_marker(0.05, t) == "<10%");
    CHECK(masking_marker(0.5, t) == "<75%");
    CHECK(masking_marker(0.89, t) == "<90%");
    CHECK(masking_marker(0.90, t) == "");
    CHECK(masking_marker(1.0, t) == "");
}

TEST_CASE("config parsing")
{
    const BenchmarkConfig d = parse_benchmark_config("{}");
    CHECK(d.gammas == std::vector<double>{0.55, 0.65, 0.75, 0.85});
    CHECK(d.codecs.size() == 3);
    CHECK(d.methods.size() == 6);

    const BenchmarkConfig c = parse_benchmark_config(R"({
        "corpus": "imgs", "max_images": 4, "seed": 9, "parallelism": 2,
        "codecs": ["lsb", {"kind": "spectral", "band": 1}],
        "methods": ["jpeg", {"method": "noise", "lo": 0.1, "hi": 0.3, "step": 0.1}],
        "gammas": [0.75],
        "dip": {"lr": 0.02, "channels": 16}
    })");
    CHECK(c.corpus == "imgs");
    CHECK(c.codecs[1].band == 1);
    CHECK(c.codecs[1].strength == default_codec(CodecKind::Spectral).strength);
    CHECK(c.methods[1].grid.points() == 3);
    CHECK(c.dip.adam.lr == 0.02);
    CHECK(c.dip.net.channels == 16);

    const BenchmarkConfig round = parse_benchmark_config(to_json(c));
    CHECK(to_json(round) == to_json(c));

    CHECK_THROWS_AS(parse_benchmark_config(R"({"gamma": [0.7]})"), ConfigError);
    CHECK_THROWS_AS(parse_benchmark_config(R"({"gammas": [0.5]})"), ConfigError);
    CHECK_THROWS_AS(parse_benchmark_config(R"({"codecs": ["lsb", "lsb"]})"), ConfigError);
    CHECK_THROWS_AS(parse_benchmark_config(R"({"codecs": ["nope"]})"), ConfigError);
    CHECK_THROWS_AS(parse_benchmark_config(R"({"methods": [{"method": "jpeg", "step": 0}]})"), ConfigError);
    CHECK_THROWS_AS(parse_benchmark_config("{not json"), ConfigError);
}

TEST_CASE("benchmark report cardinality and determinism")
{
    const auto corpus = small_corpus(4);
    const BenchmarkConfig cfg = cheap_config();
    const SweepReport rep = run_benchmark(cfg, corpus);
    CHECK(rep.cells.size() == 4);
    CHECK(rep.rates.size() == 2);
    CHECK(rep.outcomes.size() == 4 * 4);
    for (const auto& r : rep.rates)
        CHECK(r.tpr == 1.0);
    for (const auto& c : rep.cells) {
        CHECK(c.success_rate >= 0.0);
        CHECK(c.success_rate <= 1.0);
        if (!c.marker.empty())
            CHECK_FALSE(c.psnr.has_value());
    }

    // Permuting the corpus and changing the worker count leaves the report unchanged.
    auto shuffled = corpus;
    std::reverse(shuffled.begin(), shuffled.end());
    BenchmarkConfig wide = cfg;
    wide.parallelism = 3;
    std::ostringstream a, b;
    write_report_csv(rep, a);
    write_report_csv(run_benchmark(wide, shuffled), b);
    CHECK(a.str() == b.str());

    const auto dir = testing::scratch_dir("report");
    emit_report(rep, dir / "one");
    emit_report(rep, dir / "two");
    CHECK(slurp(dir / "one" / "report.csv") == slurp(dir / "two" / "report.csv"));
    CHECK(slurp(dir / "one" / "report.json") == slurp(dir / "two" / "report.json"));
    CHECK(slurp(dir / "one" / "outcomes.csv") == slurp(dir / "two" / "outcomes.csv"));
}

TEST_CASE("empty report is header only")
{
    std::ostringstream os;
    write_report_csv(SweepReport{}, os);
    CHECK(os.str() == "kind,codec,method,gamma,detectable,evaded,success_rate,marker,psnr,ssim,q90,tpr,fpr\n");
}

TEST_CASE("benchmark aborts with a partial report")
{
    auto corpus = small_corpus(2);
    corpus.push_back({"zz_tiny.png", testing::random_image(8, 8, 3, 1)});  // too small for the codec
    BenchmarkConfig cfg = cheap_config();
    const auto dir = testing::scratch_dir("partial");
    cfg.out = dir;
    CHECK_THROWS_AS(run_benchmark(cfg, corpus), BenchmarkError);
    CHECK(std::filesystem::exists(dir / "report_partial.csv"));
}

TEST_CASE("load_corpus sorts and truncates")
{
    const auto corpus = load_corpus(testing::desk_dir(), 5);
    REQUIRE(corpus.size() == 5);
    CHECK(corpus.front().name == "desk_000.png");
    CHECK(corpus.back().name == "desk_004.png");
    CHECK(load_corpus(testing::desk_dir()).size() == 64);
    CHECK_THROWS_AS(load_corpus(testing::desk_dir() / "nope"), ImageIOError);
}

TEST_CASE("trajectory emission writes one row per record")
{
    const ImageU8 img = testing::desk_image(9);
    dip::EvasionOptions opt;
    opt.iterations = 30;
    opt.record_stride = 10;
    opt.record_fbe = true;
    opt.clean = img;
    const auto trace = dip::run_evasion(img, dip::NetConfig{}, opt);
    const auto dir = testing::scratch_dir("traj");
    emit_trajectories(trace, dir, "t", true);

    std::ifstream csv(dir / "t.csv");
    std::string line;
    int rows = -1;
    while (std::getline(csv, line))
        ++rows;
    CHECK(rows == 3);
    std::ifstream jl(dir / "t.jsonl");
    int lines = 0;
    while (std::getline(jl, line)) {
        CHECK(line.find("\"fbe\":[") != std::string::npos);
        ++lines;
    }
    CHECK(lines == 3);
    CHECK(std::filesystem::exists(dir / "t_iter0030.png"));
}
