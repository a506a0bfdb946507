#include "wmevade/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace wmevade {

using nlohmann::json;

namespace {

std::string num(double v, int precision)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string num(const std::optional<double>& v, int precision) { return v ? num(*v, precision) : std::string(); }

json num_json(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

json num_json(const std::optional<double>& v) { return v ? num_json(*v) : json(nullptr); }

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path)
{
    os.flush();
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

constexpr const char* kReportHeader = "kind,codec,method,gamma,detectable,evaded,success_rate,marker,psnr,ssim,q90,tpr,fpr";

}  // namespace

void write_report_csv(const SweepReport& report, std::ostream& os)
{
    os << kReportHeader << '\n';
    for (const auto& c : report.cells) {
        os << "evasion," << c.codec << ',' << to_string(c.method) << ',' << num(c.gamma, 2) << ',' << c.detectable
           << ',' << c.evaded << ',' << num(c.success_rate, 4) << ',' << c.marker << ',' << num(c.psnr, 4) << ','
           << num(c.ssim, 4) << ',' << num(c.q90, 4) << ",,\n";
    }
    for (const auto& r : report.rates) {
        os << "rates," << r.codec << ",," << num(r.gamma, 2) << ",,,,,,,," << num(r.tpr, 4) << ',' << num(r.fpr, 4)
           << '\n';
    }
}

void write_outcomes_csv(const SweepReport& report, std::ostream& os)
{
    os << "image,codec,method,gamma,detectable,evaded,parameter,psnr,ssim,q90\n";
    for (const auto& o : report.outcomes) {
        os << o.image << ',' << o.codec << ',' << to_string(o.method) << ',' << num(o.gamma, 2) << ','
           << int(o.detectable) << ',' << int(o.evaded) << ',';
        if (o.evaded)
            os << num(o.parameter, 4) << ',' << num(o.psnr, 4) << ',' << num(o.ssim, 4) << ',' << num(o.q90, 4);
        else
            os << ",,,";
        os << '\n';
    }
}

void emit_report(const SweepReport& report, const std::filesystem::path& dir, const std::string& stem)
{
    std::filesystem::create_directories(dir);

    const auto csv_path = dir / (stem + ".csv");
    auto csv = open_out(csv_path);
    write_report_csv(report, csv);
    finish(csv, csv_path);

    json j;
    j["cells"] = json::array();
    for (const auto& c : report.cells)
        j["cells"].push_back({{"codec", c.codec},
                              {"method", std::string(to_string(c.method))},
                              {"gamma", c.gamma},
                              {"detectable", c.detectable},
                              {"evaded", c.evaded},
                              {"success_rate", c.success_rate},
                              {"marker", c.marker},
                              {"psnr", num_json(c.psnr)},
                              {"ssim", num_json(c.ssim)},
                              {"q90", num_json(c.q90)}});
    j["rates"] = json::array();
    for (const auto& r : report.rates)
        j["rates"].push_back({{"codec", r.codec}, {"gamma", r.gamma}, {"tpr", r.tpr}, {"fpr", r.fpr}});
    const auto json_path = dir / (stem + ".json");
    auto js = open_out(json_path);
    js << j.dump(2) << '\n';
    finish(js, json_path);

    const std::string outcome_stem = stem == "report" ? std::string("outcomes") : stem + "_outcomes";
    const auto out_path = dir / (outcome_stem + ".csv");
    auto oc = open_out(out_path);
    write_outcomes_csv(report, oc);
    finish(oc, out_path);
}

void write_trace_jsonl(const dip::EvasionTrace& trace, std::ostream& os)
{
    for (const auto& r : trace.records) {
        json j;
        j["iter"] = r.iteration;
        j["loss"] = num_json(r.loss);
        j["psnr"] = num_json(r.psnr_vs_watermarked);
        j["psnr_clean"] = num_json(r.psnr_vs_clean);
        j["ba"] = num_json(r.bit_accuracy);
        j["detected"] = r.detected ? json(*r.detected) : json(nullptr);
        if (r.fbe) {
            j["fbe"] = json::array();
            for (double v : r.fbe->values)
                j["fbe"].push_back(num_json(v));
        } else {
            j["fbe"] = nullptr;
        }
        os << j.dump() << '\n';
    }
}

void write_trace_csv(const dip::EvasionTrace& trace, std::ostream& os)
{
    os << "iter,psnr_vs_Iw,psnr_vs_clean,BA\n";
    for (const auto& r : trace.records)
        os << r.iteration << ',' << num(r.psnr_vs_watermarked, 4) << ',' << num(r.psnr_vs_clean, 4) << ','
           << num(r.bit_accuracy, 5) << '\n';
}

void emit_trajectories(const dip::EvasionTrace& trace, const std::filesystem::path& dir, const std::string& stem,
                       bool snapshots)
{
    std::filesystem::create_directories(dir);
    const auto jl_path = dir / (stem + ".jsonl");
    auto jl = open_out(jl_path);
    write_trace_jsonl(trace, jl);
    finish(jl, jl_path);

    const auto csv_path = dir / (stem + ".csv");
    auto csv = open_out(csv_path);
    write_trace_csv(trace, csv);
    finish(csv, csv_path);

    if (!snapshots)
        return;
    for (const auto& r : trace.records) {
        if (!r.snapshot)
            continue;
        char name[32];
        std::snprintf(name, sizeof name, "_iter%04d.png", r.iteration);
        save_image(*r.snapshot, dir / (stem + name));
    }
}

}  // namespace wmevade
