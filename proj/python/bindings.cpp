#include "wmevade/baselines.hpp"
#include "wmevade/codecs.hpp"
#include "wmevade/dip.hpp"
#include "wmevade/harness.hpp"
#include "wmevade/image.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace wmevade;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, C) uint8 array to an image, copying.
ImageU8 to_image(const U8Array& a)
{
    if (a.ndim() != 2 && a.ndim() != 3)
        throw ShapeError("expected an array of shape (H, W) or (H, W, C)");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    ImageU8 img(h, w, c);
    std::memcpy(img.samples().data(), a.data(), img.size());
    return img;
}

U8Array to_array(const ImageU8& img)
{
    std::vector<py::ssize_t> shape{img.height(), img.width()};
    if (img.channels() != 1)
        shape.push_back(img.channels());
    U8Array out(shape);
    std::memcpy(out.mutable_data(), img.samples().data(), img.size());
    return out;
}

py::dict record_dict(const dip::TraceRecord& r)
{
    py::dict d;
    d["iteration"] = r.iteration;
    d["loss"] = r.loss;
    d["psnr"] = r.psnr_vs_watermarked;
    d["psnr_clean"] = r.psnr_vs_clean ? py::cast(*r.psnr_vs_clean) : py::none();
    d["bit_accuracy"] = r.bit_accuracy ? py::cast(*r.bit_accuracy) : py::none();
    d["detected"] = r.detected ? py::cast(*r.detected) : py::none();
    if (r.fbe)
        d["fbe"] = std::vector<double>(r.fbe->values.begin(), r.fbe->values.end());
    else
        d["fbe"] = py::none();
    d["image"] = r.snapshot ? py::object(to_array(*r.snapshot)) : py::none();
    return d;
}

py::object optional_value(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Watermark embedding, detection and evasion benchmarks on 8-bit images.";

    py::register_exception<CodecError>(m, "CodecError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ImageIOError>(m, "ImageIOError", PyExc_OSError);
    py::register_exception<BenchmarkError>(m, "BenchmarkError", PyExc_RuntimeError);
    py::register_exception<dip::DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

    py::enum_<CodecKind>(m, "CodecKind")
        .value("LSB", CodecKind::Lsb)
        .value("DWTDCTSVD", CodecKind::DwtDctSvd)
        .value("SPECTRAL", CodecKind::Spectral);

    py::enum_<EvasionMethod>(m, "EvasionMethod")
        .value("BRIGHTNESS", EvasionMethod::Brightness)
        .value("CONTRAST", EvasionMethod::Contrast)
        .value("NOISE", EvasionMethod::GaussianNoise)
        .value("JPEG", EvasionMethod::Jpeg)
        .value("BLUR", EvasionMethod::Blur)
        .value("DIP", EvasionMethod::Dip);

    py::class_<CodecConfig>(m, "CodecConfig")
        .def(py::init([](const std::string& kind) { return default_codec(parse_codec_kind(kind)); }),
             py::arg("kind") = "dwtdctsvd")
        .def_readwrite("kind", &CodecConfig::kind)
        .def_readwrite("strength", &CodecConfig::strength)
        .def_readwrite("band", &CodecConfig::band)
        .def_readwrite("seed", &CodecConfig::seed)
        .def_readwrite("message_bits", &CodecConfig::message_bits)
        .def_readwrite("redundancy", &CodecConfig::redundancy)
        .def("validate", &CodecConfig::validate)
        .def("describe", &CodecConfig::describe)
        .def("__repr__", [](const CodecConfig& c) { return "<CodecConfig " + c.describe() + ">"; });

    m.def("random_message", [](int n, std::uint64_t seed) { return Message::random(n, seed).bits(); },
          py::arg("n") = kDefaultMessageBits, py::arg("seed") = 0);
    m.def("message_from_hex", [](const std::string& hex) { return Message::from_hex(hex).bits(); });
    m.def("message_to_hex", [](std::vector<std::uint8_t> bits) { return Message(std::move(bits)).to_hex(); });

    m.def(
        "embed",
        [](const U8Array& img, std::vector<std::uint8_t> bits, const CodecConfig& codec) {
            return to_array(embed(to_image(img), Message(std::move(bits)), codec));
        },
        py::arg("image"), py::arg("message"), py::arg("codec"));
    m.def(
        "decode", [](const U8Array& img, const CodecConfig& codec) { return decode(to_image(img), codec).bits(); },
        py::arg("image"), py::arg("codec"));
    m.def(
        "detect",
        [](const U8Array& img, std::vector<std::uint8_t> bits, const CodecConfig& codec, double gamma) {
            const DetectionResult r = detect(to_image(img), Message(std::move(bits)), codec, gamma);
            py::dict d;
            d["bit_accuracy"] = r.bit_accuracy;
            d["detected"] = r.detected;
            d["gamma"] = r.gamma;
            d["decode_failed"] = r.decode_failed;
            return d;
        },
        py::arg("image"), py::arg("message"), py::arg("codec"), py::arg("gamma") = 0.75);

    m.def("psnr", [](const U8Array& a, const U8Array& b) { return psnr(to_image(a), to_image(b)); });
    m.def("ssim", [](const U8Array& a, const U8Array& b) { return ssim(to_image(a), to_image(b)); });
    m.def("quantile_diff", [](const U8Array& a, const U8Array& b, double q) {
        return quantile_diff(to_image(a), to_image(b), q);
    });

    m.def("load_image", [](const std::filesystem::path& p) { return to_array(load_image(p)); });
    m.def("save_image", [](const U8Array& img, const std::filesystem::path& p) { save_image(to_image(img), p); });

    m.def(
        "apply_baseline",
        [](const std::string& method, const U8Array& img, double parameter, std::uint64_t seed) {
            return to_array(apply_baseline(parse_evasion_method(method), to_image(img), parameter, seed));
        },
        py::arg("method"), py::arg("image"), py::arg("parameter"), py::arg("seed") = 0);

    m.def(
        "best_evasion",
        [](const std::vector<U8Array>& candidates, const U8Array& reference, std::vector<std::uint8_t> bits,
           const CodecConfig& codec, double gamma) {
            std::vector<Candidate> cands;
            for (std::size_t i = 0; i < candidates.size(); ++i)
                cands.push_back({double(i), to_image(candidates[i])});
            return best_evasion(cands, Message(std::move(bits)), codec, gamma, to_image(reference));
        },
        py::arg("candidates"), py::arg("reference"), py::arg("message"), py::arg("codec"), py::arg("gamma") = 0.75);

    m.def(
        "run_evasion",
        [](const U8Array& watermarked, int iterations, int stride, std::uint64_t seed, std::optional<U8Array> clean,
           std::optional<std::vector<std::uint8_t>> message, std::optional<CodecConfig> codec, double gamma,
           bool fbe, bool snapshots, double lr) {
            const ImageU8 target = to_image(watermarked);
            dip::EvasionOptions opt;
            opt.iterations = iterations;
            opt.record_stride = stride;
            opt.record_fbe = fbe;
            opt.keep_snapshots = snapshots;
            opt.adam.lr = lr;
            if (clean)
                opt.clean = to_image(*clean);
            if (message && codec)
                opt.detector = dip::Detector{Message(std::move(*message)), *codec, gamma};
            else if (message || codec)
                throw std::invalid_argument("run_evasion: message and codec must be given together");
            dip::NetConfig net;
            net.seed = seed;
            dip::EvasionTrace trace;
            {
                py::gil_scoped_release release;
                trace = dip::run_evasion(target, net, opt);
            }
            py::list out;
            for (const auto& r : trace.records)
                out.append(record_dict(r));
            return out;
        },
        py::arg("watermarked"), py::arg("iterations") = 500, py::arg("stride") = 10, py::arg("seed") = 0,
        py::arg("clean") = py::none(), py::arg("message") = py::none(), py::arg("codec") = py::none(),
        py::arg("gamma") = 0.75, py::arg("fbe") = false, py::arg("snapshots") = false, py::arg("lr") = 0.01);

    m.def(
        "run_benchmark",
        [](const std::string& config_json) {
            const BenchmarkConfig cfg = parse_benchmark_config(config_json);
            SweepReport rep;
            {
                py::gil_scoped_release release;
                rep = run_benchmark(cfg);
                if (!cfg.out.empty())
                    emit_report(rep, cfg.out);
            }
            py::list cells, rates, outcomes;
            for (const auto& c : rep.cells) {
                py::dict d;
                d["codec"] = c.codec;
                d["method"] = std::string(to_string(c.method));
                d["gamma"] = c.gamma;
                d["detectable"] = c.detectable;
                d["evaded"] = c.evaded;
                d["success_rate"] = c.success_rate;
                d["marker"] = c.marker;
                d["psnr"] = optional_value(c.psnr);
                d["ssim"] = optional_value(c.ssim);
                d["q90"] = optional_value(c.q90);
                cells.append(d);
            }
            for (const auto& r : rep.rates) {
                py::dict d;
                d["codec"] = r.codec;
                d["gamma"] = r.gamma;
                d["tpr"] = r.tpr;
                d["fpr"] = r.fpr;
                rates.append(d);
            }
            for (const auto& o : rep.outcomes) {
                py::dict d;
                d["image"] = o.image;
                d["codec"] = o.codec;
                d["method"] = std::string(to_string(o.method));
                d["gamma"] = o.gamma;
                d["detectable"] = o.detectable;
                d["evaded"] = o.evaded;
                d["parameter"] = o.parameter;
                d["psnr"] = o.psnr;
                d["ssim"] = o.ssim;
                d["q90"] = o.q90;
                outcomes.append(d);
            }
            py::dict out;
            out["cells"] = cells;
            out["rates"] = rates;
            out["outcomes"] = outcomes;
            return out;
        },
        py::arg("config_json"));
    m.def("default_config_json", [] { return to_json(default_benchmark_config()); });
}
