#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "stylebalance/config.hpp"
#include "stylebalance/dataset.hpp"
#include "stylebalance/error.hpp"
#include "stylebalance/export.hpp"
#include "stylebalance/pipeline.hpp"
#include "stylebalance/selection.hpp"
#include "stylebalance/style_domain.hpp"
#include "stylebalance/style_transfer.hpp"

namespace py = pybind11;
namespace sb = stylebalance;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

sb::Image to_image(const FloatArray& array) {
    if (array.ndim() != 3 || array.shape(2) != 3) throw std::invalid_argument("expected an HxWx3 array");
    const auto h = static_cast<int>(array.shape(0));
    const auto w = static_cast<int>(array.shape(1));
    std::vector<float> samples(array.data(), array.data() + array.size());
    return sb::Image(w, h, std::move(samples));
}

FloatArray to_array(const sb::Image& image) {
    FloatArray out({image.height(), image.width(), 3});
    std::copy(image.samples().begin(), image.samples().end(), out.mutable_data());
    return out;
}

sb::Ratio ratio_from(const py::object& value) {
    if (py::isinstance<py::tuple>(value)) {
        const auto t = value.cast<std::pair<std::int64_t, std::int64_t>>();
        return sb::Ratio{t.first, t.second};
    }
    return sb::parse_ratio(py::str(value).cast<std::string>());
}

py::dict counts_dict(const sb::ClassDistribution& d) {
    py::dict out;
    for (std::size_t i = 0; i < d.classes().size(); ++i) out[py::str(d.classes()[i])] = d.counts()[i];
    return out;
}

// Dataset from [(id, [labels...], domain)], boxes are placeholders.
sb::Dataset dataset_from(const std::vector<std::string>& vocabulary,
                         const std::vector<std::tuple<std::string, std::vector<std::string>, std::string>>& records) {
    sb::Dataset ds{{}, sb::Vocabulary(vocabulary)};
    for (const auto& [id, labels, domain] : records) {
        sb::ImageRecord r{id, id + ".png", 16, 16, 3, {}, domain.empty() ? std::nullopt : std::optional(domain)};
        for (const auto& l : labels) r.objects.push_back({l, {0, 0, 1, 1}});
        ds.records.push_back(std::move(r));
    }
    sb::validate_dataset(ds);
    return ds;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Class-balancing style augmentation for box-annotated detection datasets";

    py::register_exception<sb::Error>(m, "Error", PyExc_RuntimeError);

    py::class_<sb::BoundingBox>(m, "BoundingBox")
        .def_readonly("xmin", &sb::BoundingBox::xmin)
        .def_readonly("ymin", &sb::BoundingBox::ymin)
        .def_readonly("xmax", &sb::BoundingBox::xmax)
        .def_readonly("ymax", &sb::BoundingBox::ymax)
        .def("__repr__", [](const sb::BoundingBox& b) {
            std::ostringstream s;
            s << "BoundingBox(" << b.xmin << ", " << b.ymin << ", " << b.xmax << ", " << b.ymax << ")";
            return s.str();
        });

    py::class_<sb::ImageRecord>(m, "ImageRecord")
        .def_readonly("id", &sb::ImageRecord::id)
        .def_readonly("width", &sb::ImageRecord::width)
        .def_readonly("height", &sb::ImageRecord::height)
        .def_readonly("domain", &sb::ImageRecord::domain)
        .def_property_readonly("image_path", [](const sb::ImageRecord& r) { return r.image_path.generic_string(); })
        .def_property_readonly("objects", [](const sb::ImageRecord& r) {
            std::vector<std::pair<std::string, sb::BoundingBox>> out;
            for (const auto& o : r.objects) out.emplace_back(o.label, o.box);
            return out;
        });

    m.def(
        "parse_voc",
        [](const std::string& xml, const std::vector<std::string>& vocabulary) {
            return sb::parse_voc_annotation(xml, sb::Vocabulary(vocabulary));
        },
        py::arg("xml"), py::arg("vocabulary") = sb::Vocabulary::urpc().names());
    m.def("serialize_voc", &sb::serialize_voc_annotation);

    m.def(
        "load_dataset",
        [](const std::filesystem::path& root, const std::string& manifest, const std::vector<std::string>& vocabulary) {
            return sb::load_dataset(root, root / manifest, sb::Vocabulary(vocabulary)).records;
        },
        py::arg("root"), py::arg("manifest") = "manifest.txt", py::arg("vocabulary") = sb::Vocabulary::urpc().names());

    m.def(
        "split_sizes",
        [](std::size_t n, const py::object& test_fraction, std::uint64_t seed) {
            sb::Dataset ds{{}, sb::Vocabulary::urpc()};
            for (std::size_t i = 0; i < n; ++i) ds.records.push_back({"r" + std::to_string(i), "", 1, 1, 3, {}, std::nullopt});
            const auto [train, test] = sb::split_dataset(ds, seed, ratio_from(test_fraction));
            return std::pair{train.records.size(), test.records.size()};
        },
        py::arg("n"), py::arg("test_fraction"), py::arg("seed") = 0);

    m.def("to_opponent", &sb::to_opponent);
    m.def("from_opponent", &sb::from_opponent);
    m.def("default_domains", &sb::default_domains);
    m.def(
        "classify_style",
        [](const FloatArray& image) {
            const auto c = sb::classify_style(to_image(image), sb::default_anchors());
            return py::make_tuple(c.domain, c.distance, c.within_tolerance);
        },
        "Nearest default anchor: (domain, distance, within_tolerance).");

    m.def(
        "apply_haze",
        [](const FloatArray& image, const sb::Rgb& airlight, double transmission) {
            return to_array(sb::apply_haze(to_image(image), airlight, transmission));
        },
        py::arg("image"), py::arg("airlight"), py::arg("transmission"));
    m.def(
        "color_transfer",
        [](const FloatArray& image, const FloatArray& style) {
            const std::vector<sb::Image> src{to_image(image)}, tgt{to_image(style)};
            const auto s = sb::compute_style_target(src, "source", {});
            const auto t = sb::compute_style_target(tgt, "target", {});
            const auto r = sb::color_transfer(src[0], s, t);
            return py::make_tuple(to_array(r.image), r.clipped_fraction);
        },
        "Match the opponent-space moments of `image` to those of `style`; returns (image, clipped_fraction).");

    m.def(
        "adversarial_loss",
        [](const std::vector<double>& scores, const std::vector<bool>& real) {
            std::vector<sb::SampleLabel> labels;
            for (bool r : real) labels.push_back(r ? sb::SampleLabel::Real : sb::SampleLabel::Fake);
            return sb::adversarial_loss(scores, labels);
        },
        py::arg("scores"), py::arg("real"));

    m.def(
        "plan",
        [](const std::vector<std::string>& vocabulary,
           const std::vector<std::tuple<std::string, std::vector<std::string>, std::string>>& records,
           const std::vector<std::string>& minority, const py::object& tolerance, int max_copies_per_pair,
           double lambda) {
            const auto ds = dataset_from(vocabulary, records);
            const auto spec = sb::make_minority_spec(ds.vocabulary, minority);
            const auto selected = sb::select_images(ds, spec, lambda);
            sb::DomainPool pools;
            pools.domains = sb::default_domains();
            pools.pools.resize(pools.domains.size());
            const auto plan = sb::plan_augmentation(ds, selected, pools, {ratio_from(tolerance), max_copies_per_pair, 10000});
            py::list jobs;
            for (const auto& j : plan.jobs) jobs.append(py::make_tuple(j.image_id, j.source_domain, j.target_domain, j.copies));
            py::list trace;
            for (const auto& r : plan.objective_trace) trace.append(r.str());
            py::dict out;
            out["jobs"] = jobs;
            out["objective_trace"] = trace;
            out["predicted"] = counts_dict(plan.predicted);
            out["status"] = sb::to_string(plan.status);
            return out;
        },
        py::arg("vocabulary"), py::arg("records"), py::arg("minority"), py::arg("tolerance") = "5/4",
        py::arg("max_copies_per_pair") = 3, py::arg("lambda_") = 1.0,
        "Greedy plan for records given as (id, [labels], domain) tuples.");

    m.def(
        "verify_balance",
        [](const std::filesystem::path& export_root, const py::object& tolerance) {
            const auto report = sb::verify_balance(export_root, ratio_from(tolerance));
            py::dict out;
            out["balanced"] = report.balanced;
            out["ratio"] = report.ratio ? py::cast(report.ratio->value()) : py::none();
            out["counts"] = counts_dict(report.counts);
            return out;
        },
        py::arg("export_root"), py::arg("tolerance") = "5/4");

    // Pipeline stages driven by a config file; each returns (exit_code, report text).
    const auto stage = [&m](const char* name, auto fn) {
        m.def(
            name,
            [fn](const std::filesystem::path& config, const std::map<std::string, std::string>& overrides) {
                auto c = sb::load_run_config(config);
                for (const auto& [k, v] : overrides) sb::apply_config_value(c, k, v);
                std::ostringstream out;
                const int code = fn(c, out);
                return py::make_tuple(code, out.str());
            },
            py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{});
    };
    stage("ingest", [](const sb::RunConfig& c, std::ostream& o) { sb::run_ingest(c, o); return sb::kExitOk; });
    stage("run_plan", [](const sb::RunConfig& c, std::ostream& o) { return sb::run_plan(c, o).exit_code; });
    stage("generate", [](const sb::RunConfig& c, std::ostream& o) { return sb::run_generate(c, o).exit_code; });
    stage("export", [](const sb::RunConfig& c, std::ostream& o) { return sb::run_export(c, o).exit_code; });
}
