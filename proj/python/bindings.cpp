#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "scriptbench/corpus.hpp"
#include "scriptbench/error.hpp"
#include "scriptbench/format.hpp"
#include "scriptbench/judge.hpp"
#include "scriptbench/metrics.hpp"
#include "scriptbench/pipeline.hpp"
#include "scriptbench/stats.hpp"
#include "scriptbench/text.hpp"

namespace py = pybind11;
using namespace scriptbench;
using nlohmann::json;

// Structured values cross the boundary as JSON text; the Python wrapper
// decodes them into dicts.
namespace {

std::string features_json(const format::StructuralFeatures& f) { return json(f).dump(); }

format::StructuralFeatures features_from(const std::string& s) {
  return json::parse(s).get<format::StructuralFeatures>();
}

std::string compare(const std::vector<double>& a, const std::vector<double>& b, const std::string& name) {
  if (a.size() != b.size()) throw InputError("paired lists differ in length");
  std::vector<stats::ScoredSample> sa, sb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa.push_back({"x", static_cast<int>(i), true, true, {{name, a[i]}}});
    sb.push_back({"x", static_cast<int>(i), true, true, {{name, b[i]}}});
  }
  return json(stats::compare_metric(stats::align_pairs(sa, sb), name)).dump();
}

std::string run_pipeline(const std::string& config, const std::string& input, const std::string& out,
                         const std::string& run_id, int workers) {
  pipeline::RunOptions o;
  o.out_dir = out;
  o.run_id = run_id;
  o.workers = workers;
  std::ostringstream log;
  o.log = &log;
  pipeline::Run run(pipeline::RunConfig::load(config), o);
  run.run_all(input);
  return run.dir().string();
}

}  // namespace

PYBIND11_MODULE(_scriptbench, m) {
  auto base = py::register_exception<Error>(m, "ScriptbenchError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<EncodingError>(m, "EncodingError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<DependencyError>(m, "DependencyError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<VerdictError>(m, "VerdictError", base.ptr());
  py::register_exception<StatsError>(m, "StatsError", base.ptr());

  m.def("char_count", [](const std::string& s) { return text::char_count(s); });
  m.def("clean_text", [](const std::string& raw) { return corpus::clean_text(raw); });
  m.def("split_halves", [](const std::string& t, double ratio) {
    auto h = corpus::split_halves(t, ratio);
    return py::make_tuple(h.upper, h.lower);
  }, py::arg("text"), py::arg("ratio") = 0.5);

  m.def("_detect_profile", [](const std::string& t) { return json(format::detect_profile(t)).dump(); });
  m.def("_render_contract", [](const std::string& profile) {
    return format::render_contract(json::parse(profile).get<format::FormatProfile>());
  });
  m.def("_extract_features", [](const std::string& t, const std::string& profile) {
    return features_json(format::extract_features(t, json::parse(profile).get<format::FormatProfile>()));
  });

  m.def("tokenize", [](const std::string& t, const std::string& mode) {
    return metrics::tokenize(t, metrics::tokenizer_mode_from_string(mode));
  }, py::arg("text"), py::arg("mode") = "cjk_words");
  m.def("lcs_length", &metrics::lcs_length);
  m.def("rouge_l", [](const std::vector<std::string>& gen, const std::vector<std::string>& ref) {
    const auto r = metrics::rouge_l(gen, ref);
    return py::dict(py::arg("precision") = r.precision, py::arg("recall") = r.recall,
                    py::arg("f1") = r.f1, py::arg("lcs_len") = r.lcs_len);
  });
  m.def("_structural_similarity", [](const std::string& gen, const std::string& ref) {
    return metrics::structural_similarity(features_from(gen), features_from(ref));
  });
  m.def("composite", [](double rouge, double sim, double overall) {
    return metrics::composite(rouge, sim, overall);
  });

  m.def("effect_band", [](double d) { return stats::to_string(stats::effect_band(d)); });
  m.def("shapiro_wilk", [](const std::vector<double>& v) {
    const auto r = stats::shapiro_wilk(v);
    return py::make_tuple(r.w, r.p);
  });
  m.def("_compare", &compare);

  m.def("_parse_verdict", [](const std::string& reply) {
    return judge::verdict_to_json(judge::parse_verdict(reply)).dump();
  });

  m.def("_run_pipeline", &run_pipeline);
}
