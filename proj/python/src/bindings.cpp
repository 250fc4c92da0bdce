#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "curator/analytics.hpp"
#include "curator/curation.hpp"
#include "curator/mutual_attribution.hpp"
#include "curator/rationale_parse.hpp"
#include "curator/self_attribution.hpp"

namespace py = pybind11;
using namespace curator;
using nlohmann::json;

namespace {

py::object to_python(const json& value) { return py::module_::import("json").attr("loads")(value.dump()); }

json from_python(const py::handle& value) {
    return json::parse(py::module_::import("json").attr("dumps")(value).cast<std::string>());
}

Label label_arg(const std::string& text) {
    auto label = parse_label(text);
    if (!label) throw ValidationError("label must be 'real' or 'fake', got '" + text + "'");
    return *label;
}

RationaleCandidate candidate_from_steps(const std::vector<std::string>& steps, Label label) {
    RationaleCandidate c;
    c.claim_id = "py";
    c.predicted_label = label;
    c.candidate_index = 1;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        c.steps.push_back({i, steps[i], {c.raw_text.size(), c.raw_text.size() + steps[i].size()}});
        c.raw_text += steps[i] + "\n";
    }
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Rationale attribution and curation core";

    auto error = py::register_exception<Error>(m, "CuratorError", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", error);
    py::register_exception<IoError>(m, "IoError", error);
    py::register_exception<StageError>(m, "StageError", error);

    m.def(
        "extract_prediction",
        [](const std::string& text) -> std::optional<std::string> {
            auto label = extract_prediction(text);
            if (!label) return std::nullopt;
            return std::string(to_string(*label));
        },
        py::arg("text"), "Label in the last boxed answer, or None.");

    m.def(
        "segment_steps",
        [](const std::string& text) {
            std::vector<std::string> out;
            for (const auto& s : segment_steps(text)) out.push_back(s.text);
            return out;
        },
        py::arg("text"), "Verification step texts of a rationale.");

    m.def(
        "filter_verdict",
        [](const std::string& raw_text, const std::string& gold, bool truncated, std::int64_t token_limit) {
            auto cand = make_candidate("py", "", raw_text, 1, truncated);
            FilterOptions options;
            options.token_limit = token_limit;
            auto v = apply_heuristic_filters(cand, Claim{"py", "", label_arg(gold), "", Split::Train}, options);
            return py::make_tuple(v.keep, std::string(to_string(v.reason)), v.detail);
        },
        py::arg("raw_text"), py::arg("gold"), py::arg("truncated") = false, py::arg("token_limit") = 4096,
        "(keep, reason, detail) of the heuristic filters.");

    m.def(
        "attribute",
        [](const std::vector<std::string>& steps, const std::map<std::string, double>& weights, double bias,
           const std::string& label, double zeta, int kappa, double epsilon) {
            SyntheticLogisticOracle oracle(weights, bias);
            SelfAttributionParams params;
            params.zeta = zeta;
            params.kappa = kappa;
            params.epsilon = epsilon;
            const Label y = label_arg(label);
            auto profile =
                attribute_candidate(Claim{"py", "", y, "", Split::Train}, candidate_from_steps(steps, y), oracle, params);
            return to_python(to_json(profile));
        },
        py::arg("steps"), py::arg("weights"), py::arg("bias") = 0.0, py::arg("label") = "real", py::arg("zeta") = 0.0,
        py::arg("kappa") = 3, py::arg("epsilon") = 0.01,
        "Self-attribution profile of a rationale under a logistic step-weight oracle.");

    m.def(
        "necessity_score",
        [](const std::vector<double>& deltas, double zeta) {
            auto r = necessity_score(deltas, zeta);
            return py::make_tuple(r.s_nec, r.ratio);
        },
        py::arg("deltas"), py::arg("zeta") = 0.0, "(s_nec, unnecessary ratio).");

    m.def("self_score", &self_score, py::arg("s_nec"), py::arg("s_suf"));
    m.def("combined_score", &combined_score, py::arg("phi_s"), py::arg("phi_m"));

    m.def(
        "perspective_importance",
        [](const std::map<std::pair<int, std::size_t>, double>& deltas, int K, int m_count) {
            return perspective_importance(deltas, K, m_count).phi;
        },
        py::arg("deltas"), py::arg("K"), py::arg("m_count"),
        "Importance of each perspective from {(m, k): delta}.");

    m.def(
        "kmeans",
        [](const std::vector<Embedding>& points, int clusters, std::uint64_t seed) {
            return kmeans(points, clusters, seed).labels;
        },
        py::arg("points"), py::arg("m"), py::arg("seed") = 13, "Cluster id of each point.");

    m.def(
        "detection_metrics",
        [](const std::vector<std::pair<std::string, std::optional<std::string>>>& pairs) {
            std::vector<std::pair<Label, std::optional<Label>>> typed;
            for (const auto& [gold, pred] : pairs) {
                typed.emplace_back(label_arg(gold), pred ? std::optional<Label>(label_arg(*pred)) : std::nullopt);
            }
            return to_python(to_json(detection_metrics(typed)));
        },
        py::arg("pairs"), "Metrics from (gold, predicted or None) pairs.");

    m.def(
        "default_config", [] { return to_python(to_json(PipelineConfig{})); }, "Default pipeline configuration.");

    m.def(
        "run_pipeline",
        [](const py::dict& config, const std::string& base_dir) {
            auto parsed = config_from_json(from_python(config), base_dir);
            PipelineSummary summary;
            {
                py::gil_scoped_release release;
                summary = run_pipeline(parsed);
            }
            return to_python(summary.to_json());
        },
        py::arg("config"), py::arg("base_dir") = "",
        "Runs the full pipeline and returns its summary. Relative paths resolve against base_dir.");
}
