#pragma once

// Machine-readable reports. Every report is a JSON object carrying
// "schema": "psel-report" and "schema_version"; keys are emitted in a fixed order
// so identical inputs give byte-identical output. See README.md for the schema.

#include <psel/calibration.hpp>
#include <psel/evaluation.hpp>
#include <psel/selection.hpp>
#include <psel/tensor.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace psel
{

inline constexpr int report_schema_version = 1;

using report_json = nlohmann::ordered_json;

namespace detail
{

inline report_json report_header(std::string_view kind, const ScoreTensor& tensor)
{
    report_json j;
    j["schema"] = "psel-report";
    j["schema_version"] = report_schema_version;
    j["kind"] = kind;
    j["dataset_id"] = tensor.dataset_id;
    j["category"] = to_string(tensor.category);
    j["num_prompts"] = tensor.num_prompts;
    j["num_instances"] = tensor.num_instances;
    j["num_choices"] = tensor.num_choices;
    return j;
}

inline report_json optional_number(const std::optional<double>& v)
{
    return v ? report_json(*v) : report_json(nullptr);
}

inline std::string aggregation_label(std::optional<AggregationMode> agg)
{
    return agg ? std::string(to_string(*agg)) : std::string("auto");
}

} // namespace detail

inline report_json metrics_json(const MetricReport& m)
{
    report_json j;
    j["selected"] = {{"accuracy", m.selected.accuracy}, {"macro_f1", m.selected.macro_f1}};
    j["accuracy"] = {{"best", m.accuracy.best}, {"average", m.accuracy.average}, {"worst", m.accuracy.worst}};
    j["macro_f1"] = {{"best", m.macro_f1.best}, {"average", m.macro_f1.average}, {"worst", m.macro_f1.worst}};
    j["scaled_accuracy"] = detail::optional_number(m.scaled_accuracy);
    j["scaled_f1"] = detail::optional_number(m.scaled_f1);
    j["per_prompt"] = {{"accuracy", m.prompts.accuracy}, {"macro_f1", m.prompts.macro_f1}};
    return j;
}

inline report_json selection_json(const ScoreTensor& tensor, const SelectionOutcome& o)
{
    report_json j;
    if (o.instance_wise)
    {
        j["mode"] = "instance_wise";
        j["instance_prompts"] = o.instance_prompts;
        // Per-prompt instance-mean of the per-instance scores, for correlation analysis.
        j["prompt_scores"] = o.prompt_scores;
    }
    else
    {
        j["mode"] = "global";
        j["prompt"] = o.prompt;
        j["prompt_id"] = tensor.prompt_ids.at(o.prompt);
        j["prompt_scores"] = o.prompt_scores;
    }
    return j;
}

inline report_json selection_report(const ScoreTensor& tensor, const Selection& s)
{
    const auto metrics = evaluate(tensor, s);
    auto j = detail::report_header("selection", tensor);
    j["method"] = s.spec.name;
    j["calibration"] = to_string(s.calibration);
    j["scenario"] = to_string(s.scenario);
    j["aggregation"] = to_string(s.aggregation);
    j["selection"] = selection_json(tensor, s.outcome);
    j["metrics"] = metrics_json(metrics);
    j["warnings"] = s.warnings;
    return j;
}

/// Method x scenario grid for each requested calibration method.
inline report_json sweep_report(const ScoreTensor& tensor, const std::vector<CalibrationMethod>& calibrations,
                                const std::vector<MethodSpec>& methods,
                                std::optional<AggregationMode> agg_override = std::nullopt)
{
    auto j = detail::report_header("sweep", tensor);
    j["aggregation"] = detail::aggregation_label(agg_override);
    report_json rows = report_json::array();
    for (auto calibration : calibrations)
        for (const auto& spec : methods)
            for (auto scenario : all_calibration_scenarios)
            {
                const auto s = select(tensor, spec, calibration, scenario, agg_override);
                const auto m = evaluate(tensor, s);
                report_json r;
                r["method"] = spec.name;
                r["calibration"] = to_string(calibration);
                r["scenario"] = to_string(scenario);
                r["aggregation"] = to_string(s.aggregation);
                r["selected_prompt"] = s.outcome.instance_wise ? report_json(nullptr) : report_json(s.outcome.prompt);
                r["accuracy"] = m.selected.accuracy;
                r["macro_f1"] = m.selected.macro_f1;
                r["scaled_accuracy"] = detail::optional_number(m.scaled_accuracy);
                r["scaled_f1"] = detail::optional_number(m.scaled_f1);
                r["best_accuracy"] = m.accuracy.best;
                r["average_accuracy"] = m.accuracy.average;
                r["worst_accuracy"] = m.accuracy.worst;
                r["best_macro_f1"] = m.macro_f1.best;
                r["average_macro_f1"] = m.macro_f1.average;
                r["worst_macro_f1"] = m.macro_f1.worst;
                r["warnings"] = s.warnings.size();
                rows.push_back(std::move(r));
            }
    j["rows"] = std::move(rows);
    return j;
}

/// Fraction of prompts whose accuracy / macro F1 strictly improves when each available
/// calibration is applied to answer selection only.
inline report_json calibration_improvement_report(const ScoreTensor& tensor,
                                                  std::optional<AggregationMode> agg_override = std::nullopt)
{
    const auto agg = agg_override.value_or(default_aggregation(tensor.category));
    auto j = detail::report_header("calibration_improvement", tensor);
    j["aggregation"] = to_string(agg);
    const auto base_answers = argmax_rows(answer_distributions(tensor, agg));
    const auto base = per_prompt_metrics(base_answers, tensor.gold_labels, tensor.num_choices);
    report_json rows = report_json::array();
    for (auto method : {CalibrationMethod::cc, CalibrationMethod::pmi_dc, CalibrationMethod::cbm})
    {
        report_json r;
        r["calibration"] = to_string(method);
        if (!calibration_available(tensor, method))
        {
            r["available"] = false;
            rows.push_back(std::move(r));
            continue;
        }
        const auto scores = apply_scenario(tensor, method, CalibrationScenario::answer_only, agg);
        const auto cal = per_prompt_metrics(argmax_rows(scores.answer_scores), tensor.gold_labels,
                                            tensor.num_choices);
        r["available"] = true;
        r["accuracy_ratio"] = calibration_improvement_ratio(base.accuracy, cal.accuracy);
        r["macro_f1_ratio"] = calibration_improvement_ratio(base.macro_f1, cal.macro_f1);
        r["per_prompt"] = {{"base_accuracy", base.accuracy},
                           {"calibrated_accuracy", cal.accuracy},
                           {"base_macro_f1", base.macro_f1},
                           {"calibrated_macro_f1", cal.macro_f1}};
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

/// Pearson correlation between each method's per-prompt PSS and per-prompt performance.
inline report_json correlation_report(const ScoreTensor& tensor, const std::vector<MethodSpec>& methods,
                                      CalibrationMethod calibration, CalibrationScenario scenario,
                                      std::optional<AggregationMode> agg_override = std::nullopt)
{
    auto j = detail::report_header("correlation", tensor);
    j["calibration"] = to_string(calibration);
    j["scenario"] = to_string(scenario);
    j["aggregation"] = detail::aggregation_label(agg_override);
    report_json rows = report_json::array();
    for (const auto& spec : methods)
    {
        const auto s = select(tensor, spec, calibration, scenario, agg_override);
        const auto perf = per_prompt_metrics(s.answers, tensor.gold_labels, tensor.num_choices);
        for (const auto& [metric, values] :
             {std::pair<std::string, const std::vector<double>*>{"accuracy", &perf.accuracy},
              std::pair<std::string, const std::vector<double>*>{"macro_f1", &perf.macro_f1}})
        {
            report_json r;
            r["method"] = spec.name;
            r["metric"] = metric;
            r["pss"] = s.outcome.instance_wise ? "instance_mean" : "prompt";
            try
            {
                const auto c = pearson_corr(s.outcome.prompt_scores, *values);
                r["r"] = c.r;
                r["p_value"] = c.p_value;
                r["significant"] = c.significant;
            }
            catch (const Error& e)
            {
                r["r"] = nullptr;
                r["p_value"] = nullptr;
                r["significant"] = false;
                r["error"] = to_string(e.kind());
            }
            rows.push_back(std::move(r));
        }
    }
    j["rows"] = std::move(rows);
    return j;
}

inline std::vector<MethodSpec> all_methods()
{
    std::vector<MethodSpec> out;
    for (auto n : method_names)
        out.push_back(method_by_name(n));
    return out;
}

} // namespace psel
