#pragma once

// Command-line front end. `run_cli` is the whole program; tools/psel.cpp only forwards main().

#include <psel/calibration.hpp>
#include <psel/error.hpp>
#include <psel/report.hpp>
#include <psel/selection.hpp>
#include <psel/synth.hpp>
#include <psel/tensor_io.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace psel
{

/// Exit status for each error category; 1 is reserved for unexpected failures, 2 for usage errors.
constexpr int exit_code(ErrorKind kind) { return 10 + static_cast<int>(kind); }

namespace detail
{

inline std::optional<AggregationMode> parse_agg_flag(const std::string& s)
{
    if (s == "auto")
        return std::nullopt;
    if (auto m = parse_aggregation(s))
        return m;
    fail(ErrorKind::invalid_argument, "unknown aggregation '" + s + "'; valid: otr, mean, sum, auto");
}

inline CalibrationMethod parse_calibration_flag(const std::string& s)
{
    if (auto m = parse_calibration_method(s))
        return *m;
    fail(ErrorKind::invalid_argument, "unknown calibration '" + s + "'; valid: none, cc, pmi_dc, cbm");
}

inline CalibrationScenario parse_scenario_flag(const std::string& s)
{
    if (auto v = parse_calibration_scenario(s))
        return *v;
    fail(ErrorKind::invalid_argument,
         "unknown scenario '" + s + "'; valid: none, answer_only, pss_only, both (or -, A, P, PA)");
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

inline std::vector<MethodSpec> parse_methods_flag(const std::string& s)
{
    if (s.empty() || s == "all")
        return all_methods();
    std::vector<MethodSpec> out;
    for (const auto& name : split_list(s))
        out.push_back(method_by_name(name));
    return out;
}

inline void emit(const report_json& j, const std::string& out_path, std::ostream& out)
{
    const auto text = j.dump(2) + "\n";
    if (out_path.empty())
    {
        out << text;
        return;
    }
    std::ofstream f(out_path);
    if (!f)
        fail(ErrorKind::io, "cannot write report '" + out_path + "'");
    f << text;
}

} // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Probability-based prompt selection over serialized score tensors", "psel"};
    app.require_subcommand(1);

    std::string tensor_path, out_path, method = "MI_A", calibration = "none", scenario = "none", agg = "auto";
    std::string methods = "all";

    auto add_common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--tensor", tensor_path, "Score tensor file")->required();
        if (needs_out)
            sub->add_option("--out", out_path, "Write the output here instead of stdout");
    };

    auto* select_cmd = app.add_subcommand("select", "Select a prompt with one method and emit a report");
    add_common(select_cmd, true);
    select_cmd->add_option("--method", method, "Selection method: " + method_vocabulary())->required();
    select_cmd->add_option("--calibration", calibration, "none | cc | pmi_dc | cbm");
    select_cmd->add_option("--scenario", scenario, "none | answer_only | pss_only | both");
    select_cmd->add_option("--agg", agg, "otr | mean | sum | auto");

    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate every method under every calibration scenario");
    add_common(sweep_cmd, true);
    sweep_cmd->add_option("--calibration", calibration, "none | cc | pmi_dc | cbm | all");
    sweep_cmd->add_option("--methods", methods, "Comma-separated method names, or all");
    sweep_cmd->add_option("--agg", agg, "otr | mean | sum | auto");

    auto* cal_cmd = app.add_subcommand("calibrate-report", "Share of prompts improved by answer calibration");
    add_common(cal_cmd, true);
    cal_cmd->add_option("--agg", agg, "otr | mean | sum | auto");

    auto* corr_cmd = app.add_subcommand("correlate", "Pearson correlation of PSS with prompt performance");
    add_common(corr_cmd, true);
    corr_cmd->add_option("--methods", methods, "Comma-separated method names, or all");
    corr_cmd->add_option("--calibration", calibration, "none | cc | pmi_dc | cbm");
    corr_cmd->add_option("--scenario", scenario, "none | answer_only | pss_only | both");
    corr_cmd->add_option("--agg", agg, "otr | mean | sum | auto");

    SynthSpec synth;
    std::string profiles, category = "balanced";
    auto* synth_cmd = app.add_subcommand("synth", "Write a deterministic synthetic tensor");
    synth_cmd->add_option("--out", out_path, "Output tensor file")->required();
    synth_cmd->add_option("--prompts", synth.num_prompts, "Number of prompts");
    synth_cmd->add_option("--instances", synth.num_instances, "Number of instances");
    synth_cmd->add_option("--choices", synth.num_choices, "Number of answer choices");
    synth_cmd->add_option("--seed", synth.seed, "Random seed");
    synth_cmd->add_option("--noise", synth.noise, "Logit noise scale");
    synth_cmd->add_option("--category", category, "balanced | unbalanced | dynamic");
    synth_cmd->add_option("--profiles", profiles,
                          "Comma-separated per-prompt profiles: planted_best, collapsed_overconfident, "
                          "uniform_noise, label_biased");
    synth_cmd->add_option("--dataset-id", synth.dataset_id, "Dataset id written to the header");

    auto* relabel_cmd = app.add_subcommand("relabel-bias", "Set every gold label of a dynamic tensor to 0");
    add_common(relabel_cmd, false);
    relabel_cmd->add_option("--out", out_path, "Output tensor file")->required();

    auto* validate_cmd = app.add_subcommand("validate", "Check a tensor file against the format invariants");
    add_common(validate_cmd, false);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e, out, err);
    }

    try
    {
        const auto agg_override = detail::parse_agg_flag(agg);
        if (*select_cmd)
        {
            const auto tensor = load_tensor(tensor_path);
            const auto s = select(tensor, method_by_name(method), detail::parse_calibration_flag(calibration),
                                  detail::parse_scenario_flag(scenario), agg_override);
            detail::emit(selection_report(tensor, s), out_path, out);
        }
        else if (*sweep_cmd)
        {
            const auto tensor = load_tensor(tensor_path);
            std::vector<CalibrationMethod> cals;
            if (calibration == "all")
            {
                for (auto m : all_calibration_methods)
                    if (calibration_available(tensor, m))
                        cals.push_back(m);
            }
            else
            {
                cals.push_back(detail::parse_calibration_flag(calibration));
            }
            detail::emit(sweep_report(tensor, cals, detail::parse_methods_flag(methods), agg_override), out_path,
                         out);
        }
        else if (*cal_cmd)
        {
            detail::emit(calibration_improvement_report(load_tensor(tensor_path), agg_override), out_path, out);
        }
        else if (*corr_cmd)
        {
            detail::emit(correlation_report(load_tensor(tensor_path), detail::parse_methods_flag(methods),
                                            detail::parse_calibration_flag(calibration),
                                            detail::parse_scenario_flag(scenario), agg_override),
                         out_path, out);
        }
        else if (*synth_cmd)
        {
            const auto cat = parse_category(category);
            if (!cat)
                fail(ErrorKind::invalid_argument,
                     "unknown category '" + category + "'; valid: balanced, unbalanced, dynamic");
            synth.category = *cat;
            for (const auto& name : detail::split_list(profiles))
            {
                const auto p = parse_profile(name);
                if (!p)
                    fail(ErrorKind::invalid_argument, "unknown profile '" + name
                                                          + "'; valid: planted_best, collapsed_overconfident, "
                                                            "uniform_noise, label_biased");
                synth.profiles.push_back(*p);
            }
            save_tensor(out_path, synth_tensor(synth));
        }
        else if (*relabel_cmd)
        {
            save_tensor(out_path, relabel_bias(load_tensor(tensor_path)));
        }
        else if (*validate_cmd)
        {
            const auto tensor = load_tensor(tensor_path);
            report_json j;
            j["valid"] = true;
            j["dataset_id"] = tensor.dataset_id;
            j["num_prompts"] = tensor.num_prompts;
            j["num_instances"] = tensor.num_instances;
            j["num_choices"] = tensor.num_choices;
            j["has_sequence_stats"] = tensor.sequence_stats.has_value();
            j["has_content_free"] = tensor.content_free_logits.has_value();
            j["has_domain"] = tensor.domain_logits.has_value();
            out << j.dump() << "\n";
        }
    }
    catch (const Error& e)
    {
        err << "error[" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return exit_code(e.kind());
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace psel
