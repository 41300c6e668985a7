#pragma once

// Output-probability calibration (contextual calibration, domain-conditional PMI,
// calibration by marginalization) and the scenario wiring that decides whether
// answer selection, prompt scoring, or both consume the calibrated scores.

#include <psel/error.hpp>
#include <psel/tensor.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psel
{

enum class CalibrationMethod
{
    none,
    cc,
    pmi_dc,
    cbm,
};

enum class CalibrationScenario
{
    none,
    answer_only,
    pss_only,
    both,
};

constexpr std::string_view to_string(CalibrationMethod m)
{
    switch (m)
    {
    case CalibrationMethod::none: return "none";
    case CalibrationMethod::cc: return "cc";
    case CalibrationMethod::pmi_dc: return "pmi_dc";
    case CalibrationMethod::cbm: return "cbm";
    }
    return "?";
}

constexpr std::string_view to_string(CalibrationScenario s)
{
    switch (s)
    {
    case CalibrationScenario::none: return "none";
    case CalibrationScenario::answer_only: return "answer_only";
    case CalibrationScenario::pss_only: return "pss_only";
    case CalibrationScenario::both: return "both";
    }
    return "?";
}

inline constexpr std::array<CalibrationMethod, 4> all_calibration_methods = {
    CalibrationMethod::none, CalibrationMethod::cc, CalibrationMethod::pmi_dc, CalibrationMethod::cbm};
inline constexpr std::array<CalibrationScenario, 4> all_calibration_scenarios = {
    CalibrationScenario::none, CalibrationScenario::answer_only, CalibrationScenario::pss_only,
    CalibrationScenario::both};

inline std::optional<CalibrationMethod> parse_calibration_method(std::string_view s)
{
    for (auto m : all_calibration_methods)
        if (to_string(m) == s)
            return m;
    return std::nullopt;
}

inline std::optional<CalibrationScenario> parse_calibration_scenario(std::string_view s)
{
    for (auto v : all_calibration_scenarios)
        if (to_string(v) == s)
            return v;
    // Short forms: -, A, P, PA.
    if (s == "-")
        return CalibrationScenario::none;
    if (s == "A")
        return CalibrationScenario::answer_only;
    if (s == "P")
        return CalibrationScenario::pss_only;
    if (s == "PA")
        return CalibrationScenario::both;
    return std::nullopt;
}

/// True when the tensor carries the section the method needs.
inline bool calibration_available(const ScoreTensor& tensor, CalibrationMethod m)
{
    switch (m)
    {
    case CalibrationMethod::cc: return tensor.content_free_logits.has_value();
    case CalibrationMethod::pmi_dc: return tensor.domain_logits.has_value();
    default: return true;
    }
}

inline constexpr double calibration_floor = 1e-12;

/// q~(y|x,t) and its row softmax q(y|x,t).
struct CalibratedScores
{
    ScoreGrid raw;
    ScoreGrid normalized;
    std::vector<std::string> warnings;
};

namespace detail
{

inline double clamp_denominator(double v, std::size_t t, std::size_t y, std::string_view what,
                                std::vector<std::string>& warnings)
{
    if (v >= calibration_floor)
        return v;
    warnings.push_back(std::string(what) + " for prompt " + std::to_string(t) + ", choice " + std::to_string(y)
                       + " clamped to 1e-12");
    return calibration_floor;
}

inline CalibratedScores finish(ScoreGrid raw, std::vector<std::string> warnings)
{
    CalibratedScores out{std::move(raw), {}, std::move(warnings)};
    out.normalized = normalize_rows(out.raw);
    return out;
}

} // namespace detail

/// Mean-normalized content-free prior p_cf(y|t), laid out as a 1-instance grid (t, 0, y).
inline ScoreGrid content_free_prior(const ScoreTensor& tensor)
{
    if (!tensor.content_free_logits)
        fail(ErrorKind::missing_section, "cc calibration needs the content_free section");
    const auto C = content_free_inputs.size();
    ScoreGrid prior(tensor.num_prompts, 1, tensor.num_choices);
    for (std::size_t t = 0; t < tensor.num_prompts; ++t)
    {
        // exp is taken relative to the per-prompt peak; the shift cancels in the mean-normalization.
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < tensor.num_choices; ++y)
            for (std::size_t c = 0; c < C; ++c)
                peak = std::max(peak, tensor.content_free_logit(t, y, c));
        double total = 0.0;
        for (std::size_t y = 0; y < tensor.num_choices; ++y)
        {
            double sum = 0.0;
            for (std::size_t c = 0; c < C; ++c)
                sum += std::exp(tensor.content_free_logit(t, y, c) - peak);
            prior(t, 0, y) = sum / static_cast<double>(C);
            total += prior(t, 0, y);
        }
        const double mean = total / static_cast<double>(tensor.num_choices);
        for (std::size_t y = 0; y < tensor.num_choices; ++y)
            prior(t, 0, y) /= mean;
    }
    return prior;
}

/// q~ = p / prior, where prior is a (t, 0, y) grid.
inline CalibratedScores calibrate_with_prior(const ScoreGrid& probs, const ScoreGrid& prior)
{
    std::vector<std::string> warnings;
    ScoreGrid raw(probs.num_prompts(), probs.num_instances(), probs.num_choices());
    for (std::size_t t = 0; t < probs.num_prompts(); ++t)
        for (std::size_t y = 0; y < probs.num_choices(); ++y)
        {
            const double d = detail::clamp_denominator(prior(t, 0, y), t, y, "content-free prior", warnings);
            for (std::size_t x = 0; x < probs.num_instances(); ++x)
                raw(t, x, y) = probs(t, x, y) / d;
        }
    return detail::finish(std::move(raw), std::move(warnings));
}

inline CalibratedScores calibrate_cc(const ScoreTensor& tensor, AggregationMode agg)
{
    const auto prior = content_free_prior(tensor);
    return calibrate_with_prior(answer_distributions(tensor, agg), prior);
}

/// log p~(y|x,t) - log p~(y|x_domain,t), in log space.
inline CalibratedScores calibrate_pmi_dc(const ScoreTensor& tensor, AggregationMode agg)
{
    if (!tensor.domain_logits)
        fail(ErrorKind::missing_section, "pmi_dc calibration needs the domain section");
    ScoreGrid raw = aggregated_logits(tensor, agg);
    for (std::size_t t = 0; t < tensor.num_prompts; ++t)
        for (std::size_t x = 0; x < tensor.num_instances; ++x)
            for (std::size_t y = 0; y < tensor.num_choices; ++y)
                raw(t, x, y) -= tensor.domain_logit(t, y);
    return detail::finish(std::move(raw), {});
}

/// q~(y|x,t) = p(y|x,t) / mean_x' p(y|x',t).
inline CalibratedScores calibrate_cbm(const ScoreGrid& probs)
{
    if (probs.num_instances() == 0)
        fail(ErrorKind::invalid_argument, "cbm calibration needs at least one instance");
    std::vector<std::string> warnings;
    ScoreGrid raw(probs.num_prompts(), probs.num_instances(), probs.num_choices());
    for (std::size_t t = 0; t < probs.num_prompts(); ++t)
    {
        const auto marginal = marginal_distribution(probs, t);
        for (std::size_t y = 0; y < probs.num_choices(); ++y)
        {
            const double d = detail::clamp_denominator(marginal.probs[y], t, y, "marginal", warnings);
            for (std::size_t x = 0; x < probs.num_instances(); ++x)
                raw(t, x, y) = probs(t, x, y) / d;
        }
    }
    return detail::finish(std::move(raw), std::move(warnings));
}

inline CalibratedScores calibrate_cbm(const ScoreTensor& tensor, AggregationMode agg)
{
    return calibrate_cbm(answer_distributions(tensor, agg));
}

inline CalibratedScores calibrate(const ScoreTensor& tensor, CalibrationMethod method, AggregationMode agg)
{
    switch (method)
    {
    case CalibrationMethod::cc: return calibrate_cc(tensor, agg);
    case CalibrationMethod::pmi_dc: return calibrate_pmi_dc(tensor, agg);
    case CalibrationMethod::cbm: return calibrate_cbm(tensor, agg);
    case CalibrationMethod::none: break;
    }
    auto p = answer_distributions(tensor, agg);
    return {p, p, {}};
}

struct ScenarioScores
{
    /// Answers are the row argmax of these; never renormalized.
    ScoreGrid answer_scores;
    /// Distributions every probability-based prompt score consumes.
    ScoreGrid pss_distributions;
    std::vector<std::string> warnings;
};

inline ScenarioScores apply_scenario(const ScoreTensor& tensor, CalibrationMethod method,
                                     CalibrationScenario scenario, AggregationMode agg)
{
    auto p = answer_distributions(tensor, agg);
    if (method == CalibrationMethod::none || scenario == CalibrationScenario::none)
    {
        // Still validate that the method could run, so misconfigured sweeps fail loudly.
        if (!calibration_available(tensor, method))
            calibrate(tensor, method, agg);
        return {p, p, {}};
    }
    auto cal = method == CalibrationMethod::cbm ? calibrate_cbm(p) : calibrate(tensor, method, agg);
    switch (scenario)
    {
    case CalibrationScenario::answer_only: return {std::move(cal.raw), std::move(p), std::move(cal.warnings)};
    case CalibrationScenario::pss_only: return {std::move(p), std::move(cal.normalized), std::move(cal.warnings)};
    case CalibrationScenario::both:
        return {std::move(cal.raw), std::move(cal.normalized), std::move(cal.warnings)};
    case CalibrationScenario::none: break;
    }
    return {p, p, {}};
}

} // namespace psel
