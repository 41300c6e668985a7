#pragma once

// Prompt Selection Scores. The mutual-information family covers MI, GE, LE, MDL and
// their all-token / one-hot / instance-wise variants as configurations of two terms:
//
//   first term  : H( mean_x p(y|x,t) )           (optionally one-hot before the mean)
//   second term : -H(Y|x,t)                      (instance-mean, or per instance)
//
// Zero-label methods score agreement with an ensemble pseudo-label; PPL scores
// the instantiated prompt's own likelihood.

#include <psel/calibration.hpp>
#include <psel/error.hpp>
#include <psel/tensor.hpp>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psel
{

enum class MethodFamily
{
    mi_family,
    zero_label,
    ppl,
};

enum class ZeroLabelVariant
{
    zlp,
    zpm,
    zmv,
};

struct MethodSpec
{
    std::string name;
    MethodFamily family = MethodFamily::mi_family;
    /// nullopt: all tokens, aggregated with the category default.
    std::optional<AggregationMode> aggregation;
    bool one_hot_first_term = false;
    bool instance_wise = false;
    bool use_first_term = true;
    bool use_second_term = true;
    /// Select the prompt with the highest mean entropy (LE) instead of the highest score.
    bool maximize_entropy = false;
    ZeroLabelVariant variant = ZeroLabelVariant::zlp;

    void validate() const
    {
        if (family != MethodFamily::mi_family)
            return;
        if (!use_first_term && !use_second_term)
            fail(ErrorKind::invalid_argument, "method '" + name + "' uses neither term");
        if (instance_wise && !use_second_term)
            fail(ErrorKind::invalid_argument, "instance-wise method '" + name + "' needs the second term");
        if (maximize_entropy && (use_first_term || instance_wise))
            fail(ErrorKind::invalid_argument, "entropy maximization only applies to the global second term");
    }

    AggregationMode resolve_aggregation(Category category) const
    {
        return aggregation.value_or(default_aggregation(category));
    }
};

namespace detail
{

inline MethodSpec mi_spec(std::string name, std::optional<AggregationMode> agg, bool one_hot, bool instance_wise,
                          bool first, bool second, bool maximize_entropy = false)
{
    MethodSpec s;
    s.name = std::move(name);
    s.family = MethodFamily::mi_family;
    s.aggregation = agg;
    s.one_hot_first_term = one_hot;
    s.instance_wise = instance_wise;
    s.use_first_term = first;
    s.use_second_term = second;
    s.maximize_entropy = maximize_entropy;
    return s;
}

inline MethodSpec zero_label_spec(std::string name, ZeroLabelVariant v)
{
    MethodSpec s;
    s.name = std::move(name);
    s.family = MethodFamily::zero_label;
    s.variant = v;
    return s;
}

} // namespace detail

inline constexpr std::array<std::string_view, 14> method_names = {
    "MI", "MI_A", "MI_AG", "MI_AL", "MI_AGL", "GE", "GE_M", "LE", "MDL", "MDL_M", "ZLP", "ZPM", "ZMV", "PPL"};

inline std::string method_vocabulary()
{
    std::string out;
    for (auto n : method_names)
    {
        if (!out.empty())
            out += ", ";
        out += n;
    }
    return out;
}

inline MethodSpec method_by_name(std::string_view name)
{
    using detail::mi_spec;
    constexpr auto otr = AggregationMode::first_token;
    const std::optional<AggregationMode> all;
    if (name == "MI")
        return mi_spec("MI", otr, false, false, true, true);
    if (name == "MI_A")
        return mi_spec("MI_A", all, false, false, true, true);
    if (name == "MI_AG")
        return mi_spec("MI_AG", all, true, false, true, true);
    if (name == "MI_AL")
        return mi_spec("MI_AL", all, false, true, true, true);
    if (name == "MI_AGL")
        return mi_spec("MI_AGL", all, true, true, true, true);
    if (name == "GE")
        return mi_spec("GE", all, true, false, true, false);
    if (name == "GE_M")
        return mi_spec("GE_M", all, false, false, true, false);
    if (name == "LE")
        return mi_spec("LE", all, false, false, false, true, true);
    if (name == "MDL")
        return mi_spec("MDL", all, false, true, false, true);
    if (name == "MDL_M")
        return mi_spec("MDL_M", all, false, false, false, true);
    if (name == "ZLP")
        return detail::zero_label_spec("ZLP", ZeroLabelVariant::zlp);
    if (name == "ZPM")
        return detail::zero_label_spec("ZPM", ZeroLabelVariant::zpm);
    if (name == "ZMV")
        return detail::zero_label_spec("ZMV", ZeroLabelVariant::zmv);
    if (name == "PPL")
    {
        MethodSpec s;
        s.name = "PPL";
        s.family = MethodFamily::ppl;
        return s;
    }
    fail(ErrorKind::invalid_argument, "unknown method '" + std::string(name) + "'; valid: " + method_vocabulary());
}

struct SelectionOutcome
{
    bool instance_wise = false;
    /// Global selection.
    std::size_t prompt = 0;
    /// Instance-wise selection: chosen prompt per instance.
    std::vector<std::size_t> instance_prompts;
    /// Per-prompt PSS. For instance-wise methods this is the instance-mean of the per-instance scores.
    std::vector<double> prompt_scores;
    /// Instance-wise only, indexed x * |T| + t.
    std::vector<double> instance_scores;

    std::size_t prompt_for(std::size_t x) const { return instance_wise ? instance_prompts.at(x) : prompt; }

    bool operator==(const SelectionOutcome&) const = default;
};

/// H(mean_x d(y|x,t)) per prompt, with each d optionally one-hot first.
inline std::vector<double> first_term(const ScoreGrid& dists, bool one_hot_mode)
{
    const auto T = dists.num_prompts(), X = dists.num_instances(), Y = dists.num_choices();
    if (X == 0)
        fail(ErrorKind::invalid_argument, "first term needs at least one instance");
    std::vector<double> out(T);
    std::vector<double> mean(Y);
    for (std::size_t t = 0; t < T; ++t)
    {
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t x = 0; x < X; ++x)
        {
            if (one_hot_mode)
                mean[argmax(dists.row(t, x))] += 1.0;
            else
                for (std::size_t y = 0; y < Y; ++y)
                    mean[y] += dists(t, x, y);
        }
        for (double& v : mean)
            v /= static_cast<double>(X);
        out[t] = entropy(mean);
    }
    return out;
}

struct SecondTerm
{
    /// -H(Y|x,t), indexed t * |X| + x.
    std::vector<double> per_instance;
    /// Instance-mean of per_instance, per prompt.
    std::vector<double> mean;
};

inline SecondTerm second_term(const ScoreGrid& dists)
{
    const auto T = dists.num_prompts(), X = dists.num_instances();
    SecondTerm out{std::vector<double>(T * X), std::vector<double>(T, 0.0)};
    for (std::size_t t = 0; t < T; ++t)
    {
        double total = 0.0;
        for (std::size_t x = 0; x < X; ++x)
        {
            const double v = -entropy(dists.row(t, x));
            out.per_instance[t * X + x] = v;
            total += v;
        }
        out.mean[t] = X ? total / static_cast<double>(X) : 0.0;
    }
    return out;
}

inline SelectionOutcome pss_mi_family(const MethodSpec& spec, const ScoreGrid& pss_dists)
{
    if (spec.family != MethodFamily::mi_family)
        fail(ErrorKind::invalid_argument, "method '" + spec.name + "' is not in the mutual-information family");
    spec.validate();
    const auto T = pss_dists.num_prompts(), X = pss_dists.num_instances();
    if (T == 0 || X == 0)
        fail(ErrorKind::invalid_argument, "prompt scoring needs at least one prompt and one instance");

    std::vector<double> first(T, 0.0);
    if (spec.use_first_term)
        first = first_term(pss_dists, spec.one_hot_first_term);
    const auto second = second_term(pss_dists);

    SelectionOutcome out;
    if (!spec.instance_wise)
    {
        out.prompt_scores.resize(T);
        for (std::size_t t = 0; t < T; ++t)
        {
            if (spec.maximize_entropy)
                out.prompt_scores[t] = -second.mean[t];
            else
                out.prompt_scores[t] = first[t] + (spec.use_second_term ? second.mean[t] : 0.0);
        }
        out.prompt = argmax(out.prompt_scores);
        return out;
    }

    out.instance_wise = true;
    out.instance_prompts.resize(X);
    out.instance_scores.resize(X * T);
    out.prompt_scores.assign(T, 0.0);
    for (std::size_t x = 0; x < X; ++x)
    {
        std::span<double> row(out.instance_scores.data() + x * T, T);
        for (std::size_t t = 0; t < T; ++t)
        {
            row[t] = first[t] + second.per_instance[t * X + x];
            out.prompt_scores[t] += row[t];
        }
        out.instance_prompts[x] = argmax(row);
    }
    for (double& v : out.prompt_scores)
        v /= static_cast<double>(X);
    return out;
}

/// Ensemble pseudo-labels argmax_y s(x,y), one per instance.
inline std::vector<std::size_t> zero_label_pseudo_labels(ZeroLabelVariant variant, const ScoreGrid& dists)
{
    const auto T = dists.num_prompts(), X = dists.num_instances(), Y = dists.num_choices();
    std::vector<std::size_t> labels(X);
    std::vector<double> s(Y);
    for (std::size_t x = 0; x < X; ++x)
    {
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t t = 0; t < T; ++t)
        {
            const auto row = dists.row(t, x);
            switch (variant)
            {
            case ZeroLabelVariant::zlp:
                for (std::size_t y = 0; y < Y; ++y)
                    s[y] += std::log(row[y]);
                break;
            case ZeroLabelVariant::zpm:
                for (std::size_t y = 0; y < Y; ++y)
                    s[y] += row[y];
                break;
            case ZeroLabelVariant::zmv: s[argmax(row)] += 1.0; break;
            }
        }
        if (variant != ZeroLabelVariant::zmv)
            for (double& v : s)
                v /= static_cast<double>(T);
        labels[x] = argmax(s);
    }
    return labels;
}

inline SelectionOutcome pss_zero_label(ZeroLabelVariant variant, const ScoreGrid& pss_dists)
{
    const auto T = pss_dists.num_prompts(), X = pss_dists.num_instances();
    if (T == 0)
        fail(ErrorKind::invalid_argument, "zero-label selection needs at least one prompt");
    const auto labels = zero_label_pseudo_labels(variant, pss_dists);
    SelectionOutcome out;
    out.prompt_scores.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t x = 0; x < X; ++x)
            if (argmax(pss_dists.row(t, x)) == labels[x])
                out.prompt_scores[t] += 1.0;
    out.prompt = argmax(out.prompt_scores);
    return out;
}

/// Geometric-mean likelihood of the instantiated prompt, exp(sum / (n - 1)).
inline double prompt_likelihood(const SequenceStat& s)
{
    return std::exp(s.sum_logprob / static_cast<double>(s.token_count - 1));
}

/// PSS(t) = -mean_x 1/p(x,t); the argmax is the argmin of the mean reciprocal.
inline SelectionOutcome pss_ppl(const ScoreTensor& tensor)
{
    if (!tensor.sequence_stats)
        fail(ErrorKind::missing_section, "PPL needs the sequence_stats section");
    SelectionOutcome out;
    out.prompt_scores.assign(tensor.num_prompts, 0.0);
    for (std::size_t t = 0; t < tensor.num_prompts; ++t)
    {
        double total = 0.0;
        for (std::size_t x = 0; x < tensor.num_instances; ++x)
        {
            const auto& s = tensor.sequence_stat(t, x);
            if (s.token_count < 2)
                fail(ErrorKind::invariant, "PPL needs at least 2 tokens at (t=" + std::to_string(t)
                                               + ", x=" + std::to_string(x) + ")");
            total += 1.0 / prompt_likelihood(s);
        }
        out.prompt_scores[t] = -total / static_cast<double>(tensor.num_instances);
    }
    out.prompt = argmax(out.prompt_scores);
    return out;
}

inline SelectionOutcome prompt_scores(const MethodSpec& spec, const ScoreTensor& tensor, const ScoreGrid& pss_dists)
{
    switch (spec.family)
    {
    case MethodFamily::mi_family: return pss_mi_family(spec, pss_dists);
    case MethodFamily::zero_label: return pss_zero_label(spec.variant, pss_dists);
    case MethodFamily::ppl: return pss_ppl(tensor);
    }
    return {};
}

/// Everything evaluation needs from one (method, calibration, scenario) run.
struct Selection
{
    MethodSpec spec;
    CalibrationMethod calibration = CalibrationMethod::none;
    CalibrationScenario scenario = CalibrationScenario::none;
    AggregationMode aggregation = AggregationMode::mean_logprob;
    SelectionOutcome outcome;
    /// Answer of every prompt on every instance.
    IndexTable answers;
    std::vector<std::string> warnings;
};

/// `agg_override` replaces the method's own aggregation (OTR for MI, category default otherwise).
inline Selection select(const ScoreTensor& tensor, const MethodSpec& spec, CalibrationMethod method,
                        CalibrationScenario scenario, std::optional<AggregationMode> agg_override = std::nullopt)
{
    spec.validate();
    Selection out;
    out.spec = spec;
    out.calibration = method;
    out.scenario = scenario;
    out.aggregation = agg_override.value_or(spec.resolve_aggregation(tensor.category));
    auto scores = apply_scenario(tensor, method, scenario, out.aggregation);
    out.outcome = prompt_scores(spec, tensor, scores.pss_distributions);
    out.answers = argmax_rows(scores.answer_scores);
    out.warnings = std::move(scores.warnings);
    return out;
}

} // namespace psel
