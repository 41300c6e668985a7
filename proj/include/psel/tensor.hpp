#pragma once

// Score tensor and the probability primitives every selection method is built on.

#include <psel/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psel
{

enum class Category
{
    balanced,
    unbalanced,
    dynamic,
};

enum class AggregationMode
{
    first_token,
    mean_logprob,
    sum_logprob,
};

inline constexpr std::array<std::string_view, 3> content_free_inputs = {"N/A", "[MASK]", ""};

constexpr std::string_view to_string(Category c)
{
    switch (c)
    {
    case Category::balanced: return "balanced";
    case Category::unbalanced: return "unbalanced";
    case Category::dynamic: return "dynamic";
    }
    return "?";
}

constexpr std::string_view to_string(AggregationMode m)
{
    switch (m)
    {
    case AggregationMode::first_token: return "otr";
    case AggregationMode::mean_logprob: return "mean";
    case AggregationMode::sum_logprob: return "sum";
    }
    return "?";
}

inline std::optional<Category> parse_category(std::string_view s)
{
    for (auto c : {Category::balanced, Category::unbalanced, Category::dynamic})
        if (to_string(c) == s)
            return c;
    return std::nullopt;
}

inline std::optional<AggregationMode> parse_aggregation(std::string_view s)
{
    for (auto m : {AggregationMode::first_token, AggregationMode::mean_logprob, AggregationMode::sum_logprob})
        if (to_string(m) == s)
            return m;
    return std::nullopt;
}

/// Mean log-prob for static choice sets, summed log-prob for per-instance choice sentences.
constexpr AggregationMode default_aggregation(Category c)
{
    return c == Category::dynamic ? AggregationMode::sum_logprob : AggregationMode::mean_logprob;
}

/// Dense (prompt, instance, choice) array of doubles; rows are contiguous per (prompt, instance).
class ScoreGrid
{
public:
    ScoreGrid() = default;
    ScoreGrid(std::size_t prompts, std::size_t instances, std::size_t choices, double fill = 0.0)
        : prompts_(prompts)
        , instances_(instances)
        , choices_(choices)
        , values_(prompts * instances * choices, fill)
    {
    }

    std::size_t num_prompts() const noexcept { return prompts_; }
    std::size_t num_instances() const noexcept { return instances_; }
    std::size_t num_choices() const noexcept { return choices_; }

    double& operator()(std::size_t t, std::size_t x, std::size_t y) { return values_[offset(t, x) + y]; }
    double operator()(std::size_t t, std::size_t x, std::size_t y) const { return values_[offset(t, x) + y]; }

    std::span<double> row(std::size_t t, std::size_t x) { return {values_.data() + offset(t, x), choices_}; }
    std::span<const double> row(std::size_t t, std::size_t x) const
    {
        return {values_.data() + offset(t, x), choices_};
    }

    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const ScoreGrid&) const = default;

private:
    std::size_t offset(std::size_t t, std::size_t x) const { return (t * instances_ + x) * choices_; }

    std::size_t prompts_ = 0;
    std::size_t instances_ = 0;
    std::size_t choices_ = 0;
    std::vector<double> values_;
};

/// Per (prompt, instance) index table, e.g. the answer each prompt picks for each instance.
class IndexTable
{
public:
    IndexTable() = default;
    IndexTable(std::size_t prompts, std::size_t instances)
        : prompts_(prompts)
        , instances_(instances)
        , values_(prompts * instances, 0)
    {
    }

    std::size_t num_prompts() const noexcept { return prompts_; }
    std::size_t num_instances() const noexcept { return instances_; }

    std::size_t& operator()(std::size_t t, std::size_t x) { return values_[t * instances_ + x]; }
    std::size_t operator()(std::size_t t, std::size_t x) const { return values_[t * instances_ + x]; }
    std::span<const std::size_t> row(std::size_t t) const { return {values_.data() + t * instances_, instances_}; }

    bool operator==(const IndexTable&) const = default;

private:
    std::size_t prompts_ = 0;
    std::size_t instances_ = 0;
    std::vector<std::size_t> values_;
};

struct SequenceStat
{
    double sum_logprob = 0.0;
    std::int64_t token_count = 0;

    bool operator==(const SequenceStat&) const = default;
};

/// Everything a model produced for one (dataset, model) pair. Immutable once loaded.
struct ScoreTensor
{
    std::string dataset_id;
    Category category = Category::balanced;
    std::size_t num_prompts = 0;
    std::size_t num_instances = 0;
    std::size_t num_choices = 0;
    std::vector<std::string> prompt_ids;
    std::vector<std::size_t> gold_labels;

    /// Verbalizer token log-probs, indexed (t * |X| + x) * |Y| + y.
    std::vector<std::vector<double>> choice_token_logprobs;
    /// Indexed t * |X| + x.
    std::optional<std::vector<SequenceStat>> sequence_stats;
    /// Indexed (t * |Y| + y) * 3 + c, c following content_free_inputs.
    std::optional<std::vector<double>> content_free_logits;
    /// Indexed t * |Y| + y; logits for the prompt instantiated with an empty input.
    std::optional<std::vector<double>> domain_logits;

    bool operator==(const ScoreTensor&) const = default;

    void check_prompt(std::size_t t) const
    {
        if (t >= num_prompts)
            fail(ErrorKind::out_of_range,
                 "prompt index " + std::to_string(t) + " out of range [0, " + std::to_string(num_prompts) + ")");
    }
    void check_instance(std::size_t x) const
    {
        if (x >= num_instances)
            fail(ErrorKind::out_of_range,
                 "instance index " + std::to_string(x) + " out of range [0, " + std::to_string(num_instances) + ")");
    }
    void check_choice(std::size_t y) const
    {
        if (y >= num_choices)
            fail(ErrorKind::out_of_range,
                 "choice index " + std::to_string(y) + " out of range [0, " + std::to_string(num_choices) + ")");
    }

    const std::vector<double>& choice_tokens(std::size_t t, std::size_t x, std::size_t y) const
    {
        check_prompt(t);
        check_instance(x);
        check_choice(y);
        return choice_token_logprobs[(t * num_instances + x) * num_choices + y];
    }
    std::vector<double>& choice_tokens(std::size_t t, std::size_t x, std::size_t y)
    {
        check_prompt(t);
        check_instance(x);
        check_choice(y);
        return choice_token_logprobs[(t * num_instances + x) * num_choices + y];
    }

    const SequenceStat& sequence_stat(std::size_t t, std::size_t x) const
    {
        if (!sequence_stats)
            fail(ErrorKind::missing_section, "tensor has no sequence_stats section");
        check_prompt(t);
        check_instance(x);
        return (*sequence_stats)[t * num_instances + x];
    }

    double content_free_logit(std::size_t t, std::size_t y, std::size_t c) const
    {
        if (!content_free_logits)
            fail(ErrorKind::missing_section, "tensor has no content_free section");
        check_prompt(t);
        check_choice(y);
        return (*content_free_logits)[(t * num_choices + y) * content_free_inputs.size() + c];
    }

    double domain_logit(std::size_t t, std::size_t y) const
    {
        if (!domain_logits)
            fail(ErrorKind::missing_section, "tensor has no domain section");
        check_prompt(t);
        check_choice(y);
        return (*domain_logits)[t * num_choices + y];
    }
};

/// Structural invariants of a tensor (sizes, label range, finiteness, non-empty token lists).
inline void validate(const ScoreTensor& tensor)
{
    const auto T = tensor.num_prompts, X = tensor.num_instances, Y = tensor.num_choices;
    if (T == 0 || X == 0)
        fail(ErrorKind::invariant, "tensor must have at least one prompt and one instance");
    if (Y < 2)
        fail(ErrorKind::invariant, "tensor must have at least two answer choices");
    if (tensor.prompt_ids.size() != T)
        fail(ErrorKind::invariant, "prompt_ids has " + std::to_string(tensor.prompt_ids.size()) + " entries, expected "
                                       + std::to_string(T));
    if (tensor.gold_labels.size() != X)
        fail(ErrorKind::invariant, "gold_labels has " + std::to_string(tensor.gold_labels.size())
                                       + " entries, expected " + std::to_string(X));
    for (std::size_t i = 0; i < X; ++i)
        if (tensor.gold_labels[i] >= Y)
            fail(ErrorKind::out_of_range, "gold label of instance " + std::to_string(i) + " is "
                                              + std::to_string(tensor.gold_labels[i]) + ", expected < "
                                              + std::to_string(Y));
    if (tensor.choice_token_logprobs.size() != T * X * Y)
        fail(ErrorKind::invariant, "choice_token_logprobs holds " + std::to_string(tensor.choice_token_logprobs.size())
                                       + " lists, expected " + std::to_string(T * X * Y));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t y = 0; y < Y; ++y)
            {
                const auto& tokens = tensor.choice_token_logprobs[(t * X + x) * Y + y];
                const auto key = "(t=" + std::to_string(t) + ", x=" + std::to_string(x) + ", y=" + std::to_string(y)
                                 + ")";
                if (tokens.empty())
                    fail(ErrorKind::invariant, "empty token list at " + key);
                for (double v : tokens)
                    if (!std::isfinite(v))
                        fail(ErrorKind::numeric, "non-finite token log-prob at " + key);
            }
    if (tensor.sequence_stats)
    {
        if (tensor.sequence_stats->size() != T * X)
            fail(ErrorKind::invariant, "sequence_stats size mismatch");
        for (const auto& s : *tensor.sequence_stats)
            if (!std::isfinite(s.sum_logprob) || s.token_count < 1)
                fail(ErrorKind::invariant, "sequence_stats entries need a finite sum and a positive token count");
    }
    if (tensor.content_free_logits)
    {
        if (tensor.content_free_logits->size() != T * Y * content_free_inputs.size())
            fail(ErrorKind::invariant, "content_free section size mismatch");
        for (double v : *tensor.content_free_logits)
            if (!std::isfinite(v))
                fail(ErrorKind::numeric, "non-finite content-free logit");
    }
    if (tensor.domain_logits)
    {
        if (tensor.domain_logits->size() != T * Y)
            fail(ErrorKind::invariant, "domain section size mismatch");
        for (double v : *tensor.domain_logits)
            if (!std::isfinite(v))
                fail(ErrorKind::numeric, "non-finite domain logit");
    }
}

struct AnswerDistribution
{
    std::vector<double> probs;

    bool operator==(const AnswerDistribution&) const = default;
};

inline double aggregate_tokens(std::span<const double> tokens, AggregationMode mode)
{
    if (tokens.empty())
        fail(ErrorKind::invariant, "cannot aggregate an empty token list");
    switch (mode)
    {
    case AggregationMode::first_token: return tokens.front();
    case AggregationMode::sum_logprob: return std::accumulate(tokens.begin(), tokens.end(), 0.0);
    case AggregationMode::mean_logprob:
        return std::accumulate(tokens.begin(), tokens.end(), 0.0) / static_cast<double>(tokens.size());
    }
    return 0.0;
}

inline double aggregate_choice_logit(const ScoreTensor& tensor, std::size_t t, std::size_t x, std::size_t y,
                                     AggregationMode mode)
{
    return aggregate_tokens(tensor.choice_tokens(t, x, y), mode);
}

/// Values this close (relative, floor 1) to the maximum count as tied with it.
inline constexpr double tie_tolerance = 1e-12;

/// Lowest index among the maxima. Scores that are equal in exact arithmetic often differ
/// in the last bits after rounding, so ties are taken within `tie_tolerance`.
inline std::size_t argmax(std::span<const double> values)
{
    if (values.empty())
        return 0;
    const double top = *std::max_element(values.begin(), values.end());
    const double floor = std::isfinite(top) ? top - tie_tolerance * std::max(1.0, std::abs(top)) : top;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] >= floor)
            return i;
    return 0;
}

/// Max-subtracted softmax written into `out`.
inline void softmax(std::span<const double> logits, std::span<double> out)
{
    if (logits.empty())
        fail(ErrorKind::invalid_argument, "softmax of an empty vector");
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : logits)
    {
        if (!std::isfinite(v))
            fail(ErrorKind::numeric, "non-finite logit passed to normalize");
        peak = std::max(peak, v);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
    {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& v : out)
        v /= total;
}

inline AnswerDistribution normalize(std::span<const double> logits)
{
    AnswerDistribution d{std::vector<double>(logits.size())};
    softmax(logits, d.probs);
    return d;
}

inline double entropy(std::span<const double> dist)
{
    constexpr double negligible = 1e-300;
    double total = 0.0;
    for (double q : dist)
    {
        if (!(q >= 0.0))
            fail(ErrorKind::invalid_argument, "entropy of a distribution with a negative or NaN entry");
        total += q;
    }
    if (std::abs(total - 1.0) > 1e-6)
        fail(ErrorKind::invalid_argument, "entropy of a vector summing to " + std::to_string(total));
    double h = 0.0;
    for (double q : dist)
        if (q >= negligible)
            h -= q * std::log(q);
    return std::max(h, 0.0);
}

inline AnswerDistribution one_hot(std::span<const double> dist)
{
    AnswerDistribution d{std::vector<double>(dist.size(), 0.0)};
    if (!dist.empty())
        d.probs[argmax(dist)] = 1.0;
    return d;
}

/// Instance-mean of distributions, i.e. p(y|t) under a uniform p(x|t).
inline AnswerDistribution marginal_distribution(std::span<const AnswerDistribution> dists)
{
    if (dists.empty())
        fail(ErrorKind::invalid_argument, "marginal of an empty instance set");
    AnswerDistribution m{std::vector<double>(dists.front().probs.size(), 0.0)};
    for (const auto& d : dists)
    {
        if (d.probs.size() != m.probs.size())
            fail(ErrorKind::length_mismatch, "distributions of different lengths");
        for (std::size_t y = 0; y < d.probs.size(); ++y)
            m.probs[y] += d.probs[y];
    }
    for (double& v : m.probs)
        v /= static_cast<double>(dists.size());
    return m;
}

/// Marginal over instances for prompt `t` of a distribution grid.
inline AnswerDistribution marginal_distribution(const ScoreGrid& dists, std::size_t t)
{
    if (dists.num_instances() == 0)
        fail(ErrorKind::invalid_argument, "marginal of an empty instance set");
    AnswerDistribution m{std::vector<double>(dists.num_choices(), 0.0)};
    for (std::size_t x = 0; x < dists.num_instances(); ++x)
        for (std::size_t y = 0; y < dists.num_choices(); ++y)
            m.probs[y] += dists(t, x, y);
    for (double& v : m.probs)
        v /= static_cast<double>(dists.num_instances());
    return m;
}

/// Aggregated logits log p~(y|x,t) for every (t, x, y).
inline ScoreGrid aggregated_logits(const ScoreTensor& tensor, AggregationMode mode)
{
    ScoreGrid out(tensor.num_prompts, tensor.num_instances, tensor.num_choices);
    for (std::size_t t = 0; t < tensor.num_prompts; ++t)
        for (std::size_t x = 0; x < tensor.num_instances; ++x)
            for (std::size_t y = 0; y < tensor.num_choices; ++y)
                out(t, x, y) = aggregate_tokens(tensor.choice_token_logprobs[(t * tensor.num_instances + x)
                                                                                 * tensor.num_choices
                                                                             + y],
                                                mode);
    return out;
}

/// Row-wise softmax of a grid.
inline ScoreGrid normalize_rows(const ScoreGrid& logits)
{
    ScoreGrid out(logits.num_prompts(), logits.num_instances(), logits.num_choices());
    for (std::size_t t = 0; t < logits.num_prompts(); ++t)
        for (std::size_t x = 0; x < logits.num_instances(); ++x)
            softmax(logits.row(t, x), out.row(t, x));
    return out;
}

/// p(y|x,t) for every (t, x).
inline ScoreGrid answer_distributions(const ScoreTensor& tensor, AggregationMode mode)
{
    return normalize_rows(aggregated_logits(tensor, mode));
}

/// Row-wise argmax of a grid.
inline IndexTable argmax_rows(const ScoreGrid& scores)
{
    IndexTable out(scores.num_prompts(), scores.num_instances());
    for (std::size_t t = 0; t < scores.num_prompts(); ++t)
        for (std::size_t x = 0; x < scores.num_instances(); ++x)
            out(t, x) = argmax(scores.row(t, x));
    return out;
}

} // namespace psel
