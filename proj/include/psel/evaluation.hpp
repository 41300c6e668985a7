#pragma once

#include <psel/error.hpp>
#include <psel/selection.hpp>
#include <psel/tensor.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace psel
{

inline double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> gold)
{
    if (predictions.size() != gold.size())
        fail(ErrorKind::length_mismatch, "accuracy: " + std::to_string(predictions.size()) + " predictions vs "
                                             + std::to_string(gold.size()) + " gold labels");
    if (gold.empty())
        fail(ErrorKind::invalid_argument, "accuracy of an empty instance set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        hits += predictions[i] == gold[i];
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

/// Unweighted mean of per-class F1. With `all_classes`, every one of the `num_choices` classes
/// counts and a class never predicted nor present scores 0; otherwise only classes that occur
/// in gold or predictions are averaged.
inline double macro_f1(std::span<const std::size_t> predictions, std::span<const std::size_t> gold,
                       std::size_t num_choices, bool all_classes = true)
{
    if (predictions.size() != gold.size())
        fail(ErrorKind::length_mismatch, "macro_f1: prediction and gold lengths differ");
    if (gold.empty())
        fail(ErrorKind::invalid_argument, "macro_f1 of an empty instance set");
    std::vector<std::size_t> tp(num_choices, 0), predicted(num_choices, 0), actual(num_choices, 0);
    for (std::size_t i = 0; i < gold.size(); ++i)
    {
        if (predictions[i] >= num_choices || gold[i] >= num_choices)
            fail(ErrorKind::out_of_range, "macro_f1: label out of range at position " + std::to_string(i));
        ++predicted[predictions[i]];
        ++actual[gold[i]];
        tp[gold[i]] += predictions[i] == gold[i];
    }
    double total = 0.0;
    std::size_t classes = 0;
    for (std::size_t c = 0; c < num_choices; ++c)
    {
        if (!all_classes && predicted[c] == 0 && actual[c] == 0)
            continue;
        ++classes;
        // F1 = 2PR/(P+R) = 2TP / (predicted + actual)
        if (tp[c] > 0)
            total += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(predicted[c] + actual[c]);
    }
    return classes ? total / static_cast<double>(classes) : 0.0;
}

inline double scaled_metric(double selected, double best)
{
    if (!(best > 0.0))
        fail(ErrorKind::invalid_argument, "scaled metric needs a positive best-prompt score");
    return selected / best;
}

struct PearsonResult
{
    double r = 0.0;
    double p_value = 1.0;
    /// Two-sided p < 0.05.
    bool significant = false;
};

inline PearsonResult pearson_corr(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size())
        fail(ErrorKind::length_mismatch, "pearson: series lengths differ");
    const auto n = xs.size();
    if (n < 2)
        fail(ErrorKind::invalid_argument, "pearson: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        fail(ErrorKind::zero_variance, "pearson: a series has zero variance");

    PearsonResult out;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (n == 2)
    {
        out.p_value = 1.0;
    }
    else if (std::abs(out.r) >= 1.0)
    {
        out.p_value = 0.0;
    }
    else
    {
        const double df = static_cast<double>(n - 2);
        const double stat = out.r * std::sqrt(df / (1.0 - out.r * out.r));
        boost::math::students_t dist(df);
        out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(stat)));
    }
    out.significant = out.p_value < 0.05;
    return out;
}

/// Fraction of prompts whose metric strictly increased.
inline double calibration_improvement_ratio(std::span<const double> base, std::span<const double> calibrated)
{
    if (base.size() != calibrated.size())
        fail(ErrorKind::length_mismatch, "improvement ratio: prompt sets differ ("
                                             + std::to_string(base.size()) + " vs "
                                             + std::to_string(calibrated.size()) + ")");
    if (base.empty())
        fail(ErrorKind::invalid_argument, "improvement ratio of an empty prompt set");
    std::size_t improved = 0;
    for (std::size_t i = 0; i < base.size(); ++i)
        improved += calibrated[i] > base[i];
    return static_cast<double>(improved) / static_cast<double>(base.size());
}

struct PromptMetrics
{
    std::vector<double> accuracy;
    std::vector<double> macro_f1;
};

inline PromptMetrics per_prompt_metrics(const IndexTable& answers, std::span<const std::size_t> gold,
                                        std::size_t num_choices)
{
    PromptMetrics out;
    for (std::size_t t = 0; t < answers.num_prompts(); ++t)
    {
        out.accuracy.push_back(accuracy(answers.row(t), gold));
        out.macro_f1.push_back(macro_f1(answers.row(t), gold, num_choices));
    }
    return out;
}

/// Prediction sequence read through each instance's chosen prompt.
inline std::vector<std::size_t> selected_predictions(const SelectionOutcome& outcome, const IndexTable& answers)
{
    if (answers.num_instances() == 0)
        fail(ErrorKind::invalid_argument, "no instances to evaluate");
    std::vector<std::size_t> preds(answers.num_instances());
    for (std::size_t x = 0; x < preds.size(); ++x)
    {
        const auto t = outcome.prompt_for(x);
        if (t >= answers.num_prompts())
            fail(ErrorKind::out_of_range, "selected prompt " + std::to_string(t) + " out of range");
        preds[x] = answers(t, x);
    }
    return preds;
}

struct Performance
{
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

inline Performance instance_wise_performance(const SelectionOutcome& outcome, const IndexTable& answers,
                                             std::span<const std::size_t> gold, std::size_t num_choices)
{
    const auto preds = selected_predictions(outcome, answers);
    return {accuracy(preds, gold), macro_f1(preds, gold, num_choices)};
}

struct Summary
{
    double best = 0.0;
    double average = 0.0;
    double worst = 0.0;
};

inline Summary summarize(std::span<const double> values)
{
    if (values.empty())
        fail(ErrorKind::invalid_argument, "summary of an empty series");
    Summary s{values[0], 0.0, values[0]};
    for (double v : values)
    {
        s.best = std::max(s.best, v);
        s.worst = std::min(s.worst, v);
        s.average += v;
    }
    s.average /= static_cast<double>(values.size());
    return s;
}

struct MetricReport
{
    PromptMetrics prompts;
    Performance selected;
    Summary accuracy;
    Summary macro_f1;
    /// Unset when the best prompt scores 0.
    std::optional<double> scaled_accuracy;
    std::optional<double> scaled_f1;
};

inline MetricReport evaluate(const ScoreTensor& tensor, const Selection& selection)
{
    MetricReport r;
    r.prompts = per_prompt_metrics(selection.answers, tensor.gold_labels, tensor.num_choices);
    r.selected = instance_wise_performance(selection.outcome, selection.answers, tensor.gold_labels,
                                           tensor.num_choices);
    r.accuracy = summarize(r.prompts.accuracy);
    r.macro_f1 = summarize(r.prompts.macro_f1);
    if (r.accuracy.best > 0.0)
        r.scaled_accuracy = scaled_metric(r.selected.accuracy, r.accuracy.best);
    if (r.macro_f1.best > 0.0)
        r.scaled_f1 = scaled_metric(r.selected.macro_f1, r.macro_f1.best);
    return r;
}

/// Scalar summary of one report, used when averaging across models or datasets.
struct MetricSummary
{
    Performance selected;
    Summary accuracy;
    Summary macro_f1;
    double scaled_accuracy = 0.0;
    double scaled_f1 = 0.0;
};

inline MetricSummary summary_of(const MetricReport& r)
{
    return {r.selected, r.accuracy, r.macro_f1, r.scaled_accuracy.value_or(0.0), r.scaled_f1.value_or(0.0)};
}

/// Field-wise arithmetic mean of several reports.
inline MetricSummary average_reports(std::span<const MetricReport> reports)
{
    if (reports.empty())
        fail(ErrorKind::invalid_argument, "cannot average zero reports");
    MetricSummary m;
    for (const auto& r : reports)
    {
        const auto s = summary_of(r);
        m.selected.accuracy += s.selected.accuracy;
        m.selected.macro_f1 += s.selected.macro_f1;
        m.accuracy.best += s.accuracy.best;
        m.accuracy.average += s.accuracy.average;
        m.accuracy.worst += s.accuracy.worst;
        m.macro_f1.best += s.macro_f1.best;
        m.macro_f1.average += s.macro_f1.average;
        m.macro_f1.worst += s.macro_f1.worst;
        m.scaled_accuracy += s.scaled_accuracy;
        m.scaled_f1 += s.scaled_f1;
    }
    const auto n = static_cast<double>(reports.size());
    for (double* v : {&m.selected.accuracy, &m.selected.macro_f1, &m.accuracy.best, &m.accuracy.average,
                      &m.accuracy.worst, &m.macro_f1.best, &m.macro_f1.average, &m.macro_f1.worst,
                      &m.scaled_accuracy, &m.scaled_f1})
        *v /= n;
    return m;
}

} // namespace psel
