#pragma once

// Tensor file: line-delimited JSON. Line 1 is the header object, every further
// line is one record:
//
//   {"format":"psel-tensor","format_version":1,"dataset_id":..,"category":..,
//    "num_prompts":T,"num_instances":X,"num_choices":Y,"prompt_ids":[..],
//    "gold_labels":[..],"has_sequence_stats":b,"has_content_free":b,"has_domain":b}
//   {"section":"choice","t":0,"x":0,"y":0,"logprobs":[-0.4,-1.2]}
//   {"section":"sequence","t":0,"x":0,"sum_logprob":-31.5,"token_count":12}
//   {"section":"content_free","t":0,"y":0,"input":"N/A","logit":-2.1}
//   {"section":"domain","t":0,"y":0,"logit":-1.7}
//
// Records may appear in any order on read. Writes are canonical: sections in the
// order above, keys in (t, x, y, input) order.

#include <psel/error.hpp>
#include <psel/tensor.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace psel
{

inline constexpr int tensor_format_version = 1;
inline constexpr std::string_view tensor_format_name = "psel-tensor";

namespace detail
{

using ojson = nlohmann::ordered_json;

template <typename T>
T field(const nlohmann::json& obj, const char* name, const std::string& where)
{
    if (!obj.is_object() || !obj.contains(name))
        fail(ErrorKind::parse, where + ": missing field '" + name + "'");
    try
    {
        return obj.at(name).get<T>();
    }
    catch (const nlohmann::json::exception&)
    {
        fail(ErrorKind::parse, where + ": field '" + name + "' has the wrong type");
    }
}

inline std::size_t index_field(const nlohmann::json& obj, const char* axis, std::size_t limit,
                               const std::string& where)
{
    const auto& v = obj.contains(axis) ? obj.at(axis) : nlohmann::json();
    if (!v.is_number_integer())
        fail(ErrorKind::parse, where + ": field '" + axis + "' must be an integer");
    const auto i = v.get<std::int64_t>();
    if (i < 0 || static_cast<std::size_t>(i) >= limit)
        fail(ErrorKind::out_of_range, where + ": " + axis + "=" + std::to_string(i) + " out of range [0, "
                                          + std::to_string(limit) + ")");
    return static_cast<std::size_t>(i);
}

inline double finite_field(const nlohmann::json& obj, const char* name, const std::string& where)
{
    const auto v = field<double>(obj, name, where);
    if (!std::isfinite(v))
        fail(ErrorKind::numeric, where + ": field '" + name + "' is not finite");
    return v;
}

inline std::string key_name(std::string_view section, std::initializer_list<std::pair<const char*, std::string>> k)
{
    std::string s = std::string(section) + "(";
    bool first = true;
    for (const auto& [name, value] : k)
    {
        if (!first)
            s += ", ";
        s += std::string(name) + "=" + value;
        first = false;
    }
    return s + ")";
}

} // namespace detail

inline ScoreTensor read_tensor(std::istream& in)
{
    using nlohmann::json;
    std::string line;
    std::size_t line_no = 0;

    auto next_record = [&](json& out) -> bool {
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            try
            {
                out = json::parse(line);
            }
            catch (const json::parse_error& e)
            {
                fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": " + e.what());
            }
            return true;
        }
        return false;
    };

    json header;
    if (!next_record(header))
        fail(ErrorKind::parse, "empty tensor file");
    const std::string where = "header";
    if (detail::field<std::string>(header, "format", where) != tensor_format_name)
        fail(ErrorKind::parse, "not a psel tensor file");
    const auto version = detail::field<int>(header, "format_version", where);
    if (version != tensor_format_version)
        fail(ErrorKind::version, "unsupported format_version " + std::to_string(version) + " (expected "
                                     + std::to_string(tensor_format_version) + ")");

    ScoreTensor t;
    t.dataset_id = detail::field<std::string>(header, "dataset_id", where);
    const auto category = detail::field<std::string>(header, "category", where);
    const auto cat = parse_category(category);
    if (!cat)
        fail(ErrorKind::parse, "unknown category '" + category + "'");
    t.category = *cat;
    t.num_prompts = detail::field<std::size_t>(header, "num_prompts", where);
    t.num_instances = detail::field<std::size_t>(header, "num_instances", where);
    t.num_choices = detail::field<std::size_t>(header, "num_choices", where);
    t.prompt_ids = detail::field<std::vector<std::string>>(header, "prompt_ids", where);
    t.gold_labels = detail::field<std::vector<std::size_t>>(header, "gold_labels", where);
    const bool has_seq = detail::field<bool>(header, "has_sequence_stats", where);
    const bool has_cf = detail::field<bool>(header, "has_content_free", where);
    const bool has_dom = detail::field<bool>(header, "has_domain", where);

    const auto T = t.num_prompts, X = t.num_instances, Y = t.num_choices;
    const auto C = content_free_inputs.size();
    if (T == 0 || X == 0 || Y < 2)
        fail(ErrorKind::invariant, "header needs num_prompts >= 1, num_instances >= 1, num_choices >= 2");
    if (t.prompt_ids.size() != T)
        fail(ErrorKind::invariant, "header: prompt_ids length differs from num_prompts");
    if (t.gold_labels.size() != X)
        fail(ErrorKind::invariant, "header: gold_labels length differs from num_instances");
    for (std::size_t i = 0; i < X; ++i)
        if (t.gold_labels[i] >= Y)
            fail(ErrorKind::out_of_range, "header: gold_labels[" + std::to_string(i) + "]="
                                              + std::to_string(t.gold_labels[i]) + " out of range [0, "
                                              + std::to_string(Y) + ")");

    t.choice_token_logprobs.assign(T * X * Y, {});
    std::vector<char> seen_choice(T * X * Y, 0), seen_seq, seen_cf, seen_dom;
    if (has_seq)
    {
        t.sequence_stats.emplace(T * X);
        seen_seq.assign(T * X, 0);
    }
    if (has_cf)
    {
        t.content_free_logits.emplace(T * Y * C, 0.0);
        seen_cf.assign(T * Y * C, 0);
    }
    if (has_dom)
    {
        t.domain_logits.emplace(T * Y, 0.0);
        seen_dom.assign(T * Y, 0);
    }

    auto mark = [](std::vector<char>& seen, std::size_t i, const std::string& key) {
        if (seen[i])
            fail(ErrorKind::invariant, "duplicate record " + key);
        seen[i] = 1;
    };

    json rec;
    while (next_record(rec))
    {
        const std::string where_rec = "line " + std::to_string(line_no);
        const auto section = detail::field<std::string>(rec, "section", where_rec);
        if (section == "choice")
        {
            const auto ti = detail::index_field(rec, "t", T, where_rec);
            const auto xi = detail::index_field(rec, "x", X, where_rec);
            const auto yi = detail::index_field(rec, "y", Y, where_rec);
            const auto key = detail::key_name(
                "choice", {{"t", std::to_string(ti)}, {"x", std::to_string(xi)}, {"y", std::to_string(yi)}});
            const auto idx = (ti * X + xi) * Y + yi;
            mark(seen_choice, idx, key);
            auto lp = detail::field<std::vector<double>>(rec, "logprobs", where_rec);
            if (lp.empty())
                fail(ErrorKind::invariant, "empty token list at " + key);
            t.choice_token_logprobs[idx] = std::move(lp);
        }
        else if (section == "sequence")
        {
            if (!has_seq)
                fail(ErrorKind::invariant, where_rec + ": sequence record but header has_sequence_stats=false");
            const auto ti = detail::index_field(rec, "t", T, where_rec);
            const auto xi = detail::index_field(rec, "x", X, where_rec);
            mark(seen_seq, ti * X + xi,
                 detail::key_name("sequence", {{"t", std::to_string(ti)}, {"x", std::to_string(xi)}}));
            auto& s = (*t.sequence_stats)[ti * X + xi];
            s.sum_logprob = detail::finite_field(rec, "sum_logprob", where_rec);
            s.token_count = detail::field<std::int64_t>(rec, "token_count", where_rec);
        }
        else if (section == "content_free")
        {
            if (!has_cf)
                fail(ErrorKind::invariant, where_rec + ": content_free record but header has_content_free=false");
            const auto ti = detail::index_field(rec, "t", T, where_rec);
            const auto yi = detail::index_field(rec, "y", Y, where_rec);
            const auto input = detail::field<std::string>(rec, "input", where_rec);
            std::size_t ci = C;
            for (std::size_t c = 0; c < C; ++c)
                if (content_free_inputs[c] == input)
                    ci = c;
            if (ci == C)
                fail(ErrorKind::out_of_range, where_rec + ": unknown content-free input '" + input + "'");
            const auto idx = (ti * Y + yi) * C + ci;
            mark(seen_cf, idx,
                 detail::key_name("content_free",
                                  {{"t", std::to_string(ti)}, {"y", std::to_string(yi)}, {"input", '"' + input + '"'}}));
            (*t.content_free_logits)[idx] = detail::finite_field(rec, "logit", where_rec);
        }
        else if (section == "domain")
        {
            if (!has_dom)
                fail(ErrorKind::invariant, where_rec + ": domain record but header has_domain=false");
            const auto ti = detail::index_field(rec, "t", T, where_rec);
            const auto yi = detail::index_field(rec, "y", Y, where_rec);
            mark(seen_dom, ti * Y + yi,
                 detail::key_name("domain", {{"t", std::to_string(ti)}, {"y", std::to_string(yi)}}));
            (*t.domain_logits)[ti * Y + yi] = detail::finite_field(rec, "logit", where_rec);
        }
        else
        {
            fail(ErrorKind::parse, where_rec + ": unknown section '" + section + "'");
        }
    }

    // Every expected key must be present exactly once.
    for (std::size_t ti = 0; ti < T; ++ti)
        for (std::size_t xi = 0; xi < X; ++xi)
        {
            for (std::size_t yi = 0; yi < Y; ++yi)
                if (!seen_choice[(ti * X + xi) * Y + yi])
                    fail(ErrorKind::invariant,
                         "missing record " + detail::key_name("choice", {{"t", std::to_string(ti)},
                                                                         {"x", std::to_string(xi)},
                                                                         {"y", std::to_string(yi)}}));
            if (has_seq && !seen_seq[ti * X + xi])
                fail(ErrorKind::invariant, "missing record " + detail::key_name("sequence", {{"t", std::to_string(ti)},
                                                                                             {"x", std::to_string(xi)}}));
        }
    for (std::size_t ti = 0; ti < T; ++ti)
        for (std::size_t yi = 0; yi < Y; ++yi)
        {
            for (std::size_t c = 0; c < C && has_cf; ++c)
                if (!seen_cf[(ti * Y + yi) * C + c])
                    fail(ErrorKind::invariant,
                         "missing record "
                             + detail::key_name("content_free",
                                                {{"t", std::to_string(ti)},
                                                 {"y", std::to_string(yi)},
                                                 {"input", '"' + std::string(content_free_inputs[c]) + '"'}}));
            if (has_dom && !seen_dom[ti * Y + yi])
                fail(ErrorKind::invariant, "missing record " + detail::key_name("domain", {{"t", std::to_string(ti)},
                                                                                           {"y", std::to_string(yi)}}));
        }

    validate(t);
    return t;
}

inline void write_tensor(std::ostream& out, const ScoreTensor& t)
{
    validate(t);
    using detail::ojson;
    const auto T = t.num_prompts, X = t.num_instances, Y = t.num_choices;
    const auto C = content_free_inputs.size();

    ojson header;
    header["format"] = tensor_format_name;
    header["format_version"] = tensor_format_version;
    header["dataset_id"] = t.dataset_id;
    header["category"] = to_string(t.category);
    header["num_prompts"] = T;
    header["num_instances"] = X;
    header["num_choices"] = Y;
    header["prompt_ids"] = t.prompt_ids;
    header["gold_labels"] = t.gold_labels;
    header["has_sequence_stats"] = t.sequence_stats.has_value();
    header["has_content_free"] = t.content_free_logits.has_value();
    header["has_domain"] = t.domain_logits.has_value();
    out << header.dump() << '\n';

    for (std::size_t ti = 0; ti < T; ++ti)
        for (std::size_t xi = 0; xi < X; ++xi)
            for (std::size_t yi = 0; yi < Y; ++yi)
            {
                ojson r;
                r["section"] = "choice";
                r["t"] = ti;
                r["x"] = xi;
                r["y"] = yi;
                r["logprobs"] = t.choice_token_logprobs[(ti * X + xi) * Y + yi];
                out << r.dump() << '\n';
            }
    if (t.sequence_stats)
        for (std::size_t ti = 0; ti < T; ++ti)
            for (std::size_t xi = 0; xi < X; ++xi)
            {
                const auto& s = (*t.sequence_stats)[ti * X + xi];
                ojson r;
                r["section"] = "sequence";
                r["t"] = ti;
                r["x"] = xi;
                r["sum_logprob"] = s.sum_logprob;
                r["token_count"] = s.token_count;
                out << r.dump() << '\n';
            }
    if (t.content_free_logits)
        for (std::size_t ti = 0; ti < T; ++ti)
            for (std::size_t yi = 0; yi < Y; ++yi)
                for (std::size_t c = 0; c < C; ++c)
                {
                    ojson r;
                    r["section"] = "content_free";
                    r["t"] = ti;
                    r["y"] = yi;
                    r["input"] = content_free_inputs[c];
                    r["logit"] = (*t.content_free_logits)[(ti * Y + yi) * C + c];
                    out << r.dump() << '\n';
                }
    if (t.domain_logits)
        for (std::size_t ti = 0; ti < T; ++ti)
            for (std::size_t yi = 0; yi < Y; ++yi)
            {
                ojson r;
                r["section"] = "domain";
                r["t"] = ti;
                r["y"] = yi;
                r["logit"] = (*t.domain_logits)[ti * Y + yi];
                out << r.dump() << '\n';
            }
}

inline std::string tensor_to_string(const ScoreTensor& t)
{
    std::ostringstream os;
    write_tensor(os, t);
    return os.str();
}

inline ScoreTensor tensor_from_string(const std::string& text)
{
    std::istringstream is(text);
    return read_tensor(is);
}

inline ScoreTensor load_tensor(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::io, "cannot open tensor file '" + path + "'");
    return read_tensor(in);
}

inline void save_tensor(const std::string& path, const ScoreTensor& t)
{
    std::ofstream out(path);
    if (!out)
        fail(ErrorKind::io, "cannot write tensor file '" + path + "'");
    write_tensor(out, t);
    if (!out)
        fail(ErrorKind::io, "write to '" + path + "' failed");
}

} // namespace psel
