#include "fixtures.hpp"

#include <psel/tensor_io.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

using namespace psel;

namespace
{

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

std::string join(const std::vector<std::string>& lines)
{
    std::string s;
    for (const auto& l : lines)
        s += l + "\n";
    return s;
}

Error read_error(const std::string& text)
{
    try
    {
        tensor_from_string(text);
    }
    catch (const Error& e)
    {
        return e;
    }
    ADD_FAILURE() << "expected read to fail";
    return Error(ErrorKind::invariant, "");
}

ScoreTensor small()
{
    SynthSpec s;
    s.num_prompts = 2;
    s.num_instances = 3;
    s.num_choices = 2;
    s.seed = 4;
    return synth_tensor(s);
}

} // namespace

TEST(TensorIo, RoundTripIsLosslessAndCanonical)
{
    for (std::uint64_t seed = 0; seed < 25; ++seed)
    {
        const auto t = test::random_tensor(seed, 4, 6, 4);
        const auto text = tensor_to_string(t);
        const auto back = tensor_from_string(text);
        EXPECT_EQ(back, t);
        EXPECT_EQ(tensor_to_string(back), text);
    }
}

TEST(TensorIo, OptionalSectionsMayBeAbsent)
{
    auto t = small();
    t.sequence_stats.reset();
    t.content_free_logits.reset();
    t.domain_logits.reset();
    EXPECT_EQ(tensor_from_string(tensor_to_string(t)), t);
}

TEST(TensorIo, RecordOrderDoesNotMatter)
{
    const auto t = small();
    auto lines = lines_of(tensor_to_string(t));
    std::reverse(lines.begin() + 1, lines.end());
    EXPECT_EQ(tensor_from_string(join(lines)), t);
}

TEST(TensorIo, MissingRecordNamesTheKey)
{
    auto lines = lines_of(tensor_to_string(small()));
    const auto target = std::find_if(lines.begin(), lines.end(), [](const std::string& l) {
        return l.find("\"section\":\"choice\",\"t\":0,\"x\":1,\"y\":0") != std::string::npos;
    });
    ASSERT_NE(target, lines.end());
    lines.erase(target);
    const auto e = read_error(join(lines));
    EXPECT_EQ(e.kind(), ErrorKind::invariant);
    EXPECT_NE(std::string(e.what()).find("choice(t=0, x=1, y=0)"), std::string::npos) << e.what();
}

TEST(TensorIo, DuplicateRecordIsRejected)
{
    auto lines = lines_of(tensor_to_string(small()));
    lines.push_back(lines[1]);
    const auto e = read_error(join(lines));
    EXPECT_EQ(e.kind(), ErrorKind::invariant);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
}

TEST(TensorIo, IndexOutOfRange)
{
    auto lines = lines_of(tensor_to_string(small()));
    lines.push_back(R"({"section":"domain","t":5,"y":0,"logit":-1.0})");
    EXPECT_EQ(read_error(join(lines)).kind(), ErrorKind::out_of_range);
}

TEST(TensorIo, VersionMismatch)
{
    auto text = tensor_to_string(small());
    const auto pos = text.find("\"format_version\":1");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 18, "\"format_version\":2");
    EXPECT_EQ(read_error(text).kind(), ErrorKind::version);
}

TEST(TensorIo, MalformedInput)
{
    EXPECT_EQ(read_error("").kind(), ErrorKind::parse);
    EXPECT_EQ(read_error("{not json\n").kind(), ErrorKind::parse);
    auto lines = lines_of(tensor_to_string(small()));
    lines.push_back(R"({"section":"domain","t":"zero","y":0,"logit":-1.0})");
    EXPECT_EQ(read_error(join(lines)).kind(), ErrorKind::parse);
}

TEST(TensorIo, FileRoundTrip)
{
    const auto path = (std::filesystem::temp_directory_path() / "psel_io_roundtrip.jsonl").string();
    const auto t = small();
    save_tensor(path, t);
    EXPECT_EQ(load_tensor(path), t);
    std::filesystem::remove(path);
    try
    {
        load_tensor(path);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }
}
