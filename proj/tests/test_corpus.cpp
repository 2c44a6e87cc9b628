#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "seqreg/corpus.hpp"
#include "seqreg/rng.hpp"
#include "seqreg/synthetic.hpp"
#include "test_util.hpp"

using namespace seqreg;

namespace {

// Minimal writer for the retained columns, used to check that parsing is a
// left inverse of serialization.
std::string to_conllu(const DepSentence& s) {
    std::ostringstream out;
    for (const Token& t : s.tokens) {
        const int head1 = t.head == Token::kRoot ? 0 : t.head + 1;
        out << (t.index + 1) << '\t' << t.surface << "\t_\t_\t_\t_\t" << head1 << '\t'
            << t.deprel << "\t_\t_\n";
    }
    out << '\n';
    return out.str();
}

} // namespace

TEST_CASE("parse_conllu maps columns and finds the root") {
    const std::string text =
        "1\tsushi\t_\t_\t_\t_\t3\tnsubj\t_\t_\n"
        "2\tis\t_\t_\t_\t_\t3\tcop\t_\t_\n"
        "3\tgood\t_\t_\t_\t_\t0\troot\t_\t_\n";
    const auto sentences = parse_conllu(text);
    REQUIRE(sentences.size() == 1);
    const auto& s = sentences[0];
    REQUIRE(s.size() == 3);
    CHECK(s.tokens[0].surface == "sushi");
    CHECK(s.tokens[0].head == 2);
    CHECK(s.tokens[0].deprel == "nsubj");
    CHECK(s.tokens[1].head == 2);
    CHECK(s.tokens[2].head == Token::kRoot);
}

TEST_CASE("parse_conllu edge cases") {
    SECTION("empty input gives an empty list") {
        CHECK(parse_conllu("").empty());
        CHECK(parse_conllu("\n\n").empty());
    }
    SECTION("two-cycle is a structure error") {
        const std::string text =
            "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n"
            "2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n";
        CHECK_THROWS_MATCHES(parse_conllu(text), Error,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::StartsWith("structure")));
    }
    SECTION("multiple roots are a structure error naming the sentence") {
        const std::string text =
            "# sent_id = bad-7\n"
            "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n";
        CHECK_THROWS_WITH(parse_conllu(text), Catch::Matchers::ContainsSubstring("bad-7"));
    }
    SECTION("wrong column count reports the line number") {
        const std::string text = "1\tonly\tthree\n";
        CHECK_THROWS_WITH(parse_conllu(text), Catch::Matchers::ContainsSubstring("line 1"));
    }
    SECTION("multiword ranges and empty nodes are skipped") {
        const std::string text =
            "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n"
            "2.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_\n";
        const auto sentences = parse_conllu(text);
        REQUIRE(sentences.size() == 1);
        CHECK(sentences[0].size() == 2);
    }
    SECTION("deprel is lowercased") {
        const std::string text = "1\ta\t_\t_\t_\t_\t0\tROOT\t_\t_\n";
        CHECK(parse_conllu(text)[0].tokens[0].deprel == "root");
    }
}

TEST_CASE("parse_conllu inverts serialization of retained fields") {
    SplitMix64 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const auto original = random_dep_sentence(1 + rng.next_below(12), rng);
        const auto reparsed = parse_conllu(to_conllu(original));
        REQUIRE(reparsed.size() == 1);
        REQUIRE(reparsed[0].size() == original.size());
        for (std::size_t i = 0; i < original.size(); ++i) {
            CHECK(reparsed[0].tokens[i].surface == original.tokens[i].surface);
            CHECK(reparsed[0].tokens[i].head == original.tokens[i].head);
            CHECK(reparsed[0].tokens[i].deprel == original.tokens[i].deprel);
        }
    }
}

TEST_CASE("adjacency matches the head list") {
    SECTION("single token gives a 1x1 zero matrix") {
        SplitMix64 rng(1);
        const auto s = random_dep_sentence(1, rng);
        const auto da = adjacency(s);
        CHECK(da.n == 1);
        CHECK(da.ones() == 0);
    }
    SECTION("three-token copula tree") {
        const auto s = parse_conllu(
            "1\tsushi\t_\t_\t_\t_\t2\tnsubj\t_\t_\n"
            "2\tis\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "3\tgood\t_\t_\t_\t_\t2\tacomp\t_\t_\n")[0];
        const auto da = adjacency(s);
        CHECK(da.at(1, 0));
        CHECK(da.at(1, 2));
        CHECK(da.ones() == 2);
    }
    SECTION("random tree agrees with a brute-force parent scan") {
        SplitMix64 rng(99);
        const auto s = random_dep_sentence(6, rng);
        const auto da = adjacency(s);
        CHECK(da.ones() == 5);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                CHECK(da.at(i, j) == (s.tokens[j].head == static_cast<int>(i)));
    }
}

TEST_CASE("tree invariants hold for random sentences") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.next_below(30);
        const auto s = random_dep_sentence(n, rng);
        REQUIRE_NOTHROW(validate_tree(s));
        const auto da = adjacency(s);
        CHECK(da.ones() == n - 1);
        std::size_t roots = 0;
        for (const auto& t : s.tokens) roots += t.head == Token::kRoot;
        CHECK(roots == 1);
        for (std::size_t j = 0; j < n; ++j) { // each node has at most one parent
            std::size_t parents = 0;
            for (std::size_t i = 0; i < n; ++i) parents += da.at(i, j);
            CHECK(parents <= 1);
        }
    }
}

TEST_CASE("load_examples validates against the task signature") {
    SECTION("ACOS accepts the literal NULL aspect") {
        const std::string line =
            R"({"id": "x", "text": "t", "tokens": ["fairly", "expensive"], "tuples": )"
            R"([{"category": "RESTAURANT#PRICES", "aspect": "NULL", "opinion": "expensive", )"
            R"("polarity": "negative"}]})"
            "\n";
        const auto examples = load_examples_text(line, task_spec(Task::ACOS));
        REQUIRE(examples.size() == 1);
        CHECK(examples[0].tuples[0].aspect == "NULL");
    }
    SECTION("ASTE line missing the opinion is a schema error") {
        const std::string line =
            R"({"id": "bad-1", "text": "t", "tokens": ["a"], "tuples": )"
            R"([{"aspect": "a", "polarity": "positive"}]})"
            "\n";
        CHECK_THROWS_WITH(load_examples_text(line, task_spec(Task::ASTE)),
                          Catch::Matchers::ContainsSubstring("bad-1"));
    }
    SECTION("well-formed two-line file loads two examples") {
        const auto examples = load_examples(data_file("sample_acos.jsonl"), task_spec(Task::ACOS));
        CHECK(examples.size() == 2);
    }
    SECTION("gold example without tuples is rejected unless allowed") {
        const std::string line = R"({"id": "e", "text": "t", "tokens": ["a"], "tuples": []})"
                                 "\n";
        CHECK_THROWS_AS(load_examples_text(line, task_spec(Task::ASTE)), Error);
        LoadOptions opts;
        opts.require_tuples = false;
        CHECK(load_examples_text(line, task_spec(Task::ASTE), opts).size() == 1);
    }
    SECTION("span outside the token range is a schema error") {
        const std::string line =
            R"({"id": "sp", "text": "t", "tokens": ["a", "b"], "tuples": )"
            R"([{"aspect": "a", "opinion": "b", "polarity": "neutral", )"
            R"("aspect_span": [0, 1], "opinion_span": [1, 5]}]})"
            "\n";
        CHECK_THROWS_AS(load_examples_text(line, task_spec(Task::ASTE)), Error);
    }
}

TEST_CASE("hash_reprs is a pure deterministic function") {
    const std::vector<std::string> tokens = {"the", "pizza", "rocks"};
    const auto a = hash_reprs(tokens, 4, 5);
    const auto b = hash_reprs(tokens, 4, 5);
    CHECK(a == b);

    SECTION("distinct seeds change at least one entry") {
        const auto c = hash_reprs(tokens, 4, 6);
        CHECK_FALSE(a == c);
    }
    SECTION("all entries lie in [-1, 1)") {
        SplitMix64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::string> toks;
            for (std::size_t i = 0; i < 1 + rng.next_below(8); ++i)
                toks.push_back("t" + std::to_string(rng.next_below(1000)));
            const auto m = hash_reprs(toks, 1 + rng.next_below(6),
                                      static_cast<std::int64_t>(rng.next_u64()));
            for (double v : m.data()) {
                CHECK(v >= -1.0);
                CHECK(v < 1.0);
            }
        }
    }
    SECTION("dim zero is rejected") {
        CHECK_THROWS_AS(hash_reprs(tokens, 0, 1), Error);
    }
}

TEST_CASE("matrix file round trip") {
    const std::string text = "2 3\n0.5 -1.25 3\n4 5e-1 -6\n";
    const auto m = read_matrix_text(text);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    CHECK(m(0, 1) == -1.25);
    CHECK(m(1, 2) == -6.0);
    CHECK_THROWS_AS(read_matrix_text("2 2\n1 2\n3\n"), Error);
    CHECK_THROWS_AS(read_matrix_text("garbage"), Error);
}
