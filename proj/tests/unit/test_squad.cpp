#include "doctest.h"
#include "lexlift/error.hpp"
#include "lexlift/task/squad.hpp"
#include "support.hpp"

using namespace lexlift;
using namespace lexlift::task;
using testsupport::Rng;
using Golds = std::vector<std::string>;

TEST_CASE("normalization follows the SQuAD scorer") {
  CHECK(normalize_answer("The  Cat, a dog & AN emu!") == "cat dog emu");
  CHECK(normalize_answer("theory another") == "theory another");  // articles only as whole words
  CHECK(normalize_answer("(MERS-CoV)") == "merscov");
  CHECK(normalize_answer("13.3% (95% CI 6.9-23.6%)") == "133 95 ci 69236");
  CHECK(normalize_answer("  \t\n ") == "");
  CHECK(normalize_answer("\xC3\x89T\xC3\x89") == "\xC3\xA9t\xC3\xA9");  // non-ASCII lowercased, kept
  CHECK(normalize_answer("a-b") == "ab");
}

TEST_CASE("verbatim prediction scores 1 everywhere") {
  const Golds golds{"severe acute pneumonia"};
  const auto s = qa_score("severe acute pneumonia", golds);
  CHECK(s.em == 1);
  CHECK(s.f1 == 1);
  CHECK(s.substr == 1);
}

TEST_CASE("the year example: not exact, but a substring") {
  const Golds golds{
      "(MERS-CoV) was first isolated in 2012, in a 60-year-old man who died in Jeddah, KSA due to severe acute "
      "pneumonia and multiple organ failure"};
  const auto s = qa_score("2012", golds);
  CHECK(s.em == 0);
  CHECK(s.substr == 1);
  // 23 normalized gold tokens, one shared: 2 * 1 * (1/23) / (1 + 1/23).
  CHECK(s.f1 == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("the prevalence example: neither exact nor a substring") {
  const Golds golds{"13.3% (95% CI 6.9-23.6%)"};
  const auto s = qa_score("13.3%, 10/75", golds);
  CHECK(s.em == 0);
  CHECK(s.substr == 0);
  // Tokens {133, 1075} vs {133, 95, ci, 69236}: precision 1/2, recall 1/4.
  CHECK(s.f1 == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("best score over several golds; empty predictions") {
  const Golds golds{"in Jeddah", "Jeddah, KSA"};
  const auto s = qa_score("Jeddah KSA", golds);
  CHECK(s.em == 1);
  const auto e = qa_score("", golds);
  CHECK(e.em == 0);
  CHECK(e.f1 == 0);
  CHECK(e.substr == 0);
  CHECK(qa_score("", Golds{""}).em == 1);
  CHECK(qa_score("", Golds{""}).f1 == 0);
}

TEST_CASE("property: exact match implies full F1 and substring; substring is contiguous") {
  Rng rng(61);
  const std::vector<std::string> pool{"the", "virus", "a", "2012", "KSA,", "Jeddah", "(MERS)", "man", "an", "in"};
  for (int trial = 0; trial < 500; ++trial) {
    auto phrase = [&] {
      std::string out;
      for (int i = 0, n = static_cast<int>(rng.integer(0, 6)); i < n; ++i) out += pool[rng.index(pool.size())] + " ";
      return out;
    };
    const std::string gold = phrase(), pred = phrase();
    const auto s = qa_score(pred, Golds{gold});
    CHECK(s.f1 >= 0);
    CHECK(s.f1 <= 1);
    // Two empty answers match exactly but share no tokens, so F1 stays 0 as
    // in the reference scorer.
    if (s.em == 1 && !normalize_answer(pred).empty()) {
      CHECK(s.f1 == 1);
      CHECK(s.substr == 1);
    }
    CHECK(normalize_answer(normalize_answer(pred)) == normalize_answer(pred));
    const auto n_pred = normalize_answer(pred), n_gold = normalize_answer(gold);
    CHECK(s.substr == (!n_pred.empty() && n_gold.find(n_pred) != std::string::npos ? 1 : 0));
  }
}

TEST_CASE("dataset evaluation and file formats") {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "data.json", R"({"version": "1", "data": [{"title": "t", "paragraphs": [
      {"context": "MERS was first isolated in 2012.",
       "qas": [{"id": "q1", "question": "When?", "answers": [{"text": "2012", "answer_start": 27}]},
               {"id": "q2", "question": "What?", "answers": [{"text": "MERS", "answer_start": 0}]}]}]}]})");
  const auto examples = read_squad(dir / "data.json");
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].id == "q1");
  CHECK(examples[0].answers == Golds{"2012"});
  CHECK(examples[1].context == "MERS was first isolated in 2012.");

  write_predictions(dir / "pred.json", {{"q1", "in 2012"}});
  const auto preds = read_predictions(dir / "pred.json");
  CHECK(preds.at("q1") == "in 2012");

  const auto m = evaluate(examples, preds);
  CHECK(m.total == 2);
  CHECK(m.missing == 1);
  CHECK(m.em == 0);
  CHECK(m.f1 == doctest::Approx(100.0 * (2.0 / 3.0) / 2));
  CHECK(m.substr == 0);

  testsupport::write_file(dir / "bad.json", R"({"data": [{"paragraphs": [{"qas": []}]}]})");
  CHECK_THROWS_AS(read_squad(dir / "bad.json"), FormatError);
  CHECK_THROWS_AS(read_squad(dir / "nope.json"), IoError);
}
