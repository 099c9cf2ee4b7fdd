#include <numeric>

#include "doctest.h"
#include "json.hpp"
#include "lexlift/error.hpp"
#include "lexlift/task/qa.hpp"
#include "support.hpp"

using namespace lexlift;
using namespace lexlift::task;
using testsupport::Rng;

namespace {

// Lexicographic scan; a later pair only wins on a strictly higher score.
std::pair<std::size_t, std::size_t> oracle_decode(const std::vector<double>& s, const std::vector<double>& e,
                                                  const std::vector<std::size_t>& chars, std::size_t max_chars,
                                                  bool& found) {
  found = false;
  double best = 0;
  std::pair<std::size_t, std::size_t> arg{0, 0};
  for (std::size_t k = 0; k < s.size(); ++k)
    for (std::size_t k2 = k; k2 < s.size(); ++k2) {
      std::size_t len = 0;
      for (std::size_t i = k; i <= k2; ++i) len += chars[i] + (i > k ? 1 : 0);
      if (len > max_chars) continue;
      if (!found || s[k] + e[k2] > best) {
        found = true;
        best = s[k] + e[k2];
        arg = {k, k2};
      }
    }
  return arg;
}

std::vector<TokenId> iota_ids(std::size_t n, TokenId first) {
  std::vector<TokenId> v(n);
  std::iota(v.begin(), v.end(), first);
  return v;
}

}  // namespace

TEST_CASE("window plan for an 83-piece question over 1000 context pieces") {
  const auto plan = plan_windows(83, 1000);
  CHECK(plan.stride == 213);
  REQUIRE(plan.steps.size() == 5);
  const std::size_t lefts[] = {1, 214, 427, 640, 853}, rights[] = {213, 426, 639, 852, 1000};
  for (std::size_t n = 0; n < 5; ++n) {
    CHECK(plan.steps[n].active_left == lefts[n]);
    CHECK(plan.steps[n].active_right == rights[n]);
    CHECK(plan.input_length(n) == 512);
  }
  // First step is clipped on the left, so all padding goes right.
  CHECK(plan.steps[0].pad_left == 0);
  CHECK(plan.steps[0].slice_last() == 426);
  // Middle step is centered.
  CHECK(plan.steps[2].pad_left == 106);
  CHECK(plan.steps[2].pad_right == 107);
  CHECK(plan.steps[4].slice_last() == 1000);
  CHECK(plan.steps[4].slice_first() == 575);

  const auto q = iota_ids(83, 1000), c = iota_ids(1000, 5000);
  const auto input = assemble_window_input(q, c, plan, 2, 7, 8);
  REQUIRE(input.size() == 512);
  CHECK(input[0] == 7);
  CHECK(input[1] == 1000);
  CHECK(input[84] == 8);
  CHECK(input[85] == 5000 + 427 - 106 - 1);
  CHECK(input[511] == 8);
  CHECK_THROWS_AS(assemble_window_input(q, c, plan, 5, 7, 8), DataError);
}

TEST_CASE("short contexts use one shorter window") {
  const auto plan = plan_windows(10, 50);
  REQUIRE(plan.steps.size() == 1);
  CHECK(plan.steps[0].active_left == 1);
  CHECK(plan.steps[0].active_right == 50);
  CHECK(plan.steps[0].slice_length() == 50);
  CHECK(plan.input_length(0) == 3 + 10 + 50);
}

TEST_CASE("questions that leave no room are rejected") {
  CHECK_NOTHROW(plan_windows(507, 10));
  CHECK_THROWS_WITH_AS(plan_windows(508, 10), doctest::Contains("question exceeds window capacity"), DataError);
  CHECK_THROWS_AS(plan_windows(600, 10), DataError);
  CHECK_THROWS_AS(plan_windows(0, 10), DataError);
  CHECK_THROWS_AS(plan_windows(5, 0), DataError);
}

TEST_CASE("property: active windows tile the context and inputs respect the budget") {
  Rng rng(51);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t q = static_cast<std::size_t>(rng.integer(1, 507));
    const std::size_t c = static_cast<std::size_t>(rng.coin(0.2) ? rng.integer(1, 20) : rng.integer(1, 4000));
    const auto plan = plan_windows(q, c);
    REQUIRE(plan.stride == (509 - q) / 2);
    std::size_t next = 1;
    for (std::size_t n = 0; n < plan.steps.size(); ++n) {
      const auto& s = plan.steps[n];
      CHECK(s.active_left == next);
      CHECK(s.active_right >= s.active_left);
      CHECK(s.active_length() <= plan.stride);
      CHECK(s.slice_first() >= 1);
      CHECK(s.slice_last() <= c);
      CHECK(plan.input_length(n) <= 512);
      if (c >= 509 - q) CHECK(plan.input_length(n) == 512);
      else CHECK(s.slice_length() == c);
      // Centered unless a context end gets in the way.
      const std::size_t pad = s.pad_left + s.pad_right;
      if (s.slice_first() > 1 && s.slice_last() < c) CHECK(s.pad_left == pad / 2);
      next = s.active_right + 1;
    }
    CHECK(next == c + 1);
  }
}

TEST_CASE("concat_active equals a per-position lookup") {
  Rng rng(52);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t q = static_cast<std::size_t>(rng.integer(1, 300));
    const std::size_t c = static_cast<std::size_t>(rng.integer(1, 1500));
    const auto plan = plan_windows(q, c);
    std::vector<SpanLogits> steps;
    for (std::size_t n = 0; n < plan.steps.size(); ++n) {
      SpanLogits l;
      for (std::size_t i = 0; i < plan.input_length(n); ++i) {
        l.start.push_back(rng.normal());
        l.end.push_back(rng.normal());
      }
      steps.push_back(std::move(l));
    }
    const auto h = concat_active(steps, plan);
    REQUIRE(h.size() == c);
    for (std::size_t i = 1; i <= c; ++i) {
      const std::size_t n = (i - 1) / plan.stride;
      const auto& s = plan.steps[n];
      const std::size_t pos = 1 + q + 1 + (i - s.slice_first());
      CHECK(h.start[i - 1] == steps[n].start[pos]);
      CHECK(h.end[i - 1] == steps[n].end[pos]);
    }
    steps.pop_back();
    CHECK_THROWS_AS(concat_active(steps, plan), DimensionError);
  }
}

TEST_CASE("word-level logits take the max over each word's pieces") {
  SpanLogits h{{1.0, 3.0, 2.0, -1.0}, {0.0, 0.5, 4.0, 2.0}};
  const std::vector<wordpiece::WordSpan> spans{{0, 3}, {3, 4}};
  const auto o = word_level_logits(h, spans);
  CHECK(o.start == std::vector<double>{3.0, -1.0});
  CHECK(o.end == std::vector<double>{4.0, 2.0});

  const std::vector<wordpiece::WordSpan> ones{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  CHECK(word_level_logits(h, ones) == h);

  CHECK_THROWS_AS(word_level_logits(h, std::vector<wordpiece::WordSpan>{{0, 2}, {3, 4}}), DataError);
  CHECK_THROWS_AS(word_level_logits(h, std::vector<wordpiece::WordSpan>{{0, 2}}), DataError);
  CHECK_THROWS_AS(word_level_logits(h, std::vector<wordpiece::WordSpan>{{0, 0}, {0, 4}}), DataError);

  Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<wordpiece::WordSpan> random_spans;
    std::size_t pos = 0;
    for (int w = 0, n = static_cast<int>(rng.integer(1, 30)); w < n; ++w) {
      const std::size_t len = rng.index(4) + 1;
      random_spans.push_back({pos, pos + len});
      pos += len;
    }
    SpanLogits r;
    for (std::size_t i = 0; i < pos; ++i) {
      r.start.push_back(rng.normal());
      r.end.push_back(rng.normal());
    }
    const auto got = word_level_logits(r, random_spans);
    for (std::size_t w = 0; w < random_spans.size(); ++w) {
      double ms = -1e300, me = -1e300;
      for (std::size_t p = random_spans[w].begin; p < random_spans[w].end; ++p) {
        if (r.start[p] > ms) ms = r.start[p];
        if (r.end[p] > me) me = r.end[p];
      }
      CHECK(got.start[w] == ms);
      CHECK(got.end[w] == me);
    }
  }
}

TEST_CASE("span decoding examples") {
  const std::vector<std::size_t> one{3};
  const auto single = decode_span(std::vector<double>{0.1}, std::vector<double>{-2.0}, one);
  CHECK(single.first == 0);
  CHECK(single.last == 0);

  const std::vector<std::size_t> two{1, 1};
  const auto forced = decode_span(std::vector<double>{5, 0}, std::vector<double>{0, 5}, two);
  CHECK(forced.first == 0);
  CHECK(forced.last == 1);
  CHECK(forced.score == 10);

  // Equal scores everywhere: the lexicographically smallest pair wins.
  const std::vector<std::size_t> three{1, 1, 1};
  const auto tie = decode_span(std::vector<double>{1, 1, 1}, std::vector<double>{1, 1, 1}, three);
  CHECK(tie.first == 0);
  CHECK(tie.last == 0);

  // An end before the start is never chosen.
  const auto ordered = decode_span(std::vector<double>{0, 9}, std::vector<double>{9, 0}, two);
  CHECK(ordered.first <= ordered.last);

  CHECK_THROWS_AS(decode_span(std::vector<double>{1}, std::vector<double>{1}, std::vector<std::size_t>{501}),
                  DataError);
  CHECK(span_char_length(three, 0, 2) == 5);

  const std::vector<std::string> words{"in", "2012,", "a"};
  const auto text = decode_span(SpanLogits{{0, 4, 0}, {0, 4, 0}}, words);
  CHECK(text.text == "2012,");
}

TEST_CASE("decode_span matches the exhaustive search, including very long words") {
  Rng rng(54);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 120));
    std::vector<double> s(n), e(n);
    std::vector<std::size_t> chars(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.coin(0.2) ? static_cast<double>(rng.integer(-2, 2)) : rng.normal();
      e[i] = rng.coin(0.2) ? static_cast<double>(rng.integer(-2, 2)) : rng.normal();
      chars[i] = rng.coin(0.05) ? static_cast<std::size_t>(rng.integer(400, 700))
                                : static_cast<std::size_t>(rng.integer(1, 40));
    }
    bool found = false;
    const auto expected = oracle_decode(s, e, chars, kMaxAnswerChars, found);
    if (!found) {
      CHECK_THROWS_AS(decode_span(s, e, chars), DataError);
      continue;
    }
    const auto got = decode_span(s, e, chars);
    CHECK(got.first == expected.first);
    CHECK(got.last == expected.second);
    CHECK(got.score == s[expected.first] + e[expected.second]);
  }
}

TEST_CASE("dual pooling of span logits") {
  SpanLogits a{{1, 2}, {3, 4}}, b{{3, 2}, {1, 0}};
  const auto p = pool_dual(a, b);
  CHECK(p.start == std::vector<double>{2, 2});
  CHECK(p.end == std::vector<double>{2, 2});
  CHECK(pool_dual(a, a) == a);
  CHECK(pool_dual(a, b) == pool_dual(b, a));
  CHECK_THROWS_AS(pool_dual(a, SpanLogits{{1}, {1}}), DimensionError);
}

TEST_CASE("precomputed encoder lookups") {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "l.jsonl", R"({"ids":[1,2,3],"start":[0,1,2],"end":[2,1,0]})"
                                           "\n\n"
                                           R"({"ids":[4],"start":[9],"end":[8]})"
                                           "\n");
  const auto enc = PrecomputedEncoder::from_file(dir / "l.jsonl");
  CHECK(enc.size() == 2);
  const std::vector<TokenId> q{1, 2, 3};
  CHECK(enc(q).start == std::vector<double>{0, 1, 2});
  CHECK_THROWS_AS(enc(std::vector<TokenId>{5}), DataError);
  testsupport::write_file(dir / "bad.jsonl", R"({"ids":[1,2],"start":[0],"end":[0,1]})");
  CHECK_THROWS_AS(PrecomputedEncoder::from_file(dir / "bad.jsonl"), FormatError);
}

TEST_CASE("answer_question end to end with a mock encoder") {
  const auto vocab = testsupport::fixture_wordpiece_vocab();
  const auto added = Vocab::from_tokens({"dementia", "euthymia"});
  const wordpiece::Tokenizer standard(vocab), extended(vocab, added);
  const TokenId target = *vocab.find("2012");
  // High start and end logits wherever the target piece appears; the
  // question part never contains it.
  const Encoder encoder = [&](std::span<const TokenId> input) {
    SpanLogits l{std::vector<double>(input.size(), 0.0), std::vector<double>(input.size(), 0.0)};
    for (std::size_t i = 0; i < input.size(); ++i)
      if (input[i] == target) l.start[i] = l.end[i] = 5.0;
    return l;
  };

  SUBCASE("short context") {
    const auto pred = answer_question("when was it first ?", "It was first (in 2012) unable", standard, nullptr, {},
                                      encoder);
    CHECK(pred.text == "2012)");
  }
  SUBCASE("several windows with both tokenizers") {
    std::string context;
    for (int i = 0; i < 400; ++i) context += "the dementia case ";
    context += "in 2012 ";
    for (int i = 0; i < 100; ++i) context += "euthymia ";
    const auto plain = answer_question("was it first", context, standard, nullptr, {}, encoder);
    CHECK(plain.text == "2012");
    const auto dual = answer_question("was it first", context, standard, &extended, {}, encoder);
    CHECK(dual.text == "2012");
    CHECK(dual.score == plain.score);
  }
  SUBCASE("window inputs can be dumped and replayed") {
    const std::vector<std::string> qw{"was", "it"}, cw{"the", "dementia", "in", "2012"};
    PrecomputedEncoder replay;
    for (const auto& input : window_inputs(qw, cw, extended, {})) replay.add(input, encoder(input));
    const auto o = context_word_logits(qw, cw, extended, {}, replay);
    CHECK(o == context_word_logits(qw, cw, extended, {}, encoder));
    CHECK(o.size() == cw.size());
  }
}
