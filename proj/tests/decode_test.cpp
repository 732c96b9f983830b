#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "distillery/decode.hpp"
#include "distillery/random.hpp"
#include "distillery/seq2seq.hpp"
#include "distillery/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace distillery;

TEST(GreedyDecode, BreaksTiesTowardLowestTokenId) {
  auto model = testutil::make_constant_model({{"a", 0.4}, {"c", 0.4}, {"</s>", 0.2}},
                                             {"q", "a", "b", "c"}, 5);
  const int q = model.vocab().id_of("q");
  const int a = model.vocab().id_of("a");
  DecodeResult out = decode_greedy(model, {q});
  EXPECT_EQ(out.tokens, (std::vector<int>(5, a)));
  EXPECT_FALSE(out.ended_with_eos);
  ASSERT_EQ(out.step_logprobs.size(), 5u);
  for (double lp : out.step_logprobs) EXPECT_NEAR(lp, std::log(0.4), 1e-9);
  EXPECT_NEAR(out.total_logprob(), 5 * std::log(0.4), 1e-9);
}

TEST(GreedyDecode, StopsAtEndOfSequenceToken) {
  auto model = testutil::make_constant_model({{"</s>", 0.6}, {"a", 0.4}});
  const int q = model.vocab().id_of("q");
  DecodeResult out = decode_greedy(model, {q});
  EXPECT_EQ(out.tokens, (std::vector<int>{Vocabulary::eos_id}));
  EXPECT_TRUE(out.ended_with_eos);
  EXPECT_NEAR(out.total_logprob(), std::log(0.6), 1e-9);
  EXPECT_TRUE(strip_eos(out.tokens).empty());
}

TEST(StochasticGreedy, TopOneMatchesGreedyExactly) {
  ParallelCorpus c = gen_fruit_world(
      {{"apple", 0.3}, {"orange", 0.3}, {"strawberry", 0.4}}, 20, 3);
  Seq2SeqHyper hyper;
  hyper.hidden = 6;
  hyper.embed = 4;
  Seq2SeqModel model(c.vocab_ptr(), hyper, 55);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (std::size_t i = 0; i < 5; ++i) {
      Rng rng(seed);
      DecodeResult g = decode_greedy(model, c.at(i).source);
      DecodeResult s = decode_stochastic_greedy(model, c.at(i).source, 1, rng);
      EXPECT_EQ(g.tokens, s.tokens);
      EXPECT_EQ(g.step_logprobs, s.step_logprobs);
    }
  }
}

TEST(TopKDistribution, RenormalizesOverKeptTokens) {
  auto got = topk_distribution({0.5, 0.3, 0.1, 0.1}, 3);
  ASSERT_EQ(got.size(), 4u);
  EXPECT_NEAR(got[0], 5.0 / 9.0, 1e-15);
  EXPECT_NEAR(got[1], 3.0 / 9.0, 1e-15);
  EXPECT_NEAR(got[2], 1.0 / 9.0, 1e-15);  // prob tie keeps the lower id
  EXPECT_DOUBLE_EQ(got[3], 0.0);
}

TEST(TopKDistribution, FullWidthIsIdentity) {
  const std::vector<double> p{0.25, 0.4, 0.05, 0.3};
  auto got = topk_distribution(p, 4);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(got[i], p[i], 1e-12);
}

TEST(TopKDistribution, RejectsBadWidth) {
  EXPECT_THROW(topk_distribution({0.5, 0.5}, 0), UsageError);
  EXPECT_THROW(topk_distribution({0.5, 0.5}, 3), UsageError);
  EXPECT_THROW(topk_distribution({}, 1), UsageError);
}

TEST(StochasticGreedy, DegenerateDistributionIsDeterministic) {
  auto model = testutil::make_constant_model({{"</s>", 1.0}});
  const int q = model.vocab().id_of("q");
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(seed);
    DecodeResult out = decode_stochastic_greedy(model, {q}, 3, rng);
    EXPECT_EQ(out.tokens, (std::vector<int>{Vocabulary::eos_id}));
  }
  Rng rng(9);
  EXPECT_EQ(sample_discrete(rng, {0.0, 0.0, 1.0, 0.0}), 2u);
}

TEST(StochasticGreedy, FirstStepFrequenciesTrackTruncatedDistribution) {
  auto model = testutil::make_constant_model(
      {{"a", 0.5}, {"b", 0.3}, {"c", 0.1}, {"d", 0.1}}, {"q", "a", "b", "c", "d"});
  const int q = model.vocab().id_of("q");
  const int d = model.vocab().id_of("d");
  Rng rng(derive_seed(123, "decode-freq"));
  std::map<int, int> counts;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    DecodeResult out = decode_stochastic_greedy(model, {q}, 3, rng);
    ASSERT_FALSE(out.tokens.empty());
    counts[out.tokens[0]] += 1;
  }
  EXPECT_EQ(counts.count(d), 0u);  // d ties c on prob but has the higher id, so top-3 drops it
  EXPECT_NEAR(counts[model.vocab().id_of("a")] / double(n), 5.0 / 9.0, 0.03);
  EXPECT_NEAR(counts[model.vocab().id_of("b")] / double(n), 3.0 / 9.0, 0.03);
  EXPECT_NEAR(counts[model.vocab().id_of("c")] / double(n), 1.0 / 9.0, 0.03);
}

TEST(StochasticGreedy, LogprobsComeFromTheFullModelDistribution) {
  auto model = testutil::make_constant_model(
      {{"a", 0.5}, {"b", 0.3}, {"c", 0.2}}, {"q", "a", "b", "c"});
  const int q = model.vocab().id_of("q");
  const double greedy_lp = decode_greedy(model, {q}).step_logprobs[0];
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    DecodeResult out = decode_stochastic_greedy(model, {q}, 2, rng);
    const int tok = out.tokens[0];
    const double want = tok == model.vocab().id_of("a") ? std::log(0.5)
                        : tok == model.vocab().id_of("b") ? std::log(0.3)
                                                          : std::log(0.2);
    EXPECT_NEAR(out.step_logprobs[0], want, 1e-9);
    EXPECT_LE(out.step_logprobs[0], greedy_lp + 1e-12);
  }
}

TEST(Decode, SampleStrategyIsSeedDeterministic) {
  ParallelCorpus c = gen_fruit_world({{"apple", 0.5}, {"orange", 0.5}}, 10, 8);
  Seq2SeqHyper hyper;
  hyper.hidden = 6;
  hyper.embed = 4;
  Seq2SeqModel model(c.vocab_ptr(), hyper, 99);
  Rng r1(7), r2(7);
  DecodeResult a = decode_sample(model, c.at(0).source, r1);
  DecodeResult b = decode_sample(model, c.at(0).source, r2);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.step_logprobs, b.step_logprobs);
}

TEST(Decode, StrategyNamesRoundTrip) {
  for (DecodeStrategy s : {DecodeStrategy::greedy, DecodeStrategy::stochastic_greedy,
                           DecodeStrategy::sample}) {
    EXPECT_EQ(decode_strategy_from_string(to_string(s)), s);
  }
  EXPECT_THROW(decode_strategy_from_string("beam"), ConfigError);
}

TEST(Decode, DispatcherMatchesDirectCalls) {
  auto model = testutil::make_constant_model({{"a", 0.7}, {"</s>", 0.3}});
  const int q = model.vocab().id_of("q");
  Rng r1(4), r2(4);
  DecodeResult via = decode_with(model, {q}, DecodeStrategy::stochastic_greedy, 2, r1);
  DecodeResult direct = decode_stochastic_greedy(model, {q}, 2, r2);
  EXPECT_EQ(via.tokens, direct.tokens);
  Rng r3(4);
  EXPECT_EQ(decode_with(model, {q}, DecodeStrategy::greedy, 5, r3).tokens,
            decode_greedy(model, {q}).tokens);
}

TEST(Decode, RejectsEmptySource) {
  auto model = testutil::make_constant_model({{"a", 1.0}});
  Rng rng(1);
  EXPECT_THROW(decode_greedy(model, {}), UsageError);
  EXPECT_THROW(decode_stochastic_greedy(model, {}, 2, rng), UsageError);
  EXPECT_THROW(decode_sample(model, {}, rng), UsageError);
}
