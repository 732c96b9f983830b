#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "distillery/corpus.hpp"
#include "distillery/synthetic.hpp"
#include "distillery/vocab.hpp"
#include "support/testutil.hpp"

using namespace distillery;

TEST(Vocabulary, ReservedIdsAreDense) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token_of(Vocabulary::pad_id), "<pad>");
  EXPECT_EQ(v.token_of(Vocabulary::bos_id), "<s>");
  EXPECT_EQ(v.token_of(Vocabulary::eos_id), "</s>");
  EXPECT_EQ(v.token_of(Vocabulary::unk_id), "<unk>");
}

TEST(Vocabulary, UnknownTokensMapToUnkIdempotently) {
  Vocabulary v;
  v.add("hello");
  EXPECT_EQ(v.id_of("missing"), Vocabulary::unk_id);
  auto ids = v.encode({"hello", "missing"});
  auto back = v.decode(ids);
  EXPECT_EQ(back[0], "hello");
  EXPECT_EQ(back[1], "<unk>");
  EXPECT_EQ(v.encode(back), ids);
}

TEST(BuildVocab, CapCountsRetainedTokensNotReservedIds) {
  Vocabulary v = build_vocab({"a a b"}, 5);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.id_of("a"), 4);
  EXPECT_EQ(v.id_of("b"), 5);
}

TEST(BuildVocab, OrdersByFrequencyThenFirstOccurrence) {
  Vocabulary v = build_vocab({"b a a b c"}, 10);
  EXPECT_EQ(v.id_of("b"), 4);
  EXPECT_EQ(v.id_of("a"), 5);
  EXPECT_EQ(v.id_of("c"), 6);
}

TEST(BuildVocab, EnforcesCapAndMinCount) {
  Vocabulary v = build_vocab({"a a a a b b b c c d d e f"}, 4);
  EXPECT_EQ(v.size(), 8u);
  EXPECT_TRUE(v.contains("d"));
  EXPECT_EQ(v.id_of("e"), Vocabulary::unk_id);
  EXPECT_EQ(v.id_of("f"), Vocabulary::unk_id);

  Vocabulary w = build_vocab({"a a a b b c"}, 100, 2);
  EXPECT_TRUE(w.contains("a"));
  EXPECT_TRUE(w.contains("b"));
  EXPECT_FALSE(w.contains("c"));

  EXPECT_THROW(build_vocab({"a"}, 3), UsageError);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  testutil::TempDir dir("vocab");
  Vocabulary v = build_vocab({"the cat sat on the mat"}, 100);
  const auto p = dir / "vocab.txt";
  v.save(p);
  Vocabulary w = Vocabulary::load(p);
  EXPECT_EQ(w.size(), v.size());
  for (int id = 0; id < static_cast<int>(v.size()); ++id)
    EXPECT_EQ(w.token_of(id), v.token_of(id));

  testutil::spit(dir / "bad.txt", "#something-else\nfoo\n");
  EXPECT_THROW(Vocabulary::load(dir / "bad.txt"), IoError);
  EXPECT_THROW(Vocabulary::load(dir / "missing.txt"), IoError);
}

namespace {

const char* kConversationFile =
    "how are you ?\n"
    "fine thanks .\n"
    "glad to hear it .\n"
    "\n"
    "hello there\n"
    "hi .\n"
    "\n"
    "   \n"
    "one two three\n"
    "four five\n"
    "six\n"
    "seven\n";

}  // namespace

TEST(LoadCorpus, PairsAdjacentUtterancesWithinConversations) {
  testutil::TempDir dir("corpus");
  const auto p = dir / "conv.txt";
  testutil::spit(p, kConversationFile);
  ParallelCorpus c = load_corpus(p);
  // 9 utterances in 3 conversations -> 6 pairs
  ASSERT_EQ(c.size(), 6u);
  const auto& v = c.vocab();
  EXPECT_EQ(v.render(c.at(0).source), "how are you ?");
  EXPECT_EQ(v.render(c.at(0).target), "fine thanks .");
  EXPECT_EQ(v.render(c.at(1).source), "fine thanks .");
  EXPECT_EQ(v.render(c.at(1).target), "glad to hear it .");
  EXPECT_EQ(v.render(c.at(2).source), "hello there");
  EXPECT_EQ(v.render(c.at(3).source), "one two three");
  EXPECT_EQ(v.render(c.at(5).source), "six");
  EXPECT_EQ(v.render(c.at(5).target), "seven");
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c.at(i).id, i);
}

TEST(LoadCorpus, SingleUtteranceConversationYieldsNoPair) {
  testutil::TempDir dir("corpus1");
  testutil::spit(dir / "one.txt", "just one line\n\nanother lonely line\n");
  EXPECT_EQ(load_corpus(dir / "one.txt").size(), 0u);
}

TEST(LoadCorpus, TruncatesToMaxLen) {
  testutil::TempDir dir("corpus-len");
  testutil::spit(dir / "c.txt", "a b c d e f g h\ni j\n");
  CorpusOptions opt;
  opt.max_len = 3;
  ParallelCorpus c = load_corpus(dir / "c.txt", opt);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.at(0).source.size(), 3u);
  EXPECT_EQ(c.vocab().render(c.at(0).source), "a b c");
}

TEST(LoadCorpus, MissingFileThrows) {
  EXPECT_THROW(load_corpus("/nonexistent/conversations.txt"), IoError);
}

TEST(ParallelCorpus, WithoutKeepsOriginalIds) {
  testutil::TempDir dir("corpus-rm");
  testutil::spit(dir / "c.txt", "a\nb\nc\nd\n");
  ParallelCorpus c = load_corpus(dir / "c.txt");
  ASSERT_EQ(c.size(), 3u);
  ParallelCorpus kept = c.without({1});
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept.at(0).id, 0u);
  EXPECT_EQ(kept.at(1).id, 2u);
}

TEST(ParallelCorpus, WriteLoadRoundTripWithSharedVocab) {
  testutil::TempDir dir("corpus-rt");
  ParallelCorpus c = gen_fruit_world(
      {{"apple", 0.5}, {"orange", 0.5}}, 50, 99);
  const auto p = dir / "out.txt";
  write_corpus(c, p);
  ParallelCorpus back = load_corpus(p, c.vocab_ptr());
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(back.at(i).source, c.at(i).source);
    EXPECT_EQ(back.at(i).target, c.at(i).target);
  }
}

TEST(ParallelCorpus, RejectsMalformedExamples) {
  auto vocab = std::make_shared<Vocabulary>();
  int a = vocab->add("a");
  EXPECT_THROW(ParallelCorpus({Example{0, {}, {a}}}, vocab), UsageError);
  EXPECT_THROW(ParallelCorpus({Example{0, {a}, {99}}}, vocab), UsageError);
  EXPECT_NO_THROW(ParallelCorpus({Example{0, {a}, {a}}}, vocab));
}

TEST(FruitWorld, MatchesLabelProbabilitiesWithinTolerance) {
  const std::vector<std::pair<std::string, double>> labels{
      {"apple", 0.30}, {"orange", 0.25}, {"strawberry", 0.15},
      {"blueberry", 0.15}, {"raspberry", 0.15}};
  const std::size_t n = 100000;
  ParallelCorpus c = gen_fruit_world(labels, n, 12345);
  ASSERT_EQ(c.size(), n);
  std::map<int, std::size_t> counts;
  for (const auto& e : c.examples()) {
    ASSERT_EQ(e.source.size(), 1u);
    ASSERT_EQ(e.target.size(), 1u);
    counts[e.target[0]] += 1;
  }
  for (const auto& [label, p] : labels) {
    const int id = c.vocab().id_of(label);
    const double freq = static_cast<double>(counts[id]) / static_cast<double>(n);
    EXPECT_NEAR(freq, p, 0.01) << label;
  }
}

TEST(FruitWorld, SeededGenerationIsDeterministic) {
  auto a = gen_fruit_world({{"x", 0.6}, {"y", 0.4}}, 500, 7);
  auto b = gen_fruit_world({{"x", 0.6}, {"y", 0.4}}, 500, 7);
  auto c = gen_fruit_world({{"x", 0.6}, {"y", 0.4}}, 500, 8);
  bool same = true, diff = false;
  for (std::size_t i = 0; i < 500; ++i) {
    same = same && a.at(i).target == b.at(i).target;
    diff = diff || a.at(i).target != c.at(i).target;
  }
  EXPECT_TRUE(same);
  EXPECT_TRUE(diff);
}

TEST(FruitWorld, RejectsBadDistributions) {
  EXPECT_THROW(gen_fruit_world({}, 10, 1), UsageError);
  EXPECT_THROW(gen_fruit_world({{"a", 0.5}, {"b", 0.4}}, 10, 1), UsageError);
  EXPECT_THROW(gen_fruit_world({{"a", -0.1}, {"b", 1.1}}, 10, 1), UsageError);
  EXPECT_THROW(gen_fruit_world({{"a", 1.0}}, 0, 1), UsageError);
}

TEST(SyntheticDialogues, GenericFractionWithinTolerance) {
  const auto& templates = DialogueTemplates::standard();
  const std::size_t n = 10000;
  ParallelCorpus c = gen_synthetic_dialogues(templates, 0.5, n, 4242);
  ASSERT_EQ(c.size(), n);

  std::vector<std::vector<int>> generic_ids;
  for (const auto& g : templates.generic)
    generic_ids.push_back(c.vocab().encode(tokenize(g)));
  std::size_t generic_count = 0;
  for (const auto& e : c.examples())
    for (const auto& g : generic_ids)
      if (e.target == g) {
        ++generic_count;
        break;
      }
  const double freq = static_cast<double>(generic_count) / static_cast<double>(n);
  EXPECT_NEAR(freq, 0.5, 0.03);
}

TEST(SyntheticDialogues, SourcesComeFromTheTopicInventory) {
  const auto& templates = DialogueTemplates::standard();
  ParallelCorpus c = gen_synthetic_dialogues(templates, 0.3, 2000, 9);
  std::map<std::string, std::size_t> source_counts;
  for (const auto& e : c.examples()) source_counts[c.vocab().render(e.source)] += 1;
  std::size_t known = 0;
  for (const auto& topic : templates.topics)
    for (const auto& s : topic.sources) known += source_counts.count(s) ? source_counts[s] : 0;
  EXPECT_EQ(known, c.size());
  // every topic should appear in a 2000-example draw
  for (const auto& topic : templates.topics) {
    std::size_t topic_total = 0;
    for (const auto& s : topic.sources) topic_total += source_counts.count(s) ? source_counts[s] : 0;
    EXPECT_GT(topic_total, 0u) << topic.name;
  }
}

TEST(SyntheticDialogues, VocabularyHasNoUnknowns) {
  ParallelCorpus c = gen_synthetic_dialogues(DialogueTemplates::standard(), 0.5, 1000, 5);
  for (const auto& e : c.examples()) {
    for (int t : e.source) EXPECT_NE(t, Vocabulary::unk_id);
    for (int t : e.target) EXPECT_NE(t, Vocabulary::unk_id);
  }
}

TEST(SyntheticDialogues, RejectsBadArguments) {
  const auto& t = DialogueTemplates::standard();
  EXPECT_THROW(gen_synthetic_dialogues(t, -0.1, 10, 1), UsageError);
  EXPECT_THROW(gen_synthetic_dialogues(t, 1.5, 10, 1), UsageError);
  EXPECT_THROW(gen_synthetic_dialogues(t, 0.5, 0, 1), UsageError);
  DialogueTemplates empty;
  EXPECT_THROW(gen_synthetic_dialogues(empty, 0.5, 10, 1), UsageError);
}
