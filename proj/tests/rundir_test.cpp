#include "distillery/rundir.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace distillery {
namespace {

RunConfig fruit_config() {
  RunConfig c;
  c.synthetic = "fruit";
  c.synthetic_size = 600;
  c.seed = 11;
  c.iterations = 3;
  c.removal_fraction = 0.35;
  c.threshold_per_million = 1e5;
  c.decode_subset = 600;
  c.holdout_fraction = 0.1;
  c.eval_pairs = 40;
  c.policy_episodes = 30;
  c.model.hidden = 32;
  c.model.embed = 16;
  c.model.learning_rate = 1.0;
  c.model.max_epochs = 12;
  c.model.patience = 2;
  c.model.dev_fraction = 0.0;
  c.evaluator.hidden = 8;
  c.evaluator.embed = 4;
  c.evaluator.batch_size = 8;
  c.evaluator.max_epochs = 4;
  c.evaluator.patience = 4;
  c.evaluator.init_range = 0.5;
  c.evaluator.holdout_fraction = 0.25;
  c.policy.hidden = 8;
  c.policy.embed = 4;
  c.policy.baseline_hidden = 4;
  return c;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << path;
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<std::string> lines_of(const std::filesystem::path& path) {
  std::istringstream in(slurp(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

class FruitRunDir : public ::testing::Test {
 protected:
  static std::filesystem::path root;    // full four-stage run
  static std::filesystem::path twin;    // distill only, same seed
  static StageResult distill_result;

  static void SetUpTestSuite() {
    const auto base = std::filesystem::temp_directory_path() / "distillery-rundir-test";
    std::filesystem::remove_all(base);
    root = base / "full";
    twin = base / "twin";
    distill_result = stage_distill(fruit_config(), root);
    stage_train_evaluator(root);
    stage_train_policy(root);
    stage_report(root);
    stage_distill(fruit_config(), twin);
  }

  static void TearDownTestSuite() {
    std::filesystem::remove_all(std::filesystem::temp_directory_path() /
                                "distillery-rundir-test");
  }
};

std::filesystem::path FruitRunDir::root;
std::filesystem::path FruitRunDir::twin;
StageResult FruitRunDir::distill_result;

TEST_F(FruitRunDir, DistillLeavesTheFullArtifactTree) {
  EXPECT_FALSE(distill_result.skipped);
  EXPECT_FALSE(distill_result.saturated);
  RunPaths paths(root);
  for (const auto& p :
       {paths.config(), paths.vocab(), paths.train_corpus(), paths.holdout_corpus(),
        paths.status(), paths.marker("distill"), paths.iterations_json(), paths.iterations_tsv()})
    EXPECT_TRUE(std::filesystem::exists(p)) << p;
  for (std::size_t i = 1; i <= 3; ++i) {
    EXPECT_TRUE(std::filesystem::exists(paths.model_ckpt(i))) << i;
    EXPECT_TRUE(std::filesystem::exists(paths.frequent_tsv(i))) << i;
    EXPECT_TRUE(std::filesystem::exists(paths.removed_ids(i))) << i;
    EXPECT_TRUE(std::filesystem::exists(paths.round_json(i))) << i;
  }
  EXPECT_FALSE(std::filesystem::exists(paths.iter_dir(4)));
}

TEST_F(FruitRunDir, SplitSnapshotsReloadToTheOriginalSizes) {
  RunPaths paths(root);
  auto vocab = load_run_vocab(paths);
  const auto train = load_corpus(paths.train_corpus(), vocab);
  const auto holdout = load_corpus(paths.holdout_corpus(), vocab);
  EXPECT_EQ(train.size(), 540u);
  EXPECT_EQ(holdout.size(), 60u);
  const auto reparsed = parse_run_config(slurp(paths.config()));
  EXPECT_EQ(serialize_run_config(reparsed), serialize_run_config(fruit_config()));
}

TEST_F(FruitRunDir, RoundFilesAreInternallyConsistent) {
  RunPaths paths(root);
  std::size_t expected_input = 540;
  for (std::size_t i = 1; i <= 3; ++i) {
    const auto j = detail::read_json_file(paths.round_json(i));
    const auto input = j.at("input_size").get<std::size_t>();
    const auto removed = j.at("removed").get<std::size_t>();
    const auto kept = j.at("kept").get<std::size_t>();
    EXPECT_EQ(input, expected_input) << i;
    EXPECT_EQ(input - removed, kept) << i;
    EXPECT_EQ(removed, static_cast<std::size_t>(std::ceil(0.35 * static_cast<double>(input))))
        << i;
    EXPECT_EQ(lines_of(paths.removed_ids(i)).size(), removed) << i;
    EXPECT_EQ(lines_of(paths.frequent_tsv(i)).size(),
              j.at("frequent_responses").get<std::size_t>() + 1)
        << i;
    EXPECT_FALSE(j.at("saturated").get<bool>()) << i;
    expected_input = kept;
  }
}

TEST_F(FruitRunDir, FrequentTableListsLabelsByDescendingCount) {
  RunPaths paths(root);
  const auto rows = lines_of(paths.frequent_tsv(1));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], "response\tcount");
  const std::set<std::string> labels = {"apple", "orange", "blueberry", "blackberry",
                                        "raspberry"};
  long prev = std::numeric_limits<long>::max();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto tab = rows[r].find('\t');
    ASSERT_NE(tab, std::string::npos) << rows[r];
    EXPECT_TRUE(labels.count(rows[r].substr(0, tab))) << rows[r];
    const long count = std::stol(rows[r].substr(tab + 1));
    EXPECT_LE(count, prev);
    prev = count;
  }
}

TEST_F(FruitRunDir, SameSeedRunsAreByteIdentical) {
  RunPaths a(root), b(twin);
  EXPECT_EQ(slurp(a.train_corpus()), slurp(b.train_corpus()));
  EXPECT_EQ(slurp(a.holdout_corpus()), slurp(b.holdout_corpus()));
  for (std::size_t i = 1; i <= 3; ++i) {
    EXPECT_EQ(slurp(a.removed_ids(i)), slurp(b.removed_ids(i))) << i;
    EXPECT_EQ(slurp(a.frequent_tsv(i)), slurp(b.frequent_tsv(i))) << i;
  }
}

TEST_F(FruitRunDir, FinishedStagesSkipUnlessForced) {
  const StageResult again = stage_distill(fruit_config(), root);
  EXPECT_TRUE(again.skipped);
  EXPECT_FALSE(again.saturated);
  EXPECT_TRUE(stage_train_evaluator(root).skipped);
  EXPECT_TRUE(stage_train_policy(root).skipped);
  EXPECT_TRUE(stage_report(root).skipped);
  const StageResult redone = stage_report(root, true);
  EXPECT_FALSE(redone.skipped);
}

TEST_F(FruitRunDir, LoadRunPoolRestoresModelsAndRoundSizes) {
  RunPaths paths(root);
  auto vocab = load_run_vocab(paths);
  ModelPool pool = load_run_pool(paths, vocab);
  ASSERT_EQ(pool.size(), 3u);
  EXPECT_FALSE(pool.saturated_early);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(pool.models[i].iteration(), i + 1);
    EXPECT_EQ(pool.rounds[i].iteration, i + 1);
  }
  EXPECT_EQ(pool.rounds[0].input_size, 540u);
  EXPECT_GT(pool.rounds[1].input_size, pool.rounds[2].input_size);
}

TEST_F(FruitRunDir, EvaluatorStageWritesCheckpointsAndMetrics) {
  RunPaths paths(root);
  EXPECT_TRUE(std::filesystem::exists(paths.evaluator_ckpt()));
  EXPECT_TRUE(std::filesystem::exists(paths.evaluator2_ckpt()));
  const auto j = detail::read_json_file(paths.eval_metrics());
  EXPECT_EQ(j.at("pairs").get<std::size_t>(), 40u);
  const double advers = j.at("adversuc").get<double>();
  const double mvr = j.at("machine_vs_random").get<double>();
  EXPECT_GE(advers, 0.0);
  EXPECT_LE(advers, 1.0);
  EXPECT_GE(mvr, 0.0);
  EXPECT_LE(mvr, 1.0);
  EXPECT_GE(j.at("evaluator").at("epochs").get<std::size_t>(), 1u);
  EXPECT_GE(j.at("evaluator2").at("epochs").get<std::size_t>(), 1u);
  auto vocab = load_run_vocab(paths);
  EXPECT_NO_THROW(Evaluator::load(paths.evaluator_ckpt(), vocab));
  EXPECT_NO_THROW(Evaluator::load(paths.evaluator2_ckpt(), vocab));
}

TEST_F(FruitRunDir, PolicyStageWritesCheckpointsAndHistogram) {
  RunPaths paths(root);
  EXPECT_TRUE(std::filesystem::exists(paths.policy_ckpt()));
  EXPECT_TRUE(std::filesystem::exists(paths.baseline_ckpt()));
  const auto j = detail::read_json_file(paths.policy_metrics());
  EXPECT_EQ(j.at("episodes").get<std::size_t>(), 30u);
  const auto counts = j.at("choice_counts").get<std::vector<std::size_t>>();
  ASSERT_EQ(counts.size(), 3u);
  EXPECT_EQ(counts[0] + counts[1] + counts[2], 30u);
  const auto hist = j.at("selection_histogram").get<std::vector<double>>();
  ASSERT_EQ(hist.size(), 3u);
  EXPECT_NEAR(hist[0] + hist[1] + hist[2], 1.0, 1e-12);
}

TEST_F(FruitRunDir, ReportTablesCoverEveryIterationAndStrategy) {
  RunPaths paths(root);
  const auto iter_rows = lines_of(paths.iterations_tsv());
  ASSERT_EQ(iter_rows.size(), 4u);
  EXPECT_EQ(iter_rows[0],
            "iteration\ttrain_size\tdev_perplexity\toracle_perplexity\tdistinct_1\tdistinct_2");
  const auto arr = detail::read_json_file(paths.iterations_json());
  ASSERT_EQ(arr.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(arr[i].at("iteration").get<std::size_t>(), i + 1);
    EXPECT_TRUE(std::isfinite(arr[i].at("dev_perplexity").get<double>()));
    EXPECT_GT(arr[i].at("oracle_perplexity").get<double>(), 0.0);
    EXPECT_GT(arr[i].at("distinct_1").get<double>(), 0.0);
  }
  EXPECT_EQ(arr[0].at("train_size").get<std::size_t>(), 540u);

  const auto adv = detail::read_json_file(paths.adversarial_json());
  ASSERT_EQ(adv.size(), 3u);
  EXPECT_EQ(adv[0].at("strategy").get<std::string>(), "greedy");
  EXPECT_EQ(adv[1].at("strategy").get<std::string>(), "stochastic-greedy");
  EXPECT_EQ(adv[2].at("strategy").get<std::string>(), "sample");
  for (const auto& row : adv) {
    EXPECT_GE(row.at("adversuc").get<double>(), 0.0);
    EXPECT_LE(row.at("adversuc").get<double>(), 1.0);
    EXPECT_GE(row.at("machine_vs_random").get<double>(), 0.0);
    EXPECT_LE(row.at("machine_vs_random").get<double>(), 1.0);
  }
  const auto adv_rows = lines_of(paths.adversarial_tsv());
  ASSERT_EQ(adv_rows.size(), 4u);
  EXPECT_EQ(adv_rows[0], "strategy\tadversuc\tmachine_vs_random");

  const auto hist = detail::read_json_file(paths.histogram_json());
  EXPECT_EQ(hist.at("sources").get<std::size_t>(), 60u);
  EXPECT_EQ(hist.at("selection_histogram").get<std::vector<double>>().size(), 3u);
}

TEST_F(FruitRunDir, RespondStreamsSelectorIndexAndAnswer) {
  std::istringstream in("fruit\n\nfruit zzz\n");
  std::ostringstream out;
  respond_lines(root, in, out);
  const auto rows = [&] {
    std::vector<std::string> r;
    std::istringstream s(out.str());
    std::string line;
    while (std::getline(s, line)) r.push_back(line);
    return r;
  }();
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(rows[1].empty());
  for (std::size_t r : {std::size_t{0}, std::size_t{2}}) {
    const auto tab = rows[r].find('\t');
    ASSERT_NE(tab, std::string::npos) << rows[r];
    const int choice = std::stoi(rows[r].substr(0, tab));
    EXPECT_GE(choice, 1);
    EXPECT_LE(choice, 3);
    EXPECT_FALSE(rows[r].substr(tab + 1).empty());
  }

  std::istringstream in2("fruit\n\nfruit zzz\n");
  std::ostringstream out2;
  respond_lines(root, in2, out2);
  EXPECT_EQ(out.str(), out2.str());

  std::istringstream in3("fruit\n");
  std::ostringstream out3;
  RespondOptions with_lp;
  with_lp.logprobs = true;
  respond_lines(root, in3, out3, with_lp);
  const std::string line = out3.str();
  const auto first = line.find('\t');
  const auto second = line.find('\t', first + 1);
  ASSERT_NE(second, std::string::npos) << line;
  EXPECT_LE(std::stod(line.substr(second + 1)), 0.0);
}

TEST_F(FruitRunDir, RespondWithoutSelectorFallsBackToIterationOne) {
  std::istringstream in("fruit\nfruit\n");
  std::ostringstream out, warn;
  respond_lines(twin, in, out, {}, &warn);
  std::istringstream s(out.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(s, line)) {
    ++rows;
    EXPECT_EQ(line.substr(0, 2), "1\t") << line;
  }
  EXPECT_EQ(rows, 2u);
  EXPECT_NE(warn.str().find("iteration 1"), std::string::npos);
}

TEST_F(FruitRunDir, StagesRefuseToRunOutOfOrder) {
  const auto empty_dir =
      std::filesystem::temp_directory_path() / "distillery-rundir-test" / "empty";
  std::filesystem::create_directories(empty_dir);
  EXPECT_THROW(stage_train_evaluator(empty_dir), UsageError);
  EXPECT_THROW(stage_train_policy(empty_dir), UsageError);
  EXPECT_THROW(stage_report(empty_dir), UsageError);
  std::istringstream in("fruit\n");
  std::ostringstream out;
  EXPECT_THROW(respond_lines(empty_dir, in, out), UsageError);
  EXPECT_THROW(stage_train_policy(twin), UsageError);
}

TEST(RunDirSaturation, UnreachableThresholdStopsAfterOneIteration) {
  const auto dir =
      std::filesystem::temp_directory_path() / "distillery-rundir-saturation-test";
  std::filesystem::remove_all(dir);
  RunConfig config = fruit_config();
  config.threshold_per_million = 2e6;
  const StageResult result = stage_distill(config, dir);
  EXPECT_TRUE(result.saturated);
  EXPECT_FALSE(result.warning.empty());
  RunPaths paths(dir);
  EXPECT_TRUE(std::filesystem::exists(paths.model_ckpt(1)));
  EXPECT_FALSE(std::filesystem::exists(paths.iter_dir(2)));
  EXPECT_EQ(lines_of(paths.frequent_tsv(1)).size(), 1u);
  const auto status = detail::read_json_file(paths.status());
  EXPECT_TRUE(status.at("saturated_early").get<bool>());
  const auto round = detail::read_json_file(paths.round_json(1));
  EXPECT_TRUE(round.at("saturated").get<bool>());
  EXPECT_EQ(round.at("removed").get<std::size_t>(), 0u);

  const StageResult again = stage_distill(config, dir);
  EXPECT_TRUE(again.skipped);
  EXPECT_TRUE(again.saturated);

  auto vocab = load_run_vocab(paths);
  EXPECT_EQ(load_run_pool(paths, vocab).size(), 1u);
  EXPECT_NO_THROW(stage_report(dir));
  EXPECT_EQ(lines_of(paths.iterations_tsv()).size(), 2u);
  EXPECT_FALSE(std::filesystem::exists(paths.adversarial_tsv()));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace distillery
