#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "liwuda/error.hpp"
#include "liwuda/losses.hpp"
#include "liwuda/training.hpp"

namespace liwuda::train {
namespace {

TEST(EpochSampler, FullBatchIsAPermutation) {
  EpochSampler s(17, 17, 3);
  auto batch = s.next_batch();
  std::sort(batch.begin(), batch.end());
  for (std::size_t i = 0; i < 17; ++i) EXPECT_EQ(batch[i], i);
}

TEST(EpochSampler, EpochCoversEveryIndexOnce) {
  for (std::size_t batch_size : {1u, 4u, 7u, 10u}) {
    EpochSampler s(23, batch_size, 5);
    for (int epoch = 0; epoch < 3; ++epoch) {
      std::vector<int> hits(23, 0);
      for (std::size_t b = 0; b < s.batches_per_epoch(); ++b) {
        const auto batch = s.next_batch();
        EXPECT_FALSE(batch.empty());
        EXPECT_LE(batch.size(), batch_size);
        EXPECT_EQ(std::set<std::size_t>(batch.begin(), batch.end()).size(), batch.size());
        for (auto i : batch) {
          ASSERT_LT(i, 23u);
          ++hits[i];
        }
      }
      for (int h : hits) EXPECT_EQ(h, 1);
    }
  }
}

TEST(EpochSampler, RejectsOversizedBatch) {
  EXPECT_THROW(EpochSampler(5, 6, 0), ConfigError);
  EXPECT_THROW(EpochSampler(5, 0, 0), ConfigError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

data::DatasetPair small_pair(UdaSetting setting) {
  data::LabelSplit split{3, 1, 1};
  if (setting == UdaSetting::kPDA) split.n_target_private = 0;
  if (setting == UdaSetting::kOSDA) split.n_source_private = 0;
  if (setting == UdaSetting::kCSDA) split = {3, 0, 0};
  return data::generate_pair(split, {0.3, {0.5}, 0.1, 1.0}, 96, 80, 6, 11);
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 16;
  c.hidden_width = 16;
  c.feature_dim = 8;
  c.seed = 4;
  return c;
}

TEST(Train, SourceOnlyFitsSeparableData) {
  const auto pair = data::generate_pair({4, 0, 0}, {}, 400, 100, 8, 2);
  const auto plan = plan_for_setting(UdaSetting::kCSDA, {0, 0, 0});
  TrainConfig c;
  c.epochs = 15;
  c.seed = 1;
  const auto result = train(pair.source, data::UnlabeledView(pair.target), plan, c);
  const Matrix logits = nn::predict(result.model.classifier, nn::predict(result.model.feature, pair.source.features));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const auto arg = std::max_element(row.begin(), row.end()) - row.begin();
    correct += arg == pair.source.labels[i];
  }
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(logits.rows()), 0.95);
}

TEST(Train, RecordedTotalIsTheWeightedSum) {
  for (auto setting : {UdaSetting::kUniDA, UdaSetting::kPDA, UdaSetting::kOSDA, UdaSetting::kCSDA}) {
    const auto pair = small_pair(setting);
    const auto plan = plan_for_setting(setting);
    const auto result = train(pair.source, data::UnlabeledView(pair.target), plan, small_config());
    ASSERT_EQ(result.history.steps.size(), 2u * 6u);
    for (std::size_t k = 0; k < result.history.steps.size(); ++k) {
      const auto& r = result.history.steps[k];
      EXPECT_EQ(r.step, k);
      EXPECT_DOUBLE_EQ(r.total, r.l_c + plan.beta * r.l_wot + plan.eta * r.l_sa + plan.epsilon * r.l_iot);
      if (!plan.use_sa) EXPECT_EQ(r.l_sa, 0.0);
      if (!plan.use_iot) EXPECT_EQ(r.l_iot, 0.0);
    }
  }
}

TEST(Train, IdenticalSeedsGiveIdenticalRuns) {
  const auto pair = small_pair(UdaSetting::kUniDA);
  const auto plan = plan_for_setting(UdaSetting::kUniDA);
  const auto a = train(pair.source, data::UnlabeledView(pair.target), plan, small_config());
  const auto b = train(pair.source, data::UnlabeledView(pair.target), plan, small_config());
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.history.steps.size(), b.history.steps.size());
  for (std::size_t k = 0; k < a.history.steps.size(); ++k) {
    auto ra = a.history.steps[k], rb = b.history.steps[k];
    ra.millis = rb.millis = 0.0;
    EXPECT_EQ(std::tie(ra.step, ra.l_c, ra.l_wot, ra.l_sa, ra.l_iot, ra.total, ra.converged),
              std::tie(rb.step, rb.l_c, rb.l_wot, rb.l_sa, rb.l_iot, rb.total, rb.converged));
  }
}

TEST(Train, ExactSolverRuns) {
  const auto pair = small_pair(UdaSetting::kPDA);
  auto c = small_config();
  c.solver.kind = ot::SolverKind::kExact;
  const auto r = train(pair.source, data::UnlabeledView(pair.target), plan_for_setting(UdaSetting::kPDA), c);
  EXPECT_TRUE(r.model.all_finite());
  for (const auto& s : r.history.steps) EXPECT_TRUE(s.converged);
}

TEST(Train, ObserverSeesEveryStep) {
  const auto pair = small_pair(UdaSetting::kCSDA);
  std::size_t seen = 0;
  const auto r = train(pair.source, data::UnlabeledView(pair.target), plan_for_setting(UdaSetting::kCSDA),
                       small_config(), [&](const StepRecord& rec) { EXPECT_EQ(rec.step, seen++); });
  EXPECT_EQ(seen, r.history.steps.size());
}

TEST(Train, RejectsInconsistentInputs) {
  const auto pair = small_pair(UdaSetting::kUniDA);
  // UniDA data has target-private classes, which PDA forbids.
  EXPECT_THROW(train(pair.source, data::UnlabeledView(pair.target), plan_for_setting(UdaSetting::kPDA),
                     small_config()),
               ConfigError);
  auto c = small_config();
  c.batch_size = 500;
  EXPECT_THROW(train(pair.source, data::UnlabeledView(pair.target), plan_for_setting(UdaSetting::kUniDA), c),
               ConfigError);
}

TEST(TrainHistory, CsvRoundTrip) {
  TrainHistory h;
  h.steps.push_back({0, 1.0 / 3.0, 0.25, 0.5, 0.0, 1.2, true, 3.5});
  h.steps.push_back({1, 0.1, 0.2, 0.3, 0.4, 0.5, false, 0.125});
  std::stringstream buf;
  h.write_csv(buf);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "step,l_c,l_wot,l_sa,l_iot,total,converged,millis");
  const auto back = TrainHistory::read_csv(buf);
  ASSERT_EQ(back.steps.size(), 2u);
  EXPECT_EQ(back.steps[0].l_c, 1.0 / 3.0);
  EXPECT_FALSE(back.steps[1].converged);
  std::stringstream bad("step,l_c\n");
  EXPECT_THROW(TrainHistory::read_csv(bad), ParseError);
}

}  // namespace
}  // namespace liwuda::train
