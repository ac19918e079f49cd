#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pcgssl/nn/gradcheck.hpp"
#include "pcgssl/ssl/pretrain.hpp"
#include "support/oracles.hpp"

using namespace pcgssl;
using namespace pcgssl::nn;

namespace {

std::vector<std::vector<double>> random_rows(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> z(rows, std::vector<double>(dim));
  for (auto& r : z) {
    for (auto& v : r) v = rng.uniform(-1, 1);
  }
  return z;
}

Tensor<double> to_tensor(const std::vector<std::vector<double>>& z) {
  Tensor<double> t({z.size(), z[0].size()});
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t d = 0; d < z[i].size(); ++d) t[i * z[i].size() + d] = z[i][d];
  }
  return t;
}

BackboneConfig small_backbone() {
  BackboneConfig cfg;
  cfg.n_blocks = 3;
  cfg.channels = {4, 8, 8};
  cfg.kernel = 5;
  cfg.pool = 4;
  cfg.input_len = 512;
  cfg.embed_dim = 8;
  return cfg;
}

/// Family 0 is a decaying low tone burst train; family 1 adds a 150-400 Hz
/// band. Every window has its own rate, phase and amplitude.
std::vector<Window> two_families(std::size_t count, std::size_t len, std::uint64_t seed, const std::string& prefix) {
  std::vector<Window> out;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    Window w;
    w.samples.resize(len);
    const int family = static_cast<int>(i % 2);
    const double beat = rng.uniform(0.8, 1.6), f0 = rng.uniform(30, 80), f1 = rng.uniform(150, 400);
    const double phase = rng.uniform(0, 1), amp = rng.uniform(0.5, 1.0);
    for (std::size_t t = 0; t < len; ++t) {
      const double s = static_cast<double>(t) / 2000.0;
      const double cycle = std::fmod(s * beat + phase, 1.0);
      double v = amp * std::exp(-40 * cycle) * std::sin(2 * std::numbers::pi * f0 * s);
      if (family == 1) v += 0.4 * amp * std::sin(2 * std::numbers::pi * f1 * s) * (cycle > 0.1 && cycle < 0.4);
      w.samples[t] = static_cast<float>(v + 0.01 * rng.uniform(-1, 1));
    }
    w.patient_id = prefix + std::to_string(i);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

TEST(NtXent, SinglePairIsExactlyZero) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_EQ(ssl::nt_xent_value(to_tensor(random_rows(2, 6, seed)), 0.1), 0.0);
  }
}

TEST(NtXent, OrthonormalPairs) {
  const std::vector<std::vector<double>> z{{1, 0}, {0, 1}, {1, 0}, {0, 1}};
  const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
  EXPECT_NEAR(ssl::nt_xent_value(to_tensor(z), 1.0), expected, 1e-12);
  EXPECT_NEAR(expected, 0.551444, 1e-6);
}

TEST(NtXent, IdenticalEmbeddingsGiveLogThree) {
  const std::vector<std::vector<double>> z(4, {0.3, -1.2, 2.0});
  for (double tau : {0.05, 0.1, 1.0, 7.0}) EXPECT_NEAR(ssl::nt_xent_value(to_tensor(z), tau), std::log(3.0), 1e-12);
}

TEST(NtXent, MatchesBruteForceOracle) {
  for (std::size_t n : {1u, 2u, 3u}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto z = random_rows(2 * n, 5, seed * 7 + n);
      for (double tau : {0.1, 0.5, 1.0}) {
        EXPECT_NEAR(ssl::nt_xent_value(to_tensor(z), tau), oracle::nt_xent(z, tau), 1e-10);
      }
    }
  }
}

TEST(NtXent, InvariantToPositiveRowScaling) {
  auto z = random_rows(8, 16, 3);
  const double before = ssl::nt_xent_value(to_tensor(z), 0.1);
  Rng rng(4);
  for (auto& row : z) {
    const double c = std::exp(rng.uniform(-5, 5));
    for (auto& v : row) v *= c;
  }
  EXPECT_NEAR(ssl::nt_xent_value(to_tensor(z), 0.1), before, 1e-9);
}

TEST(NtXent, GradientMatchesFiniteDifferences) {
  ParameterSet<double> params;
  params.add("z", to_tensor(random_rows(6, 4, 5)));
  for (double tau : {0.1, 1.0}) {
    const auto report = grad_check<double>(
        [tau](Tape<double>& tape, ParameterSet<double>& p) { return ssl::nt_xent_loss(tape.parameter(p.at("z")), tau); }, params);
    EXPECT_LT(report.max_rel_error, 1e-4) << tau;
  }
}

TEST(NtXent, RejectsDegenerateInput) {
  auto z = random_rows(4, 3, 6);
  z[2] = {0, 0, 0};
  try {
    ssl::nt_xent_value(to_tensor(z), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateEmbedding);
  }
  EXPECT_THROW(ssl::nt_xent_value(to_tensor(random_rows(3, 3, 7)), 0.1), Error);
}

TEST(NtXent, FloatAgreesWithDouble) {
  const auto z = to_tensor(random_rows(16, 32, 8));
  EXPECT_NEAR(ssl::nt_xent_value(z.cast<float>(), 0.1), ssl::nt_xent_value(z, 0.1), 1e-5);
}

TEST(Views, EmptyPipelinesGiveIdenticalRows) {
  const auto windows = two_families(5, 64, 1, "p");
  const auto batch = ssl::make_views(windows, {}, {}, 3);
  ASSERT_EQ(batch.views.shape(), (Shape{10, 1, 64}));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t t = 0; t < 64; ++t) {
      ASSERT_EQ(batch.views[i * 64 + t], batch.views[(5 + i) * 64 + t]);
      ASSERT_EQ(batch.views[i * 64 + t], windows[i].samples[t]);
    }
    EXPECT_EQ(batch.sources[i].patient_id, windows[i].patient_id);
  }
}

TEST(Views, FullBatchShapeAndDeterminism) {
  const auto windows = two_families(256, 32, 2, "p");
  const auto [v1, v2] = submitted_view_pipelines();
  const auto a = ssl::make_views(windows, v1, v2, 9);
  const auto b = ssl::make_views(windows, v1, v2, 9);
  const auto c = ssl::make_views(windows, v1, v2, 10);
  EXPECT_EQ(a.views.dim(0), 512u);
  EXPECT_EQ(a.pairs(), 256u);
  EXPECT_EQ(a.views, b.views);
  EXPECT_NE(a.views, c.views);
}

TEST(EarlyStopping, CountingRule) {
  ssl::EarlyStopping stop(5);
  const std::vector<double> losses{1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.5};
  std::size_t epochs = 0;
  for (double l : losses) {
    stop.update(l);
    ++epochs;
    if (stop.should_stop()) break;
  }
  EXPECT_EQ(epochs, 7u);
  EXPECT_EQ(stop.best_epoch(), 2u);
  EXPECT_DOUBLE_EQ(stop.best_loss(), 0.9);
}

TEST(EarlyStopping, EqualLossIsNotAnImprovement) {
  ssl::EarlyStopping stop(2);
  stop.update(1.0);
  stop.update(1.0);
  stop.update(1.0);
  EXPECT_TRUE(stop.should_stop());
  EXPECT_EQ(stop.best_epoch(), 1u);
}

namespace {

ssl::SslConfig small_ssl(std::size_t epochs) {
  ssl::SslConfig cfg;
  cfg.batch_pairs = 8;
  cfg.max_epochs = epochs;
  cfg.projection_dim = 8;
  cfg.schedule.total_epochs = std::max<std::size_t>(epochs, 3);
  cfg.schedule.warmup_epochs = 1;
  return cfg;
}

}  // namespace

TEST(Pretrain, SingleEpochRunsExactlyOnce) {
  const auto bcfg = small_backbone();
  const auto train = two_families(24, bcfg.input_len, 3, "t");
  const auto val = two_families(8, bcfg.input_len, 4, "v");
  const auto cfg = small_ssl(1);
  const auto init = ssl::init_ssl_parameters<float>(bcfg, cfg.projection_dim, 1);
  const auto result = ssl::pretrain(train, val, {}, {}, cfg, bcfg, init, 5);
  ASSERT_EQ(result.history.size(), 1u);
  EXPECT_EQ(result.best_epoch, 1u);
  EXPECT_NE(result.params, init);
  EXPECT_GT(result.history[0].lr, 0.0);
}

TEST(Pretrain, DeterministicUnderFixedSeed) {
  const auto bcfg = small_backbone();
  const auto train = two_families(24, bcfg.input_len, 3, "t");
  const auto val = two_families(8, bcfg.input_len, 4, "v");
  const auto cfg = small_ssl(3);
  const auto [v1, v2] = submitted_view_pipelines();
  const auto init = ssl::init_ssl_parameters<float>(bcfg, cfg.projection_dim, 1);
  const auto a = ssl::pretrain(train, val, v1, v2, cfg, bcfg, init, 6);
  const auto b = ssl::pretrain(train, val, v1, v2, cfg, bcfg, init, 6);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
}

TEST(Pretrain, ReturnsBestValidationEpochWeights) {
  const auto bcfg = small_backbone();
  const auto train = two_families(24, bcfg.input_len, 3, "t");
  const auto val = two_families(8, bcfg.input_len, 4, "v");
  auto cfg = small_ssl(6);
  const auto [v1, v2] = submitted_view_pipelines();
  const auto init = ssl::init_ssl_parameters<float>(bcfg, cfg.projection_dim, 2);
  const auto result = ssl::pretrain(train, val, v1, v2, cfg, bcfg, init, 7);
  double best = 1e300;
  std::size_t best_epoch = 0;
  for (const auto& r : result.history) {
    if (r.val_loss < best) {
      best = r.val_loss;
      best_epoch = r.epoch;
    }
  }
  EXPECT_EQ(result.best_epoch, best_epoch);
  auto params = result.params;
  const double rescored = ssl::contrastive_loss(val, v1, v2, params, bcfg, cfg, derive_seed(7, {tag("ssl.val")}));
  EXPECT_NEAR(rescored, best, 1e-6 * std::abs(best));
}

TEST(Pretrain, RejectsTooFewWindowsAndSharedPatients) {
  const auto bcfg = small_backbone();
  const auto cfg = small_ssl(1);
  const auto init = ssl::init_ssl_parameters<float>(bcfg, cfg.projection_dim, 1);
  const auto val = two_families(4, bcfg.input_len, 4, "v");
  try {
    ssl::pretrain(two_families(7, bcfg.input_len, 3, "t"), val, {}, {}, cfg, bcfg, init, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyDataset);
  }
  try {
    ssl::pretrain(two_families(8, bcfg.input_len, 3, "v"), val, {}, {}, cfg, bcfg, init, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidArgument);
  }
}

TEST(Pretrain, FreezeBackboneDropsProjection) {
  const auto bcfg = small_backbone();
  const auto frozen = ssl::freeze_backbone(ssl::init_ssl_parameters<float>(bcfg, 8, 1));
  EXPECT_EQ(frozen.size(), 2 * bcfg.n_blocks);
  for (const auto& [path, t] : frozen) {
    EXPECT_TRUE(path.starts_with("block")) << path;
    EXPECT_TRUE(frozen.is_frozen(path)) << path;
  }
}

// Sanity run on the full-size backbone: two signal families, 64 windows.
TEST(Pretrain, TrainLossDropsOnTwoFamilies) {
  const BackboneConfig bcfg;
  const auto train = two_families(64, bcfg.input_len, 11, "t");
  const auto val = two_families(16, bcfg.input_len, 12, "v");
  ssl::SslConfig cfg;
  cfg.batch_pairs = 32;
  cfg.max_epochs = 20;
  cfg.patience = 20;
  cfg.schedule.total_epochs = 20;
  cfg.schedule.warmup_epochs = 2;
  const auto [v1, v2] = submitted_view_pipelines();
  const auto result = ssl::pretrain(train, val, v1, v2, cfg, bcfg, ssl::init_ssl_parameters<float>(bcfg, 128, 3), 13);
  const double first = result.history.front().train_loss;
  double lowest = first;
  for (const auto& r : result.history) lowest = std::min(lowest, r.train_loss);
  EXPECT_LE(lowest, 0.7 * first) << "first " << first << " lowest " << lowest;
}
