#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pcgssl/nn/backbone.hpp"
#include "pcgssl/nn/checkpoint.hpp"
#include "pcgssl/nn/gradcheck.hpp"
#include "pcgssl/nn/ops.hpp"
#include "pcgssl/nn/optim.hpp"
#include "pcgssl/nn/schedule.hpp"
#include "pcgssl/ssl/nt_xent.hpp"
#include "support/fixtures.hpp"

using namespace pcgssl;
using namespace pcgssl::nn;

namespace {

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

Tensor<double> run(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b) {
  Tape<double> tape(false);
  return conv1d(tape.constant(x), tape.constant(w), tape.constant(b)).value();
}

BackboneConfig small_backbone() {
  BackboneConfig cfg;
  cfg.n_blocks = 3;
  cfg.channels = {4, 6, 8};
  cfg.kernel = 5;
  cfg.pool = 4;
  cfg.input_len = 256;
  cfg.embed_dim = 8;
  return cfg;
}

}  // namespace

TEST(Conv1d, KernelOneIdentity) {
  const auto x = random_tensor({2, 1, 7}, 1);
  const auto y = run(x, Tensor<double>({1, 1, 1}, {1.0}), Tensor<double>({1}, {0.0}));
  EXPECT_EQ(y, x);
}

TEST(Conv1d, CentredKernelHandExample) {
  const auto y = run(Tensor<double>({1, 1, 3}, {1, 3, 5}), Tensor<double>({1, 1, 3}, {0.5, 0.5, 0}), Tensor<double>({1}, {0.0}));
  EXPECT_DOUBLE_EQ(y[1], 2.0);
  EXPECT_DOUBLE_EQ(y[0], 0.5);  // left zero pad
  EXPECT_DOUBLE_EQ(y[2], 4.0);
}

TEST(Conv1d, ZerosGiveBroadcastBias) {
  const auto y = run(Tensor<double>({3, 2, 9}), random_tensor({4, 2, 16}, 2), Tensor<double>({4}, {1, -2, 3, 0.5}));
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t t = 0; t < 9; ++t) EXPECT_EQ(y[(n * 4 + c) * 9 + t], std::vector<double>({1, -2, 3, 0.5})[c]);
    }
  }
}

TEST(Conv1d, EvenKernelMatchesDirectSum) {
  const std::size_t len = 11, k = 4, cin = 2, cout = 3;
  const auto x = random_tensor({1, cin, len}, 3);
  const auto w = random_tensor({cout, cin, k}, 4);
  const auto b = random_tensor({cout}, 5);
  const auto y = run(x, w, b);
  const long left = (k - 1) / 2;
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t t = 0; t < len; ++t) {
      double acc = b[o];
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t j = 0; j < k; ++j) {
          const long src = static_cast<long>(t + j) - left;
          if (src >= 0 && src < static_cast<long>(len)) acc += w[(o * cin + c) * k + j] * x[c * len + src];
        }
      }
      EXPECT_NEAR(y[o * len + t], acc, 1e-12);
    }
  }
}

TEST(Backbone, DefaultTimeChainAndOutputShape) {
  BackboneConfig cfg;
  EXPECT_EQ(cfg.time_lengths(), (std::vector<std::size_t>{10000, 2500, 625, 156, 39, 9}));
  ParameterSet<float> params;
  init_backbone(params, cfg, 1);
  Tape<float> tape(false);
  const auto z = backbone_forward(tape, tape.constant(random_tensor({2, 1, 10000}, 6).cast<float>()), params, cfg);
  EXPECT_EQ(z.shape(), (Shape{2, 128}));
}

TEST(Backbone, ZeroInputWithZeroBiasGivesZeros) {
  BackboneConfig cfg;
  ParameterSet<float> params;
  init_backbone(params, cfg, 2);
  Tape<float> tape(false);
  const auto z = backbone_forward(tape, tape.constant(Tensor<float>({1, 1, 10000})), params, cfg);
  for (float v : z.value().data()) EXPECT_EQ(v, 0.0f);
}

TEST(Backbone, WrongInputShapeIsRejected) {
  BackboneConfig cfg;
  ParameterSet<float> params;
  init_backbone(params, cfg, 2);
  Tape<float> tape(false);
  EXPECT_THROW(backbone_forward(tape, tape.constant(Tensor<float>({1, 1, 9999})), params, cfg), Error);
}

TEST(GradCheck, SumOfSquares) {
  ParameterSet<double> params;
  params.add("w", random_tensor({5, 3}, 7));
  const auto report = grad_check<double>(
      [](Tape<double>& tape, ParameterSet<double>& p) { return sum_squares(tape.parameter(p.at("w"))); }, params);
  EXPECT_LT(report.max_rel_error, 1e-7);
  EXPECT_EQ(report.coords_checked, 15u);
}

TEST(GradCheck, ConstantFunctionHasZeroGradient) {
  ParameterSet<double> params;
  params.add("w", random_tensor({4}, 8));
  params.zero_grad();
  Tape<double> tape;
  tape.parameter(params.at("w"));
  auto c = tape.constant(Tensor<double>::scalar(3.0));
  tape.backward(c);
  for (double g : params.at("w").grad()) EXPECT_EQ(g, 0.0);
}

TEST(GradCheck, EachLayerMatchesFiniteDifferences) {
  ParameterSet<double> params;
  params.add("x", random_tensor({2, 3, 24}, 9));
  params.add("conv.w", random_tensor({4, 3, 5}, 10));
  params.add("conv.b", random_tensor({4}, 11, 0.1));
  params.add("fc.w", random_tensor({3, 4}, 12));
  params.add("fc.b", random_tensor({3}, 13, 0.1));
  const std::vector<int> labels{2, 0};
  const auto report = grad_check<double>(
      [&](Tape<double>& tape, ParameterSet<double>& p) {
        auto h = conv1d(tape.parameter(p.at("x")), tape.parameter(p.at("conv.w")), tape.parameter(p.at("conv.b")));
        h = global_max_pool(max_pool1d(relu(h), 3));
        auto logits = linear(h, tape.parameter(p.at("fc.w")), tape.parameter(p.at("fc.b")));
        return softmax_cross_entropy(logits, std::span<const int>(labels));
      },
      params);
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst_path << "[" << report.worst_index << "]";
}

TEST(GradCheck, BackboneProjectionContrastiveLoss) {
  const auto cfg = small_backbone();
  ParameterSet<double> params;
  init_backbone(params, cfg, 3);
  init_dense(params, "projection.", cfg.embed_dim, 8, 3);
  for (auto& [path, t] : params) {
    if (path.ends_with("bias")) t = random_tensor(t.shape(), tag(path), 0.05);
  }
  const auto x = random_tensor({4, 1, cfg.input_len}, 14);
  const auto report = grad_check<double>(
      [&](Tape<double>& tape, ParameterSet<double>& p) {
        auto z = backbone_forward(tape, tape.constant(x), p, cfg);
        return ssl::nt_xent_loss(dense(tape, z, p, "projection."), 0.1);
      },
      params);
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst_path << "[" << report.worst_index << "]";
}

TEST(GradCheck, LockedBranchesReproduceTheRecordingPoint) {
  const auto cfg = small_backbone();
  ParameterSet<double> params;
  init_backbone(params, cfg, 6);
  const auto x = random_tensor({2, 1, cfg.input_len}, 7);
  auto forward = [&](Tape<double>& tape) { return sum_squares(backbone_forward(tape, tape.constant(x), params, cfg)).value().item(); };
  BranchPattern pattern;
  Tape<double> record(false);
  record.set_branch_pattern(&pattern);
  const double recorded = forward(record);
  EXPECT_EQ(pattern.choices.size(), 2 * cfg.n_blocks + 1);
  pattern.replay = true;
  Tape<double> replay(false);
  replay.set_branch_pattern(&pattern);
  Tape<double> free(false);
  EXPECT_EQ(forward(replay), recorded);
  EXPECT_EQ(forward(free), recorded);
  EXPECT_EQ(pattern.cursor, pattern.choices.size());
}

TEST(GradCheck, LockedBranchesHoldTheBranchWhenInputsMove) {
  ParameterSet<double> params;
  params.add("x", Tensor<double>({1, 1, 4}, {0.5, -0.5, 0.2, 0.1}));
  auto forward = [&](Tape<double>& tape) { return sum_squares(global_max_pool(relu(tape.constant(params.at("x"))))).value().item(); };
  BranchPattern pattern;
  Tape<double> record(false);
  record.set_branch_pattern(&pattern);
  EXPECT_DOUBLE_EQ(forward(record), 0.25);
  pattern.replay = true;
  params.at("x")[0] = -1.0;  // relu would zero it and the max would move
  Tape<double> replay(false);
  replay.set_branch_pattern(&pattern);
  EXPECT_DOUBLE_EQ(forward(replay), 1.0);
  pattern.cursor = 0;
  Tape<double> other(false);
  other.set_branch_pattern(&pattern);
  EXPECT_THROW(max_pool1d(other.constant(Tensor<double>({1, 1, 6})), 2), Error);
}

TEST(GradCheck, LockedAndFreeChecksAgreeOnSmoothPieces) {
  const auto cfg = small_backbone();
  ParameterSet<double> params;
  init_backbone(params, cfg, 3);
  init_dense(params, "projection.", cfg.embed_dim, 8, 3);
  const auto x = random_tensor({4, 1, cfg.input_len}, 14);
  const ScalarFn<double> f = [&](Tape<double>& tape, ParameterSet<double>& p) {
    return ssl::nt_xent_loss(dense(tape, backbone_forward(tape, tape.constant(x), p, cfg), p, "projection."), 0.1);
  };
  const auto locked = grad_check<double>(f, params, {.eps = 1e-3, .lock_branches = true});
  EXPECT_LT(locked.max_rel_error, 1e-4) << locked.worst_path << "[" << locked.worst_index << "]";
  const auto free = grad_check<double>(f, params);
  EXPECT_EQ(locked.coords_checked, free.coords_checked);
}

TEST(GradCheck, FrozenTensorsAreSkippedAndGetNoGradient) {
  ParameterSet<double> params;
  params.add("a", random_tensor({3}, 15));
  params.add("b", random_tensor({3}, 16));
  params.freeze("b");
  params.zero_grad();
  Tape<double> tape;
  auto loss = sum_squares(tape.parameter(params.at("b"), false));
  tape.backward(loss);
  EXPECT_FALSE(params.at("b").has_grad() && params.at("b").grad()[0] != 0.0);
}

TEST(Adam, FirstStepClosedForm) {
  ParameterSet<double> params;
  params.add("w", Tensor<double>({1}, {0.0}));
  params.at("w").grad()[0] = 1.0;
  Adam<double> adam;
  adam.step(params);
  EXPECT_NEAR(params.at("w")[0], -1e-4 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientAndFrozenPathsDoNotMove) {
  ParameterSet<double> params;
  params.add("a", random_tensor({6}, 17));
  params.add("b", random_tensor({6}, 18));
  params.freeze("b");
  const auto before = params;
  params.zero_grad();
  for (auto& g : params.at("b").grad()) g = 3.0;
  Adam<double> adam({.lr = 0.1});
  for (int i = 0; i < 100; ++i) adam.step(params);
  EXPECT_EQ(params.at("a"), before.at("a"));
  EXPECT_EQ(params.at("b"), before.at("b"));
}

TEST(Lars, HandExample) {
  ParameterSet<double> params;
  params.add("w", Tensor<double>({1, 2}, {3.0, 4.0}));
  params.at("w").grad()[1] = 10.0;
  Lars<double> lars({.momentum = 0.0, .weight_decay = 0.0});
  EXPECT_DOUBLE_EQ(lars.trust_ratio(params.at("w")), 5.0 / (10.0 + 1e-9));
  lars.step(params, 0.1);
  EXPECT_EQ(params.at("w")[0], 3.0);
  EXPECT_NEAR(params.at("w")[1], 3.5, 1e-9);
}

TEST(Lars, ZeroGradientIsNoChange) {
  ParameterSet<double> params;
  params.add("w", random_tensor({3, 2}, 19));
  const auto before = params.at("w");
  params.zero_grad();
  Lars<double> lars;
  lars.step(params, 0.1);
  EXPECT_EQ(params.at("w"), before);
}

TEST(Lars, StepIsInvariantToGradientScale) {
  for (double c : {0.01, 1.0, 250.0}) {
    ParameterSet<double> a, b;
    a.add("w", random_tensor({4, 4}, 20));
    b.add("w", random_tensor({4, 4}, 20));
    const auto g = random_tensor({4, 4}, 21);
    for (std::size_t i = 0; i < 16; ++i) {
      a.at("w").grad()[i] = g[i];
      b.at("w").grad()[i] = c * g[i];
    }
    Lars<double> la({.momentum = 0.0, .eps = 0.0}), lb({.momentum = 0.0, .eps = 0.0});
    la.step(a, 0.1);
    lb.step(b, 0.1);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(a.at("w")[i], b.at("w")[i], 1e-12);
  }
}

TEST(Lars, TrustCoefficientScalesTheStep) {
  ParameterSet<double> params;
  params.add("w", Tensor<double>({1, 2}, {3.0, 4.0}));
  params.at("w").grad()[1] = 10.0;
  Lars<double> lars({.momentum = 0.0, .trust_coefficient = 0.01});
  lars.step(params, 0.1);
  EXPECT_NEAR(params.at("w")[1], 4.0 - 0.005, 1e-12);
}

TEST(Lars, FrozenParametersBitIdenticalOverManySteps) {
  ParameterSet<float> params;
  init_backbone(params, small_backbone(), 4);
  params.freeze_prefix("block1.");
  const auto frozen_before = params.at("block1.conv.weight");
  const auto trainable_before = params.at("block2.conv.weight");
  Lars<float> lars;
  Rng rng(5);
  for (int step = 0; step < 100; ++step) {
    params.zero_grad();
    for (auto& [path, t] : params) {
      for (auto& g : t.grad()) g = static_cast<float>(rng.uniform(-1, 1));
    }
    lars.step(params, 0.1);
  }
  EXPECT_EQ(params.at("block1.conv.weight"), frozen_before);
  EXPECT_NE(params.at("block2.conv.weight"), trainable_before);
}

TEST(Schedule, Endpoints) {
  ScheduleConfig cfg;  // 5 warm-up steps out of 50
  EXPECT_NEAR(lr_at(0, cfg), 0.02, 1e-12);
  EXPECT_NEAR(lr_at(4, cfg), 0.1, 1e-12);
  EXPECT_NEAR(lr_at(49, cfg), 0.001, 1e-12);
  cfg.total_epochs = 25;
  cfg.steps_per_epoch = 2;
  EXPECT_NEAR(lr_at(9, cfg), 0.1, 1e-12);
  EXPECT_NEAR(lr_at(49, cfg), 0.001, 1e-12);
  // Decay runs over steps 5..25, so step 15 is its midpoint.
  const ScheduleConfig mid{.total_epochs = 26};
  EXPECT_NEAR(lr_at(15, mid), 0.0505, 1e-12);
}

TEST(Schedule, WarmupLinearThenMonotoneDecay) {
  ScheduleConfig cfg{.steps_per_epoch = 7};
  double prev = 0.0;
  for (std::size_t s = 0; s < cfg.warmup_steps(); ++s) {
    const double lr = lr_at(s, cfg);
    EXPECT_NEAR(lr, 0.1 * static_cast<double>(s + 1) / 35.0, 1e-15);
    EXPECT_GT(lr, prev);
    prev = lr;
  }
  for (std::size_t s = cfg.warmup_steps(); s < cfg.total_steps(); ++s) {
    const double lr = lr_at(s, cfg);
    EXPECT_LE(lr, prev);
    EXPECT_GE(lr, 0.001 - 1e-15);
    prev = lr;
  }
}

TEST(Schedule, OutOfRangeStepAndBadConfig) {
  ScheduleConfig cfg;
  try {
    lr_at(50, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StepOutOfRange);
  }
  cfg.warmup_epochs = 50;
  EXPECT_THROW(lr_at(0, cfg), Error);
}

TEST(Checkpoint, RoundTripKeepsValuesFrozenFlagsAndMetadata) {
  fixture::TempDir dir;
  const auto cfg = small_backbone();
  ParameterSet<float> params;
  init_backbone(params, cfg, 6);
  init_dense(params, "projection.", cfg.embed_dim, 8, 6);
  params.freeze_prefix("block");
  nlohmann::json meta;
  meta["backbone"] = cfg;
  meta["note"] = "x";
  save_checkpoint(dir / "a.ckpt", params, meta);
  const auto back = load_checkpoint<float>(dir / "a.ckpt");
  EXPECT_EQ(back.params, params);
  EXPECT_EQ(back.metadata.at("note"), "x");
  EXPECT_EQ(back.metadata.at("backbone").get<BackboneConfig>(), cfg);
  EXPECT_EQ(back.params.fingerprint(), params.fingerprint());
}

TEST(Checkpoint, RejectsForeignAndMismatchedFiles) {
  fixture::TempDir dir;
  fixture::write_text(dir / "junk.ckpt", "not a checkpoint at all");
  EXPECT_THROW(load_checkpoint<float>(dir / "junk.ckpt"), Error);
  ParameterSet<float> params;
  init_backbone(params, small_backbone(), 7);
  nlohmann::json meta;
  meta["backbone"] = BackboneConfig{};
  save_checkpoint(dir / "bad.ckpt", params, meta);
  try {
    load_checkpoint<float>(dir / "bad.ckpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ShapeMismatch);
  }
}
