#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "invaug/errors.hpp"
#include "invaug/oracle.hpp"
#include "invaug/trainer.hpp"

using namespace invaug;

namespace {

const TransformSpace& rot_space() {
  static const TransformSpace space(
      {TransformKind::Identity, TransformKind::Rotate}, 30);
  return space;
}

Dataset rings(int n_train, double sigma, int k, std::uint64_t seed) {
  return make_rings(SyntheticSpec{SyntheticKind::Rings, n_train, 1, sigma, seed, k});
}

std::vector<std::size_t> iota_batch(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::vector<std::vector<Transform>> identity_transforms(std::size_t n, int m) {
  return std::vector<std::vector<Transform>>(
      n, std::vector<Transform>(m, Transform{TransformKind::Identity, 0, 0.0}));
}

}  // namespace

TEST_CASE("dual update projects onto the nonnegative orthant") {
  DualState d{0.1, 0.001};
  CHECK(dual_update(d, -0.5).gamma == doctest::Approx(0.0995).epsilon(1e-15));

  DualState at_zero{0.0, 0.5};
  CHECK(dual_update(at_zero, -1.0).gamma == 0.0);

  DualState up{0.5, 0.001};
  CHECK(dual_update(up, 0.2).gamma == doctest::Approx(0.5002).epsilon(1e-15));
  CHECK(dual_update(up, 0.2).eta_d == 0.001);
}

TEST_CASE("lagrangian") {
  CHECK(lagrangian(1.0, 0.0, 123.0) == 1.0);  // gamma = 0 reduces to ERM
  CHECK(lagrangian(1.0, 2.0, 0.1) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(lagrangian(1.0, 2.0, -0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(lagrangian(1.0, -0.1, 0.0), std::invalid_argument);
}

TEST_CASE("constraint slack") {
  const Dataset ds = rings(12, 0.1, 2, 10);
  const MLPConfig mc{{2, 8, 2}, Activation::Tanh, 0.5, 3};
  const ParameterVector theta = init_params(mc);
  const auto batch = iota_batch(ds.samples.size());

  SUBCASE("identity transforms at epsilon = clean loss give zero slack") {
    const auto transforms = identity_transforms(batch.size(), 1);
    double clean = 0.0;
    for (std::size_t i : batch) {
      const Sample& s = ds.samples[i];
      clean += loss(forward(theta, mc, s.x), s.y);
    }
    clean /= static_cast<double>(batch.size());
    CHECK(constraint_slack(theta, mc, ds, batch, transforms, clean) == 0.0);
  }

  SUBCASE("slack shifts by epsilon") {
    const auto transforms = identity_transforms(batch.size(), 1);
    const double s0 = constraint_slack(theta, mc, ds, batch, transforms, 0.0);
    const double s1 = constraint_slack(theta, mc, ds, batch, transforms, 0.8);
    CHECK(s1 == doctest::Approx(s0 - 0.8).epsilon(1e-15));
  }

  SUBCASE("empty batch and mismatched transforms are rejected") {
    CHECK_THROWS_AS(constraint_slack(theta, mc, ds, std::vector<std::size_t>{},
                                     {}, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        constraint_slack(theta, mc, ds, batch,
                         identity_transforms(batch.size() - 1, 1), 0.0),
        std::invalid_argument);
  }
}

TEST_CASE("primal update") {
  const Dataset ds = rings(10, 0.1, 2, 20);
  const MLPConfig mc{{2, 4, 2}, Activation::Tanh, 0.5, 7};
  const ParameterVector theta = init_params(mc);
  const auto batch = iota_batch(ds.samples.size());

  SUBCASE("gamma = 0 is exactly an ERM SGD step on the clean batch") {
    const auto transforms = identity_transforms(batch.size(), 1);
    const ParameterVector updated =
        primal_update(theta, mc, ds, batch, transforms, 0.0, 0.05);

    Gradients clean_grad(theta.size(), 0.0);
    for (std::size_t i : batch) {
      const Sample& s = ds.samples[i];
      const LossGrad lg = loss_grad(theta, mc, s.x, s.y);
      for (std::size_t p = 0; p < theta.size(); ++p)
        clean_grad[p] += lg.grad[p];
    }
    for (double& g : clean_grad) g /= static_cast<double>(batch.size());
    const ParameterVector expected = sgd_step(theta, clean_grad, 0.05);
    for (std::size_t p = 0; p < theta.size(); ++p)
      CHECK(updated[p] == expected[p]);
  }

  SUBCASE("all-identity transforms merge into (1 + gamma) times the clean grad") {
    const auto transforms = identity_transforms(batch.size(), 1);
    const double gamma = 0.7;
    const ParameterVector updated =
        primal_update(theta, mc, ds, batch, transforms, gamma, 0.1);

    Gradients clean_grad(theta.size(), 0.0);
    for (std::size_t i : batch) {
      const LossGrad lg = loss_grad(theta, mc, ds.samples[i].x, ds.samples[i].y);
      for (std::size_t p = 0; p < theta.size(); ++p)
        clean_grad[p] += lg.grad[p];
    }
    for (std::size_t p = 0; p < theta.size(); ++p) {
      const double expected =
          theta[p] - 0.1 * (1.0 + gamma) * clean_grad[p] /
                         static_cast<double>(batch.size());
      CHECK(updated[p] == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  SUBCASE("gradient of the Lagrangian matches central finite differences") {
    // transforms fixed, so the Lagrangian is a plain function of theta
    Rng rng(55);
    std::vector<std::vector<Transform>> transforms(batch.size());
    for (auto& gs : transforms)
      gs.push_back(uniform_sample(rot_space(), rng));
    const double gamma = 0.9;
    const double eps = 0.4;
    const double eta = 1.0;  // step of eta * grad recovers the gradient

    const ParameterVector updated =
        primal_update(theta, mc, ds, batch, transforms, gamma, eta);
    Gradients analytic(theta.size());
    for (std::size_t p = 0; p < theta.size(); ++p)
      analytic[p] = theta[p] - updated[p];

    const auto lagrangian_at = [&](const ParameterVector& t) {
      double clean = 0.0;
      for (std::size_t i : batch)
        clean += loss(forward(t, mc, ds.samples[i].x), ds.samples[i].y);
      clean /= static_cast<double>(batch.size());
      const double slack =
          constraint_slack(t, mc, ds, batch, transforms, eps);
      return lagrangian(clean, gamma, slack);
    };

    const double h = 1e-5;
    ParameterVector probe = theta;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      const double saved = probe[p];
      probe[p] = saved + h;
      const double up = lagrangian_at(probe);
      probe[p] = saved - h;
      const double down = lagrangian_at(probe);
      probe[p] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom =
          std::max({std::abs(analytic[p]), std::abs(numeric), 1e-3});
      CHECK(std::abs(analytic[p] - numeric) / denom < 1e-5);
    }
  }
}

TEST_CASE("training runs and learns the rings task") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 300, 200, 0.1, 77, 2});
  const MLPConfig mc{{2, 32, 32, 2}, Activation::Tanh, 0.5, 5};
  TrainerConfig tc;
  tc.mode = TrainMode::Erm;
  tc.eta_p = 0.1;
  tc.epochs = 60;
  tc.batch_size = 64;
  tc.seed = 9;

  const RunResult result = train(train_ds, test_ds, rot_space(), mc, tc);
  REQUIRE(result.epochs.size() == 60);
  CHECK(result.epochs.back().train_loss < result.epochs.front().train_loss);
  CHECK(result.epochs.back().test_accuracy > 0.8);
  for (const EpochMetrics& m : result.epochs) {
    CHECK(m.gamma == 0.0);
    CHECK(m.slack == 0.0);
    CHECK(m.entropy == 0.0);
  }
}

TEST_CASE("dual variable vanishes when the constraint is loose") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 200, 100, 0.1, 31, 2});
  const MLPConfig mc{{2, 16, 16, 2}, Activation::Tanh, 0.5, 13};

  TrainerConfig erm;
  erm.mode = TrainMode::Erm;
  erm.eta_p = 0.1;
  erm.epochs = 60;
  erm.seed = 21;
  const RunResult base = train(train_ds, test_ds, rot_space(), mc, erm);

  // constraint level above the ERM solution's worst-case orbit loss
  double adv_risk = 0.0;
  for (const Sample& s : train_ds.samples)
    adv_risk += adversarial_loss(orbit_losses(base.final_theta, mc, s.x, s.y,
                                              rot_space()))
                    .first;
  adv_risk /= static_cast<double>(train_ds.samples.size());

  TrainerConfig pd = erm;
  pd.mode = TrainMode::PrimalDual;
  pd.epsilon = adv_risk + 0.5;
  pd.eta_d = 1e-3;
  pd.sampler = SamplerConfig{2, 1, 1e-12};
  const RunResult constrained = train(train_ds, test_ds, rot_space(), mc, pd);
  CHECK(constrained.epochs.back().gamma < 1e-2);
}

TEST_CASE("zero-step MH is exactly uniform sampling") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 120, 60, 0.1, 53, 2});
  const MLPConfig mc{{2, 16, 2}, Activation::Tanh, 0.5, 2};

  TrainerConfig pd;
  pd.mode = TrainMode::PrimalDual;
  pd.epsilon = 0.5;
  pd.eta_p = 0.1;
  pd.eta_d = 1e-3;
  pd.epochs = 12;
  pd.batch_size = 32;
  pd.sampler = SamplerConfig{0, 1, 1e-12};
  pd.seed = 4242;

  TrainerConfig uniform = pd;
  uniform.mode = TrainMode::UniformConstrained;

  const RunResult a = train(train_ds, test_ds, rot_space(), mc, pd);
  const RunResult b = train(train_ds, test_ds, rot_space(), mc, uniform);
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(a.epochs[e].train_loss == b.epochs[e].train_loss);
    CHECK(a.epochs[e].slack == b.epochs[e].slack);
    CHECK(a.epochs[e].gamma == b.epochs[e].gamma);
    CHECK(a.epochs[e].entropy == b.epochs[e].entropy);
    CHECK(a.epochs[e].transform_histogram == b.epochs[e].transform_histogram);
    CHECK(a.epochs[e].test_loss == b.epochs[e].test_loss);
  }
  CHECK(a.final_theta == b.final_theta);
}

TEST_CASE("with gamma pinned at zero, primal-dual equals erm bit-for-bit") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 100, 50, 0.1, 61, 2});
  const MLPConfig mc{{2, 16, 2}, Activation::Tanh, 0.5, 6};

  TrainerConfig pd;
  pd.mode = TrainMode::PrimalDual;
  pd.epsilon = 1e6;  // slack stays negative, gamma stays at zero
  pd.eta_p = 0.1;
  pd.eta_d = 1e-3;
  pd.epochs = 10;
  pd.seed = 7;
  pd.sampler = SamplerConfig{2, 1, 1e-12};

  TrainerConfig erm = pd;
  erm.mode = TrainMode::Erm;

  const RunResult a = train(train_ds, test_ds, rot_space(), mc, pd);
  const RunResult b = train(train_ds, test_ds, rot_space(), mc, erm);
  CHECK(a.final_theta == b.final_theta);
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(a.epochs[e].gamma == 0.0);
    CHECK(a.epochs[e].train_loss == b.epochs[e].train_loss);
    CHECK(a.epochs[e].test_loss == b.epochs[e].test_loss);
  }
}

TEST_CASE("dual dynamics follow the slack sign") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 200, 100, 0.1, 71, 3});
  const MLPConfig mc{{2, 32, 32, 3}, Activation::Tanh, 0.5, 3};

  SUBCASE("persistently violated constraint drives gamma up") {
    TrainerConfig tight;
    tight.mode = TrainMode::PrimalDual;
    tight.epsilon = 0.01;
    tight.eta_p = 0.1;
    tight.eta_d = 1e-3;
    tight.epochs = 5;
    tight.seed = 15;
    tight.sampler = SamplerConfig{2, 1, 1e-12};
    const RunResult r = train(train_ds, test_ds, rot_space(), mc, tight);
    for (std::size_t e = 1; e < r.epochs.size(); ++e) {
      CHECK(r.epochs[e].slack > 0.0);
      CHECK(r.epochs[e].gamma > r.epochs[e - 1].gamma);
    }
  }

  SUBCASE("gamma rises then decays once the constraint is satisfied") {
    TrainerConfig mid;
    mid.mode = TrainMode::PrimalDual;
    mid.epsilon = 0.75;  // above the achievable orbit loss, below the initial one
    mid.eta_p = 0.1;
    mid.eta_d = 1e-3;
    mid.epochs = 120;
    mid.seed = 16;
    mid.sampler = SamplerConfig{2, 1, 1e-12};
    const RunResult r = train(train_ds, test_ds, rot_space(), mc, mid);
    double peak = 0.0;
    for (const EpochMetrics& m : r.epochs) peak = std::max(peak, m.gamma);
    CHECK(peak > 0.0);
    CHECK(r.epochs.back().gamma < peak);
    for (const EpochMetrics& m : r.epochs) CHECK(m.gamma >= 0.0);
  }
}

TEST_CASE("penalized mode keeps gamma fixed") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 100, 50, 0.1, 81, 2});
  const MLPConfig mc{{2, 16, 2}, Activation::Tanh, 0.5, 8};
  TrainerConfig pen;
  pen.mode = TrainMode::Penalized;
  pen.fixed_gamma = 0.3;
  pen.epsilon = 0.2;
  pen.eta_p = 0.1;
  pen.epochs = 8;
  pen.seed = 12;
  pen.sampler = SamplerConfig{2, 1, 1e-12};
  const RunResult r = train(train_ds, test_ds, rot_space(), mc, pen);
  for (const EpochMetrics& m : r.epochs) CHECK(m.gamma == 0.3);
}

TEST_CASE("histogram totals equal samples times m") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 90, 30, 0.1, 91, 2});
  const MLPConfig mc{{2, 16, 2}, Activation::Tanh, 0.5, 9};
  TrainerConfig tc;
  tc.mode = TrainMode::PrimalDual;
  tc.epsilon = 0.3;
  tc.eta_p = 0.1;
  tc.epochs = 3;
  tc.batch_size = 32;
  tc.seed = 3;
  tc.sampler = SamplerConfig{1, 3, 1e-12};
  const RunResult r = train(train_ds, test_ds, rot_space(), mc, tc);
  for (const EpochMetrics& m : r.epochs) {
    std::uint64_t total = 0;
    for (std::uint64_t c : m.transform_histogram) total += c;
    CHECK(total == 90 * 3);
  }
}

TEST_CASE("training is deterministic per config") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 80, 40, 0.1, 101, 2});
  const MLPConfig mc{{2, 16, 2}, Activation::Tanh, 0.5, 10};
  TrainerConfig tc;
  tc.mode = TrainMode::PrimalDual;
  tc.epsilon = 0.4;
  tc.eta_p = 0.1;
  tc.epochs = 6;
  tc.seed = 1001;
  tc.sampler = SamplerConfig{2, 1, 1e-12};
  const RunResult a = train(train_ds, test_ds, rot_space(), mc, tc);
  const RunResult b = train(train_ds, test_ds, rot_space(), mc, tc);
  CHECK(a.final_theta == b.final_theta);
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(a.epochs[e].train_loss == b.epochs[e].train_loss);
    CHECK(a.epochs[e].slack == b.epochs[e].slack);
    CHECK(a.epochs[e].gamma == b.epochs[e].gamma);
  }
}

TEST_CASE("numeric blowups abort with epoch and batch coordinates") {
  const auto [train_ds, test_ds] = make_dataset_pair(
      SyntheticSpec{SyntheticKind::Rings, 60, 30, 0.1, 111, 2});
  const MLPConfig mc{{2, 8, 2}, Activation::Relu, 0.5, 11};
  TrainerConfig tc;
  tc.mode = TrainMode::Erm;
  tc.eta_p = 1e30;  // parameter magnitudes square every step; overflow is
                    // reached within a handful of updates
  tc.epochs = 12;
  tc.seed = 2;
  try {
    train(train_ds, test_ds, rot_space(), mc, tc);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.epoch >= 1);
    CHECK(e.batch >= 0);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("trainer config validation") {
  TrainerConfig tc;
  tc.eta_p = 0.1;
  tc.epochs = 1;
  tc.epsilon = -0.1;
  CHECK_THROWS_AS(validate(tc), std::invalid_argument);
  tc.epsilon = 0.1;
  tc.eta_p = 0.0;
  CHECK_THROWS_AS(validate(tc), std::invalid_argument);
  tc.eta_p = 0.1;
  tc.batch_size = 0;
  CHECK_THROWS_AS(validate(tc), std::invalid_argument);
}
