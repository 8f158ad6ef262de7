#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

#include "invaug/data.hpp"
#include "invaug/model.hpp"
#include "invaug/oracle.hpp"
#include "invaug/rng.hpp"
#include "invaug/sampler.hpp"
#include "invaug/trainer.hpp"
#include "invaug/transform.hpp"

namespace py = pybind11;
using namespace invaug;

namespace {

SyntheticSpec make_spec(const std::string& kind, int n_train, int n_test,
                        double noise_sigma, std::uint64_t seed, int n_classes) {
  SyntheticSpec spec;
  if (kind == "rings")
    spec.kind = SyntheticKind::Rings;
  else if (kind == "wedges")
    spec.kind = SyntheticKind::Wedges;
  else
    throw std::invalid_argument("kind must be 'rings' or 'wedges'");
  spec.n_train = n_train;
  spec.n_test = n_test;
  spec.noise_sigma = noise_sigma;
  spec.seed = seed;
  spec.n_classes = n_classes;
  return spec;
}

MLPConfig make_mlp_config(const std::vector<int>& layer_sizes,
                          const std::string& activation, double init_scale,
                          std::uint64_t seed) {
  MLPConfig config;
  config.layer_sizes = layer_sizes;
  config.activation = activation_from_name(activation);
  config.init_scale = init_scale;
  config.seed = seed;
  validate(config);
  return config;
}

TrainerConfig make_trainer_config(const std::string& mode, double epsilon,
                                  double eta_p, double eta_d,
                                  double fixed_gamma, int batch_size,
                                  int epochs, int n_steps, int m,
                                  double zero_loss_epsilon,
                                  std::uint64_t seed) {
  TrainerConfig config;
  config.mode = mode_from_name(mode);
  config.epsilon = epsilon;
  config.eta_p = eta_p;
  config.eta_d = eta_d;
  config.fixed_gamma = fixed_gamma;
  config.batch_size = batch_size;
  config.epochs = epochs;
  config.sampler.n_steps = n_steps;
  config.sampler.m = m;
  config.sampler.zero_loss_epsilon = zero_loss_epsilon;
  config.seed = seed;
  validate(config);
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Invariance-constrained data augmentation: core operations";

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next_u64", &Rng::next_u64)
      .def("next_double", &Rng::next_double)
      .def("next_below", &Rng::next_below)
      .def("normal", &Rng::normal);

  py::class_<Transform>(m, "Transform")
      .def_property_readonly(
          "kind", [](const Transform& g) { return kind_name(g.kind); })
      .def_readonly("level", &Transform::level)
      .def_readonly("magnitude", &Transform::magnitude)
      .def("__eq__", [](const Transform& a, const Transform& b) { return a == b; })
      .def("__repr__", [](const Transform& g) {
        return "Transform(" + kind_name(g.kind) + ", level=" +
               std::to_string(g.level) + ")";
      });

  py::class_<TransformSpace>(m, "TransformSpace")
      .def(py::init(&TransformSpace::from_names), py::arg("kinds"),
           py::arg("levels_per_op") = 30)
      .def_property_readonly("levels_per_op", &TransformSpace::levels_per_op)
      .def("__len__", &TransformSpace::size)
      .def("element", &TransformSpace::element)
      .def("index_of", &TransformSpace::index_of)
      .def("elements", [](const TransformSpace& s) { return enumerate(s); });

  m.def("apply", [](const Transform& g, const std::vector<double>& x) {
    return invaug::apply(g, x);
  });
  m.def("uniform_sample", &uniform_sample);
  m.def("measure", &measure);

  py::class_<Sample>(m, "Sample")
      .def_readonly("x", &Sample::x)
      .def_readonly("y", &Sample::y);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("samples", &Dataset::samples)
      .def_readonly("d", &Dataset::d)
      .def_readonly("n_classes", &Dataset::n_classes)
      .def_readonly("name", &Dataset::name)
      .def("__len__", &Dataset::size);

  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init(&make_spec), py::arg("kind"), py::arg("n_train"),
           py::arg("n_test"), py::arg("noise_sigma") = 0.0, py::arg("seed") = 0,
           py::arg("n_classes") = 3);

  m.def("make_rings", &make_rings);
  m.def("make_wedges", &make_wedges);
  m.def("make_dataset_pair", &make_dataset_pair);
  m.def("split", &split, py::arg("dataset"), py::arg("fractions"),
        py::arg("seed"));
  m.def("rings_label", [](const std::vector<double>& x, int k) {
    return rings_label(x, k);
  });
  m.def("wedges_label", [](const std::vector<double>& x, int k) {
    return wedges_label(x, k);
  });

  py::class_<MLPConfig>(m, "MLPConfig")
      .def(py::init(&make_mlp_config), py::arg("layer_sizes"),
           py::arg("activation") = "tanh", py::arg("init_scale") = 0.5,
           py::arg("seed") = 0)
      .def_readonly("layer_sizes", &MLPConfig::layer_sizes)
      .def_readonly("seed", &MLPConfig::seed);

  m.def("param_count", &param_count);
  m.def("init_params", &init_params);
  m.def("forward", [](const std::vector<double>& theta, const MLPConfig& c,
                      const std::vector<double>& x) {
    return forward(theta, c, x);
  });
  m.def("loss",
        [](const std::vector<double>& logits, int y) { return loss(logits, y); });
  m.def("loss_grad", [](const std::vector<double>& theta, const MLPConfig& c,
                        const std::vector<double>& x, int y) {
    const LossGrad lg = loss_grad(theta, c, x, y);
    return py::make_tuple(lg.loss, lg.grad);
  });
  m.def("sgd_step", [](const std::vector<double>& theta,
                       const std::vector<double>& grad, double lr) {
    return sgd_step(theta, grad, lr);
  });
  m.def(
      "gradient_check",
      [](const MLPConfig& c, int n_probes, std::uint64_t seed, double h,
         double perturb) {
        const GradCheckReport r = gradient_check(c, n_probes, seed, h, perturb);
        py::dict out;
        out["max_rel_err"] = r.max_rel_err;
        out["per_layer_max"] = r.per_layer_max;
        return out;
      },
      py::arg("config"), py::arg("n_probes") = 20, py::arg("seed") = 0,
      py::arg("h") = 1e-5, py::arg("perturb") = 0.0);

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init([](int n_steps, int m_keep, double eps) {
             SamplerConfig c{n_steps, m_keep, eps};
             validate(c);
             return c;
           }),
           py::arg("n_steps") = 2, py::arg("m") = 1,
           py::arg("zero_loss_epsilon") = 1e-12)
      .def_readonly("n_steps", &SamplerConfig::n_steps)
      .def_readonly("m", &SamplerConfig::m);

  py::class_<ChainState>(m, "ChainState")
      .def_readonly("g", &ChainState::g)
      .def_readonly("cached_loss", &ChainState::cached_loss)
      .def_readonly("steps_taken", &ChainState::steps_taken)
      .def_readonly("accepts", &ChainState::accepts);

  m.def("acceptance_rate", &acceptance_rate);
  m.def("mh_chain", [](const std::vector<double>& theta, const MLPConfig& c,
                       const std::vector<double>& x, int y,
                       const TransformSpace& space, const SamplerConfig& cfg,
                       std::uint64_t seed) {
    return mh_chain(theta, c, x, y, space, cfg, seed);
  });
  m.def("mh_chain_states",
        [](const std::vector<double>& theta, const MLPConfig& c,
           const std::vector<double>& x, int y, const TransformSpace& space,
           const SamplerConfig& cfg, std::uint64_t seed) {
          return mh_chain_states(theta, c, x, y, space, cfg, seed);
        });
  m.def("exact_sample", [](const TransformSpace& space,
                           const std::vector<double>& probs, Rng& rng) {
    return exact_sample(space, probs, rng);
  });
  m.def("mh_transition_matrix", [](const std::vector<double>& losses,
                                   double eps) {
    return mh_transition_matrix(losses, eps);
  });

  py::class_<OrbitLosses>(m, "OrbitLosses")
      .def(py::init([](std::vector<double> losses) {
        return OrbitLosses{std::move(losses)};
      }))
      .def_readonly("losses", &OrbitLosses::losses);

  py::class_<SmoothedDistribution>(m, "SmoothedDistribution")
      .def_readonly("probs", &SmoothedDistribution::probs)
      .def_readonly("c_star", &SmoothedDistribution::c_star);

  m.def("orbit_losses", [](const std::vector<double>& theta, const MLPConfig& c,
                           const std::vector<double>& x, int y,
                           const TransformSpace& space) {
    return orbit_losses(theta, c, x, y, space);
  });
  m.def("adversarial_loss", &adversarial_loss);
  m.def("lambda_star_pointmass", &lambda_star_pointmass);
  m.def("smoothed_lambda", &smoothed_lambda);
  m.def("expected_smoothed_loss", &expected_smoothed_loss);
  m.def("c_star_mc", [](const std::vector<double>& theta, const MLPConfig& c,
                        const std::vector<double>& x, int y,
                        const TransformSpace& space, int n_draws, Rng& rng) {
    return c_star_mc(theta, c, x, y, space, n_draws, rng);
  });
  m.def("invariance_risk",
        [](const std::vector<double>& theta, const MLPConfig& c,
           const Dataset& ds, const TransformSpace& space) {
          return invariance_risk(theta, c, ds, space);
        });
  m.def("mixture_decomposition_check",
        [](const std::vector<double>& theta, const MLPConfig& c,
           const Dataset& ds, const TransformSpace& space, double gamma) {
          return mixture_decomposition_check(theta, c, ds, space, gamma);
        });
  m.def("l2_feasibility_check", &l2_feasibility_check);
  m.def("empirical_entropy", [](const std::vector<std::uint64_t>& hist) {
    return empirical_entropy(hist);
  });

  py::class_<TrainerConfig>(m, "TrainerConfig")
      .def(py::init(&make_trainer_config), py::arg("mode") = "primal_dual",
           py::arg("epsilon") = 0.0, py::arg("eta_p") = 0.05,
           py::arg("eta_d") = 1e-3, py::arg("fixed_gamma") = 0.0,
           py::arg("batch_size") = 64, py::arg("epochs") = 1,
           py::arg("n_steps") = 2, py::arg("m") = 1,
           py::arg("zero_loss_epsilon") = 1e-12, py::arg("seed") = 0)
      .def_readonly("epsilon", &TrainerConfig::epsilon)
      .def_readonly("epochs", &TrainerConfig::epochs);

  py::class_<EpochMetrics>(m, "EpochMetrics")
      .def_readonly("epoch", &EpochMetrics::epoch)
      .def_readonly("train_loss", &EpochMetrics::train_loss)
      .def_readonly("slack", &EpochMetrics::slack)
      .def_readonly("gamma", &EpochMetrics::gamma)
      .def_readonly("entropy", &EpochMetrics::entropy)
      .def_readonly("transform_histogram", &EpochMetrics::transform_histogram)
      .def_readonly("test_loss", &EpochMetrics::test_loss)
      .def_readonly("test_accuracy", &EpochMetrics::test_accuracy);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("epochs", &RunResult::epochs)
      .def_readonly("final_theta", &RunResult::final_theta)
      .def_readonly("wall_seconds", &RunResult::wall_seconds);

  m.def(
      "train",
      [](const Dataset& train_ds, const Dataset& test_ds,
         const TransformSpace& space, const MLPConfig& mc,
         const TrainerConfig& tc) { return train(train_ds, test_ds, space, mc, tc); },
      py::arg("train_ds"), py::arg("test_ds"), py::arg("space"),
      py::arg("model_config"), py::arg("trainer_config"),
      py::call_guard<py::gil_scoped_release>());

  m.def("dual_update", [](double gamma, double eta_d, double slack) {
    return dual_update(DualState{gamma, eta_d}, slack).gamma;
  });
  m.def("lagrangian", &lagrangian);

  m.attr("__version__") = "0.1.0";
}
