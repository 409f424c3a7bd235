#include "spmnl/diagnostics.hpp"
#include "spmnl/effects.hpp"
#include "spmnl/errors.hpp"
#include "spmnl/model.hpp"
#include "spmnl/montecarlo.hpp"
#include "spmnl/polya_gamma.hpp"
#include "spmnl/sampler.hpp"
#include "spmnl/spatial_weights.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace spmnl;

namespace {

SpatialWeights weights_from(const std::optional<Eigen::MatrixXd>& w,
                            const std::optional<Eigen::MatrixX2d>& coords, int knn) {
  if (w && coords) throw ConfigError("give either w or coords, not both");
  if (w) return SpatialWeights::from_dense(*w);
  if (!coords) throw ConfigError("a spatial family needs w or coords");
  std::vector<Point> pts;
  for (Eigen::Index i = 0; i < coords->rows(); ++i) pts.push_back({(*coords)(i, 0), (*coords)(i, 1)});
  return build_knn_weights(CoordinateSet(std::move(pts)), knn);
}

ModelSpec make_spec(Family f, int j, double d, double v) {
  ModelSpec s;
  s.family = f;
  s.n_classes = j;
  s.rho_prior_d = d;
  s.prior_beta_variance = v;
  s.validate();
  return s;
}

// beta: K x (J-1), theta: K' x (J-1)
ParameterState state_from(const Eigen::MatrixXd& beta, const Eigen::VectorXd& rho,
                          const std::optional<Eigen::MatrixXd>& theta, Eigen::Index n) {
  const auto jm1 = beta.cols();
  if (rho.size() != jm1) throw InvalidArgument("rho needs one value per non-reference class");
  auto s = ParameterState::zeros(n, static_cast<int>(jm1) + 1, beta.rows(), theta ? theta->rows() : 0);
  for (Eigen::Index j = 0; j < jm1; ++j) {
    s.beta[static_cast<std::size_t>(j)] = beta.col(j);
    if (theta) s.theta[static_cast<std::size_t>(j)] = theta->col(j);
  }
  s.rho = rho;
  return s;
}

struct Model {
  ModelSpec spec;
  DesignMatrix x;
  std::optional<SpatialWeights> w;
  ChainOutput chain;
  const SpatialWeights* weights() const { return w ? &*w : nullptr; }
};

py::dict impacts_dict(const ImpactSummary& s) {
  auto grid = [&](const std::vector<std::vector<ImpactCell>>& cells, double ImpactCell::*field) {
    Eigen::MatrixXd m(cells.size(), s.n_classes);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      for (int j = 0; j < s.n_classes; ++j) m(k, j) = cells[k][static_cast<std::size_t>(j)].*field;
    }
    return m;
  };
  py::dict d;
  d["covariates"] = s.covariate_names;
  d["draws_used"] = s.draws_used;
  for (const auto& [name, cells] : {std::pair{"direct", &s.direct}, {"indirect", &s.indirect},
                                    {"total", &s.total}}) {
    py::dict e;
    e["mean"] = grid(*cells, &ImpactCell::mean);
    e["q05"] = grid(*cells, &ImpactCell::q05);
    e["q95"] = grid(*cells, &ImpactCell::q95);
    d[name] = e;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian spatial multinomial logit for share data";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "knn_weights",
      [](const Eigen::MatrixX2d& coords, int k) {
        return weights_from(std::nullopt, coords, k).dense();
      },
      py::arg("coords"), py::arg("k") = 7, "Row-standardised k-nearest-neighbour weights (dense N x N).");
  m.def("log_det", &log_det_dense, py::arg("w"), py::arg("rho"), "log|I - rho W|.");

  m.def("pg1_mean", &pg1_mean, py::arg("c"));
  m.def("pg1_variance", &pg1_variance, py::arg("c"));
  m.def(
      "pg_draw",
      [](const Eigen::VectorXd& c, std::uint64_t seed) {
        PolyaGammaSampler pg(seed);
        Eigen::VectorXd out(c.size());
        for (Eigen::Index i = 0; i < c.size(); ++i) out[i] = pg.draw(c[i]);
        return out;
      },
      py::arg("c"), py::arg("seed") = 1, "One PG(1, c_i) draw per entry of c.");

  m.def("class_probabilities", &class_probabilities, py::arg("mu"));
  m.def(
      "log_odds",
      [](const std::string& family, const Eigen::MatrixXd& x, const Eigen::MatrixXd& beta,
         const Eigen::VectorXd& rho, std::optional<Eigen::MatrixXd> theta, std::optional<Eigen::MatrixXd> w) {
        const Family f = family_from_string(family);
        const auto spec = make_spec(f, static_cast<int>(beta.cols()) + 1, 1.01, 1e8);
        const DesignMatrix d(x);
        const auto state = state_from(beta, rho, theta, x.rows());
        if (!is_spatial(f)) return log_odds(spec, state, d, nullptr);
        const auto sw = weights_from(w, std::nullopt, 0);
        return log_odds(spec, state, d, &sw);
      },
      py::arg("family"), py::arg("x"), py::arg("beta"), py::arg("rho"), py::arg("theta") = py::none(),
      py::arg("w") = py::none(), "N x J log-odds; beta is K x (J-1), reference class last.");
  m.def(
      "loglik",
      [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& mu) { return multinomial_loglik(ShareMatrix(y), mu); },
      py::arg("y"), py::arg("mu"));

  m.def(
      "simulate",
      [](Eigen::Index n, double rho, int knn, std::uint64_t seed) {
        DgpConfig c;
        c.n = n;
        c.rho = rho;
        c.k_neighbors = knn;
        c.seed = seed;
        const auto d = generate_dataset(c);
        Eigen::MatrixX2d coords(n, 2);
        for (std::size_t i = 0; i < d.coords.size(); ++i) {
          coords(static_cast<Eigen::Index>(i), 0) = d.coords[i].x;
          coords(static_cast<Eigen::Index>(i), 1) = d.coords[i].y;
        }
        Eigen::MatrixXd beta(2, 2);
        beta << d.truth.beta[0], d.truth.beta[1];
        py::dict out;
        out["y"] = d.y.values();
        out["x"] = d.x.values();
        out["coords"] = coords;
        out["w"] = d.w.dense();
        out["beta"] = beta;
        out["rho"] = d.truth.rho;
        return out;
      },
      py::arg("n") = 400, py::arg("rho") = 0.5, py::arg("knn") = 7, py::arg("seed") = 1,
      "Draw a dataset from the three-class SAR multinomial-logit design.");

  py::class_<Model>(m, "Model")
      .def_property_readonly("family", [](const Model& s) { return to_string(s.spec.family); })
      .def_property_readonly("beta", [](const Model& s) { return s.chain.beta; })
      .def_property_readonly("theta", [](const Model& s) { return s.chain.theta; })
      .def_property_readonly("rho", [](const Model& s) { return s.chain.rho; })
      .def_property_readonly("loglik", [](const Model& s) { return s.chain.loglik; })
      .def_property_readonly("acceptance", [](const Model& s) { return s.chain.acceptance; })
      .def(
          "mcfadden_r2",
          [](const Model& s, const Eigen::MatrixXd& y) {
            const ShareMatrix ys(y, 1e-6);
            const auto mu = log_odds(s.spec, s.chain.posterior_mean(), s.x, s.weights());
            return mcfadden_r2(multinomial_loglik(ys, mu), ys);
          },
          py::arg("y"))
      .def(
          "impacts",
          [](const Model& s, int thin) {
            return impacts_dict(posterior_impacts(s.chain, s.spec, s.x, s.weights(), thin));
          },
          py::arg("thin") = 1, "Posterior direct/indirect/total effects; arrays are K x J.")
      .def(
          "geweke",
          [](const Model& s) {
            std::vector<double> z;
            for (const auto& b : s.chain.beta) {
              for (Eigen::Index k = 0; k < b.cols(); ++k) z.push_back(geweke_z(b.col(k)).z);
            }
            return z;
          },
          "Geweke z for every beta column, class-major.");

  m.def(
      "fit",
      [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, const std::string& family,
         std::optional<Eigen::MatrixXd> w, std::optional<Eigen::MatrixX2d> coords, int knn, int draws,
         int burnin, std::uint64_t seed, double rho_prior_d, double beta_prior_var) {
        const Family f = family_from_string(family);
        const ShareMatrix ys(y, 1e-6);
        Model out{make_spec(f, static_cast<int>(y.cols()), rho_prior_d, beta_prior_var), DesignMatrix(x),
                  std::nullopt, {}};
        if (is_spatial(f)) out.w = weights_from(w, coords, knn);
        SamplerConfig sc;
        sc.n_draws = draws;
        sc.n_burnin = burnin;
        sc.seed = seed;
        sc.validate();
        py::gil_scoped_release release;
        out.chain = f == Family::BIVARIATE_SAR_LOGIT
                        ? run_bivariate_per_class(ys, out.x, *out.w, sc, rho_prior_d, beta_prior_var)
                        : run_chain(out.spec, ys, out.x, out.weights(), sc);
        return out;
      },
      py::arg("y"), py::arg("x"), py::arg("family") = "sar", py::arg("w") = py::none(),
      py::arg("coords") = py::none(), py::arg("knn") = 7, py::arg("draws") = 1000, py::arg("burnin") = 700,
      py::arg("seed") = 1, py::arg("rho_prior_d") = 1.01, py::arg("beta_prior_var") = 1e8,
      "Run the Gibbs sampler; family is mnl, sar, sdm or bivariate.");

  m.def(
      "monte_carlo",
      [](std::vector<Eigen::Index> n, std::vector<double> rho, std::vector<std::string> models, int runs,
         int draws, int burnin, std::uint64_t seed, int threads) {
        StudyConfig cfg;
        for (auto ni : n) {
          for (double r : rho) cfg.scenarios.push_back({ni, r});
        }
        cfg.models.clear();
        for (const auto& name : models) cfg.models.push_back(family_from_string(name));
        cfg.n_runs = runs;
        cfg.sampler.n_draws = draws;
        cfg.sampler.n_burnin = burnin;
        cfg.master_seed = seed;
        cfg.threads = threads;
        McResult r;
        {
          py::gil_scoped_release release;
          r = run_study(cfg);
        }
        py::list cells;
        for (const auto& c : r.cells) {
          py::dict d;
          d["n"] = c.scenario.n;
          d["rho"] = c.scenario.rho;
          d["model"] = to_string(c.model);
          d["direct"] = c.rmse_direct;
          d["indirect"] = c.rmse_indirect;
          d["rho_rmse"] = c.rmse_rho;
          d["runs_ok"] = c.runs_ok;
          d["runs_failed"] = c.runs_failed;
          cells.append(d);
        }
        py::dict out;
        out["cells"] = cells;
        out["table"] = format_table(r);
        return out;
      },
      py::arg("n") = std::vector<Eigen::Index>{400}, py::arg("rho") = std::vector<double>{0.0, 0.5, 0.8},
      py::arg("models") = std::vector<std::string>{"sar", "mnl", "bivariate"}, py::arg("runs") = 100,
      py::arg("draws") = 1000, py::arg("burnin") = 700, py::arg("seed") = 1, py::arg("threads") = 1,
      "RMSE study over (N, rho) scenarios; returns per-cell RMSEs and the CSV table.");
}
