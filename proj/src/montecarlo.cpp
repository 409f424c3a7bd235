#include "spmnl/montecarlo.hpp"

#include "spmnl/csv.hpp"
#include "spmnl/diagnostics.hpp"
#include "spmnl/effects.hpp"
#include "spmnl/errors.hpp"
#include "spmnl/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace spmnl {

void DgpConfig::validate() const {
  if (n_classes != 3) throw ConfigError("the simulation design has exactly J = 3 classes");
  if (n_covariates != 2) throw ConfigError("the simulation design has exactly K = 2 covariates");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("rho must lie in (-1, 1)");
  if (k_neighbors < 1 || k_neighbors >= n) {
    throw ConfigError("k_neighbors must be in [1, N)");
  }
}

Dataset generate_dataset(const DgpConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const auto n = config.n;
  const auto k = config.n_covariates;

  std::vector<Point> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p.x = rng.normal();
    p.y = rng.normal();
  }
  CoordinateSet coords(std::move(pts));
  SpatialWeights w = build_knn_weights(coords, config.k_neighbors);

  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) x(i, c) = rng.normal();
  }
  DesignMatrix design(x);

  Eigen::Matrix2d base;
  base << 1.0, 0.5, 0.5, 1.0;
  Eigen::Matrix2d noise_cov;
  noise_cov << 1.0, -0.25, -0.25, 1.0;
  const Eigen::Matrix2d chol = noise_cov.llt().matrixL();

  auto truth = ParameterState::zeros(n, config.n_classes, k, 0);
  truth.omega.resize(0, 0);
  for (int j = 0; j < config.n_classes - 1; ++j) {
    Eigen::Vector2d z(rng.normal(), rng.normal());
    truth.beta[j] = base.col(j) + chol * z;
    truth.rho[j] = config.rho;
  }

  ModelSpec spec;
  spec.family = Family::SAR_MNL;
  spec.n_classes = config.n_classes;
  const Eigen::MatrixXd mu = log_odds(spec, truth, design, &w);
  ShareMatrix y(class_probabilities(mu));
  return Dataset{std::move(y), std::move(design), std::move(coords), std::move(w),
                 std::move(truth)};
}

namespace {

ModelSpec spec_for(Family model, int n_classes) {
  ModelSpec spec;
  spec.family = model;
  spec.n_classes = n_classes;
  return spec;
}

void flatten_effects(const ImpactEvaluator& eval, const ParameterState& state, Eigen::Index k_count,
                     int n_classes, EffectVector& out) {
  out.direct.clear();
  out.indirect.clear();
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto e = eval.evaluate(state, k);
    for (int j = 0; j < n_classes - 1; ++j) {
      out.direct.push_back(e[j].direct);
      out.indirect.push_back(e[j].indirect);
    }
  }
}

}  // namespace

EffectVector true_effects(const Dataset& data) {
  const int jc = static_cast<int>(data.y.classes());
  ImpactEvaluator eval(spec_for(Family::SAR_MNL, jc), data.x, &data.w);
  EffectVector out;
  flatten_effects(eval, data.truth, data.x.cols(), jc, out);
  return out;
}

RunRecord fit_one(const Dataset& data, const EffectVector& truth, Family model,
                  const SamplerConfig& sampler) {
  const int jc = static_cast<int>(data.y.classes());
  const ModelSpec spec = spec_for(model, jc);
  RunRecord rec;
  rec.model = model;
  rec.seed = sampler.seed;
  rec.rho_true.assign(data.truth.rho.data(), data.truth.rho.data() + data.truth.rho.size());
  rec.direct_true = truth.direct;
  rec.indirect_true = truth.indirect;

  const SpatialWeights* w = is_spatial(model) ? &data.w : nullptr;
  ChainOutput chain = model == Family::BIVARIATE_SAR_LOGIT
                          ? run_bivariate_per_class(data.y, data.x, data.w, sampler,
                                                    spec.rho_prior_d, spec.prior_beta_variance)
                          : run_chain(spec, data.y, data.x, w, sampler);

  const Eigen::VectorXd rho_mean = chain.rho.colwise().mean().transpose();
  rec.rho_hat.assign(rho_mean.data(), rho_mean.data() + rho_mean.size());

  std::vector<Eigen::Index> covs(static_cast<std::size_t>(data.x.cols()));
  for (Eigen::Index k = 0; k < data.x.cols(); ++k) covs[static_cast<std::size_t>(k)] = k;
  const ImpactSummary s = posterior_impacts(chain, spec, data.x, w, 1, covs);
  for (std::size_t k = 0; k < covs.size(); ++k) {
    for (int j = 0; j < jc - 1; ++j) {
      rec.direct_hat.push_back(s.direct[k][j].mean);
      rec.indirect_hat.push_back(s.indirect[k][j].mean);
    }
  }
  return rec;
}

namespace {

std::uint64_t model_stream(Family f) { return static_cast<std::uint64_t>(f) + 1; }

}  // namespace

McResult run_study(const StudyConfig& config) {
  if (config.n_runs < 1) throw ConfigError("n_runs must be >= 1");
  if (config.scenarios.empty()) throw ConfigError("no scenarios given");
  if (config.models.empty()) throw ConfigError("no models given");
  config.sampler.validate();
  const auto start = std::chrono::steady_clock::now();

  const std::size_t n_tasks = config.scenarios.size() * static_cast<std::size_t>(config.n_runs);
  std::vector<std::vector<RunRecord>> results(n_tasks);
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;

  auto worker = [&]() {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const std::size_t s = t / static_cast<std::size_t>(config.n_runs);
      const int run = static_cast<int>(t % static_cast<std::size_t>(config.n_runs));
      DgpConfig dgp;
      dgp.n = config.scenarios[s].n;
      dgp.rho = config.scenarios[s].rho;
      dgp.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(run), s);
      std::vector<RunRecord>& out = results[t];
      try {
        const Dataset data = generate_dataset(dgp);
        const EffectVector truth = true_effects(data);
        for (Family m : config.models) {
          SamplerConfig sc = config.sampler;
          sc.seed = derive_seed(dgp.seed, model_stream(m));
          RunRecord rec;
          try {
            rec = fit_one(data, truth, m, sc);
          } catch (const std::exception& e) {
            rec.model = m;
            rec.seed = sc.seed;
            rec.ok = false;
            rec.error = e.what();
          }
          rec.scenario = s;
          rec.run = run;
          out.push_back(std::move(rec));
        }
      } catch (const std::exception& e) {
        for (Family m : config.models) {
          RunRecord rec;
          rec.scenario = s;
          rec.run = run;
          rec.model = m;
          rec.ok = false;
          rec.error = std::string("dataset generation failed: ") + e.what();
          out.push_back(std::move(rec));
        }
      }
      if (config.progress) {
        std::ostringstream msg;
        msg << "scenario N=" << dgp.n << " rho=" << dgp.rho << " run " << (run + 1) << "/"
            << config.n_runs;
        for (const auto& r : out) {
          if (!r.ok) msg << " [" << to_string(r.model) << " failed: " << r.error << "]";
        }
        const std::lock_guard<std::mutex> lock(progress_mutex);
        config.progress(msg.str());
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(config.threads, static_cast<int>(n_tasks)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  McResult result;
  result.scenarios = config.scenarios;
  result.models = config.models;
  for (auto& task : results) {
    for (auto& r : task) result.runs.push_back(std::move(r));
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
    for (Family m : config.models) {
      McCell cell;
      cell.scenario = config.scenarios[s];
      cell.model = m;
      std::vector<std::vector<double>> dh, dt, ih, it, rh, rt;
      for (const auto& r : result.runs) {
        if (r.scenario != s || r.model != m) continue;
        if (!r.ok) {
          ++cell.runs_failed;
          continue;
        }
        ++cell.runs_ok;
        dh.push_back(r.direct_hat);
        dt.push_back(r.direct_true);
        ih.push_back(r.indirect_hat);
        it.push_back(r.indirect_true);
        rh.push_back(r.rho_hat);
        rt.push_back(r.rho_true);
      }
      if (cell.runs_ok > 0) {
        cell.rmse_direct = mean_elementwise_rmse(dh, dt);
        cell.rmse_indirect = mean_elementwise_rmse(ih, it);
        cell.rmse_rho = mean_elementwise_rmse(rh, rt);
      } else {
        cell.rmse_direct = cell.rmse_indirect = cell.rmse_rho = nan;
      }
      result.cells.push_back(cell);
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

std::string rho_label(double rho) {
  std::ostringstream s;
  s << rho;
  return s.str();
}

std::string model_label(Family f) {
  switch (f) {
    case Family::SAR_MNL: return "sar_mnl";
    case Family::MNL: return "mnl";
    case Family::SDM_MNL: return "sdm_mnl";
    case Family::BIVARIATE_SAR_LOGIT: return "bivariate_sar_logit";
  }
  return "unknown";
}

}  // namespace

std::string format_table(const McResult& result) {
  if (result.cells.empty()) throw InvalidArgument("format_table: empty result");
  std::vector<Eigen::Index> ns;
  std::vector<double> rhos;
  for (const auto& c : result.cells) {
    if (std::find(ns.begin(), ns.end(), c.scenario.n) == ns.end()) ns.push_back(c.scenario.n);
    if (std::find(rhos.begin(), rhos.end(), c.scenario.rho) == rhos.end()) {
      rhos.push_back(c.scenario.rho);
    }
  }
  std::sort(ns.begin(), ns.end());
  std::sort(rhos.begin(), rhos.end());

  std::vector<std::string> columns;
  for (double r : rhos) {
    for (const char* stat : {"direct", "indirect", "rho"}) {
      columns.push_back(std::string(stat) + "_rho" + rho_label(r));
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream out;
  std::vector<std::string> header{"N", "model"};
  header.insert(header.end(), columns.begin(), columns.end());
  header.push_back("bold");
  csv::write_row(out, header);

  for (Eigen::Index n : ns) {
    std::vector<std::vector<double>> block;
    for (Family m : result.models) {
      std::vector<double> row(columns.size(), nan);
      for (const auto& c : result.cells) {
        if (c.scenario.n != n || c.model != m) continue;
        const auto r = static_cast<std::size_t>(
            std::find(rhos.begin(), rhos.end(), c.scenario.rho) - rhos.begin());
        row[3 * r] = c.rmse_direct;
        row[3 * r + 1] = c.rmse_indirect;
        row[3 * r + 2] = c.rmse_rho;
      }
      block.push_back(row);
    }
    std::vector<double> minima(columns.size(), std::numeric_limits<double>::infinity());
    for (const auto& row : block) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (!std::isnan(row[c])) minima[c] = std::min(minima[c], row[c]);
      }
    }
    for (std::size_t m = 0; m < result.models.size(); ++m) {
      std::vector<std::string> fields{std::to_string(n), model_label(result.models[m])};
      std::string bold;
      for (std::size_t c = 0; c < columns.size(); ++c) {
        const double v = block[m][c];
        fields.push_back(std::isnan(v) ? "NA" : csv::format_full(v));
        if (!std::isnan(v) && v == minima[c]) {
          if (!bold.empty()) bold += ';';
          bold += columns[c];
        }
      }
      fields.push_back(bold);
      csv::write_row(out, fields);
    }
  }
  return out.str();
}

std::string format_runs(const McResult& result) {
  std::ostringstream out;
  csv::write_row(out, {"N", "rho", "run", "model", "seed", "ok", "quantity", "element",
                       "estimate", "truth"});
  for (const auto& r : result.runs) {
    const auto& sc = result.scenarios[r.scenario];
    std::vector<std::string> prefix{std::to_string(sc.n), csv::format_full(sc.rho),
                                    std::to_string(r.run), model_label(r.model),
                                    std::to_string(r.seed), r.ok ? "1" : "0"};
    if (!r.ok) {
      auto fields = prefix;
      fields.insert(fields.end(), {"error", "", "", ""});
      csv::write_row(out, fields);
      continue;
    }
    auto emit = [&](const char* q, const std::vector<double>& est, const std::vector<double>& tru) {
      for (std::size_t e = 0; e < est.size(); ++e) {
        auto fields = prefix;
        fields.insert(fields.end(), {q, std::to_string(e), csv::format_full(est[e]),
                                     csv::format_full(tru[e])});
        csv::write_row(out, fields);
      }
    };
    emit("direct", r.direct_hat, r.direct_true);
    emit("indirect", r.indirect_hat, r.indirect_true);
    emit("rho", r.rho_hat, r.rho_true);
  }
  return out.str();
}

}  // namespace spmnl
