#include "spmnl/cli.hpp"

#include "spmnl/csv.hpp"
#include "spmnl/diagnostics.hpp"
#include "spmnl/effects.hpp"
#include "spmnl/errors.hpp"
#include "spmnl/montecarlo.hpp"
#include "spmnl/sampler.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;

namespace spmnl::cli {

namespace {

struct IdTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  Eigen::MatrixXd values;
  bool has_ids = false;
};

IdTable read_id_table(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what + " file");
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " file '" + path + "' not found");
  const auto table = csv::read(path);
  IdTable out;
  out.has_ids = !table.header.empty() && table.header[0] == "id";
  const std::size_t first = out.has_ids ? 1 : 0;
  if (table.header.size() <= first) throw ConfigError(path + ": no data columns");
  out.names.assign(table.header.begin() + static_cast<std::ptrdiff_t>(first), table.header.end());
  out.values = csv::numeric_block(table, path, first);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out.ids.push_back(out.has_ids ? table.rows[r][0] : std::to_string(r + 1));
  }
  return out;
}

void check_rows(const std::string& ref_file, const std::vector<std::string>& ref_ids,
                bool ref_has_ids, const std::string& file, const std::vector<std::string>& ids,
                bool has_ids) {
  if (ids.size() != ref_ids.size()) {
    throw ConfigError(file + " has " + std::to_string(ids.size()) + " rows but " + ref_file +
                      " has " + std::to_string(ref_ids.size()));
  }
  if (ref_has_ids && has_ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != ref_ids[i]) {
        throw ConfigError(file + " row " + std::to_string(i + 1) + ": id '" + ids[i] +
                          "' does not match '" + ref_ids[i] + "' in " + ref_file);
      }
    }
  }
}

bool is_dummy(const Eigen::VectorXd& col) {
  return (col.array() == 0.0 || col.array() == 1.0).all();
}

std::vector<std::string> parameter_labels(const ChainOutput& chain,
                                          const std::vector<std::string>& class_names, int j) {
  std::vector<std::string> out;
  const std::string c = class_names[static_cast<std::size_t>(j)];
  for (const auto& n : chain.beta_names) out.push_back(c + ":" + n);
  for (const auto& n : chain.theta_names) out.push_back(c + ":" + n);
  out.push_back(c + ":rho");
  return out;
}

Eigen::MatrixXd parameter_draws(const ChainOutput& chain, int j) {
  const auto kb = chain.beta[j].cols();
  const auto kt = chain.theta[j].cols();
  Eigen::MatrixXd m(chain.n_retained(), kb + kt + 1);
  m.leftCols(kb) = chain.beta[j];
  m.middleCols(kb, kt) = chain.theta[j];
  m.col(kb + kt) = chain.rho.col(j);
  return m;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

nlohmann::ordered_json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  auto out = csv::open_output(path.string());
  out << j.dump(2) << '\n';
}

std::string report_or_na(double v) { return std::isfinite(v) ? csv::format_report(v) : "NA"; }
std::string full_or_na(double v) { return std::isfinite(v) ? csv::format_full(v) : "NA"; }

void require_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw ConfigError("cannot create output directory '" + out + "'");
}

}  // namespace

LoadedData load_data(const DataOptions& opt, bool need_shares, bool need_weights) {
  LoadedData d;
  const IdTable cov = read_id_table(opt.covariates, "covariates");
  d.ids = cov.ids;

  if (need_shares || !opt.shares.empty()) {
    const IdTable sh = read_id_table(opt.shares, "shares");
    check_rows(opt.covariates, cov.ids, cov.has_ids, opt.shares, sh.ids, sh.has_ids);
    try {
      d.y = std::make_unique<ShareMatrix>(sh.values, 1e-6);
    } catch (const std::exception& e) {
      throw ConfigError(opt.shares + ": " + e.what());
    }
    d.class_names = sh.names;
  }

  std::vector<bool> lag(cov.names.size());
  for (std::size_t c = 0; c < lag.size(); ++c) {
    lag[c] = !is_dummy(cov.values.col(static_cast<Eigen::Index>(c)));
  }
  DesignMatrix x(cov.values, cov.names, lag);
  if (opt.zscore) x = x.zscored();
  if (opt.intercept) x = x.with_intercept();
  d.x = std::make_unique<DesignMatrix>(std::move(x));

  if (!opt.coords.empty() && !opt.weights.empty()) {
    throw ConfigError("give either --coords or --weights, not both");
  }
  if (!opt.coords.empty()) {
    if (!fs::exists(opt.coords)) throw ConfigError("coordinates file '" + opt.coords + "' not found");
    auto ct = read_coordinates_csv(opt.coords);
    check_rows(opt.covariates, cov.ids, cov.has_ids, opt.coords, ct.ids, true);
    if (opt.knn < 1 || static_cast<std::size_t>(opt.knn) >= ct.coords.size()) {
      throw ConfigError("--knn must be in [1, N)");
    }
    d.w = std::make_unique<SpatialWeights>(build_knn_weights(ct.coords, opt.knn));
  } else if (!opt.weights.empty()) {
    if (!fs::exists(opt.weights)) throw ConfigError("weights file '" + opt.weights + "' not found");
    auto w = read_weights_csv(opt.weights);
    if (static_cast<std::size_t>(w.size()) != cov.ids.size()) {
      throw ConfigError(opt.weights + " is " + std::to_string(w.size()) + " x " +
                        std::to_string(w.size()) + " but " + opt.covariates + " has " +
                        std::to_string(cov.ids.size()) + " rows");
    }
    d.w = std::make_unique<SpatialWeights>(std::move(w));
  } else if (need_weights) {
    throw ConfigError("a spatial family needs --coords or --weights");
  }
  return d;
}

Family resolve_family(const std::string& name, bool durbin) {
  const Family f = family_from_string(name);
  if (!durbin) return f;
  if (f == Family::SAR_MNL || f == Family::SDM_MNL) return Family::SDM_MNL;
  throw ConfigError("--durbin needs the sar or sdm family");
}

void cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
  if (opt.n_classes != 3) throw ConfigError("simulate: the data-generating process fixes J = 3");
  require_out(opt.out);
  DgpConfig cfg;
  cfg.n = opt.n;
  cfg.rho = opt.rho;
  cfg.k_neighbors = opt.knn;
  cfg.seed = opt.seed;
  const Dataset data = generate_dataset(cfg);
  const fs::path out(opt.out);
  const auto n = data.x.rows();

  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
  std::vector<std::string> classes;
  for (Eigen::Index j = 0; j < data.y.classes(); ++j) classes.push_back("class" + std::to_string(j + 1));

  {
    auto f = csv::open_output((out / "shares.csv").string());
    std::vector<std::string> header{"id"};
    header.insert(header.end(), classes.begin(), classes.end());
    csv::write_row(f, header);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<std::string> row{ids[static_cast<std::size_t>(i)]};
      for (Eigen::Index j = 0; j < data.y.classes(); ++j) {
        row.push_back(csv::format_full(data.y.values()(i, j)));
      }
      csv::write_row(f, row);
    }
  }
  {
    auto f = csv::open_output((out / "covariates.csv").string());
    std::vector<std::string> header{"id"};
    header.insert(header.end(), data.x.names().begin(), data.x.names().end());
    csv::write_row(f, header);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<std::string> row{ids[static_cast<std::size_t>(i)]};
      for (Eigen::Index k = 0; k < data.x.cols(); ++k) {
        row.push_back(csv::format_full(data.x.values()(i, k)));
      }
      csv::write_row(f, row);
    }
  }
  write_coordinates_csv((out / "coords.csv").string(), ids, data.coords);

  nlohmann::ordered_json truth;
  truth["N"] = n;
  truth["n_classes"] = data.y.classes();
  truth["reference_class"] = classes.back();
  truth["knn"] = opt.knn;
  truth["seed"] = opt.seed;
  truth["covariate_names"] = data.x.names();
  truth["rho"] = to_std(data.truth.rho);
  nlohmann::ordered_json beta;
  for (std::size_t j = 0; j + 1 < classes.size(); ++j) beta[classes[j]] = to_std(data.truth.beta[j]);
  truth["beta"] = beta;
  write_json(out / "truth.json", truth);
  log << "simulate: wrote " << n << " regions to " << opt.out << '\n';
}

void cmd_fit(const FitOptions& opt, std::ostream& log) {
  const Family family = resolve_family(opt.family, opt.durbin);
  const LoadedData d = load_data(opt.data, true, is_spatial(family));
  require_out(opt.out);

  ModelSpec spec;
  spec.family = family;
  spec.n_classes = static_cast<int>(d.y->classes());
  spec.rho_prior_d = opt.rho_prior_d;
  spec.prior_beta_variance = opt.beta_prior_var;
  spec.validate();
  SamplerConfig sc;
  sc.n_draws = opt.draws;
  sc.n_burnin = opt.burnin;
  sc.seed = opt.seed;
  sc.validate();

  const SpatialWeights* w = is_spatial(family) ? d.w.get() : nullptr;
  const ChainOutput chain =
      family == Family::BIVARIATE_SAR_LOGIT
          ? run_bivariate_per_class(*d.y, *d.x, *d.w, sc, spec.rho_prior_d, spec.prior_beta_variance)
          : run_chain(spec, *d.y, *d.x, w, sc);
  write_chain(opt.out, chain, d.class_names);
  const fs::path out(opt.out);

  // posterior summary and Geweke table
  auto summary_csv = csv::open_output((out / "summary.csv").string());
  csv::write_row(summary_csv, {"parameter", "mean", "sd", "q05", "q95"});
  auto geweke_csv = csv::open_output((out / "geweke.csv").string());
  csv::write_row(geweke_csv, {"parameter", "z"});
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  log << "parameter                       mean          sd         q05         q95\n";
  for (int j = 0; j + 1 < spec.n_classes; ++j) {
    const auto labels = parameter_labels(chain, d.class_names, j);
    const Eigen::MatrixXd draws = parameter_draws(chain, j);
    for (Eigen::Index c = 0; c < draws.cols(); ++c) {
      const Eigen::VectorXd v = draws.col(c);
      const double mean = v.mean();
      const double sd = v.size() > 1 ? std::sqrt((v.array() - mean).square().sum() /
                                                 static_cast<double>(v.size() - 1))
                                     : 0.0;
      const std::vector<double> vs = to_std(v);
      const double q05 = quantile(vs, 0.05);
      const double q95 = quantile(vs, 0.95);
      const auto& label = labels[static_cast<std::size_t>(c)];
      csv::write_row(summary_csv, {label, csv::format_full(mean), csv::format_full(sd),
                                   csv::format_full(q05), csv::format_full(q95)});
      summary.push_back({{"parameter", label}, {"mean", mean}, {"sd", sd}, {"q05", q05}, {"q95", q95}});
      char line[160];
      std::snprintf(line, sizeof line, "%-24s %11s %11s %11s %11s\n", label.c_str(),
                    csv::format_report(mean).c_str(), csv::format_report(sd).c_str(),
                    csv::format_report(q05).c_str(), csv::format_report(q95).c_str());
      log << line;

      double z = std::numeric_limits<double>::quiet_NaN();
      if (v.size() >= 100) {
        try {
          z = geweke_z(v).z;
        } catch (const NumericalError&) {
        }
      }
      csv::write_row(geweke_csv, {label, full_or_na(z)});
    }
  }

  double r2 = std::numeric_limits<double>::quiet_NaN();
  double ll_at_mean = std::numeric_limits<double>::quiet_NaN();
  if (family != Family::BIVARIATE_SAR_LOGIT) {
    const ParameterState pm = chain.posterior_mean();
    ll_at_mean = multinomial_loglik(*d.y, log_odds(spec, pm, *d.x, w));
    r2 = mcfadden_r2(ll_at_mean, *d.y);
  }
  const double mean_ll = chain.loglik.mean();
  log << "McFadden R2 " << report_or_na(r2) << ", mean log-likelihood "
      << csv::format_report(mean_ll) << '\n';

  auto meta = read_json(out / "run_meta.json");
  meta["design"] = {{"zscore", opt.data.zscore},
                    {"intercept", opt.data.intercept},
                    {"knn", opt.data.knn},
                    {"weights", opt.data.coords.empty() ? (opt.data.weights.empty() ? "none" : "csv")
                                                        : "knn"}};
  meta["fit"] = {{"mcfadden_r2", std::isfinite(r2) ? nlohmann::ordered_json(r2) : nullptr},
                 {"loglik_at_posterior_mean",
                  std::isfinite(ll_at_mean) ? nlohmann::ordered_json(ll_at_mean) : nullptr},
                 {"mean_loglik", mean_ll}};
  meta["summary"] = summary;
  write_json(out / "run_meta.json", meta);
}

void cmd_impacts(const ImpactsOptions& opt, std::ostream& log) {
  if (opt.chain.empty()) throw ConfigError("--chain is required");
  std::vector<std::string> class_names;
  const ChainOutput chain = read_chain(opt.chain, &class_names);
  const auto meta = read_json(fs::path(opt.chain) / "run_meta.json");

  DataOptions data = opt.data;
  if (meta.contains("design")) {
    data.zscore = meta["design"].value("zscore", data.zscore);
    data.intercept = meta["design"].value("intercept", data.intercept);
  }
  const LoadedData d = load_data(data, false, is_spatial(chain.family));
  if (d.x->names() != chain.beta_names) {
    throw ConfigError("chain in '" + opt.chain + "' was fitted on different covariates than " +
                      opt.data.covariates);
  }
  if (static_cast<int>(class_names.size()) != chain.n_classes) {
    throw ConfigError("run_meta.json class names do not match the chain");
  }
  if (d.y && d.y->classes() != chain.n_classes) {
    throw ConfigError(opt.data.shares + " has a different number of classes than the chain");
  }
  require_out(opt.out);

  ModelSpec spec;
  spec.family = chain.family;
  spec.n_classes = chain.n_classes;
  const SpatialWeights* w = is_spatial(chain.family) ? d.w.get() : nullptr;
  const ImpactSummary s = posterior_impacts(chain, spec, *d.x, w, opt.thin);

  const fs::path out(opt.out);
  const int jc = chain.n_classes;
  {
    auto f = csv::open_output((out / "impacts.csv").string());
    std::vector<std::string> header{"row"};
    for (const auto& c : class_names) {
      for (const char* e : {"direct", "indirect", "total"}) {
        header.push_back(c + "_" + e);
        header.push_back(c + "_" + e + "_sig");
      }
    }
    csv::write_row(f, header);
    for (std::size_t k = 0; k < s.covariates.size(); ++k) {
      std::vector<std::string> row{s.covariate_names[k]};
      for (int j = 0; j < jc; ++j) {
        for (const auto* cells : {&s.direct, &s.indirect, &s.total}) {
          const ImpactCell& cell = (*cells)[k][static_cast<std::size_t>(j)];
          row.push_back(full_or_na(cell.mean));
          row.push_back(cell.significant ? "1" : "0");
        }
      }
      csv::write_row(f, row);
    }
    std::vector<std::string> rho_row{"rho"};
    for (int j = 0; j < jc; ++j) {
      if (j + 1 < jc) {
        std::vector<double> v = to_std(chain.rho.col(j));
        const double lo = quantile(v, 0.05);
        const double hi = quantile(v, 0.95);
        rho_row.push_back(csv::format_full(chain.rho.col(j).mean()));
        rho_row.push_back(lo > 0.0 || hi < 0.0 ? "1" : "0");
      } else {
        rho_row.insert(rho_row.end(), {"", ""});
      }
      rho_row.insert(rho_row.end(), {"", "", "", ""});
    }
    csv::write_row(f, rho_row);
    double r2 = std::numeric_limits<double>::quiet_NaN();
    if (meta.contains("fit") && meta["fit"].contains("mcfadden_r2") &&
        meta["fit"]["mcfadden_r2"].is_number()) {
      r2 = meta["fit"]["mcfadden_r2"].get<double>();
    }
    std::vector<std::string> r2_row{"mcfadden_r2", full_or_na(r2)};
    r2_row.resize(header.size());
    csv::write_row(f, r2_row);
  }
  {
    auto f = csv::open_output((out / "impacts_long.csv").string());
    csv::write_row(f, {"covariate", "class", "effect", "mean", "q05", "q95", "significant"});
    for (std::size_t k = 0; k < s.covariates.size(); ++k) {
      for (int j = 0; j < jc; ++j) {
        const std::pair<const char*, const std::vector<std::vector<ImpactCell>>*> kinds[] = {
            {"direct", &s.direct}, {"indirect", &s.indirect}, {"total", &s.total}};
        for (const auto& [name, cells] : kinds) {
          const ImpactCell& c = (*cells)[k][static_cast<std::size_t>(j)];
          csv::write_row(f, {s.covariate_names[k], class_names[static_cast<std::size_t>(j)], name,
                             full_or_na(c.mean), full_or_na(c.q05), full_or_na(c.q95),
                             c.significant ? "1" : "0"});
        }
      }
    }
  }
  log << "impacts: " << s.covariates.size() << " covariates x " << jc << " classes from "
      << s.draws_used << " draws\n";
}

void cmd_benchmark(const BenchmarkOptions& opt, std::ostream& log) {
  require_out(opt.out);
  StudyConfig cfg;
  for (auto n : opt.n) {
    for (double r : opt.rho) cfg.scenarios.push_back({n, r});
  }
  cfg.models.clear();
  for (const auto& m : opt.models) cfg.models.push_back(family_from_string(m));
  cfg.n_runs = opt.runs;
  cfg.sampler.n_draws = opt.draws;
  cfg.sampler.n_burnin = opt.burnin;
  cfg.master_seed = opt.seed;
  cfg.threads = opt.threads;
  cfg.progress = [&log](const std::string& msg) { log << msg << '\n' << std::flush; };
  const McResult result = run_study(cfg);

  const fs::path out(opt.out);
  csv::open_output((out / "table1.csv").string()) << format_table(result);
  csv::open_output((out / "runs.csv").string()) << format_runs(result);
  int failed = 0;
  for (const auto& c : result.cells) failed += c.runs_failed;
  log << "benchmark: " << result.runs.size() << " fits, " << failed << " failed, "
      << csv::format_report(result.wall_seconds) << " s\n";
}

}  // namespace spmnl::cli
