#include "edpinn/cli/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "edpinn/cli/checkpoint.hpp"
#include "edpinn/errors.hpp"
#include "edpinn/rng.hpp"

namespace edpinn::cli {

using nlohmann::json;

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

oracle::ReferenceField trimmed(const oracle::ReferenceField& ref, double t_end) {
  Eigen::Index keep = 0;
  while (keep < static_cast<Eigen::Index>(ref.t.size()) && ref.t[static_cast<std::size_t>(keep)] <= t_end + 1e-12)
    ++keep;
  if (keep == static_cast<Eigen::Index>(ref.t.size())) return ref;
  oracle::ReferenceField out = ref;
  out.t.resize(static_cast<std::size_t>(keep));
  out.u = ref.u.leftCols(keep);
  return out;
}

controlfn::IntervalSchedule prefix(const controlfn::IntervalSchedule& s, std::size_t levels) {
  controlfn::IntervalSchedule out(s.base(), s.base_end());
  for (std::size_t k = 0; k < levels; ++k) {
    controlfn::ActiveLevel a = out.open_level(s.levels()[k].control);
    a.delta = s.levels()[k].delta;
    out.freeze(std::move(a));
  }
  return out;
}

}  // namespace

oracle::ReferenceField reference_for_config(const ExperimentConfig& c, oracle::ReferenceCache& cache) {
  const pde::PdeProblem& p = c.problem;
  const pde::PdeProblem stock = pde::problem_by_name(pde::to_string(p.id), p.beta);
  if (p.domain != stock.domain) throw OracleError("no reference solution for a modified spatial domain");
  if (p.id == pde::ProblemId::convection) return oracle::exact_convection_field(p.beta, 256, 101, p.t_end);
  if (p.t_end != 1.0) throw OracleError("spectral references cover t in [0, 1]; problem.t_end must be 1");
  return cache.spectral(p.id, c.reference_modes, c.reference_dt);
}

json RunSummary::to_json() const {
  json j = {{"name", name},
            {"method", method},
            {"overall_l2", overall_l2},
            {"interpolation_l2", interpolation_l2},
            {"trained_end", trained_end},
            {"iterations", iterations},
            {"wall_seconds", wall_seconds},
            {"reference", reference_provenance}};
  j["extrapolation_l2"] = extrapolation_l2 ? json(*extrapolation_l2) : json(nullptr);
  if (reproduction_max_diff) {
    j["reproduction_max_diff"] = *reproduction_max_diff;
    j["reproduction_ok"] = *reproduction_max_diff <= 1e-14;
  } else {
    j["reproduction_max_diff"] = nullptr;
  }
  j["reference_self_convergence"] = reference_self_convergence ? json(*reference_self_convergence) : json(nullptr);
  j["final_t_f"] = final_t_f;
  return j;
}

double reproduction_check(const controlfn::IntervalSchedule& schedule, const network::InputEmbedding& embedding,
                          const pde::PdeProblem& problem, int points, std::uint64_t seed) {
  const network::Model full(schedule);
  const std::vector<double> bounds = schedule.boundaries();
  double worst = 0.0;
  const CounterRng rng(seed, 0x7265707264ULL);
  std::uint64_t counter = 0;
  for (std::size_t k = 0; k < schedule.levels().size(); ++k) {
    const controlfn::IntervalSchedule head = prefix(schedule, k);
    const network::Model partial(head);
    const double t_hi = bounds[k + 1];
    network::SpaceTimeBatch b;
    b.x.resize(problem.spatial_dim(), points);
    b.t.resize(points);
    for (int i = 0; i < points; ++i) {
      for (int d = 0; d < problem.spatial_dim(); ++d) {
        const auto [lo, hi] = problem.domain[static_cast<std::size_t>(d)];
        b.x(d, i) = lo + (hi - lo) * rng.uniform(counter++);
      }
      b.t[i] = t_hi * rng.uniform(counter++);
    }
    const Eigen::RowVectorXd a = network::evaluate(full, embedding, b);
    const Eigen::RowVectorXd c = network::evaluate(partial, embedding, b);
    worst = std::max(worst, (a - c).cwiseAbs().maxCoeff());
  }
  return worst;
}

RunSummary evaluate_schedule(const ExperimentConfig& config, const controlfn::IntervalSchedule& schedule,
                             const oracle::ReferenceField& reference_in,
                             const std::optional<std::filesystem::path>& out_dir) {
  const oracle::ReferenceField ref = trimmed(reference_in, config.eval_t_end);
  const network::InputEmbedding emb = config.input_embedding();
  network::Model model(schedule);
  model.set_allow_extrapolation(ref.t.back() > schedule.end());
  const Eigen::MatrixXd pred = oracle::predict_on_grid(model, emb, ref);

  RunSummary s;
  s.name = config.name;
  s.method = config.method.label();
  s.curve = oracle::error_curve(pred, ref);
  s.overall_l2 = s.curve.overall;
  s.trained_end = schedule.end();
  s.reference_provenance = ref.provenance;
  if (std::isfinite(ref.self_convergence)) s.reference_self_convergence = ref.self_convergence;

  Eigen::Index split = 0;
  while (split < static_cast<Eigen::Index>(ref.t.size()) && ref.t[static_cast<std::size_t>(split)] <= schedule.end())
    ++split;
  auto rel = [&](Eigen::Index first, Eigen::Index n) {
    const Eigen::MatrixXd d = pred.middleCols(first, n) - ref.u.middleCols(first, n);
    return d.norm() / ref.u.middleCols(first, n).norm();
  };
  s.interpolation_l2 = rel(0, split);
  if (split < static_cast<Eigen::Index>(ref.t.size()))
    s.extrapolation_l2 = rel(split, static_cast<Eigen::Index>(ref.t.size()) - split);
  if (!schedule.levels().empty())
    s.reproduction_max_diff = reproduction_check(schedule, emb, config.problem, config.probe_points, config.seed);
  for (const controlfn::FrozenLevel& l : schedule.levels())
    if (l.control.trainable()) s.final_t_f.push_back(l.control.t_f());

  if (out_dir) {
    auto sol = open_csv(*out_dir / "solution.csv");
    auto pw = open_csv(*out_dir / "pointwise_error.csv");
    sol << "x,t,u_pred,u_ref,abs_error\n";
    pw << "x,t,error\n";
    for (std::size_t j = 0; j < ref.t.size(); ++j)
      for (std::size_t i = 0; i < ref.x.size(); ++i) {
        const double p = pred(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double r = ref.u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        sol << ref.x[i] << ',' << ref.t[j] << ',' << p << ',' << r << ',' << std::abs(p - r) << '\n';
        pw << ref.x[i] << ',' << ref.t[j] << ',' << p - r << '\n';
      }
    auto curve = open_csv(*out_dir / "error_curve.csv");
    curve << "t,error\n";
    for (std::size_t j = 0; j < s.curve.t.size(); ++j) curve << s.curve.t[j] << ',' << s.curve.error[j] << '\n';
  }
  return s;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<train::TrainReport>& reports) {
  auto out = open_csv(path);
  out << "interval,iteration,total,L_s,L_r,T_f\n";
  for (const train::TrainReport& r : reports)
    for (const train::HistoryRow& h : r.history) {
      out << r.interval << ',' << h.iteration << ',' << h.total << ',' << h.supervised << ',' << h.residual << ',';
      if (std::isfinite(h.t_f)) out << h.t_f;
      out << '\n';
    }
}

void write_tf_csv(const std::filesystem::path& path, const std::vector<train::TrainReport>& reports) {
  auto out = open_csv(path);
  out << "interval,iteration,T_f\n";
  for (const train::TrainReport& r : reports)
    for (const train::HistoryRow& h : r.history)
      if (std::isfinite(h.t_f)) out << r.interval << ',' << h.iteration << ',' << h.t_f << '\n';
}

double l2_from_solution_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "x,t,u_pred,u_ref,abs_error") throw Error(path.string() + ": unexpected header");
  double num = 0.0, den = 0.0;
  while (std::getline(in, line)) {
    double v[5];
    std::istringstream row(line);
    for (double& x : v) {
      std::string cell;
      std::getline(row, cell, ',');
      x = std::stod(cell);
    }
    num += (v[2] - v[3]) * (v[2] - v[3]);
    den += v[3] * v[3];
  }
  return std::sqrt(num) / std::sqrt(den);
}

RunSummary run_experiment(const ExperimentConfig& config, oracle::ReferenceCache& cache, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path& out = config.output;
  std::filesystem::create_directories(out);
  {
    std::ofstream cj(out / "config.json");
    cj << config.to_json().dump(2) << '\n';
  }
  auto log = [&](const std::string& m) {
    if (options.log) *options.log << m << std::endl;
  };
  const std::uint64_t hash = config.hash();
  // Fetch the reference first: an oracle failure should not cost a training run.
  const oracle::ReferenceField reference = reference_for_config(config, cache);

  std::optional<controlfn::IntervalSchedule> resume;
  if (options.resume) {
    resume = read_checkpoint(*options.resume, hash);
    log("resuming from " + options.resume->string() + " at t = " + std::to_string(resume->end()));
  }
  const train::IntervalHook hook = [&](const controlfn::IntervalSchedule& s, const train::TrainReport& r) {
    write_checkpoint(out / ("checkpoint_interval_" + std::to_string(r.interval + 1) + ".json"), s, hash);
  };
  const network::InputEmbedding emb = config.input_embedding();
  std::optional<train::SequentialResult> trained;
  try {
    trained = train::train_sequential(config.problem, emb, config.boundaries, config.train, config.method, hook,
                                     std::move(resume), log);
  } catch (const DivergenceError& e) {
    json report = {{"status", "diverged"}, {"message", e.what()}, {"t", number_or_null(e.offending_t())},
                   {"x", number_or_null(e.offending_x())}};
    std::ofstream(out / "divergence.json") << report.dump(2) << '\n';
    throw;
  }
  const train::SequentialResult& result = *trained;
  write_checkpoint(out / "checkpoint.json", result.schedule, hash);
  write_history_csv(out / "loss_history.csv", result.reports);
  if (config.method.kind == train::MethodSpec::Kind::adaptive) write_tf_csv(out / "tf_trajectory.csv", result.reports);

  RunSummary s = evaluate_schedule(config, result.schedule, reference, out);
  for (const train::TrainReport& r : result.reports) s.iterations += r.adam_iterations + r.lbfgs_iterations;
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json sj = s.to_json();
  sj["status"] = "ok";
  sj["config_hash"] = hex64(hash);
  json intervals = json::array();
  for (const train::TrainReport& r : result.reports) {
    json ij = {{"interval", r.interval}, {"t_lo", r.t_lo}, {"t_hi", r.t_hi}, {"loss", r.final_loss.total},
               {"L_s", r.final_loss.supervised}, {"L_r", r.final_loss.residual},
               {"adam_iterations", r.adam_iterations}, {"lbfgs_iterations", r.lbfgs_iterations},
               {"termination", r.termination}, {"wall_seconds", r.wall_seconds}};
    if (r.final_t_f) ij["final_t_f"] = *r.final_t_f;
    intervals.push_back(ij);
  }
  sj["intervals"] = intervals;
  std::ofstream(out / "summary.json") << sj.dump(2) << '\n';
  log("overall relative L2 " + std::to_string(s.overall_l2));
  return s;
}

namespace {

std::string label_for(const json& values) {
  std::string label;
  for (auto it = values.begin(); it != values.end(); ++it) {
    if (!label.empty()) label += "__";
    std::string key = it.key();
    const auto dot = key.rfind('.');
    if (dot != std::string::npos) key = key.substr(dot + 1);
    const std::string v = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    label += key + "-" + v;
  }
  for (char& ch : label)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  return label.empty() ? "run" : label;
}

}  // namespace

int run_sweep(const json& doc, const std::filesystem::path& base_dir, oracle::ReferenceCache& cache,
              std::ostream* log) {
  if (!doc.contains("sweep") || !doc["sweep"].is_object() || !doc["sweep"].contains("axes"))
    throw ConfigError("sweep: missing sweep.axes table");
  const json& axes = doc["sweep"]["axes"];
  if (!axes.is_object() || axes.empty()) throw ConfigError("sweep.axes: expected a non-empty table");
  for (auto it = axes.begin(); it != axes.end(); ++it)
    if (!it.value().is_array() || it.value().empty())
      throw ConfigError("sweep.axes." + it.key() + ": expected a non-empty list of values");
  for (auto it = doc["sweep"].begin(); it != doc["sweep"].end(); ++it)
    if (it.key() != "axes") throw ConfigError("sweep." + it.key() + ": unknown key");

  // Validate the base document once so a typo fails before any training.
  json base = doc;
  base.erase("sweep");
  const ExperimentConfig base_config = parse_config(base, base_dir);
  const std::filesystem::path root = base_config.output;
  std::filesystem::create_directories(root);

  std::vector<std::string> names;
  std::vector<std::size_t> sizes;
  for (auto it = axes.begin(); it != axes.end(); ++it) {
    names.push_back(it.key());
    sizes.push_back(it.value().size());
  }
  auto agg = open_csv(root / "aggregate.csv");
  auto curves = open_csv(root / "aggregate_curves.csv");
  for (const auto& n : names) agg << n << ',';
  agg << "label,status,overall_l2,interpolation_l2,extrapolation_l2,iterations,wall_seconds,message\n";
  curves << "label,t,error\n";

  int failures = 0;
  std::vector<std::size_t> index(names.size(), 0);
  while (true) {
    json point = json::object();
    json run_doc = base;
    for (std::size_t a = 0; a < names.size(); ++a) {
      const json& v = axes[names[a]][index[a]];
      point[names[a]] = v;
      set_dotted(run_doc, names[a], v);
    }
    const std::string label = label_for(point);
    for (std::size_t a = 0; a < names.size(); ++a) {
      const json& v = point[names[a]];
      agg << (v.is_string() ? v.get<std::string>() : v.dump()) << ',';
    }
    agg << label << ',';
    try {
      run_doc["output"] = (root / label).string();
      run_doc["name"] = base_config.name + "/" + label;
      const ExperimentConfig c = parse_config(run_doc, base_dir);
      if (log) *log << "sweep point " << label << std::endl;
      const RunSummary s = run_experiment(c, cache, {std::nullopt, log});
      agg << "ok," << s.overall_l2 << ',' << s.interpolation_l2 << ',';
      if (s.extrapolation_l2) agg << *s.extrapolation_l2;
      agg << ',' << s.iterations << ',' << s.wall_seconds << ",\n";
      for (std::size_t j = 0; j < s.curve.t.size(); ++j)
        curves << label << ',' << s.curve.t[j] << ',' << s.curve.error[j] << '\n';
    } catch (const Error& e) {
      ++failures;
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      agg << "failed,,,,,," << msg << '\n';
      if (log) *log << "sweep point " << label << " failed: " << e.what() << std::endl;
    }
    agg.flush();
    curves.flush();

    std::size_t a = 0;
    while (a < names.size() && ++index[a] == sizes[a]) index[a++] = 0;
    if (a == names.size()) break;
  }
  return failures;
}

}  // namespace edpinn::cli
