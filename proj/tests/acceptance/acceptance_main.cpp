// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Trained schedules are cached under <cache>/trained
// keyed by config hash; delete that directory (or pass --retrain) to train
// from scratch.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "edpinn/autodiff/derivatives.hpp"
#include "edpinn/cli/checkpoint.hpp"
#include "edpinn/cli/config.hpp"
#include "edpinn/cli/runner.hpp"
#include "edpinn/controlfn/library.hpp"
#include "edpinn/controlfn/schedule.hpp"
#include "edpinn/errors.hpp"
#include "edpinn/network/model.hpp"
#include "edpinn/oracle/oracle.hpp"
#include "edpinn/pde/problem.hpp"
#include "edpinn/rng.hpp"
#include "edpinn/train/loss.hpp"
#include "edpinn/train/optim.hpp"
#include "edpinn/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace edpinn;
using controlfn::ControlFunction;
using controlfn::Side;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << v;
  return s.str();
}

network::ParamSet random_params(const std::vector<int>& sizes, std::uint64_t seed, double weight_scale,
                                double bias_scale) {
  network::ParamSet p = network::xavier_init(sizes, seed);
  CounterRng rng(seed, 99);
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    p.layer(k).weight *= weight_scale;
    for (Eigen::Index i = 0; i < p.layer(k).bias.size(); ++i)
      p.layer(k).bias[i] = bias_scale * (2.0 * rng.next_uniform() - 1.0);
  }
  return p;
}

network::SpaceTimeBatch random_points(int n, double x_lo, double x_hi, double t_lo, double t_hi, std::uint64_t seed) {
  CounterRng rng(seed, 5);
  network::SpaceTimeBatch b;
  b.x.resize(1, n);
  b.t.resize(n);
  for (int i = 0; i < n; ++i) {
    b.x(0, i) = x_lo + (x_hi - x_lo) * rng.next_uniform();
    b.t[i] = t_lo + (t_hi - t_lo) * rng.next_uniform();
  }
  return b;
}

std::vector<ControlFunction> node_controls(double t_p, double t_end) {
  std::vector<ControlFunction> fs{ControlFunction::strong(t_p, t_end), ControlFunction::strong(t_p, t_end, 2),
                                  ControlFunction::weak(t_p, t_end, 5), ControlFunction::adaptive(t_p, t_end, -0.8)};
  for (const auto& e : controlfn::control_library()) fs.push_back(e.function.retargeted(t_p, t_end));
  return fs;
}

// ---------------------------------------------------------------------------
// Structural criteria

Outcome subinterval_reproduction() {
  const auto sizes = network::mlp_sizes(3, 4, 50);
  const network::InputEmbedding emb = network::InputEmbedding::fourier({2.0});
  const network::ParamSet base = random_params(sizes, 1, 1.0, 0.3);
  const network::Model plain = network::Model::single(base, 0.5);
  const network::SpaceTimeBatch pts = random_points(10000, -1.0, 1.0, 0.0, 0.5, 2);
  const Eigen::RowVectorXd ref = network::evaluate(plain, emb, pts);
  double worst = 0.0;
  int seed = 10;
  for (const ControlFunction& f : node_controls(0.5, 1.0)) {
    controlfn::IntervalSchedule schedule(base, 0.5);
    controlfn::ActiveLevel active = schedule.open_level(f);
    active.delta = random_params(sizes, static_cast<std::uint64_t>(++seed), 0.7, 0.5);
    const network::Model full(schedule, &active);
    worst = std::max(worst, (network::evaluate(full, emb, pts) - ref).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-14, "max |u_full - u_p| = " + sci(worst) + " over 1e4 points, " +
                              std::to_string(node_controls(0.5, 1.0).size()) + " controls"};
}

Outcome node_continuity() {
  const auto sizes = network::mlp_sizes(3, 4, 50);
  const network::InputEmbedding emb = network::InputEmbedding::fourier({2.0});
  const network::ParamSet base = random_params(sizes, 3, 1.0, 0.3);
  CounterRng rng(4, 0);
  std::vector<double> xs(1000);
  for (double& x : xs) x = -1.0 + 2.0 * rng.next_uniform();
  double du = 0.0, dut = 0.0;
  int seed = 20;
  for (const ControlFunction& f : node_controls(0.5, 1.0)) {
    controlfn::IntervalSchedule schedule(base, 0.5);
    controlfn::ActiveLevel active = schedule.open_level(f);
    active.delta = random_params(sizes, static_cast<std::uint64_t>(++seed), 0.7, 0.5);
    const network::Model full(schedule, &active);
    for (double x : xs) {
      const auto l = network::forward_jet(full, emb, std::span(&x, 1), 0.5, {0, 1}, 0, Side::left);
      const auto r = network::forward_jet(full, emb, std::span(&x, 1), 0.5, {0, 1}, 0, Side::right);
      du = std::max(du, std::abs(l.u - r.u));
      dut = std::max(dut, std::abs(l.u_t - r.u_t));
    }
  }
  return {du <= 1e-12 && dut <= 1e-12, "max jump u " + sci(du) + ", u_t " + sci(dut)};
}

Outcome control_suite() {
  std::vector<ControlFunction> fs{ControlFunction::strong(0.5, 1.0), ControlFunction::strong(0.5, 1.0, 2),
                                  ControlFunction::weak(0.5, 1.0, 5), ControlFunction::weak(0.5, 1.0, 2, 2),
                                  ControlFunction::adaptive(0.5, 1.0), ControlFunction::adaptive(0.5, 1.0, 1.7, 2)};
  bool w2_corrected = false;
  for (const auto& e : controlfn::control_library()) {
    fs.push_back(e.function);
    if (e.id == "w2") w2_corrected = e.corrected;
  }
  double endpoint = 0.0, slope = 0.0, min_slope = 0.0;
  int failures = 0;
  for (const ControlFunction& f : fs) {
    const double e = std::max(std::abs(f.eval(f.t_p()).value), std::abs(f.eval(f.t_f(), Side::left).value - 1.0));
    const double s = std::max(std::abs(f.eval(f.t_p()).d1), std::abs(f.eval(f.t_f(), Side::left).d1));
    const auto report = f.check_invariants(10000, 1e-12);
    endpoint = std::max(endpoint, e);
    slope = std::max(slope, s);
    if (f.monotone()) min_slope = std::min(min_slope, report.min_slope);
    if (e > 1e-12 || s > 1e-12 || (f.monotone() && report.min_slope < -1e-15)) ++failures;
  }
  std::ostringstream d;
  d << fs.size() << " functions; max endpoint error " << sci(endpoint) << ", max end slope " << sci(slope)
    << ", min slope (monotone) " << sci(min_slope) << ", w2 corrected " << (w2_corrected ? "yes" : "no");
  return {failures == 0 && w2_corrected, d.str()};
}

double rel_inf(const VectorXd& a, const VectorXd& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

Outcome derivative_correctness() {
  const pde::PdeProblem kdv = pde::kdv();
  const network::InputEmbedding emb = network::InputEmbedding::fourier({2.0});
  const auto sizes = network::mlp_sizes(emb.input_size(), 3, 30);
  controlfn::IntervalSchedule schedule(random_params(sizes, 31, 1.0, 0.3), 0.5);
  controlfn::ActiveLevel active = schedule.open_level(ControlFunction::adaptive(0.5, 1.0, 0.4));
  active.delta = random_params(sizes, 32, 0.6, 0.4);
  const network::Model model = network::Model::for_training(schedule, active);

  // Input derivatives at t = 0.75 against central differences of plain
  // evaluations. Higher-order stencils keep truncation below the tolerance.
  const double t = 0.75;
  const int n = 20;
  CounterRng rng(33, 0);
  VectorXd ad_x(n), ad_xx(n), ad_xxx(n), ad_t(n), fd_x(n), fd_xx(n), fd_xxx(n), fd_t(n);
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + 2.0 * rng.next_uniform();
    auto u = [&](double xx, double tt) { return network::forward(model, emb, std::span(&xx, 1), tt); };
    const auto j = network::forward_jet(model, emb, std::span(&x, 1), t, {3, 1});
    ad_x[i] = j.u_x;
    ad_xx[i] = j.u_xx;
    ad_xxx[i] = j.u_xxx;
    ad_t[i] = j.u_t;
    const double h1 = 1e-5, h2 = 1e-3, h3 = 5e-3;
    fd_x[i] = (u(x + h1, t) - u(x - h1, t)) / (2 * h1);
    fd_t[i] = (u(x, t + h1) - u(x, t - h1)) / (2 * h1);
    fd_xx[i] = (-u(x + 2 * h2, t) + 16 * u(x + h2, t) - 30 * u(x, t) + 16 * u(x - h2, t) - u(x - 2 * h2, t)) /
               (12 * h2 * h2);
    const double c[] = {7.0 / 240, -3.0 / 10, 169.0 / 120, -61.0 / 30};
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += c[k] * (u(x + (4 - k) * h3, t) - u(x - (4 - k) * h3, t));
    fd_xxx[i] = acc / (h3 * h3 * h3);
  }

  // Loss gradient over every trainable coordinate, the T_f logit included.
  const pde::SampleBatch batch = pde::sample(kdv, {0, 4, 8}, 0.5, 1.0, pde::SamplingStrategy::uniform, 34);
  const train::LossFunction loss(kdv, emb, batch, {1.0, 1.0});
  const Eigen::Index np = static_cast<Eigen::Index>(model.trainable_count());
  VectorXd grad(np), fd(np);
  loss.value_and_gradient(model, grad);
  VectorXd theta(np);
  theta.head(np - 1) = active.delta.flatten();
  theta[np - 1] = active.control.tf_logit();
  auto at = [&](const VectorXd& v) {
    active.delta.assign(std::span<const double>(v.data(), static_cast<std::size_t>(np - 1)));
    active.control.set_tf_logit(v[np - 1]);
    return loss.value(model).total;
  };
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < np; ++k) {
    VectorXd p = theta, m = theta;
    p[k] += h;
    m[k] -= h;
    fd[k] = (at(p) - at(m)) / (2 * h);
  }
  at(theta);

  const double ex = rel_inf(ad_x, fd_x), exx = rel_inf(ad_xx, fd_xx), exxx = rel_inf(ad_xxx, fd_xxx),
               et = rel_inf(ad_t, fd_t), eg = rel_inf(grad, fd);
  std::ostringstream d;
  d << "relative error u_t " << sci(et) << ", u_x " << sci(ex) << ", u_xx " << sci(exx) << ", u_xxx " << sci(exxx)
    << ", loss gradient (" << np << " params) " << sci(eg);
  return {std::max({ex, exx, exxx, et, eg}) <= 1e-6, d.str()};
}

Outcome optimizer_sanity() {
  CounterRng rng(51, 0);
  Eigen::MatrixXd a(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) a(i, j) = 2.0 * rng.next_uniform() - 1.0;
  const Eigen::MatrixXd q = a.transpose() * a + Eigen::MatrixXd::Identity(10, 10);
  VectorXd rhs(10);
  for (int i = 0; i < 10; ++i) rhs[i] = 2.0 * rng.next_uniform() - 1.0;
  const train::Objective quad = [&](const VectorXd& x, VectorXd& g) {
    g = q * x - rhs;
    return 0.5 * x.dot(q * x) - rhs.dot(x);
  };
  train::LbfgsConfig cfg;
  cfg.gradient_tol = 1e-10;
  cfg.relative_tol = 0.0;
  VectorXd x = VectorXd::Zero(10), g(10);
  const auto rq = train::lbfgs_minimize(quad, x, cfg);
  quad(x, g);
  const double gq = g.cwiseAbs().maxCoeff();

  const train::Objective rosen = [](const VectorXd& v, VectorXd& gr) {
    const double p = 1 - v[0], s = v[1] - v[0] * v[0];
    gr.resize(2);
    gr << -2 * p - 400 * v[0] * s, 200 * s;
    return p * p + 100 * s * s;
  };
  VectorXd y(2);
  y << -1.2, 1.0;
  train::LbfgsConfig rc;
  rc.relative_tol = 0.0;
  const auto rr = train::lbfgs_minimize(rosen, y, rc);

  VectorXd p = VectorXd::Constant(1, 1.0);
  train::AdamState st;
  for (int i = 0; i < 1000; ++i) train::adam_step(p, 2.0 * p, st, {0.1});

  std::ostringstream d;
  d << "quadratic |g|_inf " << sci(gq) << " in " << rq.iterations << " its; rosenbrock " << sci(rr.value) << " in "
    << rr.iterations << " its; adam |p| " << sci(std::abs(p[0]));
  return {gq <= 1e-10 && rq.iterations <= 25 && rr.value <= 1e-8 && std::abs(p[0]) <= 1e-3, d.str()};
}

Outcome oracle_validation(oracle::ReferenceCache& cache) {
  const auto ac = cache.spectral(pde::ProblemId::allen_cahn);
  const auto kd = cache.spectral(pde::ProblemId::kdv);
  double worst = 0.0;
  for (double beta : {10.0, 40.0}) {
    const pde::PdeProblem p = pde::convection(beta);
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 25; ++j) {
        const double x = 2 * M_PI * i / 40.0, t = j / 24.0;
        const auto d = ad::eval_with_input_derivs(
            [beta](const ad::Jet& xx, const ad::Jet& tt) { return sin(xx - tt * beta); }, x, t, {1, 1});
        pde::FieldDerivs<double> f;
        f.u = d.value();
        f.u_x = d.at(1, 0);
        f.u_t = d.at(0, 1);
        worst = std::max(worst, std::abs(p.residual(f)));
      }
    }
  }
  std::ostringstream d;
  d << "self-convergence allen_cahn (" << ac.modes << " modes) " << sci(ac.self_convergence) << ", kdv ("
    << kd.modes << " modes) " << sci(kd.self_convergence) << "; exact convection residual " << sci(worst);
  return {ac.self_convergence <= 1e-6 && kd.self_convergence <= 1e-6 && worst <= 1e-10, d.str()};
}

// ---------------------------------------------------------------------------
// Desk-scale training

class Trainer {
 public:
  Trainer(fs::path cache_dir, bool retrain) : dir_(std::move(cache_dir) / "trained"), retrain_(retrain) {
    fs::create_directories(dir_);
  }

  // Trains `doc` (continuing from `resume` when given) or loads the cached
  // result of an identical earlier call.
  controlfn::IntervalSchedule get(const json& doc, const std::optional<controlfn::IntervalSchedule>& resume = {}) {
    const cli::ExperimentConfig c = cli::parse_config(doc);
    // The key also covers the schedule a run continues from.
    std::uint64_t key = c.hash();
    if (resume) key ^= cli::fnv1a(cli::schedule_to_json(*resume).dump());
    const fs::path path = dir_ / (c.name + "-" + cli::hex64(key) + ".json");
    if (!retrain_ && fs::exists(path)) {
      std::cerr << "[acceptance] cached " << path.filename().string() << '\n';
      return cli::read_checkpoint(path, c.hash());
    }
    std::cerr << "[acceptance] training " << c.name << '\n';
    const auto start = std::chrono::steady_clock::now();
    const network::InputEmbedding emb = c.input_embedding();
    const auto log = [](const std::string& line) { std::cerr << line << '\n'; };
    const train::SequentialResult r =
        train::train_sequential(c.problem, emb, c.boundaries, c.train, c.method, {}, resume, log);
    cli::write_checkpoint(path, r.schedule, c.hash());
    std::cerr << "[acceptance] " << c.name << " took "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s\n";
    return r.schedule;
  }

  cli::RunSummary evaluate(const json& doc, const controlfn::IntervalSchedule& schedule,
                           oracle::ReferenceCache& refs) {
    const cli::ExperimentConfig c = cli::parse_config(doc);
    return cli::evaluate_schedule(c, schedule, cli::reference_for_config(c, refs));
  }

 private:
  fs::path dir_;
  bool retrain_;
};

// Desk budgets, per interval. See the README for how they were chosen.
// boundary_points 0 drops the periodic terms, which the Fourier embedding
// already satisfies exactly.
struct Budget {
  int adam, total, residual_points;
  int boundary_points = -1;
  double w_s = 0.0;
};
const Budget kConvectionHalf{1000, 6000, 2000, -1, 10.0};
const Budget kConvectionSecond{1000, 5000, 2000, -1, 10.0};
const Budget kAllenCahn{5000, 10000, 2000, 0};
// T_f keeps rising slowly under L-BFGS; give the adaptive run room to settle.
const Budget kAllenCahnAdaptive{5000, 20000, 2000, 0};
const Budget kKdv{2000, 8000, 0, 0};

json desk(const std::string& name, const std::string& problem, double beta, std::vector<double> boundaries,
          const std::string& kind, const Budget& b) {
  json d;
  d["name"] = name;
  d["seed"] = 0;
  d["output"] = "/dev/null";
  d["problem"] = {{"id", problem}};
  if (problem == "convection") d["problem"]["beta"] = beta;
  d["intervals"] = {{"boundaries", boundaries}};
  d["method"] = {{"kind", kind}};
  d["train"] = {{"adam_epochs", b.adam}, {"max_iterations", b.total}};
  if (b.residual_points > 0) d["train"]["residual_points"] = b.residual_points;
  if (b.boundary_points >= 0) d["train"]["boundary_points"] = b.boundary_points;
  if (b.w_s > 0) d["train"]["w_s"] = b.w_s;
  d["evaluation"] = {{"t_end", 1.0}};
  return d;
}


// Tolerance check with the 5x fallback for end-to-end criteria.
Outcome tolerance(double value, double bound, bool structural_ok, const std::string& what, std::string extra = {}) {
  std::ostringstream d;
  d << what << " " << sci(value) << " (bound " << sci(bound) << ")";
  if (!extra.empty()) d << "; " << extra;
  if (value <= bound) return {true, d.str()};
  if (structural_ok && value <= 5.0 * bound) {
    d << "; within 5x of the bound, accepted under the fallback clause";
    return {true, d.str()};
  }
  return {false, d.str()};
}

struct Context {
  Trainer& trainer;
  oracle::ReferenceCache& refs;
  bool structural_ok = true;
  std::map<std::string, controlfn::IntervalSchedule> memo;

  const controlfn::IntervalSchedule& schedule(const json& doc,
                                              const std::optional<controlfn::IntervalSchedule>& resume = {}) {
    const std::string key = doc["name"];
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, trainer.get(doc, resume)).first;
    return it->second;
  }
};

json convection_half(double beta) {
  const auto& b = kConvectionHalf;
  return desk("convection_b" + std::to_string(static_cast<int>(beta)) + "_half", "convection", beta, {0.0, 0.5},
              "conventional", b);
}

Outcome convection_ordering(Context& ctx) {
  const json d10 = convection_half(10.0), d40 = convection_half(40.0);
  const cli::RunSummary s10 = ctx.trainer.evaluate(d10, ctx.schedule(d10), ctx.refs);
  const cli::RunSummary s40 = ctx.trainer.evaluate(d40, ctx.schedule(d40), ctx.refs);
  double min_extra = INFINITY, worst_gap = -INFINITY;
  for (std::size_t j = 0; j < s10.curve.t.size(); ++j) {
    if (s10.curve.t[j] <= 0.5) continue;
    min_extra = std::min(min_extra, s10.curve.error[j]);
    worst_gap = std::max(worst_gap, s10.curve.error[j] - s40.curve.error[j]);
  }
  const bool dominates = min_extra > s10.interpolation_l2;
  const bool below = worst_gap < 0.0;
  std::ostringstream extra;
  extra << "min extrapolation slice error " << sci(min_extra) << (dominates ? " > " : " <= ")
        << "interpolation error; beta=10 curve " << (below ? "below" : "not below") << " beta=40 on (0.5, 1]"
        << " (beta=40 interpolation " << sci(s40.interpolation_l2) << ")";
  Outcome o = tolerance(s10.interpolation_l2, 1e-2, ctx.structural_ok, "beta=10 interpolation L2", extra.str());
  o.pass = o.pass && dominates && below;
  return o;
}

Outcome convection_adaptive(Context& ctx) {
  const auto& b = kConvectionSecond;
  const json d = desk("convection_b40_ae", "convection", 40.0, {0.0, 0.5, 1.0}, "aE", b);
  const json first = convection_half(40.0);
  const auto& sched = ctx.schedule(d, ctx.schedule(first));
  const cli::RunSummary s = ctx.trainer.evaluate(d, sched, ctx.refs);
  const double tf = sched.levels()[0].control.t_f();
  const bool descended = tf < 0.75 && std::abs(tf - 0.5) <= 0.1;
  std::ostringstream extra;
  extra << "final T_f " << tf << (descended ? " descended toward 0.5" : " did not descend toward 0.5");
  Outcome o = tolerance(s.overall_l2, 2e-2, ctx.structural_ok, "full-domain L2", extra.str());
  o.pass = o.pass && descended;
  return o;
}

json allen_cahn_half() {
  const auto& b = kAllenCahn;
  return desk("allen_cahn_half", "allen_cahn", 0, {0.0, 0.5}, "conventional", b);
}

json allen_cahn_two(const std::string& name, const std::string& kind, const Budget& b = kAllenCahn) {
  return desk(name, "allen_cahn", 0, {0.0, 0.5, 1.0}, kind, b);
}

Outcome allen_cahn_strong(Context& ctx) {
  const json d = allen_cahn_two("allen_cahn_se", "sE");
  const auto& sched = ctx.schedule(d, ctx.schedule(allen_cahn_half()));
  const cli::RunSummary s = ctx.trainer.evaluate(d, sched, ctx.refs);
  const cli::ExperimentConfig c = cli::parse_config(d);
  const double repro = cli::reproduction_check(sched, c.input_embedding(), c.problem, 10000, 91);
  Outcome o = tolerance(s.overall_l2, 2e-2, ctx.structural_ok, "full-domain L2",
                        "reproduction max diff " + sci(repro));
  o.pass = o.pass && repro <= 1e-14;
  return o;
}

Outcome allen_cahn_adaptive(Context& ctx) {
  const json d = allen_cahn_two("allen_cahn_ae", "aE", kAllenCahnAdaptive);
  const auto& sched = ctx.schedule(d, ctx.schedule(allen_cahn_half()));
  const cli::RunSummary s = ctx.trainer.evaluate(d, sched, ctx.refs);
  const double tf = sched.levels()[0].control.t_f();
  return {tf > 0.9, "final T_f " + std::to_string(tf) + " (full-domain L2 " + sci(s.overall_l2) + ")"};
}

Outcome kdv_adaptive(Context& ctx) {
  const auto& b = kKdv;
  const json d = desk("kdv_ae", "kdv", 0, {0.0, 0.5, 1.0}, "aE", b);
  const auto& sched = ctx.schedule(d);
  const cli::RunSummary s = ctx.trainer.evaluate(d, sched, ctx.refs);
  return tolerance(s.overall_l2, 5e-2, ctx.structural_ok, "full-domain L2",
                   "final T_f " + std::to_string(sched.levels()[0].control.t_f()));
}

Outcome control_band(Context& ctx) {
  std::vector<double> errors;
  std::ostringstream d;
  for (int k = 1; k <= 5; ++k) {
    const std::string id = "s" + std::to_string(k);
    json doc = allen_cahn_two("allen_cahn_" + id, "custom");
    doc["method"]["control"] = id;
    const auto& sched = ctx.schedule(doc, ctx.schedule(allen_cahn_half()));
    errors.push_back(ctx.trainer.evaluate(doc, sched, ctx.refs).overall_l2);
    d << id << " " << sci(errors.back()) << (k < 5 ? ", " : "");
  }
  const double band = *std::max_element(errors.begin(), errors.end()) / *std::min_element(errors.begin(), errors.end());
  d << "; band " << std::fixed << std::setprecision(2) << band << "x (bound 2x)";
  return {band <= 2.0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cache_dir = ".edpinn_cache";
  std::vector<int> only, expect_fail;
  bool retrain = false;
  app.add_option("--cache", cache_dir, "Reference and trained-model cache");
  app.add_option("--only", only, "Run just these criteria");
  app.add_flag("--retrain", retrain, "Ignore cached trained models");
  app.add_option("--expect-fail", expect_fail, "Known failures: still reported, but left out of the exit code");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(cache_dir);
  oracle::ReferenceCache refs{fs::path(cache_dir)};
  Trainer trainer(cache_dir, retrain);
  Context ctx{trainer, refs, true, {}};

  using Check = std::function<Outcome()>;
  const std::vector<std::pair<int, Check>> checks{
      {1, subinterval_reproduction},
      {2, node_continuity},
      {3, control_suite},
      {4, derivative_correctness},
      {5, optimizer_sanity},
      {6, [&] { return oracle_validation(refs); }},
      {7, [&] { return convection_ordering(ctx); }},
      {8, [&] { return convection_adaptive(ctx); }},
      {9, [&] { return allen_cahn_strong(ctx); }},
      {10, [&] { return allen_cahn_adaptive(ctx); }},
      {11, [&] { return kdv_adaptive(ctx); }},
      {12, [&] { return control_band(ctx); }},
  };

  int failed = 0, known = 0;
  for (const auto& [id, check] : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool expected = std::find(expect_fail.begin(), expect_fail.end(), id) != expect_fail.end();
    if (!o.pass) ++(expected ? known : failed);
    if (id <= 6 && !o.pass) ctx.structural_ok = false;
    std::cout << "criterion " << std::setw(2) << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
              << std::fixed << std::setprecision(1) << secs << " s]" << std::defaultfloat
              << (expected ? (o.pass ? "  (listed as a known failure, now passing)" : "  (known failure)") : "")
              << std::endl;
  }
  std::cout << failed << " unexpected failure(s), " << known << " known failure(s)" << std::endl;
  return failed == 0 ? 0 : 1;
}
