#include "edpinn/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "edpinn/controlfn/library.hpp"
#include "edpinn/errors.hpp"
#include "edpinn/rng.hpp"

namespace edpinn::train {

using Eigen::VectorXd;

void TrainConfig::validate() const {
  if (adam_epochs < 0) throw ConfigError("train.adam_epochs must be >= 0");
  if (!(adam_lr > 0.0)) throw ConfigError("train.adam_lr must be positive");
  if (lbfgs_memory < 1) throw ConfigError("train.lbfgs_memory must be >= 1");
  if (max_iterations < adam_epochs) throw ConfigError("train.max_iterations must be >= train.adam_epochs");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
    throw ConfigError("train: Wolfe constants need 0 < c1 < c2 < 1");
  if (gradient_tol < 0.0 || relative_tol < 0.0) throw ConfigError("train: tolerances must be >= 0");
  if (!(divergence_factor > 1.0)) throw ConfigError("train.divergence_factor must exceed 1");
  if (chunk < 1) throw ConfigError("train.chunk must be >= 1");
  if (adam_batch < 0) throw ConfigError("train.adam_batch must be >= 0");
  weights.validate();
}

controlfn::ControlFunction MethodSpec::make(double t_p, double t_end, const pde::PdeProblem& problem) const {
  const int order = smoothness_order > 0 ? smoothness_order : (problem.has_utt() ? 2 : 1);
  switch (kind) {
    case Kind::conventional:
      throw ConfigError("method 'conventional' trains a single interval; use one interval or an E-DNN method");
    case Kind::strong:
      return controlfn::ControlFunction::strong(t_p, t_end, order);
    case Kind::weak:
      if (weak_m < 1) throw ConfigError("method.weak_m must be >= 1");
      return controlfn::ControlFunction::weak(t_p, t_end, weak_m, order);
    case Kind::adaptive:
      return controlfn::ControlFunction::adaptive(t_p, t_end, initial_logit, order);
    case Kind::custom: {
      if (order >= 2) throw ConfigError("library control functions are C1 only; the residual needs u_tt");
      return controlfn::library_function(custom_id, t_p, t_end);
    }
  }
  throw ConfigError("unknown method");
}

std::string MethodSpec::label() const {
  switch (kind) {
    case Kind::conventional:
      return "conventional";
    case Kind::strong:
      return "sE";
    case Kind::weak:
      return "wE(" + std::to_string(weak_m) + ")";
    case Kind::adaptive:
      return "aE";
    case Kind::custom:
      return "custom:" + custom_id;
  }
  return "unknown";
}

std::uint64_t interval_seed(std::uint64_t seed, int interval) {
  return CounterRng(seed, 0x696e74ULL + static_cast<std::uint64_t>(interval)).bits(0);
}

namespace {

// Fixed residual mini-batches from one shuffle of the window's points. Adam
// step k uses batch k mod count.
struct MiniBatches {
  std::vector<pde::SampleBatch> batches;
  std::vector<std::unique_ptr<LossFunction>> losses;
};

MiniBatches make_minibatches(const pde::PdeProblem& problem, const network::InputEmbedding& embedding,
                             const pde::SampleBatch& full, const TrainConfig& config) {
  MiniBatches out;
  const int n = full.residual_count();
  if (config.adam_batch == 0 || config.adam_batch >= n) return out;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  CounterRng rng(full.seed, 0x6d62);
  for (int i = n - 1; i > 0; --i) {
    const int j = std::min(i, static_cast<int>(rng.next_uniform() * (i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  const int count = (n + config.adam_batch - 1) / config.adam_batch;
  out.batches.reserve(static_cast<std::size_t>(count));
  for (int b = 0; b < count; ++b) {
    const int lo = b * config.adam_batch, m = std::min(n, lo + config.adam_batch) - lo;
    pde::SampleBatch mb = full;
    mb.x_residual.resize(full.x_residual.rows(), m);
    mb.t_residual.resize(m);
    for (int i = 0; i < m; ++i) {
      const Eigen::Index src = order[static_cast<std::size_t>(lo + i)];
      mb.x_residual.col(i) = full.x_residual.col(src);
      mb.t_residual[i] = full.t_residual[src];
    }
    out.batches.push_back(std::move(mb));
  }
  for (const auto& mb : out.batches)
    out.losses.push_back(std::make_unique<LossFunction>(problem, embedding, mb, config.weights, config.chunk));
  return out;
}

// Adam then L-BFGS on the trainable term of `model`. `params` and `control`
// are the objects that term points at.
void optimize(const network::Model& model, network::ParamSet& params, controlfn::ControlFunction* control,
              const LossFunction& loss, const MiniBatches& mini, const TrainConfig& config, TrainReport& report,
              const LogFn& log) {
  const auto start = std::chrono::steady_clock::now();
  const bool adaptive = control && control->trainable();
  VectorXd x(static_cast<Eigen::Index>(model.trainable_count()));
  x.head(static_cast<Eigen::Index>(params.parameter_count())) = params.flatten();
  if (adaptive) x[x.size() - 1] = control->tf_logit();

  auto load = [&](const VectorXd& v) {
    params.assign(std::span<const double>(v.data(), params.parameter_count()));
    if (adaptive) control->set_tf_logit(v[v.size() - 1]);
  };
  auto t_f = [&] { return adaptive ? control->t_f() : std::numeric_limits<double>::quiet_NaN(); };

  VectorXd grad(x.size());
  LossValue last;
  const LossFunction* current = &loss;
  const Objective objective = [&](const VectorXd& v, VectorXd& g) {
    load(v);
    last = current->value_and_gradient(model, g);
    return last.total;
  };

  double initial = std::numeric_limits<double>::quiet_NaN();
  auto guard = [&](double value, int iteration) {
    if (std::isnan(initial)) initial = value;
    if (value > config.divergence_factor * initial) {
      std::ostringstream msg;
      msg << "loss " << value << " exceeded " << config.divergence_factor << " x its initial value " << initial
          << " at iteration " << iteration;
      throw DivergenceError(msg.str());
    }
  };
  auto record = [&](int iteration) {
    report.history.push_back({iteration, last.total, last.supervised, last.residual, t_f()});
  };

  // Adam. Each epoch evaluates the gradient at the current point, records
  // it, then steps.
  AdamState state;
  const AdamConfig adam{config.adam_lr};
  for (int epoch = 0; epoch < config.adam_epochs; ++epoch) {
    if (!mini.losses.empty()) current = mini.losses[static_cast<std::size_t>(epoch) % mini.losses.size()].get();
    objective(x, grad);
    guard(last.total, epoch);
    record(epoch);
    if (log && epoch % 500 == 0) {
      std::ostringstream msg;
      msg << "  adam " << epoch << " loss " << last.total << " (L_s " << last.supervised << ", L_r " << last.residual
          << ")";
      if (adaptive) msg << " T_f " << t_f();
      log(msg.str());
    }
    adam_step(x, grad, state, adam);
    ++report.adam_iterations;
  }

  current = &loss;
  const int lbfgs_budget = config.max_iterations - config.adam_epochs;
  std::string reason = "max_iterations";
  if (lbfgs_budget > 0) {
    LbfgsConfig lc;
    lc.memory = config.lbfgs_memory;
    lc.max_iterations = lbfgs_budget;
    lc.c1 = config.wolfe_c1;
    lc.c2 = config.wolfe_c2;
    lc.gradient_tol = config.gradient_tol;
    lc.relative_tol = config.relative_tol;
    const int offset = config.adam_epochs;
    const LbfgsResult r = lbfgs_minimize(objective, x, lc, [&](int it, double value, const VectorXd&) {
      guard(value, offset + it);
      record(offset + it);
      if (log && it % 500 == 0) {
        std::ostringstream msg;
        msg << "  lbfgs " << it << " loss " << value;
        if (adaptive) msg << " T_f " << t_f();
        log(msg.str());
      }
      return true;
    });
    report.lbfgs_iterations = r.iterations;
    report.evaluations = r.evaluations + config.adam_epochs;
    reason = to_string(r.reason);
  } else {
    report.evaluations = config.adam_epochs;
  }
  load(x);
  report.final_loss = loss.value(model);
  report.termination = reason;
  if (adaptive) report.final_t_f = control->t_f();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (log) {
    std::ostringstream msg;
    msg << "  done: loss " << report.final_loss.total << ", " << report.adam_iterations << " adam + "
        << report.lbfgs_iterations << " lbfgs, " << reason << ", " << report.wall_seconds << " s";
    log(msg.str());
  }
}

}  // namespace

TrainReport train_first_interval(network::ParamSet& params, const pde::PdeProblem& problem,
                                 const network::InputEmbedding& embedding, double t_end, const TrainConfig& config,
                                 const LogFn& log) {
  config.validate();
  const std::uint64_t seed = interval_seed(config.seed, 0);
  params = network::xavier_init(
      network::mlp_sizes(embedding.input_size(), problem.hidden_layers, problem.width), seed);
  const pde::SampleBatch batch = pde::sample(problem, config.counts, 0.0, t_end, config.strategy, seed);
  const LossFunction loss(problem, embedding, batch, config.weights, config.chunk);
  const network::Model model = network::Model::single(params, t_end);
  TrainReport report;
  report.interval = 0;
  report.t_lo = 0.0;
  report.t_hi = t_end;
  const MiniBatches mini = make_minibatches(problem, embedding, batch, config);
  optimize(model, params, nullptr, loss, mini, config, report, log);
  return report;
}

TrainReport train_interval(controlfn::IntervalSchedule& schedule, const controlfn::ControlFunction& control,
                           const pde::PdeProblem& problem, const network::InputEmbedding& embedding,
                           const TrainConfig& config, int interval_index, const LogFn& log) {
  config.validate();
  controlfn::ActiveLevel active = schedule.open_level(control);
  const double t_lo = schedule.end(), t_hi = control.t_end();
  const std::uint64_t seed = interval_seed(config.seed, interval_index);
  const pde::SampleBatch batch = pde::sample(problem, config.counts, t_lo, t_hi, config.strategy, seed);
  const LossFunction loss(problem, embedding, batch, config.weights, config.chunk);
  const network::Model model = network::Model::for_training(schedule, active);
  TrainReport report;
  report.interval = interval_index;
  report.t_lo = t_lo;
  report.t_hi = t_hi;
  const MiniBatches mini = make_minibatches(problem, embedding, batch, config);
  optimize(model, active.delta, &active.control, loss, mini, config, report, log);
  schedule.freeze(std::move(active));
  return report;
}

SequentialResult train_sequential(const pde::PdeProblem& problem, const network::InputEmbedding& embedding,
                                  const std::vector<double>& boundaries, const TrainConfig& config,
                                  const MethodSpec& method, const IntervalHook& hook,
                                  std::optional<controlfn::IntervalSchedule> resume, const LogFn& log) {
  if (boundaries.size() < 2 || boundaries.front() != 0.0)
    throw ConfigError("intervals: boundaries must start at 0 and contain at least two entries");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (!(boundaries[i] > boundaries[i - 1])) throw ConfigError("intervals: boundaries must be strictly increasing");
  if (method.kind == MethodSpec::Kind::conventional && boundaries.size() > 2)
    throw ConfigError("method 'conventional' trains a single interval; got " +
                      std::to_string(boundaries.size() - 1));

  std::vector<TrainReport> reports;
  std::optional<controlfn::IntervalSchedule> schedule = std::move(resume);
  if (!schedule) {
    if (log) log("interval 1: [0, " + std::to_string(boundaries[1]) + "]");
    network::ParamSet base;
    reports.push_back(train_first_interval(base, problem, embedding, boundaries[1], config, log));
    schedule.emplace(std::move(base), boundaries[1]);
    if (hook) hook(*schedule, reports.back());
  }
  const auto done = schedule->boundaries();
  if (done.size() > boundaries.size())
    throw IncompatibleCheckpointError("checkpoint has more intervals than the configuration");
  for (std::size_t i = 0; i < done.size(); ++i)
    if (done[i] != boundaries[i])
      throw IncompatibleCheckpointError("checkpoint interval boundaries differ from the configuration");

  for (std::size_t i = done.size(); i < boundaries.size(); ++i) {
    const int index = static_cast<int>(i) - 1;
    if (log) {
      std::ostringstream msg;
      msg << "interval " << index + 1 << ": (" << boundaries[i - 1] << ", " << boundaries[i] << "]";
      log(msg.str());
    }
    const controlfn::ControlFunction control = method.make(boundaries[i - 1], boundaries[i], problem);
    reports.push_back(train_interval(*schedule, control, problem, embedding, config, index, log));
    if (hook) hook(*schedule, reports.back());
  }
  return {std::move(*schedule), std::move(reports)};
}

}  // namespace edpinn::train
