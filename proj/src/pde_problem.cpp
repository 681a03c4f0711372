#include "edpinn/pde/problem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "edpinn/errors.hpp"
#include "edpinn/rng.hpp"

namespace edpinn::pde {

using std::numbers::pi;

network::InputEmbedding PdeProblem::default_embedding(int harmonics) const {
  if (boundary == BoundaryKind::dirichlet) return network::InputEmbedding::identity(spatial_dim());
  std::vector<double> periods;
  for (const auto& [lo, hi] : domain) periods.push_back(hi - lo);
  return network::InputEmbedding::fourier(std::move(periods), harmonics);
}

void PdeProblem::validate() const {
  if (domain.empty()) throw ConfigError("problem '" + name + "': empty spatial domain");
  for (const auto& [lo, hi] : domain)
    if (!(hi > lo)) throw ConfigError("problem '" + name + "': domain bounds must be increasing");
  if (!(t_end > 0.0)) throw ConfigError("problem '" + name + "': time horizon must be positive");
  if (!initial) throw ConfigError("problem '" + name + "': missing initial condition");
  if (boundary == BoundaryKind::dirichlet && !dirichlet)
    throw ConfigError("problem '" + name + "': dirichlet boundary needs B(x, t)");
}

PdeProblem allen_cahn() {
  PdeProblem p;
  p.id = ProblemId::allen_cahn;
  p.name = "allen_cahn";
  p.domain = {{-1.0, 1.0}};
  p.boundary = BoundaryKind::periodic_with_derivative;
  p.initial = [](std::span<const double> x) { return x[0] * x[0] * std::cos(pi * x[0]); };
  p.orders = {2, 1};
  p.hidden_layers = 4;
  p.width = 50;
  p.counts = {200, 800, 10000};
  return p;
}

PdeProblem convection(double beta) {
  PdeProblem p;
  p.id = ProblemId::convection;
  p.name = "convection";
  p.domain = {{0.0, 2.0 * pi}};
  p.beta = beta;
  p.boundary = BoundaryKind::periodic;
  p.initial = [](std::span<const double> x) { return std::sin(x[0]); };
  p.orders = {1, 1};
  p.hidden_layers = 4;
  p.width = 100;
  p.counts = {1200, 1200, 10000};
  return p;
}

PdeProblem kdv() {
  PdeProblem p;
  p.id = ProblemId::kdv;
  p.name = "kdv";
  p.domain = {{-1.0, 1.0}};
  p.boundary = BoundaryKind::periodic_with_derivative;
  p.initial = [](std::span<const double> x) { return std::cos(pi * x[0]); };
  p.orders = {3, 1};
  p.hidden_layers = 3;
  p.width = 30;
  p.counts = {400, 800, 8000};
  return p;
}

PdeProblem problem_by_name(const std::string& name, double beta) {
  if (name == "allen_cahn") return allen_cahn();
  if (name == "convection") return convection(beta);
  if (name == "kdv") return kdv();
  throw ConfigError("problem.id: unknown problem '" + name + "' (expected allen_cahn, convection or kdv)");
}

std::string to_string(ProblemId id) {
  switch (id) {
    case ProblemId::allen_cahn:
      return "allen_cahn";
    case ProblemId::convection:
      return "convection";
    case ProblemId::kdv:
      return "kdv";
  }
  return "unknown";
}

ResidualLinearization linearize_residual(const PdeProblem& problem, const FieldDerivs<double>& d, ad::Tape& tape) {
  tape.clear();
  FieldDerivs<ad::Var> v{tape.variable(d.u),    tape.variable(d.u_t),  tape.variable(d.u_tt),
                         tape.variable(d.u_x),  tape.variable(d.u_xx), tape.variable(d.u_xxx)};
  const ad::Var r = problem.residual(v);
  const std::array<ad::Var, 6> wrt{v.u, v.u_t, v.u_tt, v.u_x, v.u_xx, v.u_xxx};
  const auto g = tape.gradient(r, wrt);
  return {r.value(), {g[0], g[1], g[2], g[3], g[4], g[5]}};
}

namespace {

// Stratified samples in [0, 1): one per stratum, in shuffled order.
std::vector<double> latin_column(int n, CounterRng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_uniform() * (i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(std::min(j, i))]);
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = (perm[static_cast<std::size_t>(i)] + rng.next_uniform()) / n;
  return out;
}

}  // namespace

SampleBatch sample(const PdeProblem& problem, SampleCounts counts, double t_lo, double t_hi,
                   SamplingStrategy strategy, std::uint64_t seed) {
  if (!(t_lo < t_hi) || t_lo < 0.0) {
    std::ostringstream msg;
    msg << "invalid sampling window (" << t_lo << ", " << t_hi << "]";
    throw DomainError(msg.str());
  }
  if (counts.initial < 0 || counts.boundary < 0 || counts.residual < 0)
    throw ConfigError("sample counts must be non-negative");
  const int d = problem.spatial_dim();
  SampleBatch b;
  b.t_lo = t_lo;
  b.t_hi = t_hi;
  b.seed = seed;
  // Map u in [0, 1) onto the half-open window (t_lo, t_hi].
  auto window_time = [&](double u) { return t_hi - (t_hi - t_lo) * u; };
  auto coord = [&](int dim, double u) {
    const auto [lo, hi] = problem.domain[static_cast<std::size_t>(dim)];
    return lo + (hi - lo) * u;
  };

  const int n0 = t_lo == 0.0 ? counts.initial : 0;
  CounterRng init_rng(seed, 1);
  b.x_initial.resize(d, n0);
  b.u_initial.resize(n0);
  for (int i = 0; i < n0; ++i) {
    for (int k = 0; k < d; ++k) b.x_initial(k, i) = coord(k, init_rng.next_uniform());
    b.u_initial[i] = problem.initial(std::span<const double>(b.x_initial.col(i).data(), static_cast<std::size_t>(d)));
  }

  CounterRng bnd_rng(seed, 2);
  const int nb = counts.boundary;
  b.x_left.resize(d, nb);
  b.x_right.resize(d, nb);
  b.t_boundary.resize(nb);
  b.boundary_dim.resize(static_cast<std::size_t>(nb));
  b.u_boundary = Eigen::VectorXd::Zero(nb);
  for (int i = 0; i < nb; ++i) {
    const int dim = i % d;
    b.boundary_dim[static_cast<std::size_t>(i)] = dim;
    for (int k = 0; k < d; ++k) b.x_left(k, i) = b.x_right(k, i) = coord(k, bnd_rng.next_uniform());
    b.x_left(dim, i) = problem.domain[static_cast<std::size_t>(dim)].first;
    b.x_right(dim, i) = problem.domain[static_cast<std::size_t>(dim)].second;
    b.t_boundary[i] = window_time(bnd_rng.next_uniform());
    if (problem.boundary == BoundaryKind::dirichlet) {
      if (i % 2 == 1) b.x_left(dim, i) = b.x_right(dim, i);
      b.u_boundary[i] =
          problem.dirichlet(std::span<const double>(b.x_left.col(i).data(), static_cast<std::size_t>(d)), b.t_boundary[i]);
    }
  }

  CounterRng res_rng(seed, 3);
  const int nr = counts.residual;
  b.x_residual.resize(d, nr);
  b.t_residual.resize(nr);
  if (strategy == SamplingStrategy::uniform) {
    for (int i = 0; i < nr; ++i) {
      for (int k = 0; k < d; ++k) b.x_residual(k, i) = coord(k, res_rng.next_uniform());
      b.t_residual[i] = window_time(res_rng.next_uniform());
    }
  } else {
    for (int k = 0; k < d; ++k) {
      const auto col = latin_column(nr, res_rng);
      for (int i = 0; i < nr; ++i) b.x_residual(k, i) = coord(k, col[static_cast<std::size_t>(i)]);
    }
    const auto col = latin_column(nr, res_rng);
    for (int i = 0; i < nr; ++i) b.t_residual[i] = window_time(col[static_cast<std::size_t>(i)]);
  }
  return b;
}

}  // namespace edpinn::pde
