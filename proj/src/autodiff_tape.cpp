#include "edpinn/autodiff/tape.hpp"

namespace edpinn::ad {

Var Tape::variable(double value) {
  nodes_.push_back({kNone, kNone, 0.0, 0.0});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1), value);
}

Var Tape::push(double value, const Var& a, double da) {
  nodes_.push_back({a.index(), kNone, da, 0.0});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1), value);
}

Var Tape::push(double value, const Var& a, double da, const Var& b, double db) {
  // Constant operands have no node; their slot stays empty.
  const std::uint32_t lhs = a.is_constant() ? kNone : a.index();
  const std::uint32_t rhs = b.is_constant() ? kNone : b.index();
  nodes_.push_back({lhs, rhs, da, db});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1), value);
}

std::vector<double> Tape::adjoints(const Var& output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (output.is_constant()) return adj;
  if (output.tape() != this) throw Error("output recorded on a different tape");
  adj[output.index()] = 1.0;
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    const double a = adj[i];
    if (a == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.lhs != kNone) adj[n.lhs] += a * n.dlhs;
    if (n.rhs != kNone) adj[n.rhs] += a * n.drhs;
  }
  return adj;
}

std::vector<double> Tape::gradient(const Var& output, std::span<const Var> wrt) const {
  const std::vector<double> adj = adjoints(output);
  std::vector<double> g(wrt.size(), 0.0);
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    if (wrt[i].is_constant()) continue;
    if (wrt[i].tape() != this) throw Error("gradient requested for a variable on another tape");
    g[i] = adj[wrt[i].index()];
  }
  return g;
}

}  // namespace edpinn::ad
