#include "edpinn/pde/boundary.hpp"

namespace edpinn::pde {

std::vector<double> boundary_loss_terms(const PdeProblem& problem, const SampleBatch& batch,
                                        const network::Model& model, const network::InputEmbedding& embedding) {
  const int n = batch.boundary_count();
  std::vector<double> terms(static_cast<std::size_t>(n), 0.0);
  const bool with_derivative = problem.boundary == BoundaryKind::periodic_with_derivative;
  for (int dim = 0; dim < problem.spatial_dim(); ++dim) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (batch.boundary_dim[static_cast<std::size_t>(i)] == dim) idx.push_back(i);
    if (idx.empty()) continue;
    network::SpaceTimeBatch left, right;
    left.x.resize(problem.spatial_dim(), static_cast<Eigen::Index>(idx.size()));
    left.t.resize(static_cast<Eigen::Index>(idx.size()));
    right = left;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      left.x.col(static_cast<Eigen::Index>(k)) = batch.x_left.col(idx[k]);
      right.x.col(static_cast<Eigen::Index>(k)) = batch.x_right.col(idx[k]);
      left.t[static_cast<Eigen::Index>(k)] = right.t[static_cast<Eigen::Index>(k)] = batch.t_boundary[idx[k]];
    }
    network::BatchEvaluator ev(model, embedding, {with_derivative ? 1 : 0, 0}, dim);
    const Eigen::MatrixXd l = ev.forward(left);
    if (problem.boundary == BoundaryKind::dirichlet) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double r = l(0, static_cast<Eigen::Index>(k)) - batch.u_boundary[idx[k]];
        terms[static_cast<std::size_t>(idx[k])] = r * r;
      }
      continue;
    }
    const Eigen::MatrixXd r = ev.forward(right);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto c = static_cast<Eigen::Index>(k);
      const double du = l(0, c) - r(0, c);
      double term = du * du;
      if (with_derivative) {
        const double dx = l(1, c) - r(1, c);
        term += dx * dx;
      }
      terms[static_cast<std::size_t>(idx[k])] = term;
    }
  }
  return terms;
}

}  // namespace edpinn::pde
