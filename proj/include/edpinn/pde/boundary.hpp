#pragma once

#include <vector>

#include "edpinn/network/model.hpp"
#include "edpinn/pde/problem.hpp"

namespace edpinn::pde {

/// One squared mismatch per boundary point: (u - B)^2 for dirichlet,
/// (u_L - u_R)^2 for periodic, plus (u_x,L - u_x,R)^2 for
/// periodic_with_derivative.
std::vector<double> boundary_loss_terms(const PdeProblem& problem, const SampleBatch& batch,
                                        const network::Model& model, const network::InputEmbedding& embedding);

}  // namespace edpinn::pde
