#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "edpinn/errors.hpp"
#include "edpinn/oracle/oracle.hpp"

using namespace edpinn;
using namespace edpinn::oracle;

TEST_CASE("exact convection matches the travelling wave") {
  CHECK(exact_convection(1.0, 0.0, 30.0) == doctest::Approx(std::sin(1.0)));
  CHECK(exact_convection(0.3, 0.5, 40.0) == doctest::Approx(std::sin(0.3 - 20.0)));
  const auto f = exact_convection_field(30.0);
  CHECK(f.u.rows() == 256);
  CHECK(f.u.cols() == 101);
  CHECK(f.x[1] == doctest::Approx(2.0 * std::numbers::pi / 256));
  CHECK(f.t.back() == 1.0);
}

TEST_CASE("relative L2 error") {
  const std::vector<double> r{3.0, 4.0}, p{3.0, 5.0};
  CHECK(l2_relative_error(p, r) == doctest::Approx(0.2));
  CHECK(l2_relative_error(r, r) == 0.0);
  const std::vector<double> z{0.0, 0.0};
  CHECK_THROWS_AS(l2_relative_error(p, z), DomainError);
  const std::vector<double> short_ref{1.0};
  CHECK_THROWS_AS(l2_relative_error(p, short_ref), ShapeError);
}

TEST_CASE("KdV conserves mass and self-converges") {
  const std::vector<double> t{0.0, 0.5, 1.0};
  const auto f = spectral_solve(pde::ProblemId::kdv, 256, 1e-4, t);
  const double m0 = f.u.col(0).sum(), m1 = f.u.col(2).sum();
  CHECK(std::abs(m1 - m0) <= 1e-10 * std::max(1.0, std::abs(m0)));
  CHECK(f.u(0, 0) == doctest::Approx(std::cos(-std::numbers::pi)));
  CHECK(self_convergence(pde::ProblemId::kdv, 512, 1e-4) < 1e-6);
}

TEST_CASE("Allen-Cahn reference converges at the default resolution") {
  CHECK(self_convergence(pde::ProblemId::allen_cahn, 1024, 1e-4) < 1e-6);
}

TEST_CASE("spectral solver argument checks") {
  const std::vector<double> t{0.0, 0.00015};
  CHECK_THROWS_AS(spectral_solve(pde::ProblemId::kdv, 256, 1e-4, t), OracleError);
  const std::vector<double> ok{0.0, 1e-3};
  CHECK_THROWS_AS(spectral_solve(pde::ProblemId::kdv, 100, 1e-4, ok), OracleError);
  CHECK_THROWS_AS(spectral_solve(pde::ProblemId::convection, 256, 1e-4, ok), OracleError);
  // An explicit-looking step far too large for the cubic blows up.
  const std::vector<double> big{0.0, 4.0};
  CHECK_THROWS_AS(spectral_solve(pde::ProblemId::allen_cahn, 256, 1.0, big), OracleError);
}

TEST_CASE("reference cache round trip is exact") {
  const auto dir = std::filesystem::temp_directory_path() / "edpinn_oracle_test";
  std::filesystem::remove_all(dir);
  ReferenceField f = exact_convection_field(10.0, 16, 5, 1.0);
  f.modes = 16;
  f.dt = 0.25;
  f.self_convergence = 1.5e-9;
  ReferenceCache cache(dir);
  const auto path = cache.path_for("convection", 16, 0.25);
  ReferenceCache::write(f, path);
  const auto g = ReferenceCache::read(path);
  CHECK(g.problem == f.problem);
  CHECK(g.provenance == "exact");
  CHECK(g.x == f.x);
  CHECK(g.t == f.t);
  CHECK((g.u.array() == f.u.array()).all());
  CHECK(g.self_convergence == f.self_convergence);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  CHECK_THROWS_AS(ReferenceCache::read(path), OracleError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("error curve per time slice") {
  ReferenceField f = exact_convection_field(1.0, 8, 3, 1.0);
  Eigen::MatrixXd p = f.u;
  p.col(2) *= 1.1;
  const auto c = error_curve(p, f);
  CHECK(c.error[0] == 0.0);
  CHECK(c.error[2] == doctest::Approx(0.1));
  const auto pts = f.points(0.4, 1.0);
  CHECK(pts.size() == 16);
  CHECK(f.values(0.4, 1.0)[8] == f.u(0, 2));
}
