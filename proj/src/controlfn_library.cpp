#include "edpinn/controlfn/library.hpp"

#include <numbers>

namespace edpinn::controlfn {

namespace {

constexpr double kPi = std::numbers::pi;

AnalyticPiece make_piece(double t_p, double t_f, std::vector<double> poly_in_t,
                         std::vector<std::vector<double>> exp_polys_in_t,
                         std::vector<std::pair<double, double>> cos_sq) {
  AnalyticPiece p;
  p.native_t_p = t_p;
  p.native_t_f = t_f;
  p.poly = AnalyticPiece::shift_polynomial(poly_in_t, t_p);
  for (const auto& e : exp_polys_in_t) p.exp_polys.push_back(AnalyticPiece::shift_polynomial(e, t_p));
  p.cos_squared = std::move(cos_sq);
  return p;
}

LibraryEntry entry(std::string id, double t_f, std::vector<double> poly, std::vector<std::vector<double>> exps,
                   std::vector<std::pair<double, double>> cos_sq, bool corrected = false, std::string note = {}) {
  AnalyticPiece piece = make_piece(0.5, t_f, std::move(poly), std::move(exps), std::move(cos_sq));
  ControlFunction f = ControlFunction::custom(id, 0.5, 1.0, t_f, std::move(piece));
  return {std::move(id), std::move(f), corrected, std::move(note)};
}

}  // namespace

std::vector<LibraryEntry> control_library() {
  std::vector<LibraryEntry> lib;
  // Coefficients in ascending powers of t.
  lib.push_back(entry("s1", 1.0, {}, {}, {{1.0, kPi}}));
  lib.push_back(entry("s2", 1.0, {5.0, -24.0, 36.0, -16.0}, {}, {}));
  lib.push_back(entry("s3", 1.0, {9.0, -48.0, 88.0, -64.0, 16.0}, {}, {}));
  lib.push_back(entry("s4", 1.0, {2.0, -18.0, 32.0, -16.0}, {{2.0, -6.0, 4.0}}, {}));
  lib.push_back(entry("s5", 1.0, {-1.0}, {{4.0, -24.0, 52.0, -48.0, 16.0}}, {{1.0, kPi}}));

  lib.push_back(entry("w1", 0.6, {}, {}, {{1.0, 5.0 * kPi}}));
  // Published t^2 coefficient 3000 gives F(0.5) = -75; the cubic Hermite
  // join on [0.5, 0.6] has 3300.
  lib.push_back(entry("w2", 0.6, {325.0, -1800.0, 3300.0, -2000.0}, {}, {}, true,
                      "t^2 coefficient 3000 replaced by 3300 so that F(0.5)=0 and F(0.6)=1"));
  lib.push_back(entry("w3", 0.6, {1225.0, -8400.0, 21400.0, -24000.0, 10000.0}, {}, {}));
  lib.push_back(entry("w4", 0.6, {294.0, -1690.0, 3200.0, -2000.0}, {{30.0, -110.0, 100.0}}, {}));
  lib.push_back(entry("w5", 0.6, {-1.0}, {{900.0, -6600.0, 18100.0, -22000.0, 10000.0}}, {{1.0, 5.0 * kPi}}));
  return lib;
}

ControlFunction library_function(const std::string& id, double t_p, double t_end) {
  for (auto& e : control_library())
    if (e.id == id) {
      if (t_p == 0.5 && t_end == 1.0) return e.function;
      return e.function.retargeted(t_p, t_end);
    }
  throw DomainError("unknown control function id '" + id + "'");
}

}  // namespace edpinn::controlfn
