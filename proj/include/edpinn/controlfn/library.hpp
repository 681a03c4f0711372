#pragma once

#include <string>
#include <vector>

#include "edpinn/controlfn/control_function.hpp"

namespace edpinn::controlfn {

struct LibraryEntry {
  std::string id;  // "s1".."s5", "w1".."w5"
  ControlFunction function;
  bool corrected = false;  // published coefficients failed the endpoint check
  std::string note;
};

/// Five slowly saturating joins on [0.5, 1) and five fast ones on [0.5, 0.6).
/// Polynomials are stored re-expanded about t = 0.5.
std::vector<LibraryEntry> control_library();

/// Looks up an entry by id and retargets it onto [t_p, t_end]; the weak
/// family keeps its 1/5 saturation fraction.
ControlFunction library_function(const std::string& id, double t_p, double t_end);

}  // namespace edpinn::controlfn
