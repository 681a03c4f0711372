#include <cmath>
#include <vector>

#include "doctest.h"
#include "edpinn/controlfn/library.hpp"
#include "edpinn/controlfn/schedule.hpp"
#include "edpinn/errors.hpp"

using namespace edpinn;
using namespace edpinn::controlfn;

namespace {

std::vector<ControlFunction> builtins() {
  std::vector<ControlFunction> fs{ControlFunction::strong(0.5, 1.0),     ControlFunction::strong(0.5, 1.0, 2),
                                  ControlFunction::weak(0.5, 1.0, 5),    ControlFunction::weak(0.5, 1.0, 3, 2),
                                  ControlFunction::adaptive(0.5, 1.0),   ControlFunction::adaptive(0.5, 1.0, 1.3, 2),
                                  ControlFunction::strong(1.0, 2.0)};
  for (const auto& e : control_library()) fs.push_back(e.function);
  return fs;
}

network::ParamSet filled(double v) {
  const std::vector<int> sizes{3, 4, 1};
  network::ParamSet p = network::ParamSet::zeros(sizes);
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    p.layer(k).weight.setConstant(v);
    p.layer(k).bias.setConstant(v);
  }
  return p;
}

}  // namespace

TEST_CASE("strong and weak controls at their knots") {
  const auto s = ControlFunction::strong(0.5, 1.0);
  CHECK(s.eval(0.5).value == 0.0);
  CHECK(s.eval(1.0).value == 1.0);
  CHECK(s.eval(0.75).value == 0.5);
  CHECK(s.eval(0.25).value == 0.0);
  const auto w = ControlFunction::weak(0.5, 1.0, 5);
  CHECK(w.t_f() == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(w.eval(0.6).value == 1.0);
  CHECK(w.eval(0.8).value == 1.0);
  CHECK_THROWS_AS(ControlFunction::strong(0.5, 0.5), DomainError);
  CHECK_THROWS_AS(ControlFunction::weak(0.5, 1.0, 0), DomainError);
}

TEST_CASE("every built-in passes the invariant suite") {
  for (const ControlFunction& f : builtins()) {
    CAPTURE(f.name());
    const InvariantReport r = f.check_invariants(10000, 1e-12);
    CHECK(r.endpoint_error <= 1e-12);
    CHECK(r.join_error <= 1e-12);
    CHECK(std::abs(f.eval(f.t_p()).value) <= 1e-12);
    CHECK(std::abs(f.eval(f.t_f(), Side::left).value - 1.0) <= 1e-12);
    CHECK(std::abs(f.eval(f.t_p()).d1) <= 1e-12);
    CHECK(std::abs(f.eval(f.t_f(), Side::left).d1) <= 1e-12);
    if (f.monotone()) CHECK(r.min_slope >= -1e-15);
    if (f.smoothness_order() >= 2) {
      CHECK(std::abs(f.eval(f.t_p()).d2) <= 1e-12);
      CHECK(std::abs(f.eval(f.t_f(), Side::left).d2) <= 1e-12);
    }
  }
}

TEST_CASE("hermite pieces are exact at the endpoints") {
  for (const ControlFunction& f : {ControlFunction::strong(0.5, 1.0), ControlFunction::weak(0.5, 1.0, 5),
                                   ControlFunction::strong(0.5, 1.0, 2)}) {
    CHECK(f.eval(f.t_p()).value == 0.0);
    CHECK(f.eval(f.t_f(), Side::left).value == 1.0);
  }
}

TEST_CASE("control library entries") {
  const auto lib = control_library();
  CHECK(lib.size() == 10);
  const auto s2 = library_function("s2", 0.5, 1.0);
  CHECK(std::abs(s2.eval(0.5).value) <= 1e-12);
  CHECK(std::abs(s2.eval(1.0, Side::left).value - 1.0) <= 1e-12);
  const auto s4 = library_function("s4", 0.5, 1.0);
  CHECK(std::abs(s4.eval(0.5).value) <= 1e-12);

  // The uncorrected w2 polynomial misses both endpoints; the shipped one is flagged.
  auto printed = [](double t) { return -2000 * t * t * t + 3000 * t * t - 1800 * t + 325; };
  CHECK(printed(0.5) == doctest::Approx(-75.0));
  bool found = false;
  for (const auto& e : lib) {
    if (e.id != "w2") continue;
    found = true;
    CHECK(e.corrected);
    CHECK(!e.note.empty());
    CHECK(std::abs(e.function.eval(0.5).value) <= 1e-12);
    CHECK(std::abs(e.function.eval(0.6, Side::left).value - 1.0) <= 1e-12);
  }
  CHECK(found);
  for (const auto& e : lib)
    if (e.id != "w2") CHECK(!e.corrected);
  CHECK_THROWS_AS(library_function("s9", 0.5, 1.0), DomainError);
}

TEST_CASE("library functions retarget onto other windows") {
  const auto f = library_function("w1", 1.0, 2.0);
  CHECK(f.t_f() == doctest::Approx(1.2));
  CHECK(f.check_invariants().passes());
  const auto g = library_function("s3", 0.0, 0.25);
  CHECK(g.t_f() == 0.25);
  CHECK(g.check_invariants().passes());
}

TEST_CASE("adaptive T_f sensitivities") {
  // T_p = 0.5, T = 1, T_f = 0.75 at logit 0.
  auto f = ControlFunction::adaptive(0.5, 1.0);
  CHECK(f.t_f() == 0.75);
  const TfSensitivity none = f.eval_dtf(0.4);
  CHECK((none.value == 0.0 && none.d1 == 0.0 && none.d2 == 0.0));
  const TfSensitivity sat = f.eval_dtf(0.75);
  CHECK((sat.value == 0.0 && sat.d1 == 0.0));
  const auto at_tf = f.eval(0.75);
  CHECK((at_tf.value == 1.0 && at_tf.d1 == 0.0 && at_tf.d2 == 0.0));

  const double t = 0.625, h = 1e-6;
  auto with_tf = [&](double tf) {
    auto g = ControlFunction::adaptive(0.5, 1.0, std::log((tf - 0.5) / (1.0 - tf)));
    return g.eval(t);
  };
  const TfSensitivity d = f.eval_dtf(t);
  const auto up = with_tf(0.75 + h), dn = with_tf(0.75 - h);
  CHECK(std::abs(d.value - (up.value - dn.value) / (2 * h)) <= 1e-8);
  CHECK(std::abs(d.d1 - (up.d1 - dn.d1) / (2 * h)) <= 1e-6 * std::max(1.0, std::abs(d.d1)));

  // Any logit keeps T_f strictly inside (T_p, T).
  for (double z : {-30.0, -2.0, 0.0, 2.0, 30.0}) {
    f.set_tf_logit(z);
    CHECK(f.t_f() > 0.5);
    CHECK(f.t_f() <= 1.0);
  }
  CHECK_THROWS_AS(ControlFunction::strong(0.5, 1.0).eval_dtf(0.6), DomainError);
}

TEST_CASE("stacking") {
  IntervalSchedule sched(filled(1.0), 1.0);
  ActiveLevel a1 = sched.open_level(ControlFunction::strong(1.0, 2.0));
  a1.delta = filled(0.5);

  SUBCASE("before the node only the base counts") {
    const EffectiveLayer e = stack_eval(sched, &a1, 0, 0.25);
    CHECK((e.weight.array() == 1.0).all());
    CHECK((e.weight_dt.array() == 0.0).all());
  }
  SUBCASE("saturated level is fully applied") {
    const EffectiveLayer e = stack_eval(sched, &a1, 1, 2.0);
    CHECK((e.weight.array() == 1.5).all());
    CHECK((e.bias.array() == 1.5).all());
  }
  SUBCASE("two levels, midpoint of the second") {
    IntervalSchedule two = sched;
    two.freeze(a1);
    ActiveLevel a2 = two.open_level(ControlFunction::strong(2.0, 3.0));
    a2.delta = filled(0.25);
    const EffectiveLayer e = stack_eval(two, &a2, 0, 2.5);
    CHECK((e.weight.array() == 1.0 + 0.5 + 0.5 * 0.25).all());
    // Inside the first level the second contributes nothing at all.
    const EffectiveLayer e1 = stack_eval(two, &a2, 0, 1.5);
    const EffectiveLayer e1_alone = stack_eval(sched, &a1, 0, 1.5);
    CHECK((e1.weight.array() == e1_alone.weight.array()).all());
    CHECK((e1.weight_dt.array() == e1_alone.weight_dt.array()).all());
    CHECK_THROWS_AS(stack_eval(two, &a2, 0, 3.5), DomainError);
    CHECK_NOTHROW(stack_eval(two, &a2, 0, 3.5, true));
  }
  CHECK(a1.parameter_count() == filled(0.0).parameter_count());
  CHECK(sched.open_level(ControlFunction::adaptive(1.0, 2.0)).parameter_count() ==
        filled(0.0).parameter_count() + 1);
  CHECK_THROWS(sched.open_level(ControlFunction::strong(1.5, 2.0)));
}
