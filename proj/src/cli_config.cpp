#include "edpinn/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "edpinn/controlfn/library.hpp"
#include "edpinn/errors.hpp"

namespace edpinn::cli {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

namespace {

// Typed access to one config section; remembers which keys were read so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected a table");
  }

  bool has(const char* key) const { return j_.contains(key); }

  int integer(const char* key, int fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    const auto n = v.get<long long>();
    if (n < INT32_MIN || n > INT32_MAX) fail(key, "out of range");
    return static_cast<int>(n);
  }
  std::uint64_t unsigned64(const char* key, std::uint64_t fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
      fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  double real(const char* key, double fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }
  std::string text(const char* key, std::string fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> reals(const char* key) {
    take(key);
    const json& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  const json& raw(const char* key) {
    take(key);
    return j_.at(key);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string where = path_;
    if (!key.empty()) where += where.empty() ? key : "." + key;
    throw ConfigError((where.empty() ? std::string("config") : where) + ": " + what);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(it.key(), "unknown key");
  }

  std::string path() const { return path_; }

 private:
  bool take(const char* key) {
    used_.insert(key);
    return j_.contains(key);
  }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

const json& section_or_empty(const json& doc, const char* key) {
  static const json empty = json::object();
  return doc.contains(key) ? doc.at(key) : empty;
}

train::MethodSpec::Kind method_kind(const std::string& s, const Section& sec) {
  using K = train::MethodSpec::Kind;
  if (s == "conventional") return K::conventional;
  if (s == "sE" || s == "strong") return K::strong;
  if (s == "wE" || s == "weak") return K::weak;
  if (s == "aE" || s == "adaptive") return K::adaptive;
  if (s == "custom") return K::custom;
  sec.fail("kind", "unknown method '" + s + "' (expected conventional, sE, wE, aE or custom)");
}

std::string kind_name(train::MethodSpec::Kind k) {
  using K = train::MethodSpec::Kind;
  switch (k) {
    case K::conventional: return "conventional";
    case K::strong: return "sE";
    case K::weak: return "wE";
    case K::adaptive: return "aE";
    case K::custom: return "custom";
  }
  return "?";
}

}  // namespace

json read_config_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  Section top(doc, "");
  c.name = top.text("name", "experiment");
  c.seed = top.unsigned64("seed", 0);
  const std::string output = top.text("output", "runs/" + c.name);
  c.output = std::filesystem::path(output).is_absolute() ? std::filesystem::path(output) : base_dir / output;

  // Problem.
  {
    if (!doc.contains("problem")) throw ConfigError("problem: missing section");
    Section s(doc.at("problem"), "problem");
    const std::string id = s.text("id", "");
    if (id.empty()) s.fail("id", "missing");
    if (id == "convection" && !s.has("beta")) s.fail("beta", "required for convection");
    c.problem = pde::problem_by_name(id, s.real("beta", 0.0));
    if (id != "convection" && s.has("beta")) s.fail("beta", "only applies to convection");
    c.problem.t_end = s.real("t_end", c.problem.t_end);
    if (s.has("domain")) {
      const auto d = s.reals("domain");
      if (d.size() != 2 || !(d[1] > d[0])) s.fail("domain", "expected [lo, hi] with lo < hi");
      c.problem.domain = {{d[0], d[1]}};
    }
    s.finish();
  }

  // Network.
  {
    Section s(section_or_empty(doc, "network"), "network");
    c.problem.hidden_layers = s.integer("hidden_layers", c.problem.hidden_layers);
    c.problem.width = s.integer("width", c.problem.width);
    c.embedding = s.text("embedding", "default");
    c.harmonics = s.integer("harmonics", 1);
    if (c.problem.hidden_layers < 1) s.fail("hidden_layers", "must be >= 1");
    if (c.problem.width < 1) s.fail("width", "must be >= 1");
    if (c.embedding != "default" && c.embedding != "fourier" && c.embedding != "identity")
      s.fail("embedding", "expected default, fourier or identity");
    if (c.harmonics < 1) s.fail("harmonics", "must be >= 1");
    s.finish();
  }
  try {
    c.problem.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }

  // Intervals.
  {
    Section s(section_or_empty(doc, "intervals"), "intervals");
    if (s.has("boundaries") && s.has("count")) s.fail("", "give either boundaries or count, not both");
    if (s.has("boundaries")) {
      c.boundaries = s.reals("boundaries");
      if (c.boundaries.size() < 2 || c.boundaries.front() != 0.0)
        s.fail("boundaries", "must start at 0 and have at least two entries");
      for (std::size_t i = 1; i < c.boundaries.size(); ++i)
        if (!(c.boundaries[i] > c.boundaries[i - 1])) s.fail("boundaries", "must be strictly increasing");
      if (c.boundaries.back() > c.problem.t_end) s.fail("boundaries", "last boundary exceeds problem.t_end");
    } else {
      const int n = s.integer("count", 2);
      if (n < 1) s.fail("count", "must be >= 1");
      for (int i = 0; i <= n; ++i) c.boundaries.push_back(c.problem.t_end * i / n);
    }
    s.finish();
  }

  // Method.
  {
    Section s(section_or_empty(doc, "method"), "method");
    const std::string kind = s.text("kind", c.boundaries.size() == 2 ? "conventional" : "sE");
    c.method.kind = method_kind(kind, s);
    using K = train::MethodSpec::Kind;
    c.method.weak_m = s.integer("weak_m", 5);
    c.initial_fraction = s.real("initial_fraction", 0.5);
    c.method.custom_id = s.text("control", "");
    c.method.smoothness_order = s.integer("smoothness", 0);
    if (c.method.kind == K::weak && c.method.weak_m < 1) s.fail("weak_m", "wE requires M >= 1");
    if (!(c.initial_fraction > 0.0 && c.initial_fraction < 1.0)) s.fail("initial_fraction", "must lie in (0, 1)");
    if (c.method.smoothness_order < 0 || c.method.smoothness_order > 2) s.fail("smoothness", "expected 0, 1 or 2");
    if (c.method.kind == K::custom) {
      if (c.method.custom_id.empty()) s.fail("control", "custom method needs a control function id (s1..s5, w1..w5)");
      try {
        (void)controlfn::library_function(c.method.custom_id, 0.5, 1.0);
      } catch (const Error& e) {
        s.fail("control", e.what());
      }
      if (c.problem.has_utt() || c.method.smoothness_order == 2)
        s.fail("control", "library control functions are C1; this residual needs a C2 join");
    } else if (!c.method.custom_id.empty()) {
      s.fail("control", "only used with kind = custom");
    }
    if (c.method.kind == K::conventional && c.boundaries.size() > 2)
      s.fail("kind", "conventional trains a single interval; set intervals to one interval or pick an E-DNN method");
    c.method.initial_logit = std::log(c.initial_fraction / (1.0 - c.initial_fraction));
    s.finish();
  }

  // Training.
  {
    Section s(section_or_empty(doc, "train"), "train");
    train::TrainConfig& t = c.train;
    t.seed = c.seed;
    t.adam_epochs = s.integer("adam_epochs", t.adam_epochs);
    t.adam_lr = s.real("adam_lr", t.adam_lr);
    t.lbfgs_memory = s.integer("lbfgs_memory", t.lbfgs_memory);
    t.max_iterations = s.integer("max_iterations", t.max_iterations);
    t.wolfe_c1 = s.real("wolfe_c1", t.wolfe_c1);
    t.wolfe_c2 = s.real("wolfe_c2", t.wolfe_c2);
    t.gradient_tol = s.real("gradient_tol", t.gradient_tol);
    t.relative_tol = s.real("relative_tol", t.relative_tol);
    t.weights.w_s = s.real("w_s", t.weights.w_s);
    t.weights.w_r = s.real("w_r", t.weights.w_r);
    t.divergence_factor = s.real("divergence_factor", t.divergence_factor);
    t.chunk = s.integer("chunk", static_cast<int>(t.chunk));
    t.adam_batch = s.integer("adam_batch", t.adam_batch);
    const std::string sampling = s.text("sampling", "uniform");
    if (sampling == "uniform")
      t.strategy = pde::SamplingStrategy::uniform;
    else if (sampling == "latin_hypercube")
      t.strategy = pde::SamplingStrategy::latin_hypercube;
    else
      s.fail("sampling", "expected uniform or latin_hypercube");
    t.counts = c.problem.counts;
    t.counts.initial = s.integer("initial_points", t.counts.initial);
    t.counts.boundary = s.integer("boundary_points", t.counts.boundary);
    t.counts.residual = s.integer("residual_points", t.counts.residual);
    if (t.counts.initial < 0) s.fail("initial_points", "must be >= 0");
    if (t.counts.boundary < 0) s.fail("boundary_points", "must be >= 0");
    if (t.counts.residual < 0) s.fail("residual_points", "must be >= 0");
    if (t.counts.initial == 0) s.fail("initial_points", "the first interval needs initial-condition points");
    s.finish();
    try {
      t.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(e.what());
    }
  }

  // Evaluation.
  {
    Section s(section_or_empty(doc, "evaluation"), "evaluation");
    c.eval_t_end = s.real("t_end", c.problem.t_end);
    c.reference_modes = s.integer("modes", 0);
    c.reference_dt = s.real("dt", 1e-4);
    c.probe_points = s.integer("probe_points", 10000);
    if (c.eval_t_end < c.boundaries.back() || c.eval_t_end > c.problem.t_end)
      s.fail("t_end", "must lie between the last interval boundary and problem.t_end");
    if (c.reference_modes != 0 && (c.reference_modes < 128 || (c.reference_modes & (c.reference_modes - 1))))
      s.fail("modes", "must be 0 (default) or a power of two >= 128");
    if (!(c.reference_dt > 0.0)) s.fail("dt", "must be positive");
    if (c.probe_points < 1) s.fail("probe_points", "must be >= 1");
    s.finish();
  }

  // The sweep section is read by the sweep verb.
  if (doc.contains("sweep")) (void)top.raw("sweep");
  for (const char* k : {"problem", "network", "intervals", "method", "train", "evaluation"})
    if (doc.contains(k)) (void)top.raw(k);
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_config_text(path), path.parent_path());
}

network::InputEmbedding ExperimentConfig::input_embedding() const {
  if (embedding == "identity") return network::InputEmbedding::identity(problem.spatial_dim());
  if (embedding == "fourier") {
    std::vector<double> periods;
    for (const auto& [lo, hi] : problem.domain) periods.push_back(hi - lo);
    return network::InputEmbedding::fourier(std::move(periods), harmonics);
  }
  return problem.default_embedding(harmonics);
}

json ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["output"] = output.string();
  j["problem"] = {{"id", pde::to_string(problem.id)}, {"t_end", problem.t_end}};
  if (problem.id == pde::ProblemId::convection) j["problem"]["beta"] = problem.beta;
  j["problem"]["domain"] = {problem.domain.front().first, problem.domain.front().second};
  j["network"] = {{"hidden_layers", problem.hidden_layers},
                  {"width", problem.width},
                  {"embedding", embedding},
                  {"harmonics", harmonics}};
  j["intervals"] = {{"boundaries", boundaries}};
  j["method"] = {{"kind", kind_name(method.kind)}, {"smoothness", method.smoothness_order}};
  if (method.kind == train::MethodSpec::Kind::weak) j["method"]["weak_m"] = method.weak_m;
  if (method.kind == train::MethodSpec::Kind::adaptive) j["method"]["initial_fraction"] = initial_fraction;
  if (method.kind == train::MethodSpec::Kind::custom) j["method"]["control"] = method.custom_id;
  j["train"] = {{"adam_epochs", train.adam_epochs},
                {"adam_lr", train.adam_lr},
                {"lbfgs_memory", train.lbfgs_memory},
                {"max_iterations", train.max_iterations},
                {"wolfe_c1", train.wolfe_c1},
                {"wolfe_c2", train.wolfe_c2},
                {"gradient_tol", train.gradient_tol},
                {"relative_tol", train.relative_tol},
                {"w_s", train.weights.w_s},
                {"w_r", train.weights.w_r},
                {"divergence_factor", train.divergence_factor},
                {"chunk", train.chunk},
                {"adam_batch", train.adam_batch},
                {"sampling", train.strategy == pde::SamplingStrategy::uniform ? "uniform" : "latin_hypercube"},
                {"initial_points", train.counts.initial},
                {"boundary_points", train.counts.boundary},
                {"residual_points", train.counts.residual}};
  j["evaluation"] = {{"t_end", eval_t_end},
                     {"modes", reference_modes},
                     {"dt", reference_dt},
                     {"probe_points", probe_points}};
  return j;
}

std::uint64_t ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("name");
  j.erase("output");
  j.erase("evaluation");
  // chunk only changes summation order inside a pass, not the model.
  j["train"].erase("chunk");
  return fnv1a(j.dump());
}

void set_dotted(json& doc, const std::string& path, const json& value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("sweep axis '" + path + "' is not a dotted key path");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    if (!node->is_object()) throw ConfigError("sweep axis '" + path + "' passes through a non-table value");
    start = dot + 1;
  }
}

}  // namespace edpinn::cli
