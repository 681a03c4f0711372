#include "edpinn/cli/checkpoint.hpp"

#include <fstream>

#include "edpinn/cli/config.hpp"
#include "edpinn/controlfn/library.hpp"
#include "edpinn/errors.hpp"

namespace edpinn::cli {

using nlohmann::json;

namespace {

json params_to_json(const network::ParamSet& p) {
  json layers = json::array();
  for (const network::Layer& l : p.layers()) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(l.weight.cols()));
      for (Eigen::Index k = 0; k < l.weight.cols(); ++k) row[static_cast<std::size_t>(k)] = l.weight(i, k);
      rows.push_back(row);
    }
    layers.push_back({{"weight", rows}, {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return layers;
}

network::ParamSet params_from_json(const json& j) {
  std::vector<network::Layer> layers;
  for (const json& lj : j) {
    const auto rows = lj.at("weight").get<std::vector<std::vector<double>>>();
    const auto bias = lj.at("bias").get<std::vector<double>>();
    network::Layer l;
    const auto cols = rows.empty() ? 0 : rows.front().size();
    l.weight.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) throw IncompatibleCheckpointError("ragged weight matrix in checkpoint");
      for (std::size_t k = 0; k < cols; ++k)
        l.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    l.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    layers.push_back(std::move(l));
  }
  network::ParamSet p(std::move(layers));
  try {
    p.validate();
  } catch (const ShapeError& e) {
    throw IncompatibleCheckpointError(std::string("checkpoint parameters: ") + e.what());
  }
  return p;
}

json control_to_json(const controlfn::ControlFunction& f) {
  json j = {{"t_p", f.t_p()}, {"t_end", f.t_end()}, {"smoothness", f.smoothness_order()}};
  switch (f.kind()) {
    case controlfn::ControlKind::strong:
      j["kind"] = "strong";
      break;
    case controlfn::ControlKind::weak:
      j["kind"] = "weak";
      j["m"] = f.weak_divisor();
      break;
    case controlfn::ControlKind::adaptive:
      j["kind"] = "adaptive";
      j["logit"] = f.tf_logit();
      break;
    case controlfn::ControlKind::custom:
      j["kind"] = "custom";
      j["id"] = f.name();
      break;
  }
  return j;
}

controlfn::ControlFunction control_from_json(const json& j) {
  using controlfn::ControlFunction;
  const std::string kind = j.at("kind").get<std::string>();
  const double t_p = j.at("t_p").get<double>(), t_end = j.at("t_end").get<double>();
  const int order = j.at("smoothness").get<int>();
  if (kind == "strong") return ControlFunction::strong(t_p, t_end, order);
  if (kind == "weak") return ControlFunction::weak(t_p, t_end, j.at("m").get<int>(), order);
  if (kind == "adaptive") return ControlFunction::adaptive(t_p, t_end, j.at("logit").get<double>(), order);
  if (kind == "custom") return controlfn::library_function(j.at("id").get<std::string>(), t_p, t_end);
  throw IncompatibleCheckpointError("unknown control kind '" + kind + "' in checkpoint");
}

}  // namespace

json schedule_to_json(const controlfn::IntervalSchedule& s) {
  json levels = json::array();
  for (const controlfn::FrozenLevel& l : s.levels())
    levels.push_back({{"t_begin", l.t_begin}, {"t_end", l.t_end}, {"control", control_to_json(l.control)},
                      {"delta", params_to_json(l.delta)}});
  return {{"sizes", s.base().sizes()}, {"base_end", s.base_end()}, {"base", params_to_json(s.base())},
          {"levels", levels}};
}

controlfn::IntervalSchedule schedule_from_json(const json& j) {
  try {
    controlfn::IntervalSchedule s(params_from_json(j.at("base")), j.at("base_end").get<double>());
    for (const json& lj : j.at("levels")) {
      controlfn::ActiveLevel a = s.open_level(control_from_json(lj.at("control")));
      a.delta = params_from_json(lj.at("delta"));
      s.freeze(std::move(a));
    }
    return s;
  } catch (const json::exception& e) {
    throw IncompatibleCheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw IncompatibleCheckpointError(std::string("checkpoint shapes: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const controlfn::IntervalSchedule& schedule,
                      std::uint64_t config_hash) {
  json j = {{"format", "edpinn-checkpoint-v1"}, {"config_hash", hex64(config_hash)},
            {"schedule", schedule_to_json(schedule)}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write checkpoint " + tmp);
    out << j.dump() << '\n';
    if (!out) throw Error("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

controlfn::IntervalSchedule read_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash) {
  std::ifstream in(path);
  if (!in) throw IncompatibleCheckpointError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IncompatibleCheckpointError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "edpinn-checkpoint-v1")
    throw IncompatibleCheckpointError(path.string() + ": not an edpinn checkpoint");
  const std::string stored = j.value("config_hash", "");
  if (stored != hex64(expected_hash))
    throw IncompatibleCheckpointError(path.string() + ": written by a different configuration (hash " + stored +
                                      ", expected " + hex64(expected_hash) + ")");
  return schedule_from_json(j.at("schedule"));
}

}  // namespace edpinn::cli
