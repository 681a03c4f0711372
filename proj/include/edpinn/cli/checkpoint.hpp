#pragma once

#include <cstdint>
#include <filesystem>

#include "edpinn/controlfn/schedule.hpp"
#include "json.hpp"

namespace edpinn::cli {

/// Base parameters, frozen levels and their controls, tagged with the hash of
/// the config that produced them. Doubles are stored in shortest round-trip
/// form, so reading reproduces every parameter bit for bit.
nlohmann::json schedule_to_json(const controlfn::IntervalSchedule& schedule);
controlfn::IntervalSchedule schedule_from_json(const nlohmann::json& j);

void write_checkpoint(const std::filesystem::path& path, const controlfn::IntervalSchedule& schedule,
                      std::uint64_t config_hash);
/// Throws IncompatibleCheckpointError when the stored hash differs from
/// expected_hash.
controlfn::IntervalSchedule read_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash);

}  // namespace edpinn::cli
