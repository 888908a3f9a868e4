#pragma once

#include "strainwars/contact_process.hpp"
#include "strainwars/estimators.hpp"
#include "strainwars/meanfield.hpp"
#include "strainwars/topology.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace strainwars {

/// Shortest decimal form of a double that reads back to the same value.
std::string format_double(double value);

nlohmann::ordered_json to_json(const Topology& topology);
nlohmann::ordered_json to_json(const SimParams& params, const Topology& topology);
nlohmann::ordered_json to_json(const EstimateCI& ci);
nlohmann::ordered_json to_json(const CriticalEstimate& est);
nlohmann::ordered_json to_json(const RegimeVerdict& verdict);
nlohmann::ordered_json to_json(const meanfield::StrainParams& s);

/// Summary and metadata of one run (the configuration itself goes to
/// final_config_csv).
nlohmann::ordered_json to_json(const SimResult& result, const Topology& topology);

/// "t,u0,u1,u2" rows preceded by a "# {...}" JSON header line with the
/// parameters.
std::string trajectory_csv(const meanfield::Trajectory& traj, const nlohmann::ordered_json& header);

/// "time,count1,count2,boundary_contact[,obs...]" rows.
std::string samples_csv(const SimResult& result, const Topology& topology, const SimParams& params);

/// "site,state" rows.
std::string final_config_csv(const Configuration& config, const Topology& topology);

/// "time,point1,lower1,upper1,point2,lower2,upper2,conditioned" rows.
std::string crowd_out_csv(const std::vector<CrowdOutPoint>& curve);

/// Writes text to path, creating parent directories.
void write_text_file(const std::string& path, const std::string& text);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace strainwars
