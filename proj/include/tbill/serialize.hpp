#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "tbill/deviations.hpp"
#include "tbill/geometry.hpp"
#include "tbill/iet.hpp"
#include "tbill/selfsim.hpp"

namespace tbill {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

Json to_json(const Permutation& p);
Permutation permutation_from_json(const Json& j);

Json to_json(const IntMatrix& m);
IntMatrix matrix_from_json(const Json& j);

Json to_json(const Iet& iet);
Iet iet_from_json(const Json& j);

Json to_json(const InductionRecord& rec);
Json to_json(const std::vector<InductionRecord>& recs);

/// Nodes as {top, bottom} integer arrays, edges as {from, to, type}.
Json to_json(const RauzyGraph& g);

Json to_json(const DeviationReport& rep);
Json to_json(const EstimatedSpectrum& est);

/// System descriptor. Only base_perm and steps are needed to rebuild it.
Json to_json(const SelfSimilarSystem& sys);
SelfSimilarSystem system_from_json(const Json& j);

Json to_json(const SandwichReport& rep);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Two-space indented dump followed by a newline.
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

/// Columns n,dev_abs,running_max.
std::string series_csv(const DeviationReport& rep);

/// Columns step,side,px,py,x,tau; side is the side crossed to reach the row's
/// tile, 0 for the start.
std::string trajectory_csv(const Trajectory& tr);

}  // namespace tbill
