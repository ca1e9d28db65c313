#pragma once

// Machine-readable reports (JSON) and flat CSV tables for plotting.
// Every report is an object {schema_version, kind, generator, seed, data};
// schema/report.schema.json documents the layout.

#include <cstdint>
#include <string>

#include "json.hpp"

#include "rrdof/eval.hpp"
#include "rrdof/simbench.hpp"

namespace rrdof {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kGenerator = "rrdof 1.0.0";

using Json = nlohmann::ordered_json;

Json make_report(const std::string& kind, std::uint64_t seed, Json data);

Json to_json(const SimConfig& cfg);
Json to_json(const DofStudyResult& r);
Json to_json(const PredStudyResult& r);
Json to_json(const EvalReport& r);
Json to_json(const SelectionReport<double>& r);
Json to_json(const DofEstimate<double>& e);
Json to_json(const Moments& m);

/// Structural check mirroring the published schema. Throws Errc::parse with
/// the offending path on failure.
void validate_report(const Json& report);

/// Stable serialization: two-space indent, trailing newline.
std::string dump_report(const Json& report);

std::string dof_table_csv(const DofStudyResult& r);
std::string pred_table_csv(const PredStudyResult& r);
std::string eval_table_csv(const EvalReport& r);
std::string selection_table_csv(const SelectionReport<double>& r);

}  // namespace rrdof
