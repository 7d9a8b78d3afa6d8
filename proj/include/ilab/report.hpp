#pragma once

// Report serialisation. JSON is canonical; markdown is for reading.

#include "ilab/bench.hpp"

namespace ilab {

Json to_json(const EffectEstimate& e);
/// Throws ValidationError on missing or mistyped fields.
EffectEstimate estimate_from_json(const Json& j);

namespace bench {

inline constexpr int kReportSchema = 1;

Json to_json(const BenchReport& r);

/// Structural problems of a report document; empty when it conforms to
/// schema 1.
std::vector<std::string> validate_report_json(const Json& j);

/// Validates first; throws ValidationError listing the first problem.
BenchReport report_from_json(const Json& j);

enum class ReportFormat { json, markdown };

ReportFormat format_from_string(const std::string& s);

std::string render_report(const BenchReport& r, ReportFormat format);

}  // namespace bench
}  // namespace ilab
