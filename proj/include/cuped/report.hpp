#pragma once

#include <nlohmann/json.hpp>

#include <iosfwd>

#include "cuped/correlation_model.hpp"
#include "cuped/estimators.hpp"
#include "cuped/simulation.hpp"

namespace cuped {

/// Version of every JSON document written by the CLI (top-level "schema").
inline constexpr int kReportSchema = 1;

nlohmann::json to_json(const CorrelationStructured& s);
nlohmann::json to_json(const AdjustedEstimate& e);
nlohmann::json to_json(const ReplicationSummary& summary);
nlohmann::json to_json(const SweepPoint& point);
nlohmann::json to_json(const SweepResult& result);

/// One row per estimator.
void write_summary_csv(std::ostream& out, const ReplicationSummary& summary);

/// Columns: rho,sigma,tau,empirical_ratio,theoretical_ratio,bound,mc_stderr,
/// assumption_satisfied,feasible. Undefined values are left empty.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace cuped
