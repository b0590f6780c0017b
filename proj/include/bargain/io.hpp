#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bargain/event_log.hpp"
#include "bargain/grids.hpp"
#include "bargain/params.hpp"
#include "bargain/solver.hpp"
#include "bargain/welfare.hpp"

namespace bargain {

inline constexpr int kEquilibriumSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

// Shortest text that reads back to the same double.
std::string format_double(double x);

// FNV-1a, used for config hashes.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t x);

// Throws ValidationError unless j carries the expected schema name and version.
void check_schema(const nlohmann::json& j, std::string_view schema, int version);

nlohmann::ordered_json distribution_to_json(const ValueDistribution& d);
ValueDistribution distribution_from_json(const nlohmann::json& j);
nlohmann::ordered_json params_to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::ordered_json solver_options_to_json(const SolverOptions& o);
SolverOptions solver_options_from_json(const nlohmann::json& j);
nlohmann::ordered_json grid_spec_to_json(const GridSpec& g);
nlohmann::ordered_json sim_options_to_json(const SimOptions& o);
SimOptions sim_options_from_json(const nlohmann::json& j);

std::string equilibrium_to_json(const Equilibrium& eq, const std::string& config_hash);
Equilibrium equilibrium_from_json(std::string_view text);

void write_trace_csv(std::ostream& out, const Equilibrium& eq);

// Welfare by group for baseline, counterfactual and difference.
void write_welfare_table_csv(std::ostream& out, const WelfareReport& base, const WelfareReport& cf);
// Action shares and prices overall and by seller quartile.
void write_outcome_table_csv(std::ostream& out, const WelfareReport& base, const WelfareReport& cf);
nlohmann::ordered_json welfare_to_json(const WelfareReport& r);
std::string report_json(const WelfareReport& base, const WelfareReport& cf,
                        const std::string& config_hash);

}  // namespace bargain
