#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maqp/admm.hpp"
#include "maqp/locomotion.hpp"
#include "maqp/problem.hpp"

namespace maqp::io {

using json = nlohmann::json;

json problem_to_json(const ProblemSpec& spec);
/// Throws ParseError on malformed content; `source` names the input in messages.
ProblemSpec problem_from_json(const json& j, const std::string& source = "<json>");
ProblemSpec load_problem(const std::filesystem::path& path);
void save_problem(const ProblemSpec& spec, const std::filesystem::path& path);

json locomotion_to_json(const LocomotionSpec& loco);
/// A file with `contact_schedule` can be instantiated at any dt; `dt`
/// overrides the file's value. Explicit `contacts` files reject an override.
LocomotionSpec locomotion_from_json(const json& j, const std::string& source = "<json>",
                                    std::optional<double> dt = std::nullopt);
LocomotionSpec load_locomotion(const std::filesystem::path& path,
                               std::optional<double> dt = std::nullopt);

json indicator_to_json(const IndicatorSet& set);
IndicatorSet indicator_from_json(const json& j, const std::string& source = "<json>");

/// 17 significant digits, which reads back to the same double.
std::string format_double(double v);

inline const std::vector<std::string> kHistoryColumns = {
    "k",  "lagrangian", "gap", "primal_residual",        "dx",
    "dz", "dw",         "dual_identity_residual", "block_kkt", "subopt"};

void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history,
                       long double l_star);
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& history, long double l_star);

/// Columns of a CSV file in the history format.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  const std::vector<double>& column(const std::string& name) const;
};

/// Throws ParseError with the offending line number.
CsvTable read_csv(const std::filesystem::path& path);

/// Reads and parses a JSON file; throws ParseError with line information.
json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace maqp::io
