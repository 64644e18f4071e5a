#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace agm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitUsage = 2;

/// Runs one agmlab invocation. `args` excludes the program name. Data goes to
/// the --out file (or `out` for "-"), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

using Cell = std::variant<std::monostate, long long, double, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// Header line plus one line per row; doubles with 17 significant digits,
/// empty cells left blank.
std::string to_csv(const Table& table);
/// {"columns": [...], "rows": [{column: value, ...}, ...], "summary": {...}}.
std::string to_json(const Table& table, const nlohmann::json& summary);

/// Command line that reproduces a manifest's run, without the program name.
std::vector<std::string> args_from_parameters(const std::string& subcommand,
                                              const nlohmann::json& parameters);

}  // namespace agm::cli
