#include <iomanip>
#include <sstream>

#include "agm/cli.hpp"
#include "agm/types.hpp"

namespace agm::cli {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("Table::add: row width mismatch");
  rows.push_back(std::move(row));
}

namespace {

struct CsvCell {
  std::ostream& os;
  void operator()(std::monostate) const {}
  void operator()(long long v) const { os << v; }
  void operator()(double v) const { os << std::setprecision(17) << v; }
  void operator()(const std::string& v) const {
    if (v.find_first_of(",\"\n") == std::string::npos) {
      os << v;
      return;
    }
    os << '"';
    for (char c : v) os << (c == '"' ? "\"\"" : std::string(1, c));
    os << '"';
  }
  void operator()(bool v) const { os << (v ? "true" : "false"); }
};

nlohmann::json cell_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else return v;
      },
      cell);
}

}  // namespace

std::string to_csv(const Table& table) {
  std::ostringstream os;
  for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << ',';
      std::visit(CsvCell{os}, row[c]);
    }
    os << '\n';
  }
  return os.str();
}

std::string to_json(const Table& table, const nlohmann::json& summary) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = cell_json(row[c]);
    rows.push_back(std::move(obj));
  }
  nlohmann::json doc{{"columns", table.columns}, {"rows", std::move(rows)}, {"summary", summary}};
  return doc.dump(2) + "\n";
}

std::vector<std::string> args_from_parameters(const std::string& subcommand,
                                              const nlohmann::json& parameters) {
  std::vector<std::string> args{subcommand};
  for (const auto& [key, value] : parameters.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
      continue;
    }
    if (value.is_null()) continue;
    args.push_back("--" + key);
    if (value.is_string()) args.push_back(value.get<std::string>());
    else if (value.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < value.size(); ++i) joined += (i ? "," : "") + value[i].dump();
      args.push_back(joined);
    } else {
      args.push_back(value.dump());
    }
  }
  return args;
}

}  // namespace agm::cli
