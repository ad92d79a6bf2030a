#include "ptb/harness/report.hpp"

#include <cstdio>
#include <sstream>

#include "ptb/errors.hpp"
#include "ptb/harness/weights_io.hpp"

namespace ptb::harness {

namespace {

std::string csv_cell(const ojson& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
  if (v.is_number_float()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  return v.dump();
}

}  // namespace

void Table::add_row(std::vector<ojson> row) {
  if (row.size() != columns.size()) {
    throw InvalidInput("table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                       std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::string Table::to_csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
    out << '\n';
  }
  return out.str();
}

Table& Report::table(const std::string& name, std::vector<std::string> columns) {
  for (auto& t : tables) {
    if (t.name == name) throw InvalidInput("report: duplicate table '" + name + "'");
  }
  tables.push_back(Table{name, std::move(columns), {}});
  return tables.back();
}

ojson Report::to_json() const {
  ojson j;
  j["schema"] = "ptb-report/1";
  j["command"] = command;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["config"] = config;
  j["results"] = results;
  ojson tabs = ojson::object();
  for (const auto& t : tables) {
    ojson rows = ojson::array();
    for (const auto& r : t.rows) rows.push_back(ojson(r));
    tabs[t.name] = {{"columns", t.columns}, {"rows", std::move(rows)}};
  }
  j["tables"] = std::move(tabs);
  j["warnings"] = warnings;
  return j;
}

std::string Report::dump() const { return to_json().dump(2) + "\n"; }

void write_report(const Report& report, const std::filesystem::path& dir) {
  write_file(dir / "report.json", report.dump());
  for (const auto& t : report.tables) write_file(dir / (t.name + ".csv"), t.to_csv());
}

}  // namespace ptb::harness
