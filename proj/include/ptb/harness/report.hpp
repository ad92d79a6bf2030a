#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ptb::harness {

using ojson = nlohmann::ordered_json;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<ojson>> rows;

  void add_row(std::vector<ojson> row);
  std::string to_csv() const;
};

/// Run record. Contains no wall-clock data, so identical inputs give
/// byte-identical output; timings go to a separate file.
struct Report {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  ojson config = ojson::object();
  ojson results = ojson::object();
  std::vector<Table> tables;
  std::vector<std::string> warnings;

  Table& table(const std::string& name, std::vector<std::string> columns);
  ojson to_json() const;
  std::string dump() const;
};

/// Writes report.json plus one <table>.csv per table into `dir`.
void write_report(const Report& report, const std::filesystem::path& dir);

}  // namespace ptb::harness
