#include "ptb/harness/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ptb/errors.hpp"

namespace ptb::harness {

namespace {

constexpr const char* kMagic = "PTB-WEIGHTS 1";
constexpr const char* kPrecision = "f64le";

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t parse_count(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("weight manifest: missing field '" + key + "'");
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size() || it->second.empty() || it->second[0] == '-') {
    throw FormatError("weight manifest: field '" + key + "' is not a count: '" + it->second + "'");
  }
  return v;
}

double parse_real(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("weight manifest: missing field '" + key + "'");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size() || it->second.empty()) {
    throw FormatError("weight manifest: field '" + key + "' is not a number: '" + it->second + "'");
  }
  return v;
}

void validate_values(const nn::NetworkWeights& w) {
  for (std::size_t k = 0; k < w.layers.size(); ++k) {
    if (!w.layers[k].all_finite()) {
      throw ValidationError("weights: layer " + std::to_string(k) + " contains NaN or Inf entries");
    }
  }
  if (!(w.lipschitz_loss > 0.0) || !std::isfinite(w.lipschitz_loss)) {
    throw ValidationError("weights: lipschitz_loss must be positive and finite");
  }
  if (!(w.input_radius > 0.0) || !std::isfinite(w.input_radius)) {
    throw ValidationError("weights: input_radius must be positive and finite");
  }
}

std::uint64_t to_le_bits(double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return bits;
}

double from_le_bits(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string encode_weights_binary(const nn::NetworkWeights& w) {
  w.validate();
  const std::size_t count = w.dimension();
  std::ostringstream manifest;
  manifest << kMagic << '\n'
           << "layers=" << w.depth() << '\n'
           << "width=" << w.width() << '\n'
           << "precision=" << kPrecision << '\n'
           << "lipschitz_loss=" << format_double(w.lipschitz_loss) << '\n'
           << "input_radius=" << format_double(w.input_radius) << '\n'
           << "payload_bytes=" << count * 8 << '\n'
           << '\n';
  std::string out = manifest.str();
  const std::size_t header = out.size();
  out.resize(header + count * 8);
  std::size_t offset = header;
  for (const auto& layer : w.layers) {
    for (double x : layer.entries()) {
      const std::uint64_t bits = to_le_bits(x);
      std::memcpy(out.data() + offset, &bits, 8);
      offset += 8;
    }
  }
  return out;
}

nn::NetworkWeights decode_weights_binary(const std::string& bytes) {
  const std::size_t end = bytes.find("\n\n");
  if (end == std::string::npos) throw FormatError("weight file: manifest is not terminated by a blank line");
  std::istringstream manifest(bytes.substr(0, end + 1));
  std::string line;
  std::getline(manifest, line);
  if (line != kMagic) throw FormatError("weight file: bad magic line '" + line + "' (expected '" + kMagic + "')");

  std::map<std::string, std::string> kv;
  while (std::getline(manifest, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("weight manifest: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  const std::uint64_t layers = parse_count(kv, "layers");
  const std::uint64_t width = parse_count(kv, "width");
  if (layers == 0) throw FormatError("weight manifest: field 'layers' must be >= 1");
  if (width == 0) throw FormatError("weight manifest: field 'width' must be >= 1");
  if (kv.count("precision") == 0) throw FormatError("weight manifest: missing field 'precision'");
  if (kv["precision"] != kPrecision) {
    throw FormatError("weight manifest: field 'precision' is '" + kv["precision"] + "', expected '" + kPrecision + "'");
  }
  const double lipschitz = parse_real(kv, "lipschitz_loss");
  const double radius = parse_real(kv, "input_radius");
  const std::uint64_t declared = parse_count(kv, "payload_bytes");
  const std::uint64_t expected = layers * width * width * 8;
  if (declared != expected) {
    throw FormatError("weight manifest: field 'payload_bytes' is " + std::to_string(declared) + " but layers=" +
                      std::to_string(layers) + ", width=" + std::to_string(width) + " require " +
                      std::to_string(expected));
  }
  const std::size_t payload_start = end + 2;
  const std::size_t actual = bytes.size() - payload_start;
  if (actual != expected) {
    throw FormatError("weight file: payload: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(actual));
  }

  nn::NetworkWeights w;
  w.lipschitz_loss = lipschitz;
  w.input_radius = radius;
  std::size_t offset = payload_start;
  for (std::uint64_t k = 0; k < layers; ++k) {
    std::vector<double> entries(width * width);
    for (double& x : entries) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, bytes.data() + offset, 8);
      x = from_le_bits(bits);
      offset += 8;
    }
    w.layers.emplace_back(width, width, std::move(entries));
  }
  validate_values(w);
  return w;
}

std::string encode_weights_json(const nn::NetworkWeights& w) {
  w.validate();
  if (w.dimension() > kJsonMaxDimension) {
    throw InvalidInput("JSON weight format is limited to " + std::to_string(kJsonMaxDimension) + " parameters, got " +
                       std::to_string(w.dimension()));
  }
  nlohmann::ordered_json j;
  j["format"] = "ptb-weights";
  j["version"] = 1;
  j["lipschitz_loss"] = w.lipschitz_loss;
  j["input_radius"] = w.input_radius;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& layer : w.layers) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < layer.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t jj = 0; jj < layer.cols(); ++jj) row.push_back(layer(i, jj));
      rows.push_back(std::move(row));
    }
    j["layers"].push_back(std::move(rows));
  }
  return j.dump() + "\n";
}

nn::NetworkWeights decode_weights_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("weight JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "ptb-weights") {
    throw FormatError("weight JSON: missing or wrong 'format' tag (expected 'ptb-weights')");
  }
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) {
    throw FormatError("weight JSON: 'layers' must be a nonempty array");
  }
  nn::NetworkWeights w;
  try {
    w.lipschitz_loss = j.at("lipschitz_loss").get<double>();
    w.input_radius = j.at("input_radius").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight JSON: ") + e.what());
  }
  const std::size_t m = j["layers"][0].size();
  for (std::size_t k = 0; k < j["layers"].size(); ++k) {
    const auto& rows = j["layers"][k];
    if (!rows.is_array() || rows.size() != m || m == 0) {
      throw FormatError("weight JSON: layer " + std::to_string(k) + " has " + std::to_string(rows.size()) +
                        " rows, expected " + std::to_string(m));
    }
    std::vector<double> entries;
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != m) {
        throw FormatError("weight JSON: layer " + std::to_string(k) + " has a row of length " +
                          std::to_string(row.size()) + ", expected " + std::to_string(m));
      }
      for (const auto& x : row) {
        // NaN and Inf serialize as null.
        if (x.is_null()) throw ValidationError("weights: layer " + std::to_string(k) + " contains NaN or Inf entries");
        if (!x.is_number()) throw FormatError("weight JSON: non-numeric entry in layer " + std::to_string(k));
        entries.push_back(x.get<double>());
      }
    }
    w.layers.emplace_back(m, m, std::move(entries));
  }
  validate_values(w);
  return w;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write to '" + path.string() + "' failed");
}

void save_weights(const std::filesystem::path& path, const nn::NetworkWeights& w) {
  write_file(path, path.extension() == ".json" ? encode_weights_json(w) : encode_weights_binary(w));
}

nn::NetworkWeights load_weights(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto first = bytes.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && bytes[first] == '{') return decode_weights_json(bytes);
  return decode_weights_binary(bytes);
}

}  // namespace ptb::harness
