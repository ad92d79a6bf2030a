#include "ptb/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "ptb/errors.hpp"
#include "ptb/harness/weights_io.hpp"

namespace ptb::harness {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items()) {
    if (allowed.count(item.key()) == 0) throw ValidationError(where + ": unknown key '" + item.key() + "'");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 3) throw ValidationError("config: n must be >= 3");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("config: delta must lie in (0, 1)");
  if (rho_grid.empty()) throw ValidationError("config: rho_grid must be nonempty");
  for (double rho : rho_grid) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("config: rho_grid entries must be finite and > 0");
  }
  if (!(time_grid.t_max > 0.0) || !std::isfinite(time_grid.t_max)) {
    throw ValidationError("config: time_grid.t_max must be finite and > 0");
  }
  if (time_grid.steps == 0) throw ValidationError("config: time_grid.steps must be >= 1");
  if (mc_samples == 0) throw ValidationError("config: mc_samples must be >= 1");
  if (trials == 0) throw ValidationError("config: trials must be >= 1");
  train.validate();
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  reject_unknown(j,
                 {"seed", "n", "delta", "rho_grid", "time_grid", "mc_samples", "trials", "mode", "rebalance",
                  "weights", "train", "output_dir"},
                 "config");
  ExperimentConfig c;
  read_field(j, "seed", c.seed);
  read_field(j, "n", c.n);
  read_field(j, "delta", c.delta);
  read_field(j, "rho_grid", c.rho_grid);
  read_field(j, "mc_samples", c.mc_samples);
  read_field(j, "trials", c.trials);
  read_field(j, "rebalance", c.rebalance);
  read_field(j, "weights", c.weights_path);
  if (j.contains("mode")) {
    try {
      c.mode = nn::parse_derand_mode(j["mode"].get<std::string>());
    } catch (const std::exception& e) {
      throw ValidationError(std::string("config field 'mode': ") + e.what());
    }
  }
  if (j.contains("output_dir")) {
    std::string dir;
    read_field(j, "output_dir", dir);
    c.output_dir = dir;
  }
  if (j.contains("time_grid")) {
    const auto& g = j["time_grid"];
    if (!g.is_object()) throw ValidationError("config: time_grid must be an object");
    reject_unknown(g, {"t_max", "steps"}, "config.time_grid");
    read_field(g, "t_max", c.time_grid.t_max);
    read_field(g, "steps", c.time_grid.steps);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    if (!t.is_object()) throw ValidationError("config: train must be an object");
    reject_unknown(t, {"width", "depth", "train_size", "epochs", "learning_rate", "loss", "seed", "init_scale"},
                   "config.train");
    read_field(t, "width", c.train.width);
    read_field(t, "depth", c.train.depth);
    read_field(t, "train_size", c.train.train_size);
    read_field(t, "epochs", c.train.epochs);
    read_field(t, "learning_rate", c.train.learning_rate);
    read_field(t, "seed", c.train.seed);
    read_field(t, "init_scale", c.train.init_scale);
    if (t.contains("loss")) {
      try {
        c.train.loss = parse_loss(t["loss"].get<std::string>());
      } catch (const std::exception& e) {
        throw ValidationError(std::string("config field 'train.loss': ") + e.what());
      }
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["n"] = c.n;
  j["delta"] = c.delta;
  j["rho_grid"] = c.rho_grid;
  j["time_grid"] = {{"t_max", c.time_grid.t_max}, {"steps", c.time_grid.steps}};
  j["mc_samples"] = c.mc_samples;
  j["trials"] = c.trials;
  j["mode"] = nn::mode_name(c.mode);
  j["rebalance"] = c.rebalance;
  j["weights"] = c.weights_path;
  j["train"] = {{"width", c.train.width},
                {"depth", c.train.depth},
                {"train_size", c.train.train_size},
                {"epochs", c.train.epochs},
                {"learning_rate", c.train.learning_rate},
                {"loss", loss_name(c.train.loss)},
                {"seed", c.train.seed},
                {"init_scale", c.train.init_scale}};
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string canonical = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ptb::harness
