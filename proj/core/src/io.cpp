#include "npchoice/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "npchoice/errors.hpp"

namespace npchoice::io {
namespace {

using nlohmann::json;

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

int parse_int(const std::string& s, const fs::path& path) {
  try {
    size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path.string() + ": expected an integer, got '" + s + "'");
  }
}

double parse_real(const std::string& s, const fs::path& path) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path.string() + ": expected a number, got '" + s + "'");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// (assortment_id, item) → pair index, with file context in errors.
int locate_pair(const Instance& inst, int assortment_id, int item, const fs::path& path) {
  if (assortment_id < 1 || assortment_id > inst.m() || item < 1 || item > inst.n() ||
      !inst.contains(assortment_id - 1, item)) {
    throw ConfigError(path.string() + ": item " + std::to_string(item) +
                      " is not offered in assortment " + std::to_string(assortment_id));
  }
  return inst.pair_index(assortment_id - 1, item);
}

std::vector<double> read_pair_values(const fs::path& path, const Instance& inst,
                                     const std::string& value_column, bool require_all) {
  const CsvTable t = read_csv(path);
  const int ca = t.column("assortment_id");
  const int ci = t.column("item");
  const int cv = t.column(value_column);
  std::vector<double> out(inst.size(), 0.0);
  std::vector<bool> seen(inst.size(), false);
  for (const auto& row : t.rows) {
    const int k = locate_pair(inst, parse_int(row[ca], path), parse_int(row[ci], path), path);
    if (seen[k]) throw ConfigError(path.string() + ": pair listed twice");
    seen[k] = true;
    out[k] = parse_real(row[cv], path);
  }
  if (require_all && std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ConfigError(path.string() + ": missing (assortment, item) pairs");
  }
  return out;
}

void write_pair_values(const fs::path& path, const Instance& inst, const std::vector<double>& v,
                       const std::string& value_column) {
  std::ostringstream out;
  out << "assortment_id,item," << value_column << "\n";
  for (int k = 0; k < inst.size(); ++k) {
    out << inst.assortment_of(k) + 1 << "," << inst.item_at(k) << "," << format_real(v[k]) << "\n";
  }
  write_text(path, out.str());
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw RuntimeError("cannot open " + path.string() + " for writing");
  file << text;
  if (!file) throw RuntimeError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << file.rdbuf();
  return ss.str();
}

int CsvTable::column(const std::string& name) const {
  for (size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return static_cast<int>(c);
  }
  throw ConfigError("CSV is missing column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_row(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ConfigError(path.string() + ": row has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw ConfigError(path.string() + ": empty CSV");
  return t;
}

Instance read_instance(const fs::path& path) {
  const json j = parse_json(path);
  try {
    return Instance::build(j.at("n").get<int>(),
                           j.at("assortments").get<std::vector<std::vector<int>>>());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_instance(const fs::path& path, const Instance& inst) {
  json j;
  j["n"] = inst.n();
  j["assortments"] = inst.assortments();
  write_text(path, j.dump() + "\n");
}

std::vector<Observation> read_observations(const fs::path& path, const Instance& inst) {
  const CsvTable t = read_csv(path);
  const int ci = t.column("item");
  const int ca = t.column("assortment_id");
  std::vector<Observation> obs;
  obs.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    const int item = parse_int(row[ci], path);
    const int id = parse_int(row[ca], path);
    locate_pair(inst, id, item, path);
    obs.push_back({item, id - 1});
  }
  return obs;
}

void write_observations(const fs::path& path, const std::vector<Observation>& obs) {
  std::ostringstream out;
  out << "item,assortment_id\n";
  for (const auto& o : obs) out << o.item << "," << o.assortment + 1 << "\n";
  write_text(path, out.str());
}

ChoiceVector read_choice_vector(const fs::path& path, const Instance& inst) {
  return {read_pair_values(path, inst, "prob", true), false};
}

void write_choice_vector(const fs::path& path, const Instance& inst, const ChoiceVector& v) {
  write_pair_values(path, inst, v.values, "prob");
}

std::vector<double> read_costs(const fs::path& path, const Instance& inst) {
  return read_pair_values(path, inst, "cost", false);
}

void write_costs(const fs::path& path, const Instance& inst, const std::vector<double>& c) {
  write_pair_values(path, inst, c, "cost");
}

SparseModel read_model(const fs::path& path) {
  const json j = parse_json(path);
  SparseModel model;
  try {
    const int n = j.at("n").get<int>();
    for (const auto& entry : j.at("support")) {
      model.support.push_back(
          {Ranking(entry.at("ranking").get<std::vector<int>>()), entry.at("weight").get<double>()});
    }
    model.validate(n);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return model;
}

void write_model(const fs::path& path, const SparseModel& model) {
  json j;
  j["n"] = model.support.empty() ? 0 : model.support.front().ranking.n();
  j["support"] = json::array();
  for (const auto& [ranking, weight] : model.support) {
    j["support"].push_back({{"ranking", ranking.order()}, {"weight", weight}});
  }
  write_text(path, j.dump(1) + "\n");
}

MixedMNL read_ground_truth(const fs::path& path) {
  const json j = parse_json(path);
  MixedMNL model;
  try {
    model.weights = j.at("weights").get<std::vector<double>>();
    model.utilities = j.at("utilities").get<std::vector<std::vector<double>>>();
    model.intensity = j.value("intensity", 0.0);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  model.validate();
  return model;
}

void write_ground_truth(const fs::path& path, const MixedMNL& model) {
  json j;
  j["weights"] = model.weights;
  j["utilities"] = model.utilities;
  j["intensity"] = model.intensity;
  write_text(path, j.dump(1) + "\n");
}

void write_fw_trace(const fs::path& path, const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "t,objective,sparsity\n";
  for (const auto& r : trace) {
    out << r.t << "," << format_real(r.objective) << "," << r.sparsity << "\n";
  }
  write_text(path, out.str());
}

void write_dual_trace(const fs::path& path, const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "t,train_mae,certificate_running,sparsity\n";
  for (const auto& r : trace) {
    out << r.t << "," << format_real(r.train_mae) << "," << format_real(r.certificate) << ","
        << r.sparsity << "\n";
  }
  write_text(path, out.str());
}

}  // namespace npchoice::io
