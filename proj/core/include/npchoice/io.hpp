#pragma once

// File formats. Assortment ids in files are 1-based; CSV files carry a header row.
//
//   instance      JSON {"n": int, "assortments": [[int, ...], ...]}
//   observations  CSV  item,assortment_id
//   choice vector CSV  assortment_id,item,prob   (one row per pair, pair-index order)
//   costs         CSV  assortment_id,item,cost   (missing pairs cost 0)
//   model         JSON {"n": int, "support": [{"ranking": [...], "weight": w}, ...]}
//   ground truth  JSON {"weights": [...], "utilities": [[u_0, ..., u_n], ...], "intensity": L}
//
// Reals are written with 17 significant digits so files round-trip exactly.

#include <filesystem>
#include <string>
#include <vector>

#include "npchoice/core.hpp"
#include "npchoice/fit.hpp"
#include "npchoice/sim.hpp"

namespace npchoice::io {

namespace fs = std::filesystem;

std::string format_real(double v);

Instance read_instance(const fs::path& path);
void write_instance(const fs::path& path, const Instance& inst);

std::vector<Observation> read_observations(const fs::path& path, const Instance& inst);
void write_observations(const fs::path& path, const std::vector<Observation>& obs);

ChoiceVector read_choice_vector(const fs::path& path, const Instance& inst);
void write_choice_vector(const fs::path& path, const Instance& inst, const ChoiceVector& v);

std::vector<double> read_costs(const fs::path& path, const Instance& inst);
void write_costs(const fs::path& path, const Instance& inst, const std::vector<double>& c);

SparseModel read_model(const fs::path& path);
void write_model(const fs::path& path, const SparseModel& model);

MixedMNL read_ground_truth(const fs::path& path);
void write_ground_truth(const fs::path& path, const MixedMNL& model);

// Header "t,objective,sparsity" (Frank-Wolfe) or "t,train_mae,certificate_running,sparsity" (dual).
void write_fw_trace(const fs::path& path, const std::vector<TraceRow>& trace);
void write_dual_trace(const fs::path& path, const std::vector<TraceRow>& trace);

// Writes `text` to `path`, creating parent directories. Throws RuntimeError on failure.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// Minimal CSV reader: header names plus rows of fields. Throws ConfigError on ragged rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // throws ConfigError when absent
};
CsvTable read_csv(const fs::path& path);

}  // namespace npchoice::io
