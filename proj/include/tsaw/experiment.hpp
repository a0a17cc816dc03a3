#pragma once

#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsaw/tree.hpp"

namespace tsaw::experiment {

enum class Subcommand { ruin, kernels, brr, percolate, phase, verify };
const char* to_string(Subcommand s);
Subcommand subcommand_from_string(const std::string& s);  // ValidationError on unknown names

// Process exit codes.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitAcceptance = 4;

struct ExperimentConfig {
  Subcommand subcommand = Subcommand::ruin;
  double beta = 1.0;
  tree::GrowthSpec tree = tree::GrowthSpec::from_exponent(0.7, 100);
  std::string tree_path;  // when set, overrides `tree` at load time
  std::vector<int> n_grid{10, 100, 1000};
  std::vector<int> j_grid{1, 2, 4, 8};
  std::vector<long> k_grid{4, 6, 8, 10, 12};
  std::vector<int> depth_grid{50, 100, 200};
  std::vector<double> b_grid{0.3, 0.7};
  std::vector<double> gamma_grid{0.25, 0.5, 0.75};
  std::uint64_t reps = 10000;
  int pairs = 50;
  // Replica i of a subcommand draws from derive_replica_seed(master_seed, i).
  std::uint64_t master_seed = 1;
  double leak_budget = 1e-10;
  std::string output_dir = "out";
  int threads = 1;
  std::vector<int> criteria;  // verify only; empty means all
};

// Field-by-field parse with defaults for absent keys. Errors carry the dotted field path.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
void validate(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

// 64-bit FNV-1a, lowercase hex.
std::string fnv1a64_hex(std::string_view bytes);

// CSV with %.17g numbers; strings are quoted when needed.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& cell(double v);
  template <std::integral T>
  CsvTable& cell(T v) {
    return raw(std::to_string(v));
  }
  CsvTable& cell(const std::string& v);
  CsvTable& cell(const char* v) { return cell(std::string(v)); }
  void end_row();  // throws std::logic_error when the row width differs from the header
  std::size_t rows() const { return rows_; }
  const std::string& text() const { return text_; }

 private:
  std::size_t width_;
  std::size_t filled_ = 0;
  std::size_t rows_ = 0;
  std::string text_;
  CsvTable& raw(const std::string& s);
};

struct ResultManifest {
  nlohmann::json config;
  std::string version;
  double wall_seconds = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, std::string>> checksums;  // (file name, FNV-1a)
  nlohmann::json to_json() const;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;  // written CSV names, relative to output_dir
  ResultManifest manifest;
  std::string summary;             // human-readable report
};

// Validates, runs, writes the CSVs and manifest.json into output_dir.
// Validation and numeric-budget errors propagate with a module tag in the message.
RunResult run_subcommand(const ExperimentConfig& config);

// In-memory tables of a run, without touching the filesystem.
struct Tables {
  std::vector<std::pair<std::string, CsvTable>> files;
  std::string summary;
  bool acceptance_failed = false;
};
Tables compute_tables(const ExperimentConfig& config);

const char* version();

}  // namespace tsaw::experiment
