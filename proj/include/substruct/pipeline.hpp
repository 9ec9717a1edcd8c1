#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "substruct/frf_oracle.hpp"
#include "substruct/lumped.hpp"

namespace substruct::pipeline {

struct GridSpec {
  double f_min_hz = 0.5;
  double f_max_hz = 50.0;
  std::size_t lines = 1024;
};

struct StepSpec {
  std::string op;
  nlohmann::json params;  // the whole step object
};

// Steps read and write named artifacts ("in", "out", ...). Relative paths
// are resolved against `base_dir`; written files go below `output_dir`.
struct PipelineConfig {
  GridSpec grid;
  int phi = 1;
  ResidueSpec residue;
  oracle::NoiseSpec noise;
  std::map<std::string, double> tolerances;
  std::vector<StepSpec> steps;
  std::filesystem::path base_dir = ".";
  std::filesystem::path output_dir = ".";
};

// Throws ParseError on malformed configs, including references to
// artifacts that no earlier step produces.
PipelineConfig parse_config(const std::string& text,
                            const std::filesystem::path& base_dir = ".");
PipelineConfig load_config(const std::filesystem::path& path);

enum class StepStatus { pass, fail, error };

struct StepReport {
  std::size_t index = 0;
  std::string op;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> details;
  StepStatus status = StepStatus::pass;
  std::string message;
};

struct PipelineReport {
  bool success = true;
  std::vector<StepReport> steps;

  nlohmann::json to_json() const;
};

// Runs the steps in order and stops at the first step that fails a
// tolerance or throws; the report holds every step run so far.
PipelineReport run_pipeline(const PipelineConfig& cfg);

}  // namespace substruct::pipeline
