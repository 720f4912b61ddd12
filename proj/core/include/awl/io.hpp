#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "awl/inference.hpp"
#include "awl/model_core.hpp"
#include "awl/pseudo_likelihood.hpp"
#include "awl/sim_engine.hpp"

namespace awl::io {

inline constexpr int kEstimateFormatVersion = 1;
inline constexpr int kScenarioFormatVersion = 1;

// Data CSV: header "x1,...,xp,a,y,z", one sample per row, 17 significant digits.
void write_samples_csv(std::ostream& os, const std::vector<Sample>& samples);
std::vector<Sample> read_samples_csv(std::istream& is);

// Covariate CSV: every column named x1..xp in order; other columns are ignored.
std::vector<Vector> read_covariates_csv(std::istream& is);

std::vector<Sample> read_samples_file(const std::filesystem::path& path);
std::vector<Vector> read_covariates_file(const std::filesystem::path& path);

// Everything needed to reuse a fit: surfaces, weight shape, grid, estimates,
// and optionally the asymptotic covariance and inference summary.
struct EstimateFile {
  int n = 0;
  int p = 0;
  DoseGrid grid{-6.0, 6.0, 241};
  OutcomeSurface q_y;
  OutcomeSurface q_z;
  WeightShape shape;
  EstimateResult estimate;
  std::optional<Matrix> covariance;
  std::optional<InferenceResult> inference;

  CompositeSurface composite() const;
};

std::string estimate_to_json(const EstimateFile& file);
EstimateFile estimate_from_json(std::string_view text);

// Scenario JSON; list-valued "n" and "beta0" expand to their cross product,
// n varying slowest. Scenario k gets master seed derive_seed(seed, k).
std::vector<Scenario> scenarios_from_json(std::string_view text);

// Writes estimates.csv, errors.csv, values.csv and summary.csv.
void write_study_tables(const std::filesystem::path& dir, const std::vector<StudyTables>& tables);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace awl::io
