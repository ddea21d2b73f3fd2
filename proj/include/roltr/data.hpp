#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roltr/random.hpp"

namespace roltr {

inline constexpr int kMaxGrade = 4;

struct Document {
  std::vector<double> features;
  int relevance = 0;  // graded label in [0, 4]
  std::size_t doc_index = 0;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Query {
  std::string query_id;
  std::vector<Document> candidates;

  friend bool operator==(const Query&, const Query&) = default;
};

enum class Split { kTrain, kValidation, kTest };

const char* to_string(Split split);

struct Dataset {
  Split split = Split::kTrain;
  std::vector<Query> queries;
  std::size_t feature_dim = 0;
  // Optional fold attribute; loaders of multi-fold collections set it.
  std::optional<int> fold;

  bool empty() const { return queries.empty(); }
  std::size_t num_documents() const;

  /// Throws std::invalid_argument if any invariant is broken (duplicate
  /// query ids, empty candidate lists, wrong feature length, bad grades).
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Malformed LETOR input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads `<grade> qid:<id> <fidx>:<value> ... [# comment]` lines. Feature
/// indices are 1-based; missing ones are 0.0. Documents are grouped by qid in
/// order of first appearance, keeping file order inside each query.
Dataset parse_letor(std::istream& in, std::size_t feature_dim, Split split = Split::kTrain);
Dataset load_letor(const std::filesystem::path& path, std::size_t feature_dim,
                   Split split = Split::kTrain);

/// Largest feature index appearing in a LETOR file.
std::size_t infer_feature_dim(const std::filesystem::path& path);

/// Writes every feature densely with round-trip precision.
void write_letor(std::ostream& out, const Dataset& dataset);
void write_letor(const std::filesystem::path& path, const Dataset& dataset);

/// Per-feature min-max scaling to [0, 1] computed over each query's
/// candidates. Constant features become 0.
Dataset normalize_min_max(const Dataset& dataset);

struct SyntheticSpec {
  std::size_t n_queries = 300;
  std::size_t docs_per_query = 50;
  std::size_t feature_dim = 10;
  std::vector<double> relevance_distribution{0.5, 0.25, 0.15, 0.07, 0.03};
  double noise_scale = 0.0;
  // Standard deviation of the feature components orthogonal to the hidden
  // scorer. Larger values make the relevant direction harder to find.
  double clutter_scale = 1.0;
  std::uint64_t seed = 0;
  // Query counts for the held-out splits; n_queries is the train split.
  std::size_t n_validation_queries = 0;
  std::size_t n_test_queries = 100;

  void validate() const;
};

struct SyntheticData {
  Dataset train;
  Dataset validation;
  Dataset test;
  // Unit-norm scorer whose score equals grade + noise for every document.
  std::vector<double> hidden_weights;
  std::uint64_t seed = 0;
};

/// Pure function of `spec`. Each document's projection on the hidden
/// direction is its grade plus noise_scale * N(0, 1); the orthogonal part is
/// Gaussian clutter with standard deviation clutter_scale.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Sidecar document `{"weights": [..], "seed": n}`.
void write_sidecar(const std::filesystem::path& path, const SyntheticData& data);
std::vector<double> read_sidecar_weights(const std::filesystem::path& path);

SyntheticSpec synthetic_spec_from_json(const std::string& json_text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

/// Uniform draw over the dataset's queries.
const Query& sample_query(const Dataset& dataset, Rng& rng);

}  // namespace roltr
