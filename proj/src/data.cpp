#include "roltr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

namespace roltr {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Box-Muller on our own uniforms keeps generated data identical across
// standard library implementations.
double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int draw_grade(Rng& rng, const std::vector<double>& distribution) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t g = 0; g < distribution.size(); ++g) {
    cumulative += distribution[g];
    if (u < cumulative) return static_cast<int>(g);
  }
  // Rounding in the cumulative sum; fall back to the last grade with mass.
  for (std::size_t g = distribution.size(); g-- > 0;) {
    if (distribution[g] > 0.0) return static_cast<int>(g);
  }
  return 0;
}

}  // namespace

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "unknown";
}

std::size_t Dataset::num_documents() const {
  std::size_t n = 0;
  for (const auto& q : queries) n += q.candidates.size();
  return n;
}

void Dataset::validate() const {
  if (feature_dim == 0) throw std::invalid_argument("dataset feature_dim must be positive");
  std::unordered_set<std::string> ids;
  for (const auto& q : queries) {
    if (!ids.insert(q.query_id).second) {
      throw std::invalid_argument("duplicate query id '" + q.query_id + "'");
    }
    if (q.candidates.empty()) {
      throw std::invalid_argument("query '" + q.query_id + "' has no candidates");
    }
    for (const auto& d : q.candidates) {
      if (d.features.size() != feature_dim) {
        throw std::invalid_argument(fmt::format("query '{}' document {} has {} features, expected {}",
                                                q.query_id, d.doc_index, d.features.size(),
                                                feature_dim));
      }
      if (d.relevance < 0 || d.relevance > kMaxGrade) {
        throw std::invalid_argument(fmt::format("query '{}' document {} has grade {} outside [0, 4]",
                                                q.query_id, d.doc_index, d.relevance));
      }
    }
  }
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

Dataset parse_letor(std::istream& in, std::size_t feature_dim, Split split) {
  if (feature_dim == 0) throw std::invalid_argument("feature_dim must be positive");
  Dataset dataset;
  dataset.split = split;
  dataset.feature_dim = feature_dim;
  std::unordered_map<std::string, std::size_t> query_slot;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::istringstream tokens{std::string(line)};
    std::string token;
    tokens >> token;
    int grade = 0;
    if (!parse_number(token, grade)) {
      // Some collections write grades as "2.0".
      double as_double = 0.0;
      if (!parse_number(token, as_double) || as_double != std::floor(as_double)) {
        throw ParseError(line_no, "relevance grade '" + token + "' is not an integer");
      }
      grade = static_cast<int>(as_double);
    }
    if (grade < 0 || grade > kMaxGrade) {
      throw ParseError(line_no, fmt::format("relevance grade {} outside [0, 4]", grade));
    }

    if (!(tokens >> token) || !token.starts_with("qid:") || token.size() == 4) {
      throw ParseError(line_no, "expected 'qid:<id>' after the grade");
    }
    std::string qid = token.substr(4);

    Document doc;
    doc.relevance = grade;
    doc.features.assign(feature_dim, 0.0);
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw ParseError(line_no, "malformed feature '" + token + "'");
      std::size_t index = 0;
      double value = 0.0;
      if (!parse_number(std::string_view(token).substr(0, colon), index) ||
          !parse_number(std::string_view(token).substr(colon + 1), value)) {
        throw ParseError(line_no, "malformed feature '" + token + "'");
      }
      if (index == 0 || index > feature_dim) {
        throw ParseError(line_no, fmt::format("feature index {} outside [1, {}]", index, feature_dim));
      }
      doc.features[index - 1] = value;
    }

    auto [it, inserted] = query_slot.try_emplace(qid, dataset.queries.size());
    if (inserted) dataset.queries.push_back(Query{std::move(qid), {}});
    auto& candidates = dataset.queries[it->second].candidates;
    doc.doc_index = candidates.size();
    candidates.push_back(std::move(doc));
  }
  if (dataset.queries.empty()) throw ParseError(0, "no documents in LETOR input");
  return dataset;
}

Dataset load_letor(const std::filesystem::path& path, std::size_t feature_dim, Split split) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open LETOR file " + path.string());
  return parse_letor(in, feature_dim, split);
}

std::size_t infer_feature_dim(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open LETOR file " + path.string());
  std::size_t max_index = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::istringstream tokens{std::string(line)};
    std::string token;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos || token.starts_with("qid:")) continue;
      std::size_t index = 0;
      if (!parse_number(std::string_view(token).substr(0, colon), index)) {
        throw ParseError(line_no, "malformed feature '" + token + "'");
      }
      max_index = std::max(max_index, index);
    }
  }
  if (max_index == 0) throw ParseError(0, "no features in LETOR input " + path.string());
  return max_index;
}

void write_letor(std::ostream& out, const Dataset& dataset) {
  fmt::memory_buffer buf;
  for (const auto& q : dataset.queries) {
    for (const auto& d : q.candidates) {
      buf.clear();
      fmt::format_to(std::back_inserter(buf), "{} qid:{}", d.relevance, q.query_id);
      for (std::size_t i = 0; i < d.features.size(); ++i) {
        fmt::format_to(std::back_inserter(buf), " {}:{}", i + 1, d.features[i]);
      }
      buf.push_back('\n');
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  }
}

void write_letor(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_letor(out, dataset);
}

Dataset normalize_min_max(const Dataset& dataset) {
  Dataset out = dataset;
  for (auto& q : out.queries) {
    for (std::size_t f = 0; f < out.feature_dim; ++f) {
      double lo = q.candidates.front().features[f];
      double hi = lo;
      for (const auto& d : q.candidates) {
        lo = std::min(lo, d.features[f]);
        hi = std::max(hi, d.features[f]);
      }
      const double range = hi - lo;
      for (auto& d : q.candidates) {
        d.features[f] = range > 0.0 ? (d.features[f] - lo) / range : 0.0;
      }
    }
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (n_queries == 0 || docs_per_query == 0 || feature_dim == 0) {
    throw std::invalid_argument("synthetic spec counts must be positive");
  }
  if (relevance_distribution.size() != kMaxGrade + 1) {
    throw std::invalid_argument("relevance_distribution must have 5 entries (grades 0-4)");
  }
  double total = 0.0;
  for (double p : relevance_distribution) {
    if (!(p >= 0.0)) throw std::invalid_argument("relevance probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(fmt::format("relevance_distribution sums to {}, not 1", total));
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw std::invalid_argument("noise_scale must be a finite non-negative number");
  }
  if (!(clutter_scale >= 0.0) || !std::isfinite(clutter_scale)) {
    throw std::invalid_argument("clutter_scale must be a finite non-negative number");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_stream(spec.seed, 0);

  SyntheticData data;
  data.seed = spec.seed;
  data.hidden_weights.resize(spec.feature_dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (auto& w : data.hidden_weights) w = standard_normal(rng);
    norm = std::sqrt(std::inner_product(data.hidden_weights.begin(), data.hidden_weights.end(),
                                        data.hidden_weights.begin(), 0.0));
  }
  for (auto& w : data.hidden_weights) w /= norm;
  const auto& hidden = data.hidden_weights;

  std::size_t next_qid = 1;
  auto make_split = [&](Split split, std::size_t n_queries) {
    Dataset ds;
    ds.split = split;
    ds.feature_dim = spec.feature_dim;
    ds.queries.reserve(n_queries);
    for (std::size_t qi = 0; qi < n_queries; ++qi) {
      Query q;
      q.query_id = std::to_string(next_qid++);
      q.candidates.reserve(spec.docs_per_query);
      for (std::size_t di = 0; di < spec.docs_per_query; ++di) {
        Document d;
        d.doc_index = di;
        d.relevance = draw_grade(rng, spec.relevance_distribution);
        d.features.resize(spec.feature_dim);
        for (auto& x : d.features) x = spec.clutter_scale * standard_normal(rng);
        const double along = std::inner_product(d.features.begin(), d.features.end(), hidden.begin(), 0.0);
        const double target = d.relevance + spec.noise_scale * standard_normal(rng);
        for (std::size_t f = 0; f < spec.feature_dim; ++f) {
          d.features[f] += (target - along) * hidden[f];
        }
        q.candidates.push_back(std::move(d));
      }
      ds.queries.push_back(std::move(q));
    }
    return ds;
  };

  data.train = make_split(Split::kTrain, spec.n_queries);
  data.validation = make_split(Split::kValidation, spec.n_validation_queries);
  data.test = make_split(Split::kTest, spec.n_test_queries);
  return data;
}

void write_sidecar(const std::filesystem::path& path, const SyntheticData& data) {
  nlohmann::json j;
  j["weights"] = data.hidden_weights;
  j["seed"] = data.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<double> read_sidecar_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sidecar " + path.string());
  const auto j = nlohmann::json::parse(in);
  return j.at("weights").get<std::vector<double>>();
}

SyntheticSpec synthetic_spec_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  SyntheticSpec spec;
  spec.n_queries = j.value("n_queries", spec.n_queries);
  spec.docs_per_query = j.value("docs_per_query", spec.docs_per_query);
  spec.feature_dim = j.value("feature_dim", spec.feature_dim);
  spec.relevance_distribution = j.value("relevance_distribution", spec.relevance_distribution);
  spec.noise_scale = j.value("noise_scale", spec.noise_scale);
  spec.clutter_scale = j.value("clutter_scale", spec.clutter_scale);
  spec.seed = j.value("seed", spec.seed);
  spec.n_validation_queries = j.value("n_validation_queries", spec.n_validation_queries);
  spec.n_test_queries = j.value("n_test_queries", spec.n_test_queries);
  spec.validate();
  return spec;
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json j;
  j["n_queries"] = spec.n_queries;
  j["docs_per_query"] = spec.docs_per_query;
  j["feature_dim"] = spec.feature_dim;
  j["relevance_distribution"] = spec.relevance_distribution;
  j["noise_scale"] = spec.noise_scale;
  j["clutter_scale"] = spec.clutter_scale;
  j["seed"] = spec.seed;
  j["n_validation_queries"] = spec.n_validation_queries;
  j["n_test_queries"] = spec.n_test_queries;
  return j.dump(2);
}

const Query& sample_query(const Dataset& dataset, Rng& rng) {
  if (dataset.queries.empty()) throw std::invalid_argument("cannot sample from an empty dataset");
  return dataset.queries[uniform_index(rng, dataset.queries.size())];
}

}  // namespace roltr
