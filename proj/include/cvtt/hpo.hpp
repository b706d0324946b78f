#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cvtt/ingest.hpp"
#include "cvtt/models.hpp"
#include "cvtt/rng.hpp"

namespace cvtt {

using ParamValue = std::variant<bool, std::int64_t, double, std::string>;
using ParamSet = std::map<std::string, ParamValue>;

/// `{name:value;name:value}` in key order; doubles in shortest round-trip
/// form. Contains no commas, so it can sit in a CSV field unquoted.
std::string format_params(const ParamSet& params);
std::string format_value(const ParamValue& value);

struct Dimension {
  enum class Type { real_uniform, real_log_uniform, int_uniform, categorical };
  std::string name;
  Type type = Type::real_uniform;
  double low = 0.0;
  double high = 0.0;
  std::vector<ParamValue> choices;  // categorical only

  static Dimension real(std::string name, double low, double high);
  static Dimension log_real(std::string name, double low, double high);
  static Dimension integer(std::string name, std::int64_t low, std::int64_t high);
  static Dimension categorical(std::string name, std::vector<ParamValue> choices);
};

struct SearchSpace {
  ModelKind kind = ModelKind::popularity;
  std::vector<Dimension> dimensions;

  void validate() const;
};

/// Search space of each tunable model. popularity has no dimensions.
SearchSpace default_space(ModelKind kind);
SearchSpace default_space(std::string_view model_name);

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual ParamSet sample(const SearchSpace& space, Rng& rng) const = 0;
};

// Each dimension drawn independently: uniform, uniform in log space, uniform
// integer (inclusive bounds), or a uniform pick among the choices.
class RandomSampler final : public Sampler {
 public:
  ParamSet sample(const SearchSpace& space, Rng& rng) const override;
};

ParamSet sample_params(const SearchSpace& space, Rng& rng);

/// Fits `kind` with hyperparameters from `params`, defaults for the rest.
/// `seed` drives any random initialization.
FittedModel fit_with_params(ModelKind kind, const ParamSet& params, const SparseMatrix& matrix,
                            std::uint64_t seed, const FitOptions& options = {});

struct TrialRecord {
  std::size_t trial = 0;
  ParamSet params;
  double score = 0.0;
  double seconds = 0.0;
  bool failed = false;
  std::string failure;
};

struct TuneResult {
  ParamSet best_params;
  double best_score = 0.0;
  std::size_t best_trial = 0;
  std::vector<TrialRecord> trials;
};

struct TuneOptions {
  std::size_t n_trials = 25;
  std::uint64_t seed = 0;
  std::size_t k = 10;  // NDCG cutoff used for selection
  unsigned threads = 1;
  const Sampler* sampler = nullptr;  // RandomSampler when null
};

/// Fits every trial on `train` and scores NDCG@k on `valid`, excluding the
/// train history. Parameters for all trials are drawn up front. Trials whose
/// fit turns non-finite are marked failed; the best non-failed trial wins,
/// ties to the lowest index. The test part is deliberately not a parameter.
TuneResult tune(ModelKind kind, const SearchSpace& space, const SparseMatrix& train,
                const InteractionLog& valid, const TuneOptions& options);

std::string trial_log_csv(const TuneResult& result);  // trial,params,score,seconds,failed

}  // namespace cvtt
