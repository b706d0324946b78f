#include "cvtt/hpo.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "cvtt/error.hpp"
#include "cvtt/metrics.hpp"

namespace cvtt {

std::string format_value(const ParamValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>)
          return v ? "true" : "false";
        else
          return fmt::format("{}", v);
      },
      value);
}

std::string format_params(const ParamSet& params) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, value] : params) {
    if (!first) out += ';';
    first = false;
    out += name;
    out += ':';
    out += format_value(value);
  }
  out += '}';
  return out;
}

Dimension Dimension::real(std::string name, double low, double high) {
  return {std::move(name), Type::real_uniform, low, high, {}};
}
Dimension Dimension::log_real(std::string name, double low, double high) {
  return {std::move(name), Type::real_log_uniform, low, high, {}};
}
Dimension Dimension::integer(std::string name, std::int64_t low, std::int64_t high) {
  return {std::move(name), Type::int_uniform, static_cast<double>(low), static_cast<double>(high),
          {}};
}
Dimension Dimension::categorical(std::string name, std::vector<ParamValue> choices) {
  return {std::move(name), Type::categorical, 0.0, 0.0, std::move(choices)};
}

void SearchSpace::validate() const {
  for (const auto& d : dimensions) {
    if (d.type == Dimension::Type::categorical) {
      if (d.choices.empty())
        throw UsageError(fmt::format("dimension '{}' has no choices", d.name));
    } else if (!(d.low <= d.high)) {
      throw UsageError(fmt::format("dimension '{}' needs low <= high", d.name));
    } else if (d.type == Dimension::Type::real_log_uniform && !(d.low > 0.0)) {
      throw UsageError(fmt::format("log-uniform dimension '{}' needs a positive lower bound",
                                   d.name));
    }
  }
}

SearchSpace default_space(ModelKind kind) {
  SearchSpace s;
  s.kind = kind;
  switch (kind) {
    case ModelKind::popularity:
      break;
    case ModelKind::slim:
      s.dimensions = {Dimension::log_real("l1_ratio", 1e-5, 1.0),
                      Dimension::log_real("alpha", 1e-3, 1.0),
                      Dimension::categorical("positive_only", {true, false}),
                      Dimension::integer("top_k", 5, 800)};
      break;
    case ModelKind::ials:
      s.dimensions = {Dimension::categorical("confidence_scaling", {true, false}),
                      Dimension::integer("n_factors", 1, 200),
                      Dimension::log_real("alpha", 1e-3, 50.0),
                      Dimension::log_real("epsilon", 1e-3, 10.0),
                      Dimension::log_real("regularization", 1e-5, 1e-2)};
      break;
    case ModelKind::itemknn:
      s.dimensions = {Dimension::integer("top_k", 1, 200), Dimension::integer("shrink", 0, 600),
                      Dimension::categorical("similarity", {std::string("cosine"),
                                                            std::string("jaccard"),
                                                            std::string("asymmetric"),
                                                            std::string("dice"),
                                                            std::string("tversky")})};
      break;
  }
  return s;
}

SearchSpace default_space(std::string_view model_name) {
  return default_space(parse_model_kind(model_name));
}

ParamSet RandomSampler::sample(const SearchSpace& space, Rng& rng) const {
  ParamSet out;
  for (const auto& d : space.dimensions) {
    switch (d.type) {
      case Dimension::Type::real_uniform:
        out[d.name] = rng.uniform(d.low, d.high);
        break;
      case Dimension::Type::real_log_uniform: {
        const double v = std::exp(rng.uniform(std::log(d.low), std::log(d.high)));
        out[d.name] = std::clamp(v, d.low, d.high);
        break;
      }
      case Dimension::Type::int_uniform:
        out[d.name] = rng.between(static_cast<std::int64_t>(d.low), static_cast<std::int64_t>(d.high));
        break;
      case Dimension::Type::categorical:
        out[d.name] = d.choices[rng.below(d.choices.size())];
        break;
    }
  }
  return out;
}

ParamSet sample_params(const SearchSpace& space, Rng& rng) {
  return RandomSampler{}.sample(space, rng);
}

namespace {

class ParamReader {
 public:
  explicit ParamReader(const ParamSet& params) : params_(params) {}

  double real(const char* name, double fallback) const {
    const auto it = params_.find(name);
    if (it == params_.end()) return fallback;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    throw UsageError(fmt::format("parameter '{}' must be numeric", name));
  }
  int integer(const char* name, int fallback) const {
    const auto it = params_.find(name);
    if (it == params_.end()) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<int>(*i);
    if (const auto* d = std::get_if<double>(&it->second)) return static_cast<int>(std::lround(*d));
    throw UsageError(fmt::format("parameter '{}' must be an integer", name));
  }
  bool boolean(const char* name, bool fallback) const {
    const auto it = params_.find(name);
    if (it == params_.end()) return fallback;
    if (const auto* b = std::get_if<bool>(&it->second)) return *b;
    throw UsageError(fmt::format("parameter '{}' must be a boolean", name));
  }
  std::string text(const char* name, std::string fallback) const {
    const auto it = params_.find(name);
    if (it == params_.end()) return fallback;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw UsageError(fmt::format("parameter '{}' must be a string", name));
  }

 private:
  const ParamSet& params_;
};

}  // namespace

FittedModel fit_with_params(ModelKind kind, const ParamSet& params, const SparseMatrix& matrix,
                            std::uint64_t seed, const FitOptions& options) {
  const ParamReader in(params);
  switch (kind) {
    case ModelKind::popularity:
      return fit_popularity(matrix);
    case ModelKind::itemknn: {
      ItemKNNParams p;
      p.top_k = in.integer("top_k", p.top_k);
      p.shrink = in.real("shrink", p.shrink);
      p.similarity = parse_similarity(in.text("similarity", to_string(p.similarity)));
      p.asymmetric_alpha = in.real("asymmetric_alpha", p.asymmetric_alpha);
      p.tversky_alpha = in.real("tversky_alpha", p.tversky_alpha);
      p.tversky_beta = in.real("tversky_beta", p.tversky_beta);
      return fit_itemknn(matrix, p, options);
    }
    case ModelKind::ials: {
      IALSParams p;
      p.confidence_scaling = in.boolean("confidence_scaling", p.confidence_scaling);
      p.n_factors = in.integer("n_factors", p.n_factors);
      p.alpha = in.real("alpha", p.alpha);
      p.epsilon = in.real("epsilon", p.epsilon);
      p.regularization = in.real("regularization", p.regularization);
      p.n_sweeps = in.integer("n_sweeps", p.n_sweeps);
      p.seed = seed;
      return fit_ials(matrix, p, options);
    }
    case ModelKind::slim: {
      SLIMParams p;
      p.l1_ratio = in.real("l1_ratio", p.l1_ratio);
      p.alpha = in.real("alpha", p.alpha);
      p.positive_only = in.boolean("positive_only", p.positive_only);
      p.top_k = in.integer("top_k", p.top_k);
      p.max_cd_iters = in.integer("max_cd_iters", p.max_cd_iters);
      p.cd_tolerance = in.real("cd_tolerance", p.cd_tolerance);
      return fit_slim(matrix, p, options);
    }
  }
  throw UsageError("unknown model kind");
}

TuneResult tune(ModelKind kind, const SearchSpace& space, const SparseMatrix& train,
                const InteractionLog& valid, const TuneOptions& options) {
  if (options.n_trials < 1) throw UsageError("tune needs at least one trial");
  if (space.kind != kind) throw UsageError("search space belongs to a different model");
  space.validate();

  const RandomSampler fallback;
  const Sampler& sampler = options.sampler ? *options.sampler : fallback;
  Rng rng(options.seed);
  TuneResult result;
  result.trials.resize(options.n_trials);
  for (std::size_t t = 0; t < options.n_trials; ++t) {
    result.trials[t].trial = t;
    result.trials[t].params = sampler.sample(space, rng);
  }

  const auto seen = seen_items(train);
  EvalOptions eval;
  eval.metrics = {Metric::ndcg};
  eval.ks = {options.k};
  eval.threads = options.threads;
  const FitOptions fit{options.threads};

  bool any = false;
  for (auto& trial : result.trials) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto model = fit_with_params(kind, trial.params, train, options.seed, fit);
      trial.score = evaluate_ranking(model, seen, valid, eval).front().mean;
      if (!std::isfinite(trial.score))
        throw NumericError("validation score is non-finite", trial.trial);
    } catch (const NumericError& e) {
      trial.failed = true;
      trial.failure = e.what();
      trial.score = std::nan("");
    }
    trial.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!trial.failed && (!any || trial.score > result.best_score)) {
      any = true;
      result.best_score = trial.score;
      result.best_trial = trial.trial;
      result.best_params = trial.params;
    }
  }
  if (!any)
    throw ExecutionError(fmt::format("all {} {} trials failed (first: {})", options.n_trials,
                                     to_string(kind), result.trials.front().failure));
  return result;
}

std::string trial_log_csv(const TuneResult& result) {
  std::string out = "trial,params,score,seconds,failed\n";
  for (const auto& t : result.trials)
    out += fmt::format("{},{},{},{:.6f},{}\n", t.trial, format_params(t.params),
                       t.failed ? std::string("nan") : fmt::format("{}", t.score), t.seconds,
                       t.failed ? 1 : 0);
  return out;
}

}  // namespace cvtt
