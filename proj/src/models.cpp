#include "cvtt/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "cvtt/error.hpp"

namespace cvtt {

ModelKind parse_model_kind(std::string_view name) {
  if (name == "popularity") return ModelKind::popularity;
  if (name == "itemknn") return ModelKind::itemknn;
  if (name == "ials") return ModelKind::ials;
  if (name == "slim") return ModelKind::slim;
  if (name == "multivae")
    throw UsageError("model 'multivae' is out of scope: only popularity, itemknn, ials and slim "
                     "are implemented");
  throw UsageError(fmt::format("unknown model '{}'", name));
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::popularity: return "popularity";
    case ModelKind::itemknn: return "itemknn";
    case ModelKind::ials: return "ials";
    case ModelKind::slim: return "slim";
  }
  return "?";
}

Similarity parse_similarity(std::string_view name) {
  if (name == "cosine") return Similarity::cosine;
  if (name == "jaccard") return Similarity::jaccard;
  if (name == "asymmetric") return Similarity::asymmetric;
  if (name == "dice") return Similarity::dice;
  if (name == "tversky") return Similarity::tversky;
  throw UsageError(fmt::format("unknown similarity '{}'", name));
}

std::string to_string(Similarity s) {
  switch (s) {
    case Similarity::cosine: return "cosine";
    case Similarity::jaccard: return "jaccard";
    case Similarity::asymmetric: return "asymmetric";
    case Similarity::dice: return "dice";
    case Similarity::tversky: return "tversky";
  }
  return "?";
}

// ---------------------------------------------------------------- scoring

void FittedModel::scores_into(UserId user, std::span<double> out) const {
  if (user >= n_users())
    throw UsageError(fmt::format("unknown user id {} (model fitted on {} users)", user, n_users()));
  if (out.size() != n_items()) throw UsageError("score buffer size does not match item count");
  std::fill(out.begin(), out.end(), 0.0);
  switch (kind_) {
    case ModelKind::popularity:
      std::copy(item_counts_.begin(), item_counts_.end(), out.begin());
      break;
    case ModelKind::itemknn:
    case ModelKind::slim: {
      const auto cols = history_->row_cols(user);
      const auto vals = history_->row_values(user);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const auto targets = item_matrix_.row_cols(cols[k]);
        const auto weights = item_matrix_.row_values(cols[k]);
        for (std::size_t t = 0; t < targets.size(); ++t) out[targets[t]] += vals[k] * weights[t];
      }
      break;
    }
    case ModelKind::ials: {
      Eigen::Map<Eigen::VectorXd> result(out.data(), static_cast<Eigen::Index>(out.size()));
      result.noalias() = item_factors_ * user_factors_.row(user).transpose();
      break;
    }
  }
}

std::vector<double> FittedModel::scores(UserId user) const {
  std::vector<double> out(n_items());
  scores_into(user, out);
  return out;
}

std::vector<ItemId> top_k_from_scores(std::span<const double> scores, std::size_t k,
                                      std::span<const ItemId> exclude) {
  if (k < 1) throw UsageError("k must be at least 1");
  std::vector<char> excluded(scores.size(), 0);
  for (auto i : exclude)
    if (i < scores.size()) excluded[i] = 1;
  std::vector<ItemId> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!excluded[i] && scores[i] > -std::numeric_limits<double>::infinity())
      candidates.push_back(static_cast<ItemId>(i));
  const auto better = [&](ItemId a, ItemId b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  const auto take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), better);
  candidates.resize(take);
  return candidates;
}

std::vector<ItemId> recommend_topk(const FittedModel& model, UserId user, std::size_t k,
                                   std::span<const ItemId> exclude) {
  return top_k_from_scores(model.scores(user), k, exclude);
}

// ---------------------------------------------------------------- popularity

FittedModel fit_popularity(const SparseMatrix& matrix) {
  FittedModel model(ModelKind::popularity, matrix);
  model.item_counts_.assign(matrix.n_cols(), 0.0);
  for (std::size_t u = 0; u < matrix.n_rows(); ++u) {
    const auto cols = matrix.row_cols(u);
    const auto vals = matrix.row_values(u);
    for (std::size_t k = 0; k < cols.size(); ++k) model.item_counts_[cols[k]] += vals[k];
  }
  return model;
}

FittedModel fit_itemknn(const SparseMatrix& matrix, const ItemKNNParams& params,
                        const FitOptions& options) {
  params.validate();
  FittedModel model(ModelKind::itemknn, matrix);
  model.item_matrix_ = knn_similarity(matrix, params, options.threads);
  return model;
}

// ---------------------------------------------------------------- serialization

namespace {

constexpr std::string_view kMagic = "cvtt-model";
constexpr int kFormatVersion = 1;

void write_matrix(std::string& out, std::string_view tag, const SparseMatrix& m) {
  out += fmt::format("{} {} {} {}\n", tag, m.n_rows(), m.n_cols(), m.nnz());
  for (const auto& t : m.triplets()) out += fmt::format("{} {} {:a}\n", t.row, t.col, t.value);
}

void write_dense(std::string& out, std::string_view tag, const Eigen::MatrixXd& m) {
  out += fmt::format("{} {} {}\n", tag, m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ' ';
      out += fmt::format("{:a}", m(r, c));
    }
    out += '\n';
  }
}

class Reader {
 public:
  explicit Reader(std::string_view text) : in_(std::string(text)) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of model dump");
    return w;
  }
  void expect(std::string_view tag) {
    if (word() != tag) fail(fmt::format("expected '{}' in model dump", tag));
  }
  std::size_t size() {
    const auto w = word();
    char* end = nullptr;
    const auto v = std::strtoull(w.c_str(), &end, 10);
    if (*end != '\0') fail(fmt::format("bad integer '{}' in model dump", w));
    return static_cast<std::size_t>(v);
  }
  double real() {
    const auto w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (*end != '\0') fail(fmt::format("bad number '{}' in model dump", w));
    return v;
  }
  SparseMatrix matrix(std::string_view tag, bool signed_values) {
    expect(tag);
    const auto rows = size(), cols = size(), nnz = size();
    std::vector<Triplet> t(nnz);
    for (auto& x : t) {
      x.row = static_cast<std::uint32_t>(size());
      x.col = static_cast<std::uint32_t>(size());
      x.value = real();
      if (x.row >= rows || x.col >= cols) fail("matrix entry outside declared dimensions");
    }
    return signed_values ? SparseMatrix::from_signed_triplets(rows, cols, std::move(t))
                         : SparseMatrix::from_triplets(rows, cols, std::move(t));
  }
  Eigen::MatrixXd dense(std::string_view tag) {
    expect(tag);
    const auto rows = size(), cols = size();
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = real();
    return m;
  }
  [[noreturn]] static void fail(const std::string& what) { throw DataError(what); }

 private:
  std::istringstream in_;
};

}  // namespace

std::string serialize_model(const FittedModel& model) {
  std::string out = fmt::format("{} {}\nkind {}\n", kMagic, kFormatVersion, to_string(model.kind()));
  write_matrix(out, "history", model.history());
  switch (model.kind()) {
    case ModelKind::popularity:
      out += fmt::format("counts {}\n", model.item_counts().size());
      for (double c : model.item_counts()) out += fmt::format("{:a}\n", c);
      break;
    case ModelKind::itemknn:
    case ModelKind::slim:
      write_matrix(out, "items", model.item_matrix());
      break;
    case ModelKind::ials:
      write_dense(out, "user_factors", model.user_factors());
      write_dense(out, "item_factors", model.item_factors());
      break;
  }
  return out;
}

FittedModel deserialize_model(std::string_view text) {
  Reader in(text);
  in.expect(kMagic);
  if (const auto version = in.size(); version != kFormatVersion)
    Reader::fail(fmt::format("unsupported model dump version {}", version));
  in.expect("kind");
  const auto kind = parse_model_kind(in.word());
  FittedModel model(kind, in.matrix("history", false));
  switch (kind) {
    case ModelKind::popularity: {
      in.expect("counts");
      model.item_counts_.resize(in.size());
      for (auto& c : model.item_counts_) c = in.real();
      break;
    }
    case ModelKind::itemknn:
    case ModelKind::slim:
      model.item_matrix_ = in.matrix("items", true);
      break;
    case ModelKind::ials:
      model.user_factors_ = in.dense("user_factors");
      model.item_factors_ = in.dense("item_factors");
      break;
  }
  return model;
}

}  // namespace cvtt
