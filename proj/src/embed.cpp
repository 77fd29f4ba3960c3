#include "lird/embed.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include "lird/checksum.hpp"

namespace lird::embed {

EmbeddingTable::EmbeddingTable(RowMatrix rows) : rows_(std::move(rows)) {
  if (rows_.cols() == 0) throw std::invalid_argument("embedding dimension must be > 0");
  if (!rows_.allFinite()) throw std::invalid_argument("embedding table has non-finite entries");
}

Eigen::VectorXd EmbeddingTable::lookup(ItemId item) const {
  if (item >= size()) {
    throw std::out_of_range("item " + std::to_string(item) + " outside catalog of " +
                            std::to_string(size()));
  }
  return rows_.row(item).transpose();
}

EmbeddingTable EmbeddingTable::normalized() const {
  RowMatrix out = rows_;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return EmbeddingTable(std::move(out));
}

EmbeddingTable EmbeddingTable::centered() const {
  RowMatrix out = rows_;
  const Eigen::RowVectorXd mean = out.colwise().mean();
  out.rowwise() -= mean;
  return EmbeddingTable(std::move(out));
}

std::uint64_t EmbeddingTable::checksum() const {
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(rows_.rows()),
                                 static_cast<std::uint64_t>(rows_.cols())};
  auto h = fnv1a(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(dims),
                                                sizeof(dims)));
  return fnv1a(std::span<const double>(rows_.data(), static_cast<std::size_t>(rows_.size())), h);
}

Eigen::VectorXd lookup(const EmbeddingTable& table, ItemId item) { return table.lookup(item); }

std::vector<std::vector<ItemId>> positive_sentences(const std::vector<data::Session>& sessions) {
  std::vector<std::vector<ItemId>> sentences;
  sentences.reserve(sessions.size());
  for (const auto& s : sessions) {
    std::vector<ItemId> sentence = s.prior_positives;
    for (const auto& e : s.events) {
      if (e.feedback != data::FeedbackKind::kSkip) sentence.push_back(e.item);
    }
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
  }
  return sentences;
}

RowMatrix initial_embeddings(std::size_t catalog_size, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double bound = 0.5 / static_cast<double>(dim);
  std::uniform_real_distribution<double> init(-bound, bound);
  RowMatrix rows(catalog_size, dim);
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = init(rng);
  return rows;
}

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
}  // namespace

double sgns_pair_loss(const Eigen::VectorXd& center, const Eigen::MatrixXd& outputs,
                      Eigen::VectorXd* grad_center, Eigen::MatrixXd* grad_outputs) {
  const Eigen::VectorXd dots = outputs * center;
  double loss = -log_sigmoid(dots(0));
  for (Eigen::Index k = 1; k < dots.size(); ++k) loss -= log_sigmoid(-dots(k));

  if (grad_center || grad_outputs) {
    // dL/d(dot_0) = s(dot_0) - 1 ; dL/d(dot_k) = s(dot_k)
    Eigen::VectorXd coeff(dots.size());
    coeff(0) = sigmoid(dots(0)) - 1.0;
    for (Eigen::Index k = 1; k < dots.size(); ++k) coeff(k) = sigmoid(dots(k));
    if (grad_center) *grad_center = outputs.transpose() * coeff;
    if (grad_outputs) *grad_outputs = coeff * center.transpose();
  }
  return loss;
}

TrainResult train_embeddings(const std::vector<data::Session>& sessions, std::size_t catalog_size,
                             const SkipGramConfig& config) {
  if (sessions.empty()) throw std::invalid_argument("train_embeddings: no sessions");
  if (config.dim == 0 || config.window == 0) {
    throw std::invalid_argument("train_embeddings: dim and window must be >= 1");
  }
  const auto sentences = positive_sentences(sessions);
  if (sentences.empty()) throw std::invalid_argument("train_embeddings: empty positive-item corpus");

  RowMatrix in = initial_embeddings(catalog_size, config.dim, config.seed);
  TrainResult result;
  if (config.epochs == 0) {
    result.table = EmbeddingTable(std::move(in));
    return result;
  }
  RowMatrix out = RowMatrix::Zero(catalog_size, config.dim);

  std::vector<double> counts(catalog_size, 0.0);
  std::size_t n_pairs_per_epoch = 0;
  for (const auto& s : sentences) {
    for (auto item : s) {
      if (item >= catalog_size) throw std::out_of_range("train_embeddings: item outside catalog");
      counts[item] += 1.0;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t lo = i >= config.window ? i - config.window : 0;
      const std::size_t hi = std::min(s.size() - 1, i + config.window);
      n_pairs_per_epoch += hi - lo;
    }
  }
  for (auto& c : counts) c = std::pow(c, 0.75);
  std::discrete_distribution<std::size_t> noise(counts.begin(), counts.end());

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const double total_pairs = static_cast<double>(n_pairs_per_epoch * config.epochs);
  std::size_t pairs_done = 0;

  Eigen::MatrixXd outputs(1 + config.n_negative, config.dim);
  std::vector<std::size_t> rows(1 + config.n_negative);
  Eigen::VectorXd grad_center;
  Eigen::MatrixXd grad_outputs;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_n = 0;
    for (const auto& s : sentences) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(s.size() - 1, i + config.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const double lr = std::max(config.learning_rate * 1e-4,
                                     config.learning_rate *
                                         (1.0 - static_cast<double>(pairs_done) / total_pairs));
          ++pairs_done;
          const ItemId center = s[i];
          rows[0] = s[j];
          for (std::size_t k = 1; k < rows.size(); ++k) rows[k] = noise(rng);
          for (std::size_t k = 0; k < rows.size(); ++k) outputs.row(k) = out.row(rows[k]);

          const Eigen::VectorXd v = in.row(center).transpose();
          loss_sum += sgns_pair_loss(v, outputs, &grad_center, &grad_outputs);
          ++loss_n;
          for (std::size_t k = 0; k < rows.size(); ++k) out.row(rows[k]) -= lr * grad_outputs.row(k);
          in.row(center) -= lr * grad_center.transpose();
        }
      }
    }
    result.epoch_loss.push_back(loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0);
  }
  result.table = EmbeddingTable(std::move(in));
  return result;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine of a zero-norm vector");
  return a.dot(b) / (na * nb);
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embeddings " + path.string());
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[64];
  const auto& m = table.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
      if (j) out << ' ';
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings " + path.string());
  std::size_t n = 0, d = 0;
  if (!(in >> n >> d) || n == 0 || d == 0) {
    throw std::runtime_error("embeddings " + path.string() + ": bad header");
  }
  RowMatrix rows(n, d);
  std::string tok;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!(in >> tok)) throw std::runtime_error("embeddings " + path.string() + ": truncated");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw std::runtime_error("embeddings " + path.string() + ": bad number '" + tok + "'");
      }
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return EmbeddingTable(std::move(rows));
}

}  // namespace lird::embed
