#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lird/data.hpp"

namespace lird::embed {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// catalog_size x d item embedding matrix. Immutable once built.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(RowMatrix rows);

  std::size_t size() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
  const RowMatrix& matrix() const { return rows_; }

  /// Row of `item`; throws std::out_of_range for ids outside the catalog.
  Eigen::VectorXd lookup(ItemId item) const;

  /// Copy with every non-zero row scaled to unit L2 norm.
  EmbeddingTable normalized() const;
  /// Copy with the column mean subtracted from every row.
  EmbeddingTable centered() const;

  std::uint64_t checksum() const;

 private:
  RowMatrix rows_;
};

Eigen::VectorXd lookup(const EmbeddingTable& table, ItemId item);

struct SkipGramConfig {
  std::size_t dim = 50;
  std::size_t window = 5;
  std::size_t n_negative = 5;
  std::size_t epochs = 10;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

struct TrainResult {
  EmbeddingTable table;
  std::vector<double> epoch_loss;  // mean negative-sampling loss per epoch
};

/// Sentences of positively-engaged items, one per session: the prior
/// positives followed by clicked/ordered events in temporal order.
std::vector<std::vector<ItemId>> positive_sentences(const std::vector<data::Session>& sessions);

/// Skip-gram with negative sampling over positive-item sentences.
TrainResult train_embeddings(const std::vector<data::Session>& sessions, std::size_t catalog_size,
                             const SkipGramConfig& config);

/// Seeded uniform initialisation in [-0.5/d, 0.5/d] used by train_embeddings.
RowMatrix initial_embeddings(std::size_t catalog_size, std::size_t dim, std::uint64_t seed);

/// Negative-sampling loss for one (center, context) pair:
///   -log s(u_0 . v) - sum_k log s(-u_k . v)
/// where row 0 of `outputs` is the true context and the remaining rows are
/// negatives. If the gradient pointers are non-null they receive dL/dv and
/// dL/du (same shape as `outputs`).
double sgns_pair_loss(const Eigen::VectorXd& center, const Eigen::MatrixXd& outputs,
                      Eigen::VectorXd* grad_center = nullptr,
                      Eigen::MatrixXd* grad_outputs = nullptr);

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Text format: header "catalog_size d", then one row of d decimals per item.
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace lird::embed
