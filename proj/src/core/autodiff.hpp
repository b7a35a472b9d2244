#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace ftdn::nn {

using Mat = Eigen::MatrixXd;

// Reverse-mode tape over dense 64-bit matrices. Each forward op records a
// backward closure; backward() replays them in reverse. All math is
// sequential Eigen, so a fixed op order gives bit-identical results run to
// run. Tapes are single-threaded; parallelism happens across tapes with
// gradients merged by the caller in a fixed order.
class Tape {
public:
  using VarId = std::int32_t;

  VarId leaf(Mat value, bool needs_grad) {
    nodes_.push_back(Node{std::move(value), Mat(), {}, needs_grad});
    return static_cast<VarId>(nodes_.size() - 1);
  }

  const Mat& value(VarId id) const { return nodes_[id].value; }
  Mat& grad(VarId id) { return ensure_grad(id); }
  bool needs_grad(VarId id) const { return nodes_[id].needs_grad; }

  // ---- ops ----
  VarId matmul(VarId a, VarId b);              // A*B
  VarId matmul_nt(VarId a, VarId b);           // A*B^T
  VarId add(VarId a, VarId b);                 // same shape
  VarId sub(VarId a, VarId b);
  VarId add_col_broadcast(VarId a, VarId col); // A + col*1^T
  VarId hadamard(VarId a, VarId b);
  VarId scale(VarId a, double c);
  VarId transpose(VarId a);
  VarId sigmoid(VarId a);
  VarId tanh(VarId a);
  VarId relu(VarId a);
  VarId leaky_relu(VarId a, double slope);
  VarId softmax_col(VarId a);                  // a is n x 1
  VarId slice_rows(VarId a, int row0, int rows);
  VarId vstack(VarId a, VarId b);
  VarId hstack(const std::vector<VarId>& parts);
  VarId repeat_rows(VarId row, int n);         // row is 1 x d -> n x d
  VarId repeat_cols(VarId col, int n);         // col is d x 1 -> d x n
  VarId flatten_rowmajor(VarId a);             // m x n -> (m*n) x 1
  VarId sum_all(VarId a);                      // 1 x 1

  // Sum over samples of squared error, divided by the per-sample entry
  // count: sum((a-b)^2) / entries_per_sample.
  VarId sse_scaled(VarId a, VarId b, double entries_per_sample);

  // Per-column binary cross entropy summed over columns. `logits` is
  // 1 x B; probabilities are sigmoid(logit) clamped to
  // [1e-12, 1-1e-12] before the log.
  VarId bce_sum_from_logits(VarId logits, const std::vector<double>& labels);

  // Runs reverse-mode from a scalar node, seeding with `seed_grad`.
  void backward(VarId loss, double seed_grad = 1.0);

  std::size_t size() const { return nodes_.size(); }

  // Test hook: register an arbitrary op with a custom backward closure.
  VarId custom(Mat value, std::vector<VarId> parents,
               std::function<void(Tape&, VarId)> backward_fn);

private:
  struct Node {
    Mat value;
    Mat grad;
    std::vector<VarId> parents;
    bool needs_grad = false;
    std::function<void(Tape&, VarId)> backward_fn;
  };

  Mat& ensure_grad(VarId id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  bool any_needs_grad(const std::vector<VarId>& ids) const {
    for (VarId id : ids)
      if (nodes_[id].needs_grad) return true;
    return false;
  }

  VarId push(Mat value, std::vector<VarId> parents,
             std::function<void(Tape&, VarId)> backward_fn);

  std::vector<Node> nodes_;

  friend class GruEncodeOp;
  friend class GruDecodeOp;
};

}  // namespace ftdn::nn
