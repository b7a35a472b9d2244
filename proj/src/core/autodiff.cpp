#include "core/autodiff.hpp"

#include <cmath>

namespace ftdn::nn {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    raise(ErrorKind::DimensionMismatch, std::string("DimensionMismatch: ") + op);
}

}  // namespace

Tape::VarId Tape::push(Mat value, std::vector<VarId> parents,
                       std::function<void(Tape&, VarId)> backward_fn) {
  const bool needs = any_needs_grad(parents);
  Node node;
  node.value = std::move(value);
  node.parents = std::move(parents);
  node.needs_grad = needs;
  if (needs) node.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(node));
  return static_cast<VarId>(nodes_.size() - 1);
}

Tape::VarId Tape::custom(Mat value, std::vector<VarId> parents,
                         std::function<void(Tape&, VarId)> backward_fn) {
  return push(std::move(value), std::move(parents), std::move(backward_fn));
}

Tape::VarId Tape::matmul(VarId a, VarId b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  if (A.cols() != B.rows())
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: matmul");
  return push(A * B, {a, b}, [a, b](Tape& t, VarId out) {
    const Mat& g = t.nodes_[out].grad;
    t.ensure_grad(a).noalias() += g * t.value(b).transpose();
    t.ensure_grad(b).noalias() += t.value(a).transpose() * g;
  });
}

Tape::VarId Tape::matmul_nt(VarId a, VarId b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  if (A.cols() != B.cols())
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: matmul_nt");
  return push(A * B.transpose(), {a, b}, [a, b](Tape& t, VarId out) {
    const Mat& g = t.nodes_[out].grad;
    t.ensure_grad(a).noalias() += g * t.value(b);
    t.ensure_grad(b).noalias() += g.transpose() * t.value(a);
  });
}

Tape::VarId Tape::add(VarId a, VarId b) {
  check_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), {a, b}, [a, b](Tape& t, VarId out) {
    const Mat& g = t.nodes_[out].grad;
    t.ensure_grad(a) += g;
    t.ensure_grad(b) += g;
  });
}

Tape::VarId Tape::sub(VarId a, VarId b) {
  check_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), {a, b}, [a, b](Tape& t, VarId out) {
    const Mat& g = t.nodes_[out].grad;
    t.ensure_grad(a) += g;
    t.ensure_grad(b) -= g;
  });
}

Tape::VarId Tape::add_col_broadcast(VarId a, VarId col) {
  const Mat& A = value(a);
  const Mat& c = value(col);
  if (c.cols() != 1 || c.rows() != A.rows())
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: add_col_broadcast");
  Mat out = A.colwise() + c.col(0);
  return push(std::move(out), {a, col}, [a, col](Tape& t, VarId out_id) {
    const Mat& g = t.nodes_[out_id].grad;
    t.ensure_grad(a) += g;
    t.ensure_grad(col) += g.rowwise().sum();
  });
}

Tape::VarId Tape::hadamard(VarId a, VarId b) {
  check_same_shape(value(a), value(b), "hadamard");
  return push(value(a).cwiseProduct(value(b)), {a, b},
              [a, b](Tape& t, VarId out) {
                const Mat& g = t.nodes_[out].grad;
                t.ensure_grad(a) += g.cwiseProduct(t.value(b));
                t.ensure_grad(b) += g.cwiseProduct(t.value(a));
              });
}

Tape::VarId Tape::scale(VarId a, double c) {
  return push(value(a) * c, {a}, [a, c](Tape& t, VarId out) {
    t.ensure_grad(a) += t.nodes_[out].grad * c;
  });
}

Tape::VarId Tape::transpose(VarId a) {
  return push(value(a).transpose(), {a}, [a](Tape& t, VarId out) {
    t.ensure_grad(a) += t.nodes_[out].grad.transpose();
  });
}

Tape::VarId Tape::sigmoid(VarId a) {
  Mat out = value(a).array().logistic();
  return push(std::move(out), {a}, [a](Tape& t, VarId out_id) {
    const Mat& y = t.value(out_id);
    const Mat& g = t.nodes_[out_id].grad;
    t.ensure_grad(a).array() += g.array() * y.array() * (1.0 - y.array());
  });
}

Tape::VarId Tape::tanh(VarId a) {
  Mat out = value(a).array().tanh();
  return push(std::move(out), {a}, [a](Tape& t, VarId out_id) {
    const Mat& y = t.value(out_id);
    const Mat& g = t.nodes_[out_id].grad;
    t.ensure_grad(a).array() += g.array() * (1.0 - y.array().square());
  });
}

Tape::VarId Tape::relu(VarId a) {
  Mat out = value(a).cwiseMax(0.0);
  return push(std::move(out), {a}, [a](Tape& t, VarId out_id) {
    const Mat& x = t.value(a);
    const Mat& g = t.nodes_[out_id].grad;
    t.ensure_grad(a).array() +=
        g.array() * (x.array() > 0.0).cast<double>();
  });
}

Tape::VarId Tape::leaky_relu(VarId a, double slope) {
  const Mat& x = value(a);
  Mat out = x.array().max(x.array() * slope);
  return push(std::move(out), {a}, [a, slope](Tape& t, VarId out_id) {
    const Mat& x_in = t.value(a);
    const Mat& g = t.nodes_[out_id].grad;
    t.ensure_grad(a).array() +=
        g.array() *
        (x_in.array() > 0.0).select(Eigen::ArrayXXd::Constant(x_in.rows(), x_in.cols(), 1.0),
                                    Eigen::ArrayXXd::Constant(x_in.rows(), x_in.cols(), slope));
  });
}

Tape::VarId Tape::softmax_col(VarId a) {
  const Mat& v = value(a);
  if (v.cols() != 1)
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: softmax_col");
  const double m = v.maxCoeff();
  Mat e = (v.array() - m).exp();
  Mat y = e / e.sum();
  return push(std::move(y), {a}, [a](Tape& t, VarId out_id) {
    const Mat& y_out = t.value(out_id);
    const Mat& g = t.nodes_[out_id].grad;
    const double dot = (g.array() * y_out.array()).sum();
    t.ensure_grad(a).array() += y_out.array() * (g.array() - dot);
  });
}

Tape::VarId Tape::slice_rows(VarId a, int row0, int rows) {
  Mat out = value(a).middleRows(row0, rows);
  return push(std::move(out), {a}, [a, row0, rows](Tape& t, VarId out_id) {
    t.ensure_grad(a).middleRows(row0, rows) += t.nodes_[out_id].grad;
  });
}

Tape::VarId Tape::vstack(VarId a, VarId b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  if (A.cols() != B.cols())
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: vstack");
  Mat out(A.rows() + B.rows(), A.cols());
  out.topRows(A.rows()) = A;
  out.bottomRows(B.rows()) = B;
  const int ra = static_cast<int>(A.rows());
  const int rb = static_cast<int>(B.rows());
  return push(std::move(out), {a, b}, [a, b, ra, rb](Tape& t, VarId out_id) {
    const Mat& g = t.nodes_[out_id].grad;
    t.ensure_grad(a) += g.topRows(ra);
    t.ensure_grad(b) += g.bottomRows(rb);
  });
}

Tape::VarId Tape::hstack(const std::vector<VarId>& parts) {
  if (parts.empty()) raise(ErrorKind::InvalidArgument, "hstack: empty");
  Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (VarId p : parts) {
    if (value(p).rows() != rows)
      raise(ErrorKind::DimensionMismatch, "DimensionMismatch: hstack");
    cols += value(p).cols();
  }
  Mat out(rows, cols);
  Eigen::Index c = 0;
  for (VarId p : parts) {
    out.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  return push(std::move(out), parts, [parts](Tape& t, VarId out_id) {
    const Mat& g = t.nodes_[out_id].grad;
    Eigen::Index c0 = 0;
    for (VarId p : parts) {
      const Eigen::Index n = t.value(p).cols();
      t.ensure_grad(p) += g.middleCols(c0, n);
      c0 += n;
    }
  });
}

Tape::VarId Tape::repeat_rows(VarId row, int n) {
  const Mat& r = value(row);
  if (r.rows() != 1)
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: repeat_rows");
  Mat out = r.replicate(n, 1);
  return push(std::move(out), {row}, [row](Tape& t, VarId out_id) {
    t.ensure_grad(row) += t.nodes_[out_id].grad.colwise().sum();
  });
}

Tape::VarId Tape::repeat_cols(VarId col, int n) {
  const Mat& c = value(col);
  if (c.cols() != 1)
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: repeat_cols");
  Mat out = c.replicate(1, n);
  return push(std::move(out), {col}, [col](Tape& t, VarId out_id) {
    t.ensure_grad(col) += t.nodes_[out_id].grad.rowwise().sum();
  });
}

Tape::VarId Tape::flatten_rowmajor(VarId a) {
  const Mat& A = value(a);
  const Eigen::Index m = A.rows(), n = A.cols();
  Mat out(m * n, 1);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i * n + j, 0) = A(i, j);
  return push(std::move(out), {a}, [a, m, n](Tape& t, VarId out_id) {
    const Mat& g = t.nodes_[out_id].grad;
    Mat& pg = t.ensure_grad(a);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) pg(i, j) += g(i * n + j, 0);
  });
}

Tape::VarId Tape::sum_all(VarId a) {
  Mat out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), {a}, [a](Tape& t, VarId out_id) {
    t.ensure_grad(a).array() += t.nodes_[out_id].grad(0, 0);
  });
}

Tape::VarId Tape::sse_scaled(VarId a, VarId b, double entries_per_sample) {
  check_same_shape(value(a), value(b), "sse_scaled");
  Mat out(1, 1);
  out(0, 0) = (value(a) - value(b)).squaredNorm() / entries_per_sample;
  return push(std::move(out), {a, b},
              [a, b, entries_per_sample](Tape& t, VarId out_id) {
                const double g = t.nodes_[out_id].grad(0, 0);
                const Mat diff = t.value(a) - t.value(b);
                const double c = 2.0 * g / entries_per_sample;
                t.ensure_grad(a) += c * diff;
                t.ensure_grad(b) -= c * diff;
              });
}

Tape::VarId Tape::bce_sum_from_logits(VarId logits,
                                      const std::vector<double>& labels) {
  const Mat& l = value(logits);
  if (l.rows() != 1 || static_cast<std::size_t>(l.cols()) != labels.size())
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: bce");
  constexpr double kLo = 1e-12, kHi = 1.0 - 1e-12;
  double total = 0.0;
  for (Eigen::Index b = 0; b < l.cols(); ++b) {
    double p = 1.0 / (1.0 + std::exp(-l(0, b)));
    p = std::min(kHi, std::max(kLo, p));
    const double y = labels[static_cast<std::size_t>(b)];
    total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  if (!std::isfinite(total))
    raise(ErrorKind::Numeric, "NonFiniteLoss: bce");
  Mat out(1, 1);
  out(0, 0) = total;
  return push(std::move(out), {logits}, [logits, labels](Tape& t, VarId out_id) {
    const double g = t.nodes_[out_id].grad(0, 0);
    const Mat& l_in = t.value(logits);
    Mat& lg = t.ensure_grad(logits);
    for (Eigen::Index b = 0; b < l_in.cols(); ++b) {
      const double p = 1.0 / (1.0 + std::exp(-l_in(0, b)));
      if (p <= 1e-12 || p >= 1.0 - 1e-12) continue;  // clamped: flat
      lg(0, b) += g * (p - labels[static_cast<std::size_t>(b)]);
    }
  });
}

void Tape::backward(VarId loss, double seed_grad) {
  Node& top = nodes_[loss];
  if (top.value.rows() != 1 || top.value.cols() != 1)
    raise(ErrorKind::InvalidArgument, "backward: loss must be scalar");
  ensure_grad(loss)(0, 0) += seed_grad;
  for (VarId id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward_fn && n.grad.size() != 0) n.backward_fn(*this, id);
  }
}

}  // namespace ftdn::nn
