#include "core/layers.hpp"

#include <cmath>
#include <memory>

namespace ftdn::nn {

Mat init_uniform(Rng& rng, int rows, int cols, int fan_in) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

namespace {

inline Mat logistic(const Mat& a) { return a.array().logistic(); }

void check_gru_dims(const Vec& x, const Vec& h, const GruWeights& w) {
  const auto in = x.size();
  const auto hid = h.size();
  if (w.W_z.rows() != hid || w.W_z.cols() != in || w.U_z.rows() != hid ||
      w.U_z.cols() != hid || w.b_z.rows() != hid || w.W_r.rows() != hid ||
      w.W_r.cols() != in || w.U_r.rows() != hid || w.U_r.cols() != hid ||
      w.b_r.rows() != hid || w.W_h.rows() != hid || w.W_h.cols() != in ||
      w.U_h.rows() != hid || w.U_h.cols() != hid || w.b_h.rows() != hid)
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: gru_cell");
}

}  // namespace

Vec gru_cell(const Vec& x, const Vec& h_prev, const GruWeights& w) {
  check_gru_dims(x, h_prev, w);
  const Vec z = logistic(w.W_z * x + w.U_z * h_prev + w.b_z);
  const Vec r = logistic(w.W_r * x + w.U_r * h_prev + w.b_r);
  const Vec hh =
      (w.W_h * x + w.U_h * r.cwiseProduct(h_prev) + w.b_h).array().tanh();
  return (1.0 - z.array()) * h_prev.array() + z.array() * hh.array();
}

Vec dense_layer(const Vec& x, const Mat& W, const Vec& b, Activation act) {
  if (W.cols() != x.size() || b.size() != W.rows())
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: dense_layer");
  Vec y = W * x + b;
  switch (act) {
    case Activation::None: break;
    case Activation::LeakyRelu02: y = y.array().max(y.array() * 0.2); break;
    case Activation::Relu: y = y.cwiseMax(0.0); break;
    case Activation::Sigmoid: y = y.array().logistic(); break;
    case Activation::Tanh: y = y.array().tanh(); break;
  }
  return y;
}

namespace {

struct GruEncodeCache {
  std::vector<Mat> x;       // input at step t (in x B)
  std::vector<Mat> z, r, hh;
  std::vector<Mat> h_pre;   // hidden before step t
};

struct GruDecodeCache {
  std::vector<Mat> z, r, hh;
  std::vector<Mat> h_pre;   // hidden before step t (h_pre[0] = h0)
  std::vector<Mat> h_post;  // hidden after step t (head input)
};

}  // namespace

Tape::VarId gru_encode(Tape& tape, const std::vector<Tape::VarId>& inputs,
                       const GruParamIds& p) {
  if (inputs.empty()) raise(ErrorKind::InvalidArgument, "gru_encode: no inputs");
  const int B = static_cast<int>(inputs.size());
  const Eigen::Index in_dim = tape.value(inputs[0]).rows();
  const Eigen::Index T = tape.value(inputs[0]).cols();
  for (Tape::VarId v : inputs)
    if (tape.value(v).rows() != in_dim || tape.value(v).cols() != T)
      raise(ErrorKind::DimensionMismatch, "DimensionMismatch: gru_encode inputs");
  const Mat& W_z = tape.value(p.W_z);
  const Eigen::Index hid = W_z.rows();
  if (W_z.cols() != in_dim)
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: gru_encode W_z");

  auto cache = std::make_shared<GruEncodeCache>();
  cache->x.reserve(T);
  Mat h = Mat::Zero(hid, B);
  for (Eigen::Index t = 0; t < T; ++t) {
    Mat x(in_dim, B);
    for (int b = 0; b < B; ++b) x.col(b) = tape.value(inputs[b]).col(t);
    cache->h_pre.push_back(h);
    Mat z = logistic(((tape.value(p.W_z) * x + tape.value(p.U_z) * h).colwise() +
                      tape.value(p.b_z).col(0)));
    Mat r = logistic(((tape.value(p.W_r) * x + tape.value(p.U_r) * h).colwise() +
                      tape.value(p.b_r).col(0)));
    Mat hh = ((tape.value(p.W_h) * x +
               tape.value(p.U_h) * r.cwiseProduct(h))
                  .colwise() +
              tape.value(p.b_h).col(0))
                 .array()
                 .tanh();
    h = (1.0 - z.array()) * h.array() + z.array() * hh.array();
    cache->x.push_back(std::move(x));
    cache->z.push_back(std::move(z));
    cache->r.push_back(std::move(r));
    cache->hh.push_back(std::move(hh));
  }

  std::vector<Tape::VarId> parents = inputs;
  parents.insert(parents.end(), {p.W_z, p.U_z, p.b_z, p.W_r, p.U_r, p.b_r,
                                 p.W_h, p.U_h, p.b_h});
  const int n_inputs = B;
  return tape.custom(
      std::move(h), std::move(parents),
      [cache, inputs, p, n_inputs, T, in_dim, hid](Tape& t, Tape::VarId out) {
        Mat dh = t.grad(out);
        Mat gW_z = Mat::Zero(hid, in_dim), gU_z = Mat::Zero(hid, hid);
        Mat gW_r = Mat::Zero(hid, in_dim), gU_r = Mat::Zero(hid, hid);
        Mat gW_h = Mat::Zero(hid, in_dim), gU_h = Mat::Zero(hid, hid);
        Mat gb_z = Mat::Zero(hid, 1), gb_r = Mat::Zero(hid, 1),
            gb_h = Mat::Zero(hid, 1);
        std::vector<Mat> dX(static_cast<std::size_t>(n_inputs),
                            Mat::Zero(in_dim, T));
        const Mat& U_z = t.value(p.U_z);
        const Mat& U_r = t.value(p.U_r);
        const Mat& U_h = t.value(p.U_h);
        const Mat& W_z = t.value(p.W_z);
        const Mat& W_r = t.value(p.W_r);
        const Mat& W_h = t.value(p.W_h);
        for (Eigen::Index step = T; step-- > 0;) {
          const std::size_t s = static_cast<std::size_t>(step);
          const Mat& h_prev = cache->h_pre[s];
          const Mat& z = cache->z[s];
          const Mat& r = cache->r[s];
          const Mat& hh = cache->hh[s];
          const Mat& x = cache->x[s];
          Mat dz = dh.cwiseProduct(hh - h_prev);
          Mat dhh = dh.cwiseProduct(z);
          Mat dh_prev = dh.cwiseProduct(Mat(1.0 - z.array()));
          Mat dAh = dhh.array() * (1.0 - hh.array().square());
          gW_h.noalias() += dAh * x.transpose();
          gU_h.noalias() += dAh * r.cwiseProduct(h_prev).transpose();
          gb_h += dAh.rowwise().sum();
          Mat d_rh = U_h.transpose() * dAh;
          Mat dr = d_rh.cwiseProduct(h_prev);
          dh_prev += d_rh.cwiseProduct(r);
          Mat dAz = dz.array() * z.array() * (1.0 - z.array());
          gW_z.noalias() += dAz * x.transpose();
          gU_z.noalias() += dAz * h_prev.transpose();
          gb_z += dAz.rowwise().sum();
          dh_prev.noalias() += U_z.transpose() * dAz;
          Mat dAr = dr.array() * r.array() * (1.0 - r.array());
          gW_r.noalias() += dAr * x.transpose();
          gU_r.noalias() += dAr * h_prev.transpose();
          gb_r += dAr.rowwise().sum();
          dh_prev.noalias() += U_r.transpose() * dAr;
          Mat dx = W_z.transpose() * dAz;
          dx.noalias() += W_r.transpose() * dAr;
          dx.noalias() += W_h.transpose() * dAh;
          for (int b = 0; b < n_inputs; ++b)
            dX[static_cast<std::size_t>(b)].col(step) += dx.col(b);
          dh = std::move(dh_prev);
        }
        for (int b = 0; b < n_inputs; ++b)
          t.grad(inputs[static_cast<std::size_t>(b)]) +=
              dX[static_cast<std::size_t>(b)];
        t.grad(p.W_z) += gW_z;
        t.grad(p.U_z) += gU_z;
        t.grad(p.b_z) += gb_z;
        t.grad(p.W_r) += gW_r;
        t.grad(p.U_r) += gU_r;
        t.grad(p.b_r) += gb_r;
        t.grad(p.W_h) += gW_h;
        t.grad(p.U_h) += gU_h;
        t.grad(p.b_h) += gb_h;
      });
}

Tape::VarId gru_decode_zero_input(Tape& tape, Tape::VarId h0, int steps,
                                  Tape::VarId U_z, Tape::VarId b_z,
                                  Tape::VarId U_r, Tape::VarId b_r,
                                  Tape::VarId U_h, Tape::VarId b_h,
                                  Tape::VarId head_w, Tape::VarId head_b) {
  const Mat& H0 = tape.value(h0);
  const Eigen::Index hid = H0.rows();
  const Eigen::Index B = H0.cols();
  const Eigen::Index out_dim = tape.value(head_w).rows();
  if (tape.value(head_w).cols() != hid)
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: gru_decode head");

  auto cache = std::make_shared<GruDecodeCache>();
  Mat h = H0;
  Mat out(out_dim, static_cast<Eigen::Index>(steps) * B);
  for (int t = 0; t < steps; ++t) {
    cache->h_pre.push_back(h);
    Mat z = logistic((tape.value(U_z) * h).colwise() + tape.value(b_z).col(0));
    Mat r = logistic((tape.value(U_r) * h).colwise() + tape.value(b_r).col(0));
    Mat hh = ((tape.value(U_h) * r.cwiseProduct(h)).colwise() +
              tape.value(b_h).col(0))
                 .array()
                 .tanh();
    h = (1.0 - z.array()) * h.array() + z.array() * hh.array();
    cache->h_post.push_back(h);
    Mat y = (tape.value(head_w) * h).colwise() + tape.value(head_b).col(0);
    for (Eigen::Index b = 0; b < B; ++b)
      out.col(b * steps + t) = y.col(b);
    cache->z.push_back(std::move(z));
    cache->r.push_back(std::move(r));
    cache->hh.push_back(std::move(hh));
  }

  return tape.custom(
      std::move(out), {h0, U_z, b_z, U_r, b_r, U_h, b_h, head_w, head_b},
      [cache, h0, U_z, b_z, U_r, b_r, U_h, b_h, head_w, head_b, steps, hid, B,
       out_dim](Tape& t, Tape::VarId out_id) {
        const Mat& G = t.grad(out_id);
        Mat dh = Mat::Zero(hid, B);
        Mat gU_z = Mat::Zero(hid, hid), gU_r = Mat::Zero(hid, hid),
            gU_h = Mat::Zero(hid, hid);
        Mat gb_z = Mat::Zero(hid, 1), gb_r = Mat::Zero(hid, 1),
            gb_h = Mat::Zero(hid, 1);
        Mat gHw = Mat::Zero(out_dim, hid), gHb = Mat::Zero(out_dim, 1);
        const Mat& Uz = t.value(U_z);
        const Mat& Ur = t.value(U_r);
        const Mat& Uh = t.value(U_h);
        const Mat& Hw = t.value(head_w);
        for (int step = steps; step-- > 0;) {
          const std::size_t s = static_cast<std::size_t>(step);
          Mat g_t(out_dim, B);
          for (Eigen::Index b = 0; b < B; ++b)
            g_t.col(b) = G.col(b * steps + step);
          gHw.noalias() += g_t * cache->h_post[s].transpose();
          gHb += g_t.rowwise().sum();
          dh.noalias() += Hw.transpose() * g_t;

          const Mat& h_prev = cache->h_pre[s];
          const Mat& z = cache->z[s];
          const Mat& r = cache->r[s];
          const Mat& hh = cache->hh[s];
          Mat dz = dh.cwiseProduct(hh - h_prev);
          Mat dhh = dh.cwiseProduct(z);
          Mat dh_prev = dh.cwiseProduct(Mat(1.0 - z.array()));
          Mat dAh = dhh.array() * (1.0 - hh.array().square());
          gU_h.noalias() += dAh * r.cwiseProduct(h_prev).transpose();
          gb_h += dAh.rowwise().sum();
          Mat d_rh = Uh.transpose() * dAh;
          Mat dr = d_rh.cwiseProduct(h_prev);
          dh_prev += d_rh.cwiseProduct(r);
          Mat dAz = dz.array() * z.array() * (1.0 - z.array());
          gU_z.noalias() += dAz * h_prev.transpose();
          gb_z += dAz.rowwise().sum();
          dh_prev.noalias() += Uz.transpose() * dAz;
          Mat dAr = dr.array() * r.array() * (1.0 - r.array());
          gU_r.noalias() += dAr * h_prev.transpose();
          gb_r += dAr.rowwise().sum();
          dh_prev.noalias() += Ur.transpose() * dAr;
          dh = std::move(dh_prev);
        }
        t.grad(h0) += dh;
        t.grad(U_z) += gU_z;
        t.grad(b_z) += gb_z;
        t.grad(U_r) += gU_r;
        t.grad(b_r) += gb_r;
        t.grad(U_h) += gU_h;
        t.grad(b_h) += gb_h;
        t.grad(head_w) += gHw;
        t.grad(head_b) += gHb;
      });
}

Tape::VarId dense(Tape& tape, Tape::VarId x, Tape::VarId W, Tape::VarId b,
                  Activation act) {
  Tape::VarId y = tape.add_col_broadcast(tape.matmul(W, x), b);
  switch (act) {
    case Activation::None: return y;
    case Activation::LeakyRelu02: return tape.leaky_relu(y, 0.2);
    case Activation::Relu: return tape.relu(y);
    case Activation::Sigmoid: return tape.sigmoid(y);
    case Activation::Tanh: return tape.tanh(y);
  }
  return y;
}

void adam_step(ParamSet& params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i] = Mat::Zero(params[static_cast<int>(i)].value.rows(),
                             params[static_cast<int>(i)].value.cols());
      state.v[i] = state.m[i];
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params[static_cast<int>(i)];
    Mat& m = state.m[i];
    Mat& v = state.v[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * p.grad;
    v = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * p.grad.array().square();
    p.value.array() -=
        cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
    if (!p.value.allFinite())
      raise(ErrorKind::Numeric, "adam_step: non-finite parameter " + p.name);
  }
}

GradCheckReport grad_check(ParamSet& params,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& compute_analytic,
                           double h, int max_entries_per_block,
                           std::uint64_t select_seed) {
  compute_analytic();
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    analytic.push_back(params[static_cast<int>(i)].grad);

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params[static_cast<int>(i)];
    const Eigen::Index n = p.value.size();
    std::vector<Eigen::Index> idx;
    if (max_entries_per_block <= 0 || n <= max_entries_per_block) {
      idx.resize(static_cast<std::size_t>(n));
      for (Eigen::Index k = 0; k < n; ++k) idx[static_cast<std::size_t>(k)] = k;
    } else {
      // Deterministic distinct subsample.
      Rng rng(Rng::derive(select_seed, 0x67726463ULL, i));
      std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
      for (Eigen::Index k = 0; k < n; ++k) all[static_cast<std::size_t>(k)] = k;
      rng.shuffle(all);
      idx.assign(all.begin(), all.begin() + max_entries_per_block);
    }
    GradCheckBlock block;
    block.name = p.name;
    block.entries_checked = static_cast<int>(idx.size());
    double* data = p.value.data();
    const double* adata = analytic[i].data();
    for (Eigen::Index k : idx) {
      const double orig = data[k];
      data[k] = orig + h;
      const double lp = loss_fn();
      data[k] = orig - h;
      const double lm = loss_fn();
      data[k] = orig;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        raise(ErrorKind::Numeric, "NonFiniteLoss: grad_check");
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = adata[k];
      const double rel =
          std::abs(a - numeric) /
          std::max(1e-8, std::abs(a) + std::abs(numeric));
      block.max_rel_err = std::max(block.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, block.max_rel_err);
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace ftdn::nn
