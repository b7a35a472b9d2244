#include "core/model.hpp"

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "core/rng.hpp"
#include "core/textio.hpp"

namespace ftdn::net {

namespace {
constexpr std::uint64_t kTagInit = 0x696e6974ULL;
}

LossTerms loss_terms(double prob, const Mat& xhat, const Mat& x, int label) {
  if (label != 0 && label != 1)
    raise(ErrorKind::InvalidArgument, "loss_terms: label must be 0 or 1");
  if (xhat.rows() != x.rows() || xhat.cols() != x.cols())
    raise(ErrorKind::DimensionMismatch, "ShapeError: loss_terms");
  const double p = std::min(1.0 - 1e-12, std::max(1e-12, prob));
  LossTerms t;
  const double y = static_cast<double>(label);
  t.bce = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  t.mse = (xhat - x).squaredNorm() / static_cast<double>(x.size());
  t.total = t.bce + t.mse;
  if (!std::isfinite(t.total)) raise(ErrorKind::Numeric, "NonFiniteLoss");
  return t;
}

Mat graph_attention(const Mat& nodes, const Mat& W, const Vec& a,
                    Mat* alpha_out) {
  const Eigen::Index n = nodes.rows();
  const Eigen::Index d = nodes.cols();
  if (W.rows() != d || W.cols() != d || a.size() != 2 * d)
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: graph_attention");
  const Mat p = nodes * W.transpose();              // row i = (W n_i)^T
  const Mat q = p.array().max(p.array() * 0.2);     // LeakyReLU(0.2)
  // Scores decompose as e_ij = u_i + v_j with u = q a_head, v = q a_tail.
  // softmax_j(u_i + v_j) equals softmax_j(v_j): the query term is constant
  // along j and cancels in the normalization. Every attention row is the
  // same key distribution and the query half of `a` carries exactly zero
  // gradient.
  const Vec v = q * a.tail(d);
  const double m = v.maxCoeff();
  Vec beta = (v.array() - m).exp();
  beta /= beta.sum();
  if (alpha_out) *alpha_out = beta.transpose().replicate(n, 1);
  const Eigen::RowVectorXd agg = beta.transpose() * p;
  const Eigen::RowVectorXd out_row = agg.array().logistic();
  return out_row.replicate(n, 1);
}

void FtdnModel::register_params() {
  Rng rng(Rng::derive(seed_, kTagInit));
  auto u = [&rng](int rows, int cols, int fan_in) {
    return nn::init_uniform(rng, rows, cols, fan_in);
  };
  auto zeros = [](int rows) { return Mat::Zero(rows, 1); };

  idx_.W_s = params_.add("W_s", u(kWindow, kWindow, kWindow));
  idx_.a_s = params_.add("a_s", u(2 * kWindow, 1, 2 * kWindow));
  idx_.W_t = params_.add("W_t", u(kFeatureRows, kFeatureRows, kFeatureRows));
  idx_.a_t = params_.add("a_t", u(2 * kFeatureRows, 1, 2 * kFeatureRows));

  idx_.enc_W_z = params_.add("enc.W_z", u(kGruHidden, kGruInput, kGruInput));
  idx_.enc_U_z = params_.add("enc.U_z", u(kGruHidden, kGruHidden, kGruHidden));
  idx_.enc_b_z = params_.add("enc.b_z", zeros(kGruHidden));
  idx_.enc_W_r = params_.add("enc.W_r", u(kGruHidden, kGruInput, kGruInput));
  idx_.enc_U_r = params_.add("enc.U_r", u(kGruHidden, kGruHidden, kGruHidden));
  idx_.enc_b_r = params_.add("enc.b_r", zeros(kGruHidden));
  idx_.enc_W_h = params_.add("enc.W_h", u(kGruHidden, kGruInput, kGruInput));
  idx_.enc_U_h = params_.add("enc.U_h", u(kGruHidden, kGruHidden, kGruHidden));
  idx_.enc_b_h = params_.add("enc.b_h", zeros(kGruHidden));

  idx_.dense_W = params_.add("dense.W", u(kEmbedDim, kDenseIn, kDenseIn));
  idx_.dense_b = params_.add("dense.b", zeros(kEmbedDim));

  idx_.cls_W1 = params_.add("cls.W1", u(kClsHidden, 2 * kEmbedDim, 2 * kEmbedDim));
  idx_.cls_b1 = params_.add("cls.b1", zeros(kClsHidden));
  idx_.cls_W2 = params_.add("cls.W2", u(1, kClsHidden, kClsHidden));
  idx_.cls_b2 = params_.add("cls.b2", zeros(1));

  idx_.dec_W_z = params_.add("dec.W_z", u(kGruHidden, kFeatureRows, kFeatureRows));
  idx_.dec_U_z = params_.add("dec.U_z", u(kGruHidden, kGruHidden, kGruHidden));
  idx_.dec_b_z = params_.add("dec.b_z", zeros(kGruHidden));
  idx_.dec_W_r = params_.add("dec.W_r", u(kGruHidden, kFeatureRows, kFeatureRows));
  idx_.dec_U_r = params_.add("dec.U_r", u(kGruHidden, kGruHidden, kGruHidden));
  idx_.dec_b_r = params_.add("dec.b_r", zeros(kGruHidden));
  idx_.dec_W_h = params_.add("dec.W_h", u(kGruHidden, kFeatureRows, kFeatureRows));
  idx_.dec_U_h = params_.add("dec.U_h", u(kGruHidden, kGruHidden, kGruHidden));
  idx_.dec_b_h = params_.add("dec.b_h", zeros(kGruHidden));

  idx_.dec_head_W = params_.add("dec.head_W", u(kFeatureRows, kGruHidden, kGruHidden));
  idx_.dec_head_b = params_.add("dec.head_b", zeros(kFeatureRows));
}

FtdnModel::FtdnModel(std::uint64_t seed, FtdnFlags flags)
    : flags_(flags), seed_(seed) {
  register_params();
}

namespace {

using nn::Tape;

struct TapeCtx {
  Tape tape;
  std::vector<Tape::VarId> pid;       // aligned with ParamSet order
  std::vector<Tape::VarId> x_leaves;
  std::vector<Tape::VarId> h_s_vars, h_t_vars;
  Tape::VarId r_s = -1, r_t = -1;
  Tape::VarId logits = -1, probs = -1, xhat = -1;
  Tape::VarId bce = -1, mse = -1, loss = -1;
};

struct BuildOptions {
  bool with_decoder = false;
  const std::vector<double>* labels = nullptr;
  bool params_need_grad = false;
  bool x_needs_grad = false;
};

// One tape per sample group: per-sample graph attention, batched GRU
// encoder, dense/classifier heads and (optionally) the reconstruction
// branch plus losses.
TapeCtx build_forward(const FtdnModel& model,
                      const std::vector<const Mat*>& xs,
                      const BuildOptions& opt) {
  if (xs.empty()) raise(ErrorKind::InvalidArgument, "forward: empty group");
  const ParamIndex& ix = model.index();
  const FtdnFlags flags = model.flags();
  TapeCtx ctx;
  Tape& t = ctx.tape;

  ctx.pid.resize(model.params().size());
  for (std::size_t i = 0; i < model.params().size(); ++i)
    ctx.pid[i] = t.leaf(model.params()[static_cast<int>(i)].value,
                        opt.params_need_grad);

  const int B = static_cast<int>(xs.size());
  std::vector<Tape::VarId> gru_inputs, flat_spaces;
  for (int b = 0; b < B; ++b) {
    const Mat& x = *xs[static_cast<std::size_t>(b)];
    if (x.rows() != kFeatureRows || x.cols() != kWindow)
      raise(ErrorKind::DimensionMismatch, "ShapeError: sample must be 28x64");
    const Tape::VarId xv = t.leaf(x, opt.x_needs_grad);
    ctx.x_leaves.push_back(xv);

    Tape::VarId h_s;
    if (flags.use_space_gat) {
      // e_ij = a^T LeakyReLU(W n_i (+) W n_j) over the 28 row-nodes. The
      // softmax over j reduces to the key distribution (query term cancels),
      // so the attention is computed from the key scores alone; the query
      // half of a_s stays out of the graph with exactly zero gradient.
      const Tape::VarId p = t.matmul_nt(xv, ctx.pid[static_cast<std::size_t>(ix.W_s)]);
      const Tape::VarId q = t.leaky_relu(p, 0.2);
      const Tape::VarId a_key = t.slice_rows(
          ctx.pid[static_cast<std::size_t>(ix.a_s)], kWindow, kWindow);
      const Tape::VarId v = t.matmul(q, a_key);
      const Tape::VarId beta = t.softmax_col(v);
      const Tape::VarId agg = t.matmul(t.transpose(beta), p);
      h_s = t.repeat_rows(t.sigmoid(agg), kFeatureRows);
    } else {
      h_s = t.leaf(Mat::Zero(kFeatureRows, kWindow), false);
    }
    ctx.h_s_vars.push_back(h_s);

    Tape::VarId h_t;
    if (flags.use_time_gat) {
      const Tape::VarId xt = t.transpose(xv);  // 64 time-nodes of R^28
      const Tape::VarId p = t.matmul_nt(xt, ctx.pid[static_cast<std::size_t>(ix.W_t)]);
      const Tape::VarId q = t.leaky_relu(p, 0.2);
      const Tape::VarId a_key = t.slice_rows(
          ctx.pid[static_cast<std::size_t>(ix.a_t)], kFeatureRows, kFeatureRows);
      const Tape::VarId v = t.matmul(q, a_key);
      const Tape::VarId beta = t.softmax_col(v);
      const Tape::VarId agg = t.matmul(t.transpose(beta), p);  // 1 x 28
      h_t = t.repeat_cols(t.transpose(t.sigmoid(agg)), kWindow);
    } else {
      h_t = t.leaf(Mat::Zero(kFeatureRows, kWindow), false);
    }
    ctx.h_t_vars.push_back(h_t);

    gru_inputs.push_back(t.vstack(xv, h_t));
    flat_spaces.push_back(t.flatten_rowmajor(h_s));
  }

  if (flags.use_gru) {
    nn::GruParamIds enc{ctx.pid[static_cast<std::size_t>(ix.enc_W_z)],
                        ctx.pid[static_cast<std::size_t>(ix.enc_U_z)],
                        ctx.pid[static_cast<std::size_t>(ix.enc_b_z)],
                        ctx.pid[static_cast<std::size_t>(ix.enc_W_r)],
                        ctx.pid[static_cast<std::size_t>(ix.enc_U_r)],
                        ctx.pid[static_cast<std::size_t>(ix.enc_b_r)],
                        ctx.pid[static_cast<std::size_t>(ix.enc_W_h)],
                        ctx.pid[static_cast<std::size_t>(ix.enc_U_h)],
                        ctx.pid[static_cast<std::size_t>(ix.enc_b_h)]};
    ctx.r_t = nn::gru_encode(t, gru_inputs, enc);
  } else {
    ctx.r_t = t.leaf(Mat::Zero(kGruHidden, B), false);
  }

  const Tape::VarId flat_all = t.hstack(flat_spaces);  // 1792 x B
  ctx.r_s = nn::dense(t, flat_all, ctx.pid[static_cast<std::size_t>(ix.dense_W)],
                      ctx.pid[static_cast<std::size_t>(ix.dense_b)],
                      nn::Activation::Relu);

  const Tape::VarId cat = t.vstack(ctx.r_s, ctx.r_t);  // 512 x B
  const Tape::VarId hidden =
      nn::dense(t, cat, ctx.pid[static_cast<std::size_t>(ix.cls_W1)],
                ctx.pid[static_cast<std::size_t>(ix.cls_b1)],
                nn::Activation::LeakyRelu02);
  ctx.logits = nn::dense(t, hidden, ctx.pid[static_cast<std::size_t>(ix.cls_W2)],
                         ctx.pid[static_cast<std::size_t>(ix.cls_b2)],
                         nn::Activation::None);
  ctx.probs = t.sigmoid(ctx.logits);

  if (opt.with_decoder) {
    ctx.xhat = nn::gru_decode_zero_input(
        t, ctx.r_t, kWindow, ctx.pid[static_cast<std::size_t>(ix.dec_U_z)],
        ctx.pid[static_cast<std::size_t>(ix.dec_b_z)],
        ctx.pid[static_cast<std::size_t>(ix.dec_U_r)],
        ctx.pid[static_cast<std::size_t>(ix.dec_b_r)],
        ctx.pid[static_cast<std::size_t>(ix.dec_U_h)],
        ctx.pid[static_cast<std::size_t>(ix.dec_b_h)],
        ctx.pid[static_cast<std::size_t>(ix.dec_head_W)],
        ctx.pid[static_cast<std::size_t>(ix.dec_head_b)]);
  }

  if (opt.labels) {
    if (opt.labels->size() != xs.size())
      raise(ErrorKind::DimensionMismatch, "forward: labels/samples mismatch");
    ctx.bce = t.bce_sum_from_logits(ctx.logits, *opt.labels);
    if (opt.with_decoder) {
      const Tape::VarId x_all = t.hstack(ctx.x_leaves);
      ctx.mse = t.sse_scaled(ctx.xhat, x_all,
                             static_cast<double>(kFeatureRows) * kWindow);
      ctx.loss = t.add(ctx.bce, ctx.mse);
    } else {
      ctx.loss = ctx.bce;
    }
  }
  return ctx;
}

}  // namespace

double FtdnModel::predict(const Mat& x) const {
  BuildOptions opt;
  TapeCtx ctx = build_forward(*this, {&x}, opt);
  return ctx.tape.value(ctx.probs)(0, 0);
}

FtdnOutput FtdnModel::forward(const Mat& x) const {
  BuildOptions opt;
  opt.with_decoder = true;
  TapeCtx ctx = build_forward(*this, {&x}, opt);
  FtdnOutput out;
  out.h_s = ctx.tape.value(ctx.h_s_vars[0]);
  out.h_t = ctx.tape.value(ctx.h_t_vars[0]);
  out.r_s = ctx.tape.value(ctx.r_s).col(0);
  out.r_t = ctx.tape.value(ctx.r_t).col(0);
  out.prob = ctx.tape.value(ctx.probs)(0, 0);
  out.xhat = ctx.tape.value(ctx.xhat);
  return out;
}

Vec FtdnModel::saliency(const Mat& x) const {
  BuildOptions opt;
  opt.x_needs_grad = true;
  TapeCtx ctx = build_forward(*this, {&x}, opt);
  ctx.tape.backward(ctx.logits, 1.0);
  const Mat& gx = ctx.tape.grad(ctx.x_leaves[0]);
  Vec s(kWindow);
  for (int c = 0; c < kWindow; ++c) s(c) = gx.col(c).cwiseAbs().sum();
  const double lo = s.minCoeff();
  const double hi = s.maxCoeff();
  if (hi - lo < 1e-12) return Vec::Zero(kWindow);
  return (s.array() - lo) / (hi - lo);
}

GroupRun run_group(const FtdnModel& model, const std::vector<const Mat*>& xs,
                   const std::vector<double>& labels, bool with_decoder,
                   double grad_scale, std::vector<Mat>* grads_out) {
  BuildOptions opt;
  opt.with_decoder = with_decoder;
  opt.labels = labels.empty() ? nullptr : &labels;
  opt.params_need_grad = grads_out != nullptr;
  TapeCtx ctx = build_forward(model, xs, opt);

  GroupRun run;
  const Mat& probs = ctx.tape.value(ctx.probs);
  run.probs.assign(probs.data(), probs.data() + probs.cols());
  if (ctx.bce >= 0) run.bce_sum = ctx.tape.value(ctx.bce)(0, 0);
  if (ctx.mse >= 0) run.mse_sum = ctx.tape.value(ctx.mse)(0, 0);
  run.loss_sum = run.bce_sum + run.mse_sum;

  if (grads_out) {
    if (ctx.loss < 0)
      raise(ErrorKind::InvalidArgument, "run_group: backward needs labels");
    ctx.tape.backward(ctx.loss, grad_scale);
    if (grads_out->size() != model.params().size())
      raise(ErrorKind::InvalidArgument, "run_group: bad gradient buffer");
    for (std::size_t i = 0; i < model.params().size(); ++i)
      (*grads_out)[i] += ctx.tape.grad(ctx.pid[i]);
  }
  return run;
}

void FtdnModel::save(const std::string& manifest_path,
                     const std::string& blob_path) const {
  std::vector<double> blob;
  blob.reserve(static_cast<std::size_t>(params_.total_entries()));
  nlohmann::json arrays = nlohmann::json::array();
  std::size_t offset_bytes = 0;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const nn::Param& p = params_[static_cast<int>(i)];
    nlohmann::json a;
    a["name"] = p.name;
    a["shape"] = {p.value.rows(), p.value.cols()};
    a["offset"] = offset_bytes;
    a["count"] = p.value.size();
    arrays.push_back(std::move(a));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c)
        blob.push_back(p.value(r, c));
    offset_bytes += static_cast<std::size_t>(p.value.size()) * sizeof(double);
  }
  write_f64_blob(blob_path, blob);

  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["dtype"] = "float64";
  manifest["byte_order"] = "little-endian";
  manifest["layout"] = "row-major";
  manifest["seed"] = seed_;
  manifest["step"] = step_;
  manifest["flags"] = {{"use_time_gat", flags_.use_time_gat},
                       {"use_space_gat", flags_.use_space_gat},
                       {"use_gru", flags_.use_gru}};
  manifest["blob"] = std::filesystem::path(blob_path).filename().string();
  manifest["arrays"] = std::move(arrays);
  write_text_file(manifest_path, manifest.dump(2) + "\n");
}

FtdnModel FtdnModel::load(const std::string& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Parse, std::string("checkpoint: bad JSON: ") + e.what());
  }
  FtdnFlags flags;
  if (manifest.contains("flags")) {
    const auto& f = manifest["flags"];
    flags.use_time_gat = f.value("use_time_gat", true);
    flags.use_space_gat = f.value("use_space_gat", true);
    flags.use_gru = f.value("use_gru", true);
  }
  FtdnModel model(manifest.value("seed", 0ULL), flags);
  model.step_ = manifest.value("step", 0LL);

  const auto blob_name = manifest.value("blob", std::string());
  std::filesystem::path blob_path(blob_name);
  if (blob_path.is_relative())
    blob_path = std::filesystem::path(manifest_path).parent_path() / blob_path;
  const std::vector<double> blob = read_f64_blob(
      blob_path.string(), static_cast<std::size_t>(model.params_.total_entries()));

  const auto& arrays = manifest["arrays"];
  if (arrays.size() != model.params_.size())
    raise(ErrorKind::Parse, "checkpoint: array count mismatch");
  for (std::size_t i = 0; i < model.params_.size(); ++i) {
    nn::Param& p = model.params_[static_cast<int>(i)];
    const auto& a = arrays[i];
    if (a.value("name", std::string()) != p.name)
      raise(ErrorKind::Parse, "checkpoint: unexpected array '" +
                                  a.value("name", std::string()) + "'");
    if (a["shape"][0].get<Eigen::Index>() != p.value.rows() ||
        a["shape"][1].get<Eigen::Index>() != p.value.cols())
      raise(ErrorKind::Parse, "checkpoint: shape mismatch for " + p.name);
    std::size_t pos = a["offset"].get<std::size_t>() / sizeof(double);
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c)
        p.value(r, c) = blob[pos++];
  }
  return model;
}

}  // namespace ftdn::net
