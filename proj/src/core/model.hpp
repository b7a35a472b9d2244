#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/layers.hpp"
#include "core/trajectory.hpp"

namespace ftdn::net {

using nn::Mat;
using nn::Vec;

inline constexpr int kFeatureRows = traj::kFeatureRows;  // 28
inline constexpr int kWindow = traj::kWindow;            // 64
inline constexpr int kGruHidden = 256;
inline constexpr int kGruInput = 2 * kFeatureRows;       // x column + time embedding
inline constexpr int kDenseIn = kFeatureRows * kWindow;  // 1792
inline constexpr int kEmbedDim = 256;
inline constexpr int kClsHidden = 128;

struct FtdnFlags {
  bool use_time_gat = true;
  bool use_space_gat = true;
  bool use_gru = true;  // when off, the temporal descriptor is zeroed
};

// Indices of every learnable block inside the ParamSet (registration order).
struct ParamIndex {
  int W_s, a_s, W_t, a_t;
  int enc_W_z, enc_U_z, enc_b_z, enc_W_r, enc_U_r, enc_b_r, enc_W_h, enc_U_h,
      enc_b_h;
  int dense_W, dense_b;
  int cls_W1, cls_b1, cls_W2, cls_b2;
  int dec_W_z, dec_U_z, dec_b_z, dec_W_r, dec_U_r, dec_b_r, dec_W_h, dec_U_h,
      dec_b_h;
  int dec_head_W, dec_head_b;
};

struct FtdnOutput {
  Mat h_s;   // 28 x 64
  Mat h_t;   // 28 x 64
  Vec r_s;   // 256
  Vec r_t;   // 256
  double prob = 0.0;
  Mat xhat;  // 28 x 64
};

struct LossTerms {
  double total = 0.0;
  double bce = 0.0;
  double mse = 0.0;
};

// Classification + reconstruction loss for one sample.
LossTerms loss_terms(double prob, const Mat& xhat, const Mat& x, int label);

// Standalone dynamic graph-attention layer over a fully connected node set
// (self-edges included): e_ij = a^T LeakyReLU(W n_i (+) W n_j), alpha =
// softmax_j, out_i = sigmoid(sum_j alpha_ij W n_j). Rows of `nodes` are the
// node vectors. Returns the updated nodes; `alpha_out`, when given, receives
// the attention matrix.
Mat graph_attention(const Mat& nodes, const Mat& W, const Vec& a,
                    Mat* alpha_out = nullptr);

class FtdnModel {
public:
  FtdnModel(std::uint64_t seed, FtdnFlags flags = {});

  static FtdnModel load(const std::string& manifest_path);
  void save(const std::string& manifest_path, const std::string& blob_path) const;

  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  const ParamIndex& index() const { return idx_; }
  FtdnFlags flags() const { return flags_; }
  void set_flags(FtdnFlags f) { flags_ = f; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  double predict(const Mat& x) const;
  FtdnOutput forward(const Mat& x) const;

  // Per-time-step contribution: column sums of |d logit / d x|, min-max
  // normalized to [0,1]; all zeros when the logit ignores the input.
  Vec saliency(const Mat& x) const;

private:
  void register_params();

  nn::ParamSet params_;
  ParamIndex idx_{};
  FtdnFlags flags_;
  std::uint64_t seed_ = 0;
  std::int64_t step_ = 0;
};

// ---- group execution (training/evaluation workhorse) ----

struct GroupRun {
  double loss_sum = 0.0;  // sum of per-sample totals
  double bce_sum = 0.0;
  double mse_sum = 0.0;
  std::vector<double> probs;
};

// Runs a group of samples through one tape. When `grads_out` is non-null the
// backward pass runs with seed `grad_scale` and the parameter gradients are
// accumulated into it (aligned with ParamSet order). `with_decoder` controls
// the reconstruction branch (losses need it, plain scoring does not).
GroupRun run_group(const FtdnModel& model,
                   const std::vector<const Mat*>& xs,
                   const std::vector<double>& labels, bool with_decoder,
                   double grad_scale, std::vector<Mat>* grads_out);

}  // namespace ftdn::net
