#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/rng.hpp"

namespace ftdn::nn {

using Vec = Eigen::VectorXd;

enum class Activation { None, LeakyRelu02, Relu, Sigmoid, Tanh };

// Named learnable array plus its accumulated gradient. Registration order is
// fixed and defines checkpoint layout, Adam slot order and reduction order.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
};

class ParamSet {
public:
  int add(std::string name, Mat value) {
    params_.push_back(Param{std::move(name), std::move(value), Mat()});
    Param& p = params_.back();
    p.grad = Mat::Zero(p.value.rows(), p.value.cols());
    return static_cast<int>(params_.size()) - 1;
  }

  Param& operator[](int i) { return params_[static_cast<std::size_t>(i)]; }
  const Param& operator[](int i) const { return params_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return params_.size(); }

  void zero_grads() {
    for (auto& p : params_) p.grad.setZero();
  }

  std::int64_t total_entries() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

private:
  std::vector<Param> params_;
};

// U(-sqrt(1/fan_in), +sqrt(1/fan_in)), drawn row-major.
Mat init_uniform(Rng& rng, int rows, int cols, int fan_in);

// ---- reference single-vector forms ----

struct GruWeights {
  Mat W_z, U_z, b_z;
  Mat W_r, U_r, b_r;
  Mat W_h, U_h, b_h;
};

// z = s(W_z x + U_z h + b_z); r = s(W_r x + U_r h + b_r);
// hh = tanh(W_h x + U_h (r.h) + b_h); h' = (1-z).h + z.hh
Vec gru_cell(const Vec& x, const Vec& h_prev, const GruWeights& w);

Vec dense_layer(const Vec& x, const Mat& W, const Vec& b, Activation act);

// ---- tape composites (batched across tape columns) ----

struct GruParamIds {
  Tape::VarId W_z, U_z, b_z;
  Tape::VarId W_r, U_r, b_r;
  Tape::VarId W_h, U_h, b_h;
};

// Runs a GRU over T steps for a group of samples. `inputs` holds one
// (in_dim x T) matrix per sample; step t consumes column t of every sample.
// Returns the final hidden state (hidden x B). One tape node; backward is
// full BPTT.
Tape::VarId gru_encode(Tape& tape, const std::vector<Tape::VarId>& inputs,
                       const GruParamIds& p);

// Unrolls a GRU from initial hidden h0 (hidden x B) with zero per-step input
// and applies a linear head after every step. The input-to-gate weights
// drop out of the math entirely (W x == 0), so they are not inputs here.
// Returns (out_dim x T*B); sample b occupies columns [b*T, (b+1)*T).
Tape::VarId gru_decode_zero_input(Tape& tape, Tape::VarId h0, int steps,
                                  Tape::VarId U_z, Tape::VarId b_z,
                                  Tape::VarId U_r, Tape::VarId b_r,
                                  Tape::VarId U_h, Tape::VarId b_h,
                                  Tape::VarId head_w, Tape::VarId head_b);

Tape::VarId dense(Tape& tape, Tape::VarId x, Tape::VarId W, Tape::VarId b,
                  Activation act);

// ---- optimizer ----

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<Mat> m, v;
};

// Standard bias-corrected Adam over every param, consuming param.grad.
void adam_step(ParamSet& params, AdamState& state, const AdamConfig& cfg);

// ---- finite-difference gradient checking ----

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
  int entries_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_rel_err = 0.0;
};

// Central differences against reverse-mode gradients. `loss_fn` evaluates the
// scalar objective at the current parameter values; `compute_analytic` fills
// params[i].grad. Checks up to `max_entries_per_block` entries per block
// (deterministic subsample when a block is larger). Relative error metric:
// |a-n| / max(1e-8, |a|+|n|).
GradCheckReport grad_check(ParamSet& params,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& compute_analytic,
                           double h = 1e-5, int max_entries_per_block = 64,
                           std::uint64_t select_seed = 0);

}  // namespace ftdn::nn
