#ifndef GALTRAJ_NN_HPP_
#define GALTRAJ_NN_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "galtraj/rng.hpp"

namespace galtraj::nn {

using Mat = Eigen::MatrixXd;

// Named persistent parameters with gradient accumulators.
class ParamStore {
 public:
  int add(const std::string& name, Mat value);
  int find(const std::string& name) const;  // -1 if absent

  Mat& value(int id) { return entries_[id].value; }
  const Mat& value(int id) const { return entries_[id].value; }
  Mat& grad(int id) { return entries_[id].grad; }
  const std::string& name(int id) const { return entries_[id].name; }
  int size() const { return static_cast<int>(entries_.size()); }
  std::int64_t scalar_count() const;

  void zero_grads();
  bool all_finite() const;

 private:
  struct Entry {
    std::string name;
    Mat value;
    Mat grad;
  };
  std::vector<Entry> entries_;
};

// Reverse-mode autodiff over dynamically built matrix expressions. Nodes
// are created in evaluation order; backward() walks them in reverse.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  explicit Tape(ParamStore* params = nullptr) : params_(params) {}

  Var constant(Mat v);
  Var param(int param_id);

  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_rowvec(Var a, Var bias);  // bias is 1 x C, broadcast over rows
  Var cmul(Var a, Var b);
  Var scale(Var a, double c);
  Var tanh(Var a);
  Var softmax_rows(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int start, int n);

  // (1/normalizer) * sum_ij weight_ij * (pred - target)_ij^2  ->  1x1
  Var weighted_mse(Var pred, const Mat& target, const Mat& weight, double normalizer);
  // mean_i [logsumexp(logits_i) - logits_i[target_i]]  ->  1x1
  Var cross_entropy_rows(Var logits, const std::vector<int>& targets);
  Var add_to_scalar(Var a, Var b, double coeff_b);  // a + coeff_b * b, 1x1 each

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  // Seeds d(loss)=1 and accumulates parameter gradients into the store.
  void backward(Var loss);

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    int param_id = -1;
    std::function<void(Tape&, Node&)> back;
  };

  int push(Mat value, bool needs_grad, std::function<void(Tape&, Node&)> back = nullptr);
  Mat& grad_of(int id);

  ParamStore* params_ = nullptr;
  std::vector<Node> nodes_;

  friend struct TapeTestAccess;
};

struct Linear {
  int w = -1;
  int b = -1;

  Linear() = default;
  Linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
  static Linear from_store(const ParamStore& store, const std::string& name);

  Tape::Var apply(Tape& t, Tape::Var x) const;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const ParamStore& store, AdamConfig cfg);

  // Applies one update from accumulated grads, then zeroes them.
  // Throws NumericError if any updated parameter is non-finite.
  void step(ParamStore& store);

  const AdamConfig& config() const { return cfg_; }
  int steps_taken() const { return t_; }

  // Serialization hooks (moment blobs in store order).
  std::vector<Mat>& moments_m() { return m_; }
  std::vector<Mat>& moments_v() { return v_; }
  void set_steps_taken(int t) { t_ = t; }

 private:
  AdamConfig cfg_;
  int t_ = 0;
  std::vector<Mat> m_, v_;
};

// Flat blobs for checkpointing.
struct TensorBlob {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major
};

std::vector<TensorBlob> dump_params(const ParamStore& store);
void load_params(ParamStore& store, const std::vector<TensorBlob>& blobs);

}  // namespace galtraj::nn

#endif  // GALTRAJ_NN_HPP_
