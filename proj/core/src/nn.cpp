#include "galtraj/nn.hpp"

#include <cmath>

#include "galtraj/errors.hpp"

namespace galtraj::nn {

int ParamStore::add(const std::string& name, Mat value) {
  Entry e;
  e.name = name;
  e.grad = Mat::Zero(value.rows(), value.cols());
  e.value = std::move(value);
  entries_.push_back(std::move(e));
  return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (entries_[i].name == name) return i;
  return -1;
}

std::int64_t ParamStore::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.grad.setZero();
}

bool ParamStore::all_finite() const {
  for (const auto& e : entries_)
    if (!e.value.allFinite()) return false;
  return true;
}

int Tape::push(Mat value, bool needs_grad, std::function<void(Tape&, Node&)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Mat& Tape::grad_of(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Tape::Var Tape::constant(Mat v) { return {push(std::move(v), false)}; }

Tape::Var Tape::param(int param_id) {
  Var out{push(params_->value(param_id), true)};
  nodes_[out.id].param_id = param_id;
  return out;
}

Tape::Var Tape::matmul(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  Mat v = nodes_[ia].value * nodes_[ib].value;
  const bool ng = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
  return {push(std::move(v), ng, [ia, ib](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad) t.grad_of(ia) += n.grad * t.nodes_[ib].value.transpose();
            if (t.nodes_[ib].needs_grad) t.grad_of(ib) += t.nodes_[ia].value.transpose() * n.grad;
          })};
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  Mat v = nodes_[ia].value * nodes_[ib].value.transpose();
  const bool ng = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
  return {push(std::move(v), ng, [ia, ib](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad) t.grad_of(ia) += n.grad * t.nodes_[ib].value;
            if (t.nodes_[ib].needs_grad) t.grad_of(ib) += n.grad.transpose() * t.nodes_[ia].value;
          })};
}

Tape::Var Tape::add(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  Mat v = nodes_[ia].value + nodes_[ib].value;
  const bool ng = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
  return {push(std::move(v), ng, [ia, ib](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad) t.grad_of(ia) += n.grad;
            if (t.nodes_[ib].needs_grad) t.grad_of(ib) += n.grad;
          })};
}

Tape::Var Tape::sub(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  Mat v = nodes_[ia].value - nodes_[ib].value;
  const bool ng = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
  return {push(std::move(v), ng, [ia, ib](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad) t.grad_of(ia) += n.grad;
            if (t.nodes_[ib].needs_grad) t.grad_of(ib) -= n.grad;
          })};
}

Tape::Var Tape::add_rowvec(Var a, Var bias) {
  const int ia = a.id, ib = bias.id;
  Mat v = nodes_[ia].value.rowwise() + nodes_[ib].value.row(0);
  const bool ng = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
  return {push(std::move(v), ng, [ia, ib](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad) t.grad_of(ia) += n.grad;
            if (t.nodes_[ib].needs_grad) t.grad_of(ib).row(0) += n.grad.colwise().sum();
          })};
}

Tape::Var Tape::cmul(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  Mat v = nodes_[ia].value.cwiseProduct(nodes_[ib].value);
  const bool ng = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
  return {push(std::move(v), ng, [ia, ib](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad)
              t.grad_of(ia) += n.grad.cwiseProduct(t.nodes_[ib].value);
            if (t.nodes_[ib].needs_grad)
              t.grad_of(ib) += n.grad.cwiseProduct(t.nodes_[ia].value);
          })};
}

Tape::Var Tape::scale(Var a, double c) {
  const int ia = a.id;
  Mat v = c * nodes_[ia].value;
  return {push(std::move(v), nodes_[ia].needs_grad, [ia, c](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad) t.grad_of(ia) += c * n.grad;
          })};
}

Tape::Var Tape::tanh(Var a) {
  const int ia = a.id;
  Mat v = nodes_[ia].value.array().tanh().matrix();
  const int self_hint = static_cast<int>(nodes_.size());
  return {push(std::move(v), nodes_[ia].needs_grad, [ia, self_hint](Tape& t, Node& n) {
            if (!t.nodes_[ia].needs_grad) return;
            const Mat& y = t.nodes_[self_hint].value;
            t.grad_of(ia) += n.grad.cwiseProduct((1.0 - y.array().square()).matrix());
          })};
}

Tape::Var Tape::softmax_rows(Var a) {
  const int ia = a.id;
  const Mat& x = nodes_[ia].value;
  Mat y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    Eigen::ArrayXd e = (x.row(r).array() - mx).exp();
    y.row(r) = (e / e.sum()).matrix();
  }
  const int self_hint = static_cast<int>(nodes_.size());
  return {push(std::move(y), nodes_[ia].needs_grad, [ia, self_hint](Tape& t, Node& n) {
            if (!t.nodes_[ia].needs_grad) return;
            const Mat& y = t.nodes_[self_hint].value;
            Mat& gx = t.grad_of(ia);
            for (Eigen::Index r = 0; r < y.rows(); ++r) {
              const double dot = n.grad.row(r).dot(y.row(r));
              gx.row(r) += (y.row(r).array() * (n.grad.row(r).array() - dot)).matrix();
            }
          })};
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  Eigen::Index rows = nodes_[parts[0].id].value.rows();
  Eigen::Index cols = 0;
  bool ng = false;
  for (Var p : parts) {
    cols += nodes_[p.id].value.cols();
    ng = ng || nodes_[p.id].needs_grad;
  }
  Mat v(rows, cols);
  Eigen::Index at = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  for (Var p : parts) {
    const Mat& m = nodes_[p.id].value;
    v.middleCols(at, m.cols()) = m;
    ids.push_back(p.id);
    offsets.push_back(at);
    at += m.cols();
  }
  return {push(std::move(v), ng, [ids, offsets](Tape& t, Node& n) {
            for (std::size_t i = 0; i < ids.size(); ++i) {
              if (!t.nodes_[ids[i]].needs_grad) continue;
              const Eigen::Index c = t.nodes_[ids[i]].value.cols();
              t.grad_of(ids[i]) += n.grad.middleCols(offsets[i], c);
            }
          })};
}

Tape::Var Tape::slice_cols(Var a, int start, int n_cols) {
  const int ia = a.id;
  Mat v = nodes_[ia].value.middleCols(start, n_cols);
  return {push(std::move(v), nodes_[ia].needs_grad, [ia, start, n_cols](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad)
              t.grad_of(ia).middleCols(start, n_cols) += n.grad;
          })};
}

Tape::Var Tape::weighted_mse(Var pred, const Mat& target, const Mat& weight, double normalizer) {
  const int ip = pred.id;
  const Mat diff = nodes_[ip].value - target;
  Mat v(1, 1);
  v(0, 0) = diff.cwiseProduct(diff).cwiseProduct(weight).sum() / normalizer;
  // diff and weight are captured by value; cheap at these sizes.
  return {push(std::move(v), nodes_[ip].needs_grad,
               [ip, diff, weight, normalizer](Tape& t, Node& n) {
                 if (!t.nodes_[ip].needs_grad) return;
                 t.grad_of(ip) +=
                     (2.0 / normalizer) * n.grad(0, 0) * diff.cwiseProduct(weight);
               })};
}

Tape::Var Tape::cross_entropy_rows(Var logits, const std::vector<int>& targets) {
  const int il = logits.id;
  const Mat& x = nodes_[il].value;
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  Mat soft(x.rows(), x.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    Eigen::ArrayXd e = (x.row(r).array() - mx).exp();
    const double z = e.sum();
    soft.row(r) = (e / z).matrix();
    total += std::log(z) + mx - x(r, targets[static_cast<std::size_t>(r)]);
  }
  Mat v(1, 1);
  v(0, 0) = total * inv_n;
  return {push(std::move(v), nodes_[il].needs_grad,
               [il, soft, targets, inv_n](Tape& t, Node& n) {
                 if (!t.nodes_[il].needs_grad) return;
                 Mat g = soft;
                 for (Eigen::Index r = 0; r < g.rows(); ++r)
                   g(r, targets[static_cast<std::size_t>(r)]) -= 1.0;
                 t.grad_of(il) += inv_n * n.grad(0, 0) * g;
               })};
}

Tape::Var Tape::add_to_scalar(Var a, Var b, double coeff_b) {
  const int ia = a.id, ib = b.id;
  Mat v(1, 1);
  v(0, 0) = nodes_[ia].value(0, 0) + coeff_b * nodes_[ib].value(0, 0);
  const bool ng = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
  return {push(std::move(v), ng, [ia, ib, coeff_b](Tape& t, Node& n) {
            if (t.nodes_[ia].needs_grad) t.grad_of(ia) += n.grad;
            if (t.nodes_[ib].needs_grad) t.grad_of(ib) += coeff_b * n.grad;
          })};
}

void Tape::backward(Var loss) {
  Node& last = nodes_[loss.id];
  if (last.value.size() != 1) throw NumericError("backward: loss must be scalar");
  grad_of(loss.id).setConstant(1.0);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.back) n.back(*this, n);
    if (n.param_id >= 0) params_->grad(n.param_id) += n.grad;
  }
}

Linear::Linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng) {
  const double a = std::sqrt(6.0 / (in + out));
  Mat weight(in, out);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < out; ++j) weight(i, j) = uniform(rng, -a, a);
  Mat bias = Mat::Zero(1, out);
  w = store.add(name + ".w", std::move(weight));
  b = store.add(name + ".b", std::move(bias));
}

Linear Linear::from_store(const ParamStore& store, const std::string& name) {
  Linear l;
  l.w = store.find(name + ".w");
  l.b = store.find(name + ".b");
  if (l.w < 0 || l.b < 0) throw DataError("missing parameter " + name);
  return l;
}

Tape::Var Linear::apply(Tape& t, Tape::Var x) const {
  return t.add_rowvec(t.matmul(x, t.param(w)), t.param(b));
}

Adam::Adam(const ParamStore& store, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(store.size());
  v_.reserve(store.size());
  for (int i = 0; i < store.size(); ++i) {
    m_.push_back(Mat::Zero(store.value(i).rows(), store.value(i).cols()));
    v_.push_back(Mat::Zero(store.value(i).rows(), store.value(i).cols()));
  }
}

void Adam::step(ParamStore& store) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (int i = 0; i < store.size(); ++i) {
    const Mat& g = store.grad(i);
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    const Mat m_hat = m_[i] / bc1;
    const Mat v_hat = v_[i] / bc2;
    store.value(i) -=
        cfg_.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg_.eps)).matrix();
    if (!store.value(i).allFinite())
      throw NumericError("adam: non-finite parameter " + store.name(i));
  }
  store.zero_grads();
}

std::vector<TensorBlob> dump_params(const ParamStore& store) {
  std::vector<TensorBlob> out;
  out.reserve(store.size());
  for (int i = 0; i < store.size(); ++i) {
    TensorBlob b;
    b.name = store.name(i);
    const Mat& m = store.value(i);
    b.rows = static_cast<int>(m.rows());
    b.cols = static_cast<int>(m.cols());
    b.data.resize(static_cast<std::size_t>(m.size()));
    for (int r = 0; r < b.rows; ++r)
      for (int c = 0; c < b.cols; ++c)
        b.data[static_cast<std::size_t>(r) * b.cols + c] = m(r, c);
    out.push_back(std::move(b));
  }
  return out;
}

void load_params(ParamStore& store, const std::vector<TensorBlob>& blobs) {
  for (const auto& b : blobs) {
    const int id = store.find(b.name);
    if (id < 0) throw DataError("load_params: unknown parameter " + b.name);
    Mat& m = store.value(id);
    if (m.rows() != b.rows || m.cols() != b.cols)
      throw DataError("load_params: shape mismatch for " + b.name);
    for (int r = 0; r < b.rows; ++r)
      for (int c = 0; c < b.cols; ++c)
        m(r, c) = b.data[static_cast<std::size_t>(r) * b.cols + c];
  }
}

}  // namespace galtraj::nn
