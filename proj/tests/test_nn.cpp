#include <doctest.h>

#include <cmath>

#include "galtraj/errors.hpp"
#include "galtraj/nn.hpp"

using namespace galtraj;
using nn::Mat;
using nn::Tape;

namespace {

// Composite graph exercising every op; returns the scalar loss.
double eval_graph(nn::ParamStore& store, const nn::Linear& l1, const nn::Linear& l2,
                  const Mat& x, const Mat& target, bool backward) {
  Tape tape(&store);
  Tape::Var xv = tape.constant(x);
  Tape::Var h = tape.tanh(l1.apply(tape, xv));
  Tape::Var scores = tape.scale(tape.matmul_nt(h, h), 0.5);
  Tape::Var att = tape.softmax_rows(scores);
  Tape::Var mixed = tape.add(h, tape.matmul(att, h));
  Tape::Var out = l2.apply(tape, mixed);
  Tape::Var left = tape.slice_cols(out, 0, 2);
  Tape::Var right = tape.slice_cols(out, 2, 2);
  Tape::Var both = tape.concat_cols({left, tape.cmul(right, right)});
  const Mat w = Mat::Constant(x.rows(), 4, 0.25);
  Tape::Var mse = tape.weighted_mse(both, target, w, static_cast<double>(x.rows()));
  std::vector<int> targets(static_cast<std::size_t>(x.rows()), 1);
  Tape::Var ce = tape.cross_entropy_rows(tape.slice_cols(out, 0, 4), targets);
  Tape::Var loss = tape.add_to_scalar(mse, ce, 0.3);
  if (backward) tape.backward(loss);
  return tape.value(loss)(0, 0);
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng = make_rng(5);
  nn::ParamStore store;
  nn::Linear l1(store, "l1", 3, 5, rng);
  nn::Linear l2(store, "l2", 5, 4, rng);
  Mat x(4, 3), target(4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 3; ++c) x(r, c) = uniform(rng, -1, 1);
    for (int c = 0; c < 4; ++c) target(r, c) = uniform(rng, -1, 1);
  }

  store.zero_grads();
  eval_graph(store, l1, l2, x, target, true);

  const double h = 1e-5;
  int checked = 0;
  for (int p = 0; p < store.size(); ++p) {
    Mat& value = store.value(p);
    const Mat grad = store.grad(p);
    for (int r = 0; r < value.rows(); ++r) {
      for (int c = 0; c < value.cols(); ++c) {
        const double orig = value(r, c);
        value(r, c) = orig + h;
        const double fp = eval_graph(store, l1, l2, x, target, false);
        value(r, c) = orig - h;
        const double fm = eval_graph(store, l1, l2, x, target, false);
        value(r, c) = orig;
        const double numeric = (fp - fm) / (2 * h);
        const double denom = std::max({1.0, std::abs(numeric), std::abs(grad(r, c))});
        CHECK(std::abs(grad(r, c) - numeric) / denom < 1e-4);
        ++checked;
      }
    }
  }
  CHECK(checked > 40);
}

TEST_CASE("adam minimizes a quadratic") {
  nn::ParamStore store;
  Mat w0(1, 3);
  w0 << 4.0, -3.0, 2.0;
  const int id = store.add("w", w0);
  nn::Adam adam(store, {.lr = 0.05});
  for (int step = 0; step < 400; ++step) {
    store.grad(id) = 2.0 * store.value(id);  // d/dw ||w||^2
    adam.step(store);
  }
  CHECK(store.value(id).norm() < 1e-2);
}

TEST_CASE("adam rejects non-finite updates") {
  nn::ParamStore store;
  const int id = store.add("w", Mat::Ones(1, 1));
  nn::Adam adam(store, {});
  store.grad(id)(0, 0) = std::nan("");
  CHECK_THROWS_AS(adam.step(store), NumericError);
}

TEST_CASE("param blobs round trip bitwise") {
  Rng rng = make_rng(6);
  nn::ParamStore a;
  nn::Linear l1(a, "l1", 4, 7, rng);
  nn::Linear l2(a, "l2", 7, 2, rng);
  const auto blobs = nn::dump_params(a);

  Rng rng2 = make_rng(999);
  nn::ParamStore b;
  nn::Linear m1(b, "l1", 4, 7, rng2);
  nn::Linear m2(b, "l2", 7, 2, rng2);
  nn::load_params(b, blobs);
  for (int p = 0; p < a.size(); ++p) CHECK(a.value(p) == b.value(p));

  nn::TensorBlob bad;
  bad.name = "nope";
  CHECK_THROWS_AS(nn::load_params(b, {bad}), DataError);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng = make_rng(8);
  nn::ParamStore store;
  Tape tape(&store);
  Mat x(5, 9);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 9; ++c) x(r, c) = uniform(rng, -30, 30);
  const Mat y = tape.value(tape.softmax_rows(tape.constant(x)));
  for (int r = 0; r < 5; ++r) CHECK(y.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
}
