#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace quase::ad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Named parameter with a gradient accumulator. `grad` is scratch written by
// Tape::backward under the single-writer training contract; it is mutable so
// read-only model forwards can stay const.
struct Tensor {
  std::string name;
  Mat value;
  mutable Mat grad;

  Tensor() = default;
  Tensor(std::string n, int rows, int cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  void zero_grad() const { grad.setZero(); }
};

struct Var {
  int i = -1;
  bool valid() const { return i >= 0; }
};

// Reverse-mode tape over column vectors / matrices. Nodes are created in
// topological order; backward walks them in reverse. One loss graph per use;
// call clear() to reuse the buffer.
class Tape {
 public:
  Var constant(Mat v);
  Var scalar(double v);
  Var param(const Tensor& t);
  Var embed(const Tensor& table, int row);  // row of table as a column vector

  Var matvec(Var a, Var x);
  Var affine(const Tensor& w, const Tensor& b, Var x);  // w*x + b
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var affine1(Var a, double scale, double shift);  // scale*a + shift, elementwise
  Var scale(Var a, double s) { return affine1(a, s, 0.0); }
  Var one_minus(Var a) { return affine1(a, -1.0, 1.0); }
  Var concat(Var a, Var b);            // rows of a on top of rows of b
  Var rows(Var a, int offset, int n);  // contiguous row slice
  Var sum(Var a);                      // 1x1
  Var sum_sq(Var a);                   // 1x1
  Var softmax_cross_entropy(Var logits, int target);  // 1x1, -log softmax[target]

  const Mat& value(Var v) const { return nodes_[v.i].value; }
  double scalar_value(Var v) const { return nodes_[v.i].value(0, 0); }
  const Mat& grad(Var v) const { return nodes_[v.i].grad; }

  // Seeds d(seed)/d(seed) = 1 and accumulates gradients into every reachable
  // node and bound Tensor. `seed` must be 1x1.
  void backward(Var seed);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : unsigned char {
    kConst,
    kParam,
    kEmbedRow,
    kMatVec,
    kAdd,
    kSub,
    kCMul,
    kSigmoid,
    kTanh,
    kExp,
    kAffine1,
    kConcat,
    kRows,
    kSum,
    kSumSq,
    kSoftmaxCE,
  };

  struct Node {
    Mat value;
    Mat grad;
    const Tensor* tensor = nullptr;
    Op op = Op::kConst;
    int a = -1;
    int b = -1;
    int iaux = 0;
    double aux = 0.0;
    double aux2 = 0.0;
    Mat cache;  // softmax probabilities
  };

  Var push(Node n) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
};

}  // namespace quase::ad
