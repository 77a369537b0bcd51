#include "quase/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace quase::ad {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace

Var Tape::constant(Mat v) {
  Node n;
  n.op = Op::kConst;
  n.value = std::move(v);
  return push(std::move(n));
}

Var Tape::scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Tape::param(const Tensor& t) {
  Node n;
  n.op = Op::kParam;
  n.value = t.value;
  n.tensor = &t;
  return push(std::move(n));
}

Var Tape::embed(const Tensor& table, int row) {
  if (row < 0 || row >= table.value.rows()) {
    throw std::out_of_range("embed: row " + std::to_string(row) + " outside table " +
                            table.name + " with " + std::to_string(table.value.rows()) +
                            " rows");
  }
  Node n;
  n.op = Op::kEmbedRow;
  n.value = table.value.row(row).transpose();
  n.tensor = &table;
  n.iaux = row;
  return push(std::move(n));
}

Var Tape::matvec(Var a, Var x) {
  const Mat& A = nodes_[a.i].value;
  const Mat& X = nodes_[x.i].value;
  if (A.cols() != X.rows() || X.cols() != 1) {
    throw std::invalid_argument("matvec: incompatible shapes");
  }
  Node n;
  n.op = Op::kMatVec;
  n.a = a.i;
  n.b = x.i;
  n.value = A * X;
  return push(std::move(n));
}

Var Tape::affine(const Tensor& w, const Tensor& b, Var x) {
  return add(matvec(param(w), x), param(b));
}

Var Tape::add(Var a, Var b) {
  check_same_shape(nodes_[a.i].value, nodes_[b.i].value, "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.i;
  n.b = b.i;
  n.value = nodes_[a.i].value + nodes_[b.i].value;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(nodes_[a.i].value, nodes_[b.i].value, "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.i;
  n.b = b.i;
  n.value = nodes_[a.i].value - nodes_[b.i].value;
  return push(std::move(n));
}

Var Tape::cmul(Var a, Var b) {
  check_same_shape(nodes_[a.i].value, nodes_[b.i].value, "cmul");
  Node n;
  n.op = Op::kCMul;
  n.a = a.i;
  n.b = b.i;
  n.value = nodes_[a.i].value.cwiseProduct(nodes_[b.i].value);
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a.i;
  n.value = nodes_[a.i].value.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a.i;
  n.value = nodes_[a.i].value.array().tanh().matrix();
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  Node n;
  n.op = Op::kExp;
  n.a = a.i;
  n.value = nodes_[a.i].value.array().exp().matrix();
  return push(std::move(n));
}

Var Tape::affine1(Var a, double scale, double shift) {
  Node n;
  n.op = Op::kAffine1;
  n.a = a.i;
  n.aux = scale;
  n.aux2 = shift;
  n.value = (nodes_[a.i].value.array() * scale + shift).matrix();
  return push(std::move(n));
}

Var Tape::concat(Var a, Var b) {
  const Mat& A = nodes_[a.i].value;
  const Mat& B = nodes_[b.i].value;
  if (A.cols() != 1 || B.cols() != 1) throw std::invalid_argument("concat: vectors only");
  Node n;
  n.op = Op::kConcat;
  n.a = a.i;
  n.b = b.i;
  n.value.resize(A.rows() + B.rows(), 1);
  n.value << A, B;
  return push(std::move(n));
}

Var Tape::rows(Var a, int offset, int count) {
  const Mat& A = nodes_[a.i].value;
  if (offset < 0 || count <= 0 || offset + count > A.rows()) {
    throw std::out_of_range("rows: slice outside input");
  }
  Node n;
  n.op = Op::kRows;
  n.a = a.i;
  n.iaux = offset;
  n.aux = static_cast<double>(count);
  n.value = A.middleRows(offset, count);
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.i;
  n.value = Mat::Constant(1, 1, nodes_[a.i].value.sum());
  return push(std::move(n));
}

Var Tape::sum_sq(Var a) {
  Node n;
  n.op = Op::kSumSq;
  n.a = a.i;
  n.value = Mat::Constant(1, 1, nodes_[a.i].value.squaredNorm());
  return push(std::move(n));
}

Var Tape::softmax_cross_entropy(Var logits, int target) {
  const Mat& l = nodes_[logits.i].value;
  if (l.cols() != 1) throw std::invalid_argument("softmax_cross_entropy: vector expected");
  if (target < 0 || target >= l.rows()) {
    throw std::out_of_range("softmax_cross_entropy: target outside logits");
  }
  const double m = l.maxCoeff();
  Mat shifted = (l.array() - m).matrix();
  Mat expv = shifted.array().exp().matrix();
  const double z = expv.sum();
  Node n;
  n.op = Op::kSoftmaxCE;
  n.a = logits.i;
  n.iaux = target;
  n.cache = expv / z;
  n.value = Mat::Constant(1, 1, std::log(z) - shifted(target, 0));
  return push(std::move(n));
}

void Tape::backward(Var seed) {
  if (!seed.valid() || seed.i >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("backward: invalid seed");
  }
  Node& s = nodes_[seed.i];
  if (s.value.rows() != 1 || s.value.cols() != 1) {
    throw std::invalid_argument("backward: seed must be scalar");
  }
  s.grad(0, 0) += 1.0;

  for (int i = seed.i; i >= 0; --i) {
    Node& n = nodes_[i];
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::kConst:
        break;
      case Op::kParam:
        n.tensor->grad += g;
        break;
      case Op::kEmbedRow:
        n.tensor->grad.row(n.iaux) += g.transpose();
        break;
      case Op::kMatVec: {
        Node& A = nodes_[n.a];
        Node& X = nodes_[n.b];
        A.grad.noalias() += g * X.value.transpose();
        X.grad.noalias() += A.value.transpose() * g;
        break;
      }
      case Op::kAdd:
        nodes_[n.a].grad += g;
        nodes_[n.b].grad += g;
        break;
      case Op::kSub:
        nodes_[n.a].grad += g;
        nodes_[n.b].grad -= g;
        break;
      case Op::kCMul:
        nodes_[n.a].grad += g.cwiseProduct(nodes_[n.b].value);
        nodes_[n.b].grad += g.cwiseProduct(nodes_[n.a].value);
        break;
      case Op::kSigmoid:
        nodes_[n.a].grad.array() +=
            g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case Op::kTanh:
        nodes_[n.a].grad.array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::kExp:
        nodes_[n.a].grad.array() += g.array() * n.value.array();
        break;
      case Op::kAffine1:
        nodes_[n.a].grad += n.aux * g;
        break;
      case Op::kConcat: {
        Node& A = nodes_[n.a];
        Node& B = nodes_[n.b];
        A.grad += g.topRows(A.value.rows());
        B.grad += g.bottomRows(B.value.rows());
        break;
      }
      case Op::kRows:
        nodes_[n.a].grad.middleRows(n.iaux, static_cast<int>(n.aux)) += g;
        break;
      case Op::kSum:
        nodes_[n.a].grad.array() += g(0, 0);
        break;
      case Op::kSumSq:
        nodes_[n.a].grad += 2.0 * g(0, 0) * nodes_[n.a].value;
        break;
      case Op::kSoftmaxCE: {
        Mat delta = n.cache;
        delta(n.iaux, 0) -= 1.0;
        nodes_[n.a].grad += g(0, 0) * delta;
        break;
      }
    }
  }
}

}  // namespace quase::ad
