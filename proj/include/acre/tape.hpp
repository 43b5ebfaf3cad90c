#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace acre {

class Tape;

// Handle to one scalar node on a tape.
struct Var {
  Tape* tape = nullptr;
  int32_t idx = -1;
  inline double value() const;
};

// Reverse-mode Wengert list over scalar nodes. Records are appended in
// evaluation order, so record index order is already a topological order and
// one reverse sweep yields exact adjoints. Records hold up to three parents,
// which keeps a fused multiply-add (the hot op in a network forward pass) to
// a single record.
class Tape {
 public:
  struct Rec {
    int32_t a, b, c;
    double da, db, dc;
  };

  Tape() = default;

  void reserve(size_t nodes) {
    val_.reserve(nodes);
    rec_.reserve(nodes);
  }

  int32_t size() const { return static_cast<int32_t>(val_.size()); }

  void clear() {
    val_.clear();
    rec_.clear();
    adj_.clear();
    swept_ = false;
  }

  Var leaf(double v) { return push(v, -1, 0.0); }

  Var push(double v, int32_t a, double da, int32_t b = -1, double db = 0.0,
           int32_t c = -1, double dc = 0.0) {
    val_.push_back(v);
    rec_.push_back(Rec{a, b, c, da, db, dc});
    return Var{this, static_cast<int32_t>(val_.size()) - 1};
  }

  double value(Var x) const { return val_[x.idx]; }

  // Seeds the root adjoint with 1 and accumulates chain-rule contributions
  // into every ancestor. Nodes with no path to the root keep adjoint 0.
  void backward(Var root) {
    if (root.tape != this || root.idx < 0 || root.idx >= size())
      throw std::invalid_argument("backward: root is not a node of this tape");
    if (swept_)
      throw std::logic_error("backward: adjoints from a prior sweep not cleared");
    adj_.assign(val_.size(), 0.0);
    adj_[root.idx] = 1.0;
    const Rec* recs = rec_.data();
    double* adj = adj_.data();
    for (int32_t i = root.idx; i >= 0; --i) {
      const double g = adj[i];
      if (g == 0.0) continue;
      const Rec& r = recs[i];
      if (r.a >= 0) adj[r.a] += r.da * g;
      if (r.b >= 0) adj[r.b] += r.db * g;
      if (r.c >= 0) adj[r.c] += r.dc * g;
    }
    swept_ = true;
  }

  // Differentiation starts from one scalar; vector roots are rejected.
  void backward(std::span<const Var> roots) {
    if (roots.size() != 1)
      throw std::invalid_argument("backward: root must be a single scalar node");
    backward(roots[0]);
  }

  void clear_adjoints() {
    adj_.clear();
    swept_ = false;
  }

  bool swept() const { return swept_; }

  double adjoint(Var x) const {
    if (!swept_) throw std::logic_error("adjoint: no backward sweep has run");
    if (x.idx < 0 || x.idx >= static_cast<int32_t>(adj_.size())) return 0.0;
    return adj_[x.idx];
  }

 private:
  std::vector<double> val_;
  std::vector<Rec> rec_;
  std::vector<double> adj_;
  bool swept_ = false;
};

inline double Var::value() const { return tape->value(*this); }

inline Var operator+(Var x, Var y) {
  return x.tape->push(x.value() + y.value(), x.idx, 1.0, y.idx, 1.0);
}
inline Var operator+(Var x, double c) {
  return x.tape->push(x.value() + c, x.idx, 1.0);
}
inline Var operator+(double c, Var x) { return x + c; }

inline Var operator-(Var x) { return x.tape->push(-x.value(), x.idx, -1.0); }
inline Var operator-(Var x, Var y) {
  return x.tape->push(x.value() - y.value(), x.idx, 1.0, y.idx, -1.0);
}
inline Var operator-(Var x, double c) { return x + (-c); }
inline Var operator-(double c, Var x) {
  return x.tape->push(c - x.value(), x.idx, -1.0);
}

inline Var operator*(Var x, Var y) {
  return x.tape->push(x.value() * y.value(), x.idx, y.value(), y.idx, x.value());
}
inline Var operator*(Var x, double c) {
  return x.tape->push(x.value() * c, x.idx, c);
}
inline Var operator*(double c, Var x) { return x * c; }

inline Var operator/(Var x, Var y) {
  const double yv = y.value();
  const double q = x.value() / yv;
  return x.tape->push(q, x.idx, 1.0 / yv, y.idx, -q / yv);
}
inline Var operator/(Var x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, Var x) {
  const double xv = x.value();
  return x.tape->push(c / xv, x.idx, -c / (xv * xv));
}

// acc + w*x as a single three-parent record.
inline Var mul_add(Var acc, Var w, Var x) {
  return acc.tape->push(acc.value() + w.value() * x.value(), acc.idx, 1.0,
                        w.idx, x.value(), x.idx, w.value());
}
inline Var mul_add(Var acc, Var w, double x) {
  return acc.tape->push(acc.value() + w.value() * x, acc.idx, 1.0, w.idx, x);
}

inline Var tanh(Var x) {
  const double t = std::tanh(x.value());
  return x.tape->push(t, x.idx, 1.0 - t * t);
}
inline Var exp(Var x) {
  const double e = std::exp(x.value());
  return x.tape->push(e, x.idx, e);
}
inline Var log(Var x) {
  return x.tape->push(std::log(x.value()), x.idx, 1.0 / x.value());
}
inline Var square(Var x) {
  return x.tape->push(x.value() * x.value(), x.idx, 2.0 * x.value());
}

// min with the gradient routed to the active branch (ties go to the first
// argument), matching the subgradient convention the clipped surrogate needs.
inline Var min(Var x, Var y) {
  const bool first = x.value() <= y.value();
  return x.tape->push(first ? x.value() : y.value(), first ? x.idx : y.idx, 1.0);
}

// Constant-bound clamp; derivative is 1 inside [lo, hi] and 0 outside.
inline Var clip(Var x, double lo, double hi) {
  const double v = x.value();
  const double cv = v < lo ? lo : (v > hi ? hi : v);
  return x.tape->push(cv, x.idx, (v < lo || v > hi) ? 0.0 : 1.0);
}

inline Var sum(std::span<const Var> xs) {
  if (xs.empty()) throw std::invalid_argument("sum: empty node list");
  Var acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = acc + xs[i];
  return acc;
}

inline Var mean(std::span<const Var> xs) {
  return sum(xs) / static_cast<double>(xs.size());
}

}  // namespace acre
