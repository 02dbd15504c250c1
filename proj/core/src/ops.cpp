#include "feather/ops.hpp"

#include <cmath>
#include <string>

#include "feather/error.hpp"
#include "feather/math.hpp"

namespace feather::ops {
namespace {

[[noreturn]] void shape_error(std::string_view op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() +
                       " and " + b.shape_string());
}

enum class Broadcast { kSame, kScalarLeft, kScalarRight, kRowRight };

Broadcast resolve(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return Broadcast::kSame;
  if (a.is_scalar()) return Broadcast::kScalarLeft;
  if (b.is_scalar()) return Broadcast::kScalarRight;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRowRight;
  shape_error(op, a, b);
}

struct BinaryIndex {
  Broadcast mode;
  std::size_t cols;
  std::size_t lhs(std::size_t i) const { return mode == Broadcast::kScalarLeft ? 0 : i; }
  std::size_t rhs(std::size_t i) const {
    switch (mode) {
      case Broadcast::kScalarRight: return 0;
      case Broadcast::kRowRight: return i % cols;
      default: return i;
    }
  }
};

// f(x, y) -> z; dfx(x, y, z) and dfy(x, y, z) are the partial derivatives.
template <class F, class Dx, class Dy>
Var binary(std::string_view op, Var a, Var b, F f, Dx dfx, Dy dfy) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const Broadcast mode = resolve(op, x, y);
  const Tensor& shape = mode == Broadcast::kScalarLeft ? y : x;
  const BinaryIndex idx{mode, shape.cols()};
  Tensor out(shape.rows(), shape.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[idx.lhs(i)], y[idx.rhs(i)]);
  return a.tape().record(op, std::move(out), {a, b}, [idx, dfx, dfy](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    const Tensor& x = ctx.input(0);
    const Tensor& y = ctx.input(1);
    const Tensor& z = ctx.output();
    if (ctx.needs_grad(0)) {
      Tensor& gx = ctx.input_grad(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        gx[idx.lhs(i)] += g[i] * dfx(x[idx.lhs(i)], y[idx.rhs(i)], z[i]);
      }
    }
    if (ctx.needs_grad(1)) {
      Tensor& gy = ctx.input_grad(1);
      for (std::size_t i = 0; i < g.size(); ++i) {
        gy[idx.rhs(i)] += g[i] * dfy(x[idx.lhs(i)], y[idx.rhs(i)], z[i]);
      }
    }
  });
}

// f(x) -> y; df(x, y) is the derivative.
template <class F, class Df>
Var unary(std::string_view op, Var a, F f, Df df) {
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return a.tape().record(op, std::move(out), {a}, [df](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    const Tensor& x = ctx.input(0);
    const Tensor& y = ctx.output();
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(x[i], y[i]);
  });
}

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) shape_error("matmul", x, y);
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x(i, p);
      for (std::size_t j = 0; j < n; ++j) out(i, j) += xv * y(p, j);
    }
  }
  return a.tape().record("matmul", std::move(out), {a, b}, [m, k, n](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    const Tensor& x = ctx.input(0);
    const Tensor& y = ctx.input(1);
    if (ctx.needs_grad(0)) {
      Tensor& gx = ctx.input_grad(0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g(i, j) * y(p, j);
          gx(i, p) += acc;
        }
    }
    if (ctx.needs_grad(1)) {
      Tensor& gy = ctx.input_grad(1);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double xv = x(i, p);
          for (std::size_t j = 0; j < n; ++j) gy(p, j) += xv * g(i, j);
        }
    }
  });
}

Var linear(Var a, Var w) {
  const Tensor& x = a.value();
  const Tensor& wt = w.value();
  if (x.cols() != wt.cols()) shape_error("linear", x, wt);
  const std::size_t m = x.rows(), k = x.cols(), n = wt.rows();
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const auto xr = x.row_span(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto wr = wt.row_span(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += xr[p] * wr[p];
      out(i, j) = acc;
    }
  }
  return a.tape().record("linear", std::move(out), {a, w}, [m, k, n](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    const Tensor& x = ctx.input(0);
    const Tensor& wt = ctx.input(1);
    if (ctx.needs_grad(0)) {
      Tensor& gx = ctx.input_grad(0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g(i, j);
          if (gv == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) gx(i, p) += gv * wt(j, p);
        }
    }
    if (ctx.needs_grad(1)) {
      Tensor& gw = ctx.input_grad(1);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g(i, j);
          if (gv == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) gw(j, p) += gv * x(i, p);
        }
    }
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  return a.tape().record("transpose", std::move(out), {a}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t i = 0; i < gx.rows(); ++i)
      for (std::size_t j = 0; j < gx.cols(); ++j) gx(i, j) += g(j, i);
  });
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var square(Var a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a, [](double x) { return feather::sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
  return unary(
      "softplus", a, [](double x) { return feather::softplus(x); },
      [](double x, double) { return feather::sigmoid(x); });
}

Var abs(Var a) {
  return unary(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double x, double) { return sign_or_zero(x); });
}

Var softmax(Var a, int axis) {
  if (axis != 0 && axis != 1) throw ContractError("softmax: axis must be 0 or 1");
  const Tensor& x = a.value();
  const bool rows = axis == 1;
  const std::size_t groups = rows ? x.rows() : x.cols();
  const std::size_t len = rows ? x.cols() : x.rows();
  auto at = [rows](const Tensor& t, std::size_t g, std::size_t i) {
    return rows ? t(g, i) : t(i, g);
  };
  Tensor out(x.rows(), x.cols());
  for (std::size_t g = 0; g < groups; ++g) {
    double peak = at(x, g, 0);
    for (std::size_t i = 1; i < len; ++i) peak = std::max(peak, at(x, g, i));
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = std::exp(at(x, g, i) - peak);
      (rows ? out(g, i) : out(i, g)) = e;
      total += e;
    }
    for (std::size_t i = 0; i < len; ++i) (rows ? out(g, i) : out(i, g)) /= total;
  }
  return a.tape().record("softmax", std::move(out), {a},
                         [rows, groups, len, at](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    const Tensor& y = ctx.output();
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t k = 0; k < groups; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += at(g, k, i) * at(y, k, i);
      for (std::size_t i = 0; i < len; ++i) {
        (rows ? gx(k, i) : gx(i, k)) += at(y, k, i) * (at(g, k, i) - dot);
      }
    }
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().record("sum", Tensor::scalar(total), {a}, [](BackwardContext& ctx) {
    const double g = ctx.grad().item();
    Tensor& gx = ctx.input_grad(0);
    for (double& v : gx.values()) v += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ContractError("mean of empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var l1_loss(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!x.same_shape(y)) shape_error("l1_loss", x, y);
  if (x.empty()) throw ContractError("l1_loss of empty tensors");
  const double n = static_cast<double>(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += std::fabs(x[i] - y[i]);
  return a.tape().record("l1_loss", Tensor::scalar(total / n), {a, b},
                         [n](BackwardContext& ctx) {
    const double g = ctx.grad().item() / n;
    const Tensor& x = ctx.input(0);
    const Tensor& y = ctx.input(1);
    if (ctx.needs_grad(0)) {
      Tensor& gx = ctx.input_grad(0);
      for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g * sign_or_zero(x[i] - y[i]);
    }
    if (ctx.needs_grad(1)) {
      Tensor& gy = ctx.input_grad(1);
      for (std::size_t i = 0; i < x.size(); ++i) gy[i] -= g * sign_or_zero(x[i] - y[i]);
    }
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  if (axis != 0 && axis != 1) throw ContractError("concat: axis must be 0 or 1");
  const Tensor& first = parts.front().value();
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    if (axis == 0 && t.cols() != first.cols()) shape_error("concat(axis=0)", first, t);
    if (axis == 1 && t.rows() != first.rows()) shape_error("concat(axis=1)", first, t);
    offsets.push_back(axis == 0 ? rows : cols);
    if (axis == 0) rows += t.rows(); else cols += t.cols();
  }
  if (axis == 0) cols = first.cols(); else rows = first.rows();
  Tensor out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t j = 0; j < t.cols(); ++j) {
        if (axis == 0) out(offsets[k] + i, j) = t(i, j);
        else out(i, offsets[k] + j) = t(i, j);
      }
  }
  return parts.front().tape().record(
      "concat", std::move(out), parts, [axis, offsets](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          if (!ctx.needs_grad(k)) continue;
          Tensor& gk = ctx.input_grad(k);
          for (std::size_t i = 0; i < gk.rows(); ++i)
            for (std::size_t j = 0; j < gk.cols(); ++j)
              gk(i, j) += axis == 0 ? g(offsets[k] + i, j) : g(i, offsets[k] + j);
        }
      });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (begin >= end || end > x.rows()) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for " + x.shape_string());
  }
  Tensor out(end - begin, x.cols());
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i - begin, j) = x(i, j);
  return a.tape().record("slice_rows", std::move(out), {a}, [begin](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) gx(begin + i, j) += g(i, j);
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (begin >= end || end > x.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for " + x.shape_string());
  }
  Tensor out(x.rows(), end - begin);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = x(i, j);
  return a.tape().record("slice_cols", std::move(out), {a}, [begin](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) gx(i, begin + j) += g(i, j);
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& x = a.value();
  if (rows * cols != x.size()) {
    throw DimensionError("reshape " + x.shape_string() + " to [" + std::to_string(rows) + "x" +
                         std::to_string(cols) + "]");
  }
  Tensor out(rows, cols, std::vector<double>(x.values().begin(), x.values().end()));
  return a.tape().record("reshape", std::move(out), {a}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    Tensor& gx = ctx.input_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var embedding(Var table, std::span<const int> ids) {
  const Tensor& t = table.value();
  if (ids.empty()) throw InputError("embedding: empty id sequence");
  Tensor out(ids.size(), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= t.rows()) {
      throw InputError("embedding: id " + std::to_string(ids[i]) + " outside vocabulary of " +
                       std::to_string(t.rows()));
    }
    for (std::size_t j = 0; j < t.cols(); ++j) out(i, j) = t(static_cast<std::size_t>(ids[i]), j);
  }
  std::vector<int> rows(ids.begin(), ids.end());
  return table.tape().record("embedding", std::move(out), {table},
                             [rows = std::move(rows)](BackwardContext& ctx) {
    const Tensor& g = ctx.grad();
    Tensor& gt = ctx.input_grad(0);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j)
        gt(static_cast<std::size_t>(rows[i]), j) += g(i, j);
  });
}

Var stop_gradient(Var a) {
  return a.tape().constant(a.value());
}

}  // namespace feather::ops
