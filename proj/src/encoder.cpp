#include "changecap/encoder.hpp"

namespace ccap {

Var project_embed(Graph& g, Var grid, const ModelVars& params) {
  const Shape& s = grid.shape();
  const Shape& w = params.input_proj.shape();
  if (s.size() != 2 || s[1] != w[0])
    throw ShapeError("feature grid channels " + shape_str(s) +
                     " do not match the projection input width " + shape_str(w));
  return g.add(g.matmul(grid, params.input_proj), params.pos_table);
}

Var mlp_head(Graph& g, Var f, const ModelVars& params, bool enabled) {
  if (!enabled) return f;
  if (!params.mlp) throw ContractError("mlp head requested but its parameters were not built");
  Var h = g.relu(g.add(g.matmul(f, params.mlp->w1), params.mlp->b1));
  return g.add(g.matmul(h, params.mlp->w2), params.mlp->b2);
}

Var correlation_matrix(Graph& g, Var y_bef, Var y_aft) {
  const Shape& a = y_bef.shape();
  const Shape& b = y_aft.shape();
  if (a.size() != 2 || a != b)
    throw ShapeError("correlation needs two equal (N, D) batches, got " + shape_str(a) +
                     " and " + shape_str(b));
  const int64_t d = a[1];

  auto column_norms = [&](Var y, const char* side) {
    Var n = g.sqrt(g.sum(g.square(y), 0));  // (D,)
    const Tensor& v = n.value();
    for (int64_t i = 0; i < d; ++i) {
      if (v.data[static_cast<size_t>(i)] == 0.0)
        throw NumericError(std::string("zero-norm channel ") + std::to_string(i) + " in the " +
                           side + " batch");
    }
    return n;
  };
  Var norm_bef = column_norms(y_bef, "before");
  Var norm_aft = column_norms(y_aft, "after");

  Var raw = g.matmul(g.transpose(y_bef), y_aft);  // (D, D) of column dot products
  // reciprocal via exp(-log x); norms are checked positive above
  Var inv_bef = g.exp(g.scalar_mul(g.log(norm_bef), -1.0));
  Var inv_aft = g.exp(g.scalar_mul(g.log(norm_aft), -1.0));
  Var scale = g.matmul(g.reshape(inv_bef, {d, 1}), g.reshape(inv_aft, {1, d}));
  return g.mul(raw, scale);
}

Var dirl_loss(Graph& g, Var corr, double alpha) {
  if (alpha < 0.0) throw ContractError("alpha must be >= 0");
  const Shape& s = corr.shape();
  if (s.size() != 2 || s[0] != s[1])
    throw ShapeError("correlation matrix must be square, got " + shape_str(s));
  const int64_t d = s[0];
  Var eye = g.leaf(Tensor::identity(d));
  Var off_mask = g.leaf([&] {
    Tensor m = Tensor::full({d, d}, 1.0);
    for (int64_t i = 0; i < d; ++i) m.at(i, i) = 0.0;
    return m;
  }());
  // (I - C*I)^2 is zero off the diagonal, (1 - C_ii)^2 on it
  Var diag_term = g.sum_all(g.square(g.sub(eye, g.mul(corr, eye))));
  Var off_term = g.sum_all(g.square(g.mul(corr, off_mask)));
  return g.add(diag_term, g.scalar_mul(off_term, alpha));
}

}  // namespace ccap
